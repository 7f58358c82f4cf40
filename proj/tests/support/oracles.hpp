#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the tape, the fusion layers or the metrics module.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <vector>

namespace mmfusion::oracle {

using Matrix = std::vector<std::vector<double>>;  // [rows][cols]

inline Matrix as_matrix(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
    Matrix m(rows, std::vector<double>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m[i][j] = flat[i * cols + j];
    return m;
}

// Wᵀx + b, summing the products first and adding the bias last.
inline std::vector<double> affine(const Matrix& W, const std::vector<double>& x, const std::vector<double>& b) {
    std::vector<double> out(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += W[i][j] * x[i];
        out[j] = acc + b[j];
    }
    return out;
}

inline std::vector<double> relu(std::vector<double> v) {
    for (double& x : v) x = std::max(0.0, x);
    return v;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline std::vector<double> logistic(std::vector<double> v) {
    for (double& x : v) x = logistic(x);
    return v;
}

inline std::vector<double> join(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a);
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline std::vector<double> times(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
    double total = 0.0;
    for (double v : z) total += std::exp(v);
    std::vector<double> out;
    for (double v : z) out.push_back(std::exp(v) / total);
    return out;
}

// Tie-corrected Mann–Whitney: (#concordant + ½·#tied) / (P·N) over all pairs.
inline double mann_whitney_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
    double concordant = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) concordant += 1.0;
            else if (scores[i] == scores[j]) concordant += 0.5;
        }
    }
    return concordant / pairs;
}

// Step-wise AUC-PR by enumerating every candidate threshold and counting
// predictions directly; Σ (Rₖ − Rₖ₋₁)·Pₖ ordered by recall.
inline double exhaustive_auc_pr(const std::vector<double>& scores, const std::vector<bool>& labels) {
    std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
    double positives = 0.0;
    for (bool l : labels) positives += l ? 1.0 : 0.0;
    double area = 0.0;
    double prev_recall = 0.0;
    for (double t : thresholds) {
        double tp = 0.0;
        double predicted = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) {
                predicted += 1.0;
                if (labels[i]) tp += 1.0;
            }
        }
        const double recall = tp / positives;
        area += (recall - prev_recall) * (tp / predicted);
        prev_recall = recall;
    }
    return area;
}

// Scalar Adam recurrence for a constant gradient; returns the successive updates.
inline std::vector<double> adam_updates(double g, double lr, int steps, double b1 = 0.9, double b2 = 0.999,
                                        double eps = 1e-8) {
    double m = 0.0;
    double v = 0.0;
    std::vector<double> out;
    for (int t = 1; t <= steps; ++t) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        out.push_back(-lr * mh / (std::sqrt(vh) + eps));
    }
    return out;
}

// Two-sided binomial interval on the success fraction, normal approximation.
struct Interval {
    double lo;
    double hi;
};
inline Interval binomial_fraction_interval(double p, double n, double z) {
    const double sd = std::sqrt(p * (1 - p) / n);
    return {p - z * sd, p + z * sd};
}

} // namespace mmfusion::oracle
