#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mmfusion {

/// ROC points are (FPR, TPR); PR points are (recall, precision). `threshold`
/// is the score cut (predict positive when score ≥ threshold); the ROC
/// origin carries +infinity.
struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    double threshold = 0.0;
};

struct Curve {
    std::vector<CurvePoint> points;
    double auc = 0.0;
};

/// Sweeps distinct scores in descending order, ties grouped into one step.
/// Starts at (0,0), ends at (1,1); AUC by the trapezoidal rule, which equals
/// the tie-corrected Mann–Whitney statistic.
Curve roc_curve(std::span<const double> scores, const std::vector<bool>& labels);

/// One point per distinct score; AUC is the right-continuous step sum
/// Σ (Rₖ − Rₖ₋₁)·Pₖ with R₀ = 0 (no interpolation).
Curve pr_curve(std::span<const double> scores, const std::vector<bool>& labels);

struct ScoredSample {
    std::size_t label = 0;
    std::vector<double> probabilities;
};

struct ClassReport {
    std::string name;
    std::size_t positives = 0;
    Curve roc;
    Curve pr;
};

struct EvalReport {
    std::vector<ClassReport> classes;
    double macro_auc_roc = 0.0;
    double macro_auc_pr = 0.0;
    std::size_t sample_count = 0;
};

/// Class k is scored by probabilities[k] against (label == k). Macro values
/// are unweighted means over classes.
EvalReport one_vs_rest_report(std::span<const ScoredSample> samples, const std::vector<std::string>& class_names);

/// Structured report: per-class AUCs and curves as [x, y] point arrays.
std::string report_to_json(const EvalReport& report);
/// Tab-separated: class, positives, auc_roc, auc_pr; last row is "macro".
std::string report_summary_table(const EvalReport& report);

} // namespace mmfusion
