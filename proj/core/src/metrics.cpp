#include "mmfusion/metrics.hpp"

#include "mmfusion/errors.hpp"
#include "mmfusion/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mmfusion {

namespace {

struct Step {
    double threshold;
    std::size_t tp;
    std::size_t fp;
};

// Cumulative (tp, fp) after admitting each group of tied scores, highest first.
std::vector<Step> sweep(std::span<const double> scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) {
        throw DimensionError("scores and labels differ in length (" + std::to_string(scores.size()) + " vs " +
                             std::to_string(labels.size()) + ")");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) throw DegenerateInputError("scores must be finite");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<Step> steps;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == s; ++i) {
            labels[order[i]] ? ++tp : ++fp;
        }
        steps.push_back({s, tp, fp});
    }
    return steps;
}

std::size_t count_true(const std::vector<bool>& labels) {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
}

} // namespace

Curve roc_curve(std::span<const double> scores, const std::vector<bool>& labels) {
    const std::size_t pos = count_true(labels);
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) {
        throw DegenerateInputError("ROC needs at least one positive and one negative label");
    }
    const auto steps = sweep(scores, labels);
    Curve c;
    c.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    for (const Step& s : steps) {
        const CurvePoint& prev = c.points.back();
        const CurvePoint next{static_cast<double>(s.fp) / static_cast<double>(neg),
                              static_cast<double>(s.tp) / static_cast<double>(pos), s.threshold};
        c.auc += (next.x - prev.x) * (next.y + prev.y) / 2.0;
        c.points.push_back(next);
    }
    return c;
}

Curve pr_curve(std::span<const double> scores, const std::vector<bool>& labels) {
    const std::size_t pos = count_true(labels);
    if (pos == 0) throw DegenerateInputError("PR curve needs at least one positive label");
    const auto steps = sweep(scores, labels);
    Curve c;
    double prev_recall = 0.0;
    for (const Step& s : steps) {
        const double recall = static_cast<double>(s.tp) / static_cast<double>(pos);
        const double precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
        c.auc += (recall - prev_recall) * precision;
        prev_recall = recall;
        c.points.push_back({recall, precision, s.threshold});
    }
    return c;
}

EvalReport one_vs_rest_report(std::span<const ScoredSample> samples, const std::vector<std::string>& class_names) {
    const std::size_t k = class_names.size();
    if (k < 2) throw ConfigError("evaluation needs at least two classes");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const ScoredSample& s = samples[i];
        if (s.probabilities.size() != k) {
            throw DimensionError("sample " + std::to_string(i) + " has " + std::to_string(s.probabilities.size()) +
                                 " probabilities for " + std::to_string(k) + " classes");
        }
        if (s.label >= k) throw IndexError("sample " + std::to_string(i) + " has label out of range");
        const double total = std::accumulate(s.probabilities.begin(), s.probabilities.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-9) {
            throw ContractError("sample " + std::to_string(i) + " probabilities sum to " + format_double(total));
        }
    }

    std::vector<std::size_t> counts(k, 0);
    for (const ScoredSample& s : samples) ++counts[s.label];
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) throw DegenerateInputError("class '" + class_names[c] + "' has no samples");
    }

    EvalReport report;
    report.sample_count = samples.size();
    std::vector<double> scores(samples.size());
    std::vector<bool> labels(samples.size());
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            scores[i] = samples[i].probabilities[c];
            labels[i] = samples[i].label == c;
        }
        ClassReport cr{class_names[c], counts[c], roc_curve(scores, labels), pr_curve(scores, labels)};
        report.macro_auc_roc += cr.roc.auc;
        report.macro_auc_pr += cr.pr.auc;
        report.classes.push_back(std::move(cr));
    }
    report.macro_auc_roc /= static_cast<double>(k);
    report.macro_auc_pr /= static_cast<double>(k);
    return report;
}

std::string report_to_json(const EvalReport& report) {
    using nlohmann::ordered_json;
    auto points = [](const Curve& c) {
        ordered_json xy = ordered_json::array();
        ordered_json th = ordered_json::array();
        for (const CurvePoint& p : c.points) {
            xy.push_back({p.x, p.y});
            th.push_back(std::isfinite(p.threshold) ? ordered_json(p.threshold) : ordered_json(nullptr));
        }
        return std::pair{xy, th};
    };
    ordered_json doc;
    doc["sample_count"] = report.sample_count;
    doc["macro_auc_roc"] = report.macro_auc_roc;
    doc["macro_auc_pr"] = report.macro_auc_pr;
    doc["classes"] = ordered_json::array();
    for (const ClassReport& c : report.classes) {
        auto [roc_xy, roc_th] = points(c.roc);
        auto [pr_xy, pr_th] = points(c.pr);
        ordered_json entry;
        entry["name"] = c.name;
        entry["positives"] = c.positives;
        entry["auc_roc"] = c.roc.auc;
        entry["auc_pr"] = c.pr.auc;
        entry["roc"] = std::move(roc_xy);
        entry["roc_thresholds"] = std::move(roc_th);
        entry["pr"] = std::move(pr_xy);
        entry["pr_thresholds"] = std::move(pr_th);
        doc["classes"].push_back(std::move(entry));
    }
    return doc.dump(1) + "\n";
}

std::string report_summary_table(const EvalReport& report) {
    std::string out = "class\tpositives\tauc_roc\tauc_pr\n";
    for (const ClassReport& c : report.classes) {
        out += c.name + "\t" + std::to_string(c.positives) + "\t" + format_double(c.roc.auc) + "\t" +
               format_double(c.pr.auc) + "\n";
    }
    out += "macro\t" + std::to_string(report.sample_count) + "\t" + format_double(report.macro_auc_roc) + "\t" +
           format_double(report.macro_auc_pr) + "\n";
    return out;
}

} // namespace mmfusion
