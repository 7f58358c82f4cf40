#include "mmfusion/errors.hpp"
#include "mmfusion/metrics.hpp"
#include "oracles.hpp"

#include <json.hpp>

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mmfusion;
namespace o = mmfusion::oracle;

namespace {

struct Instance {
    std::vector<double> scores;
    std::vector<bool> labels;
};

// Coarse score grid so ties are common; both classes always present.
Instance random_instance(std::mt19937_64& rng, std::size_t n, double prevalence) {
    std::bernoulli_distribution pos(prevalence);
    std::uniform_int_distribution<int> grid(0, 20);
    Instance in;
    for (std::size_t i = 0; i < n; ++i) {
        in.labels.push_back(pos(rng));
        in.scores.push_back(grid(rng) / 20.0);
    }
    in.labels[0] = true;
    in.labels[1] = false;
    return in;
}

} // namespace

TEST_CASE("ROC examples") {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<bool> l{false, false, true, true};
    CHECK(o::mann_whitney_auc(s, l) == 0.75);
    CHECK(roc_curve(s, l).auc == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(roc_curve(std::vector<double>{0.1, 0.2, 0.8, 0.9}, {false, false, true, true}).auc == 1.0);
    CHECK(roc_curve(std::vector<double>(6, 0.3), {true, false, true, false, false, false}).auc == 0.5);
    CHECK_THROWS_AS(roc_curve(std::vector<double>{0.1, 0.2}, {true, true}), DegenerateInputError);
    CHECK_THROWS_AS(roc_curve(std::vector<double>{0.1, NAN}, {true, false}), DegenerateInputError);
}

TEST_CASE("ROC curve shape") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto in = random_instance(rng, 50, 0.4);
        const Curve c = roc_curve(in.scores, in.labels);
        CHECK(c.points.front().x == 0.0);
        CHECK(c.points.front().y == 0.0);
        CHECK(c.points.back().x == 1.0);
        CHECK(c.points.back().y == 1.0);
        for (std::size_t k = 1; k < c.points.size(); ++k) {
            CHECK(c.points[k].x >= c.points[k - 1].x);
            CHECK(c.points[k].y >= c.points[k - 1].y);
            CHECK(c.points[k].threshold < c.points[k - 1].threshold);
        }
    }
}

TEST_CASE("PR examples") {
    CHECK(pr_curve(std::vector<double>{0.1, 0.2, 0.8, 0.9}, {false, false, true, true}).auc == 1.0);
    CHECK(pr_curve(std::vector<double>(8, 0.5), {true, false, false, false, true, false, false, false}).auc == 0.25);
    CHECK_THROWS_AS(pr_curve(std::vector<double>{0.1, 0.2}, {false, false}), DegenerateInputError);

    std::mt19937_64 rng(99);
    const auto in = random_instance(rng, 200, 0.25);
    CHECK(std::abs(pr_curve(in.scores, in.labels).auc - o::exhaustive_auc_pr(in.scores, in.labels)) <= 1e-9);
}

TEST_CASE("trapezoid ROC equals the tie-corrected pairwise statistic") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(2, 200);
    std::uniform_real_distribution<double> prev(0.05, 0.95);
    for (int i = 0; i < 300; ++i) {
        const auto in = random_instance(rng, size(rng), prev(rng));
        CHECK(std::abs(roc_curve(in.scores, in.labels).auc - o::mann_whitney_auc(in.scores, in.labels)) <= 1e-9);
        CHECK(std::abs(pr_curve(in.scores, in.labels).auc - o::exhaustive_auc_pr(in.scores, in.labels)) <= 1e-9);
    }
}

TEST_CASE("ROC AUC is invariant to increasing transforms and flips under reversal") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const auto in = random_instance(rng, 80, 0.3);
        const double auc = roc_curve(in.scores, in.labels).auc;
        std::vector<double> ex;
        std::vector<double> affine;
        std::vector<double> neg;
        for (double s : in.scores) {
            ex.push_back(std::exp(s));
            affine.push_back(3.0 * s - 7.0);
            neg.push_back(-s);
        }
        CHECK(std::abs(roc_curve(ex, in.labels).auc - auc) <= 1e-12);
        CHECK(std::abs(roc_curve(affine, in.labels).auc - auc) <= 1e-12);
        CHECK(std::abs(roc_curve(neg, in.labels).auc - (1.0 - auc)) <= 1e-12);
    }
}

TEST_CASE("one-vs-rest report") {
    const std::vector<std::string> names{"a", "b"};

    SUBCASE("perfect probabilities") {
        std::vector<ScoredSample> s{{0, {1, 0}}, {1, {0, 1}}, {0, {1, 0}}};
        const auto r = one_vs_rest_report(s, names);
        CHECK(r.macro_auc_roc == 1.0);
        CHECK(r.macro_auc_pr == 1.0);
        CHECK(r.sample_count == 3);
    }
    SUBCASE("macro average is the unweighted mean") {
        // Class a perfectly ranked; class c fully tied.
        std::vector<ScoredSample> s{{0, {0.8, 0.1, 0.1}}, {1, {0.1, 0.8, 0.1}}, {2, {0.1, 0.8, 0.1}},
                                    {2, {0.2, 0.7, 0.1}}};
        const auto r = one_vs_rest_report(s, {"a", "b", "c"});
        double mean = 0.0;
        for (const auto& c : r.classes) mean += c.roc.auc;
        CHECK(r.macro_auc_roc == doctest::Approx(mean / 3.0).epsilon(1e-15));
        CHECK(r.classes[0].roc.auc == 1.0);
        CHECK(r.classes[2].roc.auc == 0.5);
    }
    SUBCASE("missing class names it") {
        std::vector<ScoredSample> s{{0, {0.6, 0.4}}, {0, {0.3, 0.7}}};
        try {
            one_vs_rest_report(s, {"benign", "malignant"});
            FAIL("expected DegenerateInputError");
        } catch (const DegenerateInputError& e) {
            CHECK(std::string(e.what()).find("malignant") != std::string::npos);
        }
    }
    SUBCASE("probabilities must sum to one") {
        std::vector<ScoredSample> s{{0, {0.6, 0.5}}, {1, {0.5, 0.5}}};
        CHECK_THROWS_AS(one_vs_rest_report(s, names), ContractError);
    }
    SUBCASE("four classes match independent per-class oracles") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<ScoredSample> s;
        for (std::size_t i = 0; i < 120; ++i) {
            std::vector<double> p(4);
            double total = 0.0;
            for (double& x : p) total += (x = u(rng));
            for (double& x : p) x /= total;
            s.push_back({i % 4, p});
        }
        const auto r = one_vs_rest_report(s, {"w", "x", "y", "z"});
        for (std::size_t c = 0; c < 4; ++c) {
            std::vector<double> scores;
            std::vector<bool> labels;
            for (const auto& x : s) {
                scores.push_back(x.probabilities[c]);
                labels.push_back(x.label == c);
            }
            CHECK(std::abs(r.classes[c].roc.auc - o::mann_whitney_auc(scores, labels)) <= 1e-12);
            CHECK(std::abs(r.classes[c].pr.auc - o::exhaustive_auc_pr(scores, labels)) <= 1e-12);
        }
    }
}

TEST_CASE("report export formats") {
    std::vector<ScoredSample> s{{0, {0.9, 0.1}}, {1, {0.4, 0.6}}, {0, {0.7, 0.3}}};
    const auto r = one_vs_rest_report(s, {"benign", "malignant"});
    const auto doc = nlohmann::json::parse(report_to_json(r));
    CHECK(doc["sample_count"] == 3);
    CHECK(doc["classes"][1]["name"] == "malignant");
    CHECK(doc["classes"][0]["roc"][0] == nlohmann::json::array({0.0, 0.0}));
    CHECK(doc["classes"][0]["roc_thresholds"][0].is_null());
    CHECK(doc["classes"][0]["roc"].size() == doc["classes"][0]["roc_thresholds"].size());

    const std::string table = report_summary_table(r);
    CHECK(table.rfind("class\tpositives\tauc_roc\tauc_pr\n", 0) == 0);
    CHECK(table.find("\nmacro\t3\t1\t1\n") != std::string::npos);
}
