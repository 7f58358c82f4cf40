#include "mmfusion/diagnostics.hpp"
#include "mmfusion/errors.hpp"
#include "mmfusion/fusion.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

using namespace mmfusion;
namespace o = mmfusion::oracle;

namespace {

FusionConfig small(Variant v) {
    FusionConfig cfg;
    cfg.variant = v;
    cfg.image_dim = 6;
    cfg.proj_dim = 5;
    cfg.hidden_dim = 7;
    cfg.num_classes = 3;
    return cfg;
}

std::vector<double> gaussian(Rng& rng, std::size_t n) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = g(rng);
    return v;
}

ClinicalVector random_clinical(Rng& rng) {
    ClinicalVector c;
    std::bernoulli_distribution present(0.7);
    for (std::size_t b = 0; b < kNumClinicalBlocks; ++b) {
        if (!present(rng)) continue;
        std::uniform_int_distribution<std::size_t> k(0, kClinicalBlockSizes[b] - 1);
        c.values[kClinicalBlockOffsets[b] + k(rng)] = 1.0;
        c.presence[b] = true;
    }
    return c;
}

// Random values everywhere, biases included, so no parameter is trivially zero.
FusionModel random_model(const FusionConfig& cfg, std::uint64_t seed) {
    FusionModel m = FusionModel::initialize(cfg, seed);
    Rng rng = make_rng(seed, RngStream::GradCheck);
    for (auto& p : m.parameters())
        if (p.tensor.rank() == 1) p.tensor.value = gaussian(rng, p.tensor.size());
    return m;
}

o::Matrix weight(const FusionModel& m, const char* name) {
    const DiffTensor& t = m.parameter(name);
    return o::as_matrix(t.value, t.shape[0], t.shape[1]);
}

const std::vector<double>& bias(const FusionModel& m, const char* name) { return m.parameter(name).value; }

struct OracleOut {
    std::vector<double> fused;
    std::vector<double> image_gate;
    std::vector<double> probabilities;
};

// Straight-line dense reimplementation of every variant.
OracleOut oracle_forward(const FusionModel& m, const std::vector<double>& e, const ClinicalVector& cv) {
    const FusionConfig& cfg = m.config();
    const std::vector<double> c(cv.values.begin(), cv.values.end());
    const auto e_proj = o::relu(o::affine(weight(m, "image_projection.weight"), e, bias(m, "image_projection.bias")));
    const auto c_proj =
        o::relu(o::affine(weight(m, "clinical_projection.weight"), c, bias(m, "clinical_projection.bias")));
    OracleOut out;
    if (cfg.variant == Variant::Concat) {
        out.fused = o::join(e_proj, c_proj);
    } else {
        std::vector<double> img_in;
        std::vector<double> clin_in;
        if (cfg.variant == Variant::CoAttention) {
            img_in = clin_in = cfg.gates_from_projected ? o::join(e_proj, c_proj) : o::join(e, c);
        } else {
            img_in = cfg.gates_from_projected ? c_proj : c;
            clin_in = cfg.gates_from_projected ? e_proj : e;
        }
        out.image_gate = o::logistic(o::affine(weight(m, "image_gate.weight"), img_in, bias(m, "image_gate.bias")));
        const auto clin_gate =
            o::logistic(o::affine(weight(m, "clinical_gate.weight"), clin_in, bias(m, "clinical_gate.bias")));
        out.fused = o::join(o::times(out.image_gate, e_proj), o::times(clin_gate, c_proj));
    }
    const auto hidden = o::relu(o::affine(weight(m, "hidden.weight"), out.fused, bias(m, "hidden.bias")));
    out.probabilities = o::softmax(o::affine(weight(m, "output.weight"), hidden, bias(m, "output.bias")));
    return out;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol);
}

} // namespace

TEST_CASE("variant names") {
    for (Variant v : {Variant::Concat, Variant::CoAttention, Variant::CrossAttention})
        CHECK(parse_variant(variant_name(v)) == v);
    CHECK(parse_variant("crossattention") == Variant::CrossAttention);
    CHECK_FALSE(parse_variant("late-fusion").has_value());
}

TEST_CASE("config validation") {
    FusionConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.num_classes = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.clinical_dim = 35;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.proj_dim = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("parameter layout follows the variant") {
    FusionConfig cfg;
    cfg.variant = Variant::CoAttention;
    const auto co = FusionModel::layout(cfg);
    REQUIRE(co.size() == 12);
    CHECK(co[4].first == "image_gate.weight");
    CHECK(co[4].second == Shape{2048 + 36, 100});
    CHECK(co[8].second == Shape{200, 200});

    cfg.variant = Variant::CrossAttention;
    const auto cross = FusionModel::layout(cfg);
    CHECK(cross[4].second == Shape{36, 100});
    CHECK(cross[6].second == Shape{2048, 100});

    cfg.variant = Variant::Concat;
    const auto concat = FusionModel::layout(cfg);
    CHECK(concat.size() == 8);
    for (const auto& [name, shape] : concat) CHECK(name.find("gate") == std::string::npos);
    CHECK_THROWS_AS(FusionModel::zeros(cfg).image_gate_weight(), ContractError);
}

TEST_CASE("initialization is scaled uniform with zero biases") {
    FusionConfig cfg = small(Variant::CoAttention);
    const FusionModel m = FusionModel::initialize(cfg, 3);
    for (const auto& p : m.parameters()) {
        if (p.tensor.rank() == 1) {
            for (double b : p.tensor.value) CHECK(b == 0.0);
        } else {
            const double bound = 1.0 / std::sqrt(static_cast<double>(p.tensor.shape[0]));
            for (double w : p.tensor.value) CHECK(std::abs(w) <= bound);
        }
    }
    const FusionModel again = FusionModel::initialize(cfg, 3);
    for (std::size_t i = 0; i < m.parameters().size(); ++i)
        CHECK(m.parameters()[i].tensor.value == again.parameters()[i].tensor.value);
}

TEST_CASE("projection examples") {
    FusionConfig cfg;
    cfg.image_dim = 8;
    FusionModel m = FusionModel::zeros(cfg);
    Tape t;
    const auto& e = t.constant(std::vector<double>(8, 1.5));
    const auto& p = project_image(t, e, m);
    CHECK(p.size() == 100);
    CHECK(p.value == std::vector<double>(100, 0.0));

    m.parameter("image_projection.bias").value.assign(100, -1e6);
    m.parameter("image_projection.weight").value.assign(800, 0.0);
    CHECK(project_image(t, e, m).value == std::vector<double>(100, 0.0));

    Rng rng = make_rng(1, RngStream::Init);
    m = FusionModel::initialize(cfg, 1);
    m.parameter("clinical_projection.bias").value = gaussian(rng, 100);
    const auto& bt = m.clinical_projection_bias().value;
    const auto& zero = project_clinical(t, t.constant(std::vector<double>(36, 0.0)), m);
    for (std::size_t j = 0; j < 100; ++j) CHECK(zero.value[j] == std::max(0.0, bt[j]));

    std::vector<double> onehot(36, 0.0);
    onehot[20] = 1.0;
    const auto& row = project_clinical(t, t.constant(onehot), m);
    const auto& Wt = m.clinical_projection_weight().value;
    for (std::size_t j = 0; j < 100; ++j) CHECK(row.value[j] == std::max(0.0, Wt[20 * 100 + j] + bt[j]));

    CHECK_THROWS_AS(project_image(t, t.constant({1.0}), m), DimensionError);
}

TEST_CASE("concat fusion examples") {
    Tape t;
    const auto& a = t.constant({1, 2, 3});
    const auto& k = fuse_concat(t, a, t.constant({4, 5, 6}));
    CHECK(k.size() == 6);
    CHECK(std::vector<double>(k.value.begin(), k.value.begin() + 3) == a.value);
    CHECK(fuse_concat(t, t.constant({0, 0}), t.constant({0, 0})).value == std::vector<double>(4, 0.0));
    CHECK_THROWS_AS(fuse_concat(t, a, t.constant({1})), DimensionError);
}

TEST_CASE("gated fusion examples") {
    Rng rng = make_rng(4, RngStream::GradCheck);
    for (Variant v : {Variant::CoAttention, Variant::CrossAttention}) {
        const FusionConfig cfg = small(v);
        FusionModel m = random_model(cfg, 4);
        Tape t;
        const auto& e = t.constant(gaussian(rng, cfg.image_dim));
        const auto cv = random_clinical(rng);
        const auto& c = t.constant(std::vector<double>(cv.values.begin(), cv.values.end()));
        const auto& ep = project_image(t, e, m);
        const auto& cp = project_clinical(t, c, m);
        auto fuse = [&] {
            return v == Variant::CoAttention ? fuse_coattention(t, e, c, ep, cp, m)
                                             : fuse_crossattention(t, e, c, ep, cp, m);
        };

        SUBCASE("zero gate parameters give half gates") {
            for (const char* n : {"image_gate.weight", "image_gate.bias", "clinical_gate.weight", "clinical_gate.bias"})
                std::fill(m.parameter(n).value.begin(), m.parameter(n).value.end(), 0.0);
            const auto g = fuse();
            std::vector<double> half;
            for (double x : ep.value) half.push_back(0.5 * x);
            for (double x : cp.value) half.push_back(0.5 * x);
            CHECK(g.fused->value == half);
        }
        SUBCASE("saturated image gate passes the projection through") {
            m.parameter("image_gate.bias").value.assign(cfg.proj_dim, 1000.0);
            const auto g = fuse();
            check_close(std::vector<double>(g.fused->value.begin(), g.fused->value.begin() + 5), ep.value, 1e-12);
        }
        SUBCASE("gates lie strictly inside (0, 1)") {
            const auto g = fuse();
            for (const auto* gate : {g.image_gate, g.clinical_gate})
                for (double x : gate->value) {
                    CHECK(x > 0.0);
                    CHECK(x < 1.0);
                }
        }
        SUBCASE("wrong variant is rejected") {
            FusionModel other = random_model(small(v == Variant::CoAttention ? Variant::CrossAttention
                                                                              : Variant::CoAttention), 4);
            CHECK_THROWS_AS((v == Variant::CoAttention ? fuse_coattention(t, e, c, ep, cp, other)
                                                       : fuse_crossattention(t, e, c, ep, cp, other)),
                            ContractError);
        }
    }
}

TEST_CASE("cross-attention image gate ignores its weight when clinical is missing") {
    Rng rng = make_rng(8, RngStream::GradCheck);
    const FusionConfig cfg = small(Variant::CrossAttention);
    FusionModel a = random_model(cfg, 8);
    FusionModel b = random_model(cfg, 9);
    b.parameter("image_gate.bias").value = a.parameter("image_gate.bias").value;
    const auto e = gaussian(rng, cfg.image_dim);
    Tape t;
    const auto pa = forward(t, e, ClinicalVector{}, a);
    const auto pb = forward(t, e, ClinicalVector{}, b);
    CHECK(pa.image_gate->value == pb.image_gate->value);
    for (std::size_t j = 0; j < cfg.proj_dim; ++j)
        CHECK(pa.image_gate->value[j] == stable_sigmoid(a.image_gate_bias().value[j]));

    a.parameter("image_gate.bias").value.assign(cfg.proj_dim, 0.0);
    CHECK(forward(t, e, ClinicalVector{}, a).image_gate->value == std::vector<double>(cfg.proj_dim, 0.5));
}

TEST_CASE("forward matches the straight-line oracle") {
    Rng rng = make_rng(10, RngStream::GradCheck);
    for (bool projected : {false, true}) {
        for (Variant v : {Variant::Concat, Variant::CoAttention, Variant::CrossAttention}) {
            FusionConfig cfg = small(v);
            cfg.gates_from_projected = projected;
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                const FusionModel m = random_model(cfg, seed);
                const auto e = gaussian(rng, cfg.image_dim);
                const auto c = random_clinical(rng);
                Tape t;
                const ForwardPass pass = forward(t, e, c, m);
                const OracleOut ref = oracle_forward(m, e, c);
                check_close(pass.fused->value, ref.fused, 1e-12);
                check_close(pass.probabilities->value, ref.probabilities, 1e-12);
                if (v != Variant::Concat) check_close(pass.image_gate->value, ref.image_gate, 1e-12);
                CHECK(predict_proba(m, e, c) == pass.probabilities->value);
            }
        }
    }
}

TEST_CASE("classify examples") {
    FusionConfig cfg = small(Variant::Concat);
    const FusionModel zero = FusionModel::zeros(cfg);
    Tape t;
    const auto& p = classify(t, t.constant(std::vector<double>(10, 0.7)), zero);
    for (double x : p.value) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    Rng rng = make_rng(12, RngStream::GradCheck);
    const FusionModel m = random_model(cfg, 12);
    for (int i = 0; i < 50; ++i) {
        double total = 0.0;
        for (double x : classify(t, t.constant(gaussian(rng, 10)), m).value) total += x;
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
    CHECK(FusionModel::layout(FusionConfig{})[4].second == Shape{200, 200});
}

TEST_CASE("projections are non-negative and forward is deterministic") {
    Rng rng = make_rng(13, RngStream::GradCheck);
    for (Variant v : {Variant::Concat, Variant::CoAttention, Variant::CrossAttention}) {
        const FusionModel m = random_model(small(v), 13);
        for (int i = 0; i < 30; ++i) {
            const auto e = gaussian(rng, 6);
            const auto c = random_clinical(rng);
            Tape t1;
            Tape t2;
            const auto a = forward(t1, e, c, m);
            const auto b = forward(t2, e, c, m);
            for (double x : a.image_projection->value) CHECK(x >= 0.0);
            for (double x : a.clinical_projection->value) CHECK(x >= 0.0);
            CHECK(std::memcmp(a.probabilities->value.data(), b.probabilities->value.data(),
                              a.probabilities->value.size() * sizeof(double)) == 0);
        }
    }
}

TEST_CASE("co-attention restricted to the other modality equals cross-attention") {
    Rng rng = make_rng(14, RngStream::GradCheck);
    const FusionConfig cross_cfg = small(Variant::CrossAttention);
    const FusionConfig co_cfg = small(Variant::CoAttention);
    const std::size_t d = cross_cfg.image_dim;
    const std::size_t c_dim = kClinicalDim;
    const std::size_t p = cross_cfg.proj_dim;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const FusionModel cross = random_model(cross_cfg, seed);
        FusionModel co = random_model(co_cfg, seed + 100);
        for (const auto& param : cross.parameters())
            if (param.name.find("gate") == std::string::npos) co.parameter(param.name).value = param.tensor.value;
        co.parameter("image_gate.bias").value = cross.image_gate_bias().value;
        co.parameter("clinical_gate.bias").value = cross.clinical_gate_bias().value;

        // Rows of the joint [image; clinical] input: image rows come first.
        auto& wx = co.parameter("image_gate.weight").value;
        auto& wt = co.parameter("clinical_gate.weight").value;
        std::fill(wx.begin(), wx.end(), 0.0);
        std::fill(wt.begin(), wt.end(), 0.0);
        for (std::size_t r = 0; r < c_dim; ++r)
            for (std::size_t j = 0; j < p; ++j) wx[(d + r) * p + j] = cross.image_gate_weight().value[r * p + j];
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t j = 0; j < p; ++j) wt[r * p + j] = cross.clinical_gate_weight().value[r * p + j];

        const auto e = gaussian(rng, d);
        const auto c = random_clinical(rng);
        check_close(predict_proba(co, e, c), predict_proba(cross, e, c), 1e-12);
    }
}

TEST_CASE("model gradients pass the finite-difference check") {
    for (Variant v : {Variant::Concat, Variant::CoAttention, Variant::CrossAttention}) {
        const auto r = check_model_gradients(reduced_fusion_config(v), 123);
        CHECK(r.entries_checked > 0);
        CHECK(r.max_relative_error < 1e-4);
    }
}

TEST_CASE("forward rejects a wrong embedding width") {
    const FusionModel m = random_model(small(Variant::Concat), 1);
    Tape t;
    const std::vector<double> e(5, 0.0);
    CHECK_THROWS_AS(forward(t, e, ClinicalVector{}, m), DimensionError);
}
