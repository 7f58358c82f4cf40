#include "mmfusion/synth.hpp"

#include "mmfusion/errors.hpp"
#include "mmfusion/io.hpp"
#include "mmfusion/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace mmfusion {

namespace {

using nlohmann::json;

std::optional<std::size_t> block_index(std::string_view name) {
    for (std::size_t b = 0; b < kNumClinicalBlocks; ++b) {
        if (clinical_block_name(b) == name) return b;
    }
    return std::nullopt;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : it->get<T>();
}

std::vector<double> parse_mean(const json& node, std::size_t image_dim) {
    if (node.is_array()) return node.get<std::vector<double>>();
    if (!node.is_object()) throw ConfigError("class mean must be an array or an index→value object");
    std::vector<double> mean(image_dim, 0.0);
    for (auto it = node.begin(); it != node.end(); ++it) {
        std::size_t idx = 0;
        try {
            idx = std::stoul(it.key());
        } catch (const std::exception&) {
            throw ConfigError("class mean index '" + it.key() + "' is not a number");
        }
        if (idx >= image_dim) throw ConfigError("class mean index " + it.key() + " exceeds image_dim");
        mean[idx] = it.value().get<double>();
    }
    return mean;
}

std::string sample_id(std::string_view split, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", i);
    return std::string(split) + "-" + buf;
}

} // namespace

void SynthSpec::validate() const {
    if (image_dim == 0) throw ConfigError("synth image_dim must be positive");
    if (classes.size() < 2) throw ConfigError("synth spec needs at least two classes");
    for (double r : block_missing_rate) {
        if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("block missing rates must lie in [0, 1]");
    }
    for (const SynthClass& c : classes) {
        if (c.name.empty() || c.name.find_first_of(",\"\r\n") != std::string::npos) {
            throw ConfigError("invalid synth class name '" + c.name + "'");
        }
        if (c.mean.size() != image_dim) {
            throw ConfigError("class '" + c.name + "' mean has " + std::to_string(c.mean.size()) +
                              " entries, image_dim is " + std::to_string(image_dim));
        }
        if (!(c.stddev > 0.0) || !std::isfinite(c.stddev)) {
            throw ConfigError("class '" + c.name + "' stddev must be positive");
        }
        for (std::size_t b = 0; b < kNumClinicalBlocks; ++b) {
            const auto& dist = c.clinical[b];
            if (!dist) continue;
            if (dist->size() != kClinicalBlockSizes[b]) {
                throw ConfigError("class '" + c.name + "' block '" + std::string(clinical_block_name(b)) +
                                  "' needs " + std::to_string(kClinicalBlockSizes[b]) + " probabilities");
            }
            double total = 0.0;
            for (double p : *dist) {
                if (!(p >= 0.0)) throw ConfigError("class '" + c.name + "' has a negative probability");
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-9) {
                throw ConfigError("class '" + c.name + "' block '" + std::string(clinical_block_name(b)) +
                                  "' probabilities sum to " + format_double(total));
            }
        }
    }
    auto names = class_names();
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
        throw ConfigError("synth class names must be unique");
    }
}

std::vector<std::string> SynthSpec::class_names() const {
    std::vector<std::string> out;
    for (const SynthClass& c : classes) out.push_back(c.name);
    return out;
}

SynthSpec SynthSpec::from_json(std::string_view text) {
    SynthSpec spec;
    try {
        const json doc = json::parse(text);
        spec.seed = get_or<std::uint64_t>(doc, "seed", 0);
        spec.image_dim = doc.at("image_dim").get<std::size_t>();
        if (auto it = doc.find("block_missing_rate"); it != doc.end()) {
            for (auto b = it->begin(); b != it->end(); ++b) {
                auto idx = block_index(b.key());
                if (!idx) throw ConfigError("unknown clinical block '" + b.key() + "'");
                spec.block_missing_rate[*idx] = b.value().get<double>();
            }
        }
        for (const json& c : doc.at("classes")) {
            SynthClass sc;
            sc.name = c.at("name").get<std::string>();
            sc.train_count = get_or<std::size_t>(c, "train", 0);
            sc.test_count = get_or<std::size_t>(c, "test", 0);
            sc.stddev = get_or<double>(c, "stddev", 1.0);
            sc.mean = c.contains("mean") ? parse_mean(c.at("mean"), spec.image_dim)
                                         : std::vector<double>(spec.image_dim, 0.0);
            if (auto it = c.find("clinical"); it != c.end()) {
                for (auto b = it->begin(); b != it->end(); ++b) {
                    auto idx = block_index(b.key());
                    if (!idx) throw ConfigError("unknown clinical block '" + b.key() + "'");
                    sc.clinical[*idx] = b.value().get<std::vector<double>>();
                }
            }
            spec.classes.push_back(std::move(sc));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid synth spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

SynthSpec SynthSpec::load(const std::filesystem::path& path) {
    auto text = read_file(path);
    if (!text) throw ConfigError("cannot read synth spec " + path.string());
    return from_json(*text);
}

SynthData generate_synth(const SynthSpec& spec, const ClinicalVocabulary& vocab) {
    spec.validate();
    Rng rng = make_rng(spec.seed, RngStream::Synth);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto draw = [&](const SynthClass& c, std::string id) {
        SampleRecord r;
        r.id = std::move(id);
        r.label = c.name;
        r.image_embedding.resize(spec.image_dim);
        for (std::size_t i = 0; i < spec.image_dim; ++i) r.image_embedding[i] = c.mean[i] + c.stddev * noise(rng);
        for (std::size_t b = 0; b < kNumClinicalBlocks; ++b) {
            if (!c.clinical[b]) continue;
            const bool missing = unit(rng) < spec.block_missing_rate[b];
            std::discrete_distribution<std::size_t> pick(c.clinical[b]->begin(), c.clinical[b]->end());
            const std::size_t k = pick(rng);
            if (!missing) r.clinical.fields[b] = vocab.categories(b)[k];
        }
        return r;
    };

    SynthData data;
    for (auto [split, out] : {std::pair{"train", &data.train}, std::pair{"test", &data.test}}) {
        const bool is_train = std::string_view(split) == "train";
        for (const SynthClass& c : spec.classes) {
            const std::size_t n = is_train ? c.train_count : c.test_count;
            for (std::size_t i = 0; i < n; ++i) out->push_back(draw(c, ""));
        }
        std::shuffle(out->begin(), out->end(), rng);
        for (std::size_t i = 0; i < out->size(); ++i) (*out)[i].id = sample_id(split, i);
    }
    return data;
}

void gen_synth(const SynthSpec& spec, const ClinicalVocabulary& vocab, const std::filesystem::path& out_dir) {
    const SynthData data = generate_synth(spec, vocab);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw PersistenceError("cannot create output directory " + out_dir.string());
    write_dataset(out_dir / "train.csv", data.train, spec.image_dim);
    write_dataset(out_dir / "test.csv", data.test, spec.image_dim);
}

} // namespace mmfusion
