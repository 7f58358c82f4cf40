#include "mmfusion/experiment.hpp"

#include "mmfusion/errors.hpp"
#include "mmfusion/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace mmfusion {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return (path.is_relative() && !base.empty() ? base / path : path).lexically_normal();
}

} // namespace

void ExperimentConfig::validate() const {
    model.validate();
    train.validate();
    if (class_names.size() != model.num_classes) {
        throw ConfigError("class list has " + std::to_string(class_names.size()) + " names but num_classes is " +
                          std::to_string(model.num_classes));
    }
    std::set<std::string> unique(class_names.begin(), class_names.end());
    if (unique.size() != class_names.size()) throw ConfigError("class names must be unique");
    for (const auto& name : class_names) {
        if (name.empty() || name.find_first_of(",\"\r\n") != std::string::npos) {
            throw ConfigError("invalid class name '" + name + "'");
        }
    }
    if (!(eval_mask_probability >= 0.0 && eval_mask_probability <= 1.0)) {
        throw ConfigError("evaluate.mask_probability must lie in [0, 1]");
    }
    for (const auto* p : {&train_data, &test_data, &vocabulary}) {
        if (!p->empty() && !std::filesystem::exists(*p)) {
            throw ConfigError("referenced file does not exist: " + p->string());
        }
    }
}

ClinicalVocabulary ExperimentConfig::load_vocabulary() const {
    return vocabulary.empty() ? ClinicalVocabulary::defaults() : ClinicalVocabulary::load(vocabulary);
}

ExperimentConfig ExperimentConfig::from_json(std::string_view text, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    try {
        const json doc = json::parse(text);
        if (!doc.is_object()) throw ConfigError("experiment config must be a JSON object");
        reject_unknown(doc,
                       {"train_data", "test_data", "vocabulary", "output_dir", "classes", "image_dim", "model",
                        "train", "evaluate"},
                       "config");
        if (doc.contains("train_data")) cfg.train_data = resolve(base_dir, doc["train_data"].get<std::string>());
        if (doc.contains("test_data")) cfg.test_data = resolve(base_dir, doc["test_data"].get<std::string>());
        if (doc.contains("vocabulary")) cfg.vocabulary = resolve(base_dir, doc["vocabulary"].get<std::string>());
        cfg.output_dir = resolve(base_dir, doc.value("output_dir", std::string("out")));
        if (doc.contains("classes")) cfg.class_names = doc["classes"].get<std::vector<std::string>>();
        cfg.model.num_classes = cfg.class_names.size();
        cfg.model.image_dim = doc.value("image_dim", cfg.model.image_dim);

        if (auto it = doc.find("model"); it != doc.end()) {
            const json& m = *it;
            reject_unknown(m, {"variant", "proj_dim", "hidden_dim", "gates_from_projected"}, "model");
            if (m.contains("variant")) {
                const auto name = m["variant"].get<std::string>();
                auto v = parse_variant(name);
                if (!v) throw ConfigError("unknown variant '" + name + "'");
                cfg.model.variant = *v;
            }
            cfg.model.proj_dim = m.value("proj_dim", cfg.model.proj_dim);
            cfg.model.hidden_dim = m.value("hidden_dim", cfg.model.hidden_dim);
            cfg.model.gates_from_projected = m.value("gates_from_projected", cfg.model.gates_from_projected);
        }
        if (auto it = doc.find("train"); it != doc.end()) {
            const json& t = *it;
            reject_unknown(t,
                           {"stage_learning_rates", "epochs_per_stage", "batch_size", "mask_probability", "seed",
                            "validation_fraction", "adam"},
                           "train");
            TrainConfig& tc = cfg.train;
            tc.stage_learning_rates = t.value("stage_learning_rates", tc.stage_learning_rates);
            tc.epochs_per_stage = t.value("epochs_per_stage", tc.epochs_per_stage);
            tc.batch_size = t.value("batch_size", tc.batch_size);
            tc.mask_probability = t.value("mask_probability", tc.mask_probability);
            tc.seed = t.value("seed", tc.seed);
            tc.validation_fraction = t.value("validation_fraction", tc.validation_fraction);
            if (auto a = t.find("adam"); a != t.end()) {
                reject_unknown(*a, {"beta1", "beta2", "epsilon"}, "train.adam");
                tc.adam.beta1 = a->value("beta1", tc.adam.beta1);
                tc.adam.beta2 = a->value("beta2", tc.adam.beta2);
                tc.adam.epsilon = a->value("epsilon", tc.adam.epsilon);
            }
        }
        if (auto it = doc.find("evaluate"); it != doc.end()) {
            reject_unknown(*it, {"mask_probability", "seed"}, "evaluate");
            cfg.eval_mask_probability = it->value("mask_probability", cfg.eval_mask_probability);
            cfg.eval_seed = it->value("seed", cfg.eval_seed);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid experiment config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    auto text = read_file(path);
    if (!text) throw ConfigError("cannot read config " + path.string());
    return from_json(*text, path.parent_path());
}

} // namespace mmfusion
