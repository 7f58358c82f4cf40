#include "cli.hpp"

#include "mmfusion/dataset.hpp"
#include "mmfusion/diagnostics.hpp"
#include "mmfusion/errors.hpp"
#include "mmfusion/experiment.hpp"
#include "mmfusion/io.hpp"
#include "mmfusion/model_io.hpp"
#include "mmfusion/synth.hpp"
#include "mmfusion/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace mmfusion::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> mask_p;
    std::string variant;
    std::string out;
    std::string model;
    std::string data;
    std::string vocabulary;
    std::string id;
    double threshold = 1e-4;
    double epsilon = 1e-5;
};

Variant variant_or_throw(const std::string& name) {
    auto v = parse_variant(name);
    if (!v) throw ConfigError("unknown variant '" + name + "' (concat, co-attention, cross-attention)");
    return *v;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw PersistenceError("cannot create output directory " + dir.string());
}

ExperimentConfig load_experiment(const Options& o) {
    ExperimentConfig cfg = ExperimentConfig::load(o.config);
    if (!o.out.empty()) cfg.output_dir = o.out;
    return cfg;
}

int cmd_train(const Options& o, std::ostream& out) {
    ExperimentConfig cfg = load_experiment(o);
    if (!o.variant.empty()) cfg.model.variant = variant_or_throw(o.variant);
    if (o.seed) cfg.train.seed = *o.seed;
    if (o.mask_p) cfg.train.mask_probability = *o.mask_p;
    cfg.validate();
    if (cfg.train_data.empty()) throw ConfigError("config has no train_data");

    const ClinicalVocabulary vocab = cfg.load_vocabulary();
    const auto records = load_dataset(cfg.train_data, vocab, {cfg.class_names, cfg.model.image_dim});
    const auto examples = to_examples(records, vocab, cfg.class_names);
    const TrainResult result = train(examples, cfg.model, cfg.train);

    ensure_dir(cfg.output_dir);
    save_model(result.model, cfg.output_dir / "model.bin");
    write_file_atomic(cfg.output_dir / "history.json", result.history.to_json());
    const auto& last = result.history.epochs.back();
    out << "trained " << variant_name(cfg.model.variant) << " on " << examples.size() << " samples, "
        << result.history.epochs.size() << " epochs, final train loss " << format_double(last.train_loss) << "\n"
        << "wrote " << (cfg.output_dir / "model.bin").string() << "\n";
    return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
    ExperimentConfig cfg = load_experiment(o);
    const fs::path model_path = o.model.empty() ? cfg.output_dir / "model.bin" : fs::path(o.model);
    const fs::path data_path = o.data.empty() ? cfg.test_data : fs::path(o.data);
    if (data_path.empty()) throw ConfigError("no evaluation data: pass --data or set test_data");
    const double p = o.mask_p.value_or(cfg.eval_mask_probability);
    const std::uint64_t seed = o.seed.value_or(cfg.eval_seed);

    const FusionModel model = load_model(model_path);
    const ClinicalVocabulary vocab = cfg.load_vocabulary();
    const auto records = load_dataset(data_path, vocab, {cfg.class_names, model.config().image_dim});
    const auto examples = to_examples(records, vocab, cfg.class_names);
    const EvalReport report = evaluate_masked(model, examples, p, seed, cfg.class_names);

    ensure_dir(cfg.output_dir);
    write_file_atomic(cfg.output_dir / "report.json", report_to_json(report));
    const std::string table = report_summary_table(report);
    write_file_atomic(cfg.output_dir / "summary.tsv", table);
    out << table;
    return kOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
    ExperimentConfig cfg = load_experiment(o);
    const fs::path model_path = o.model.empty() ? cfg.output_dir / "model.bin" : fs::path(o.model);
    const FusionModel model = load_model(model_path);
    const ClinicalVocabulary vocab = cfg.load_vocabulary();
    const auto records = load_dataset(o.data, vocab, {cfg.class_names, model.config().image_dim});
    if (records.empty()) throw ParseError(o.data + ": no records");
    auto it = o.id.empty() ? records.begin()
                           : std::find_if(records.begin(), records.end(),
                                          [&](const SampleRecord& r) { return r.id == o.id; });
    if (it == records.end()) throw ParseError(o.data + ": no record with id '" + o.id + "'");

    const auto probs = predict_proba(model, it->image_embedding, encode(it->clinical, vocab));
    out << "id\t" << it->id << "\n";
    for (std::size_t k = 0; k < probs.size(); ++k) out << cfg.class_names[k] << "\t" << format_double(probs[k]) << "\n";
    return kOk;
}

int cmd_gen_synth(const Options& o, std::ostream& out) {
    SynthSpec spec = SynthSpec::load(o.config);
    if (o.seed) spec.seed = *o.seed;
    const ClinicalVocabulary vocab =
        o.vocabulary.empty() ? ClinicalVocabulary::defaults() : ClinicalVocabulary::load(o.vocabulary);
    const fs::path dir = o.out.empty() ? fs::path("synth") : fs::path(o.out);
    gen_synth(spec, vocab, dir);
    out << "wrote " << (dir / "train.csv").string() << " and " << (dir / "test.csv").string() << "\n";
    return kOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
    const Variant v = variant_or_throw(o.variant.empty() ? "cross-attention" : o.variant);
    const GradCheckResult r = check_model_gradients(reduced_fusion_config(v), o.seed.value_or(0), 1, o.epsilon);
    out << "variant\t" << variant_name(v) << "\n"
        << "entries\t" << r.entries_checked << "\n"
        << "max_relative_error\t" << format_double(r.max_relative_error) << "\n";
    return r.max_relative_error <= o.threshold ? kOk : kGradCheckFailed;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multimodal fusion training and evaluation", "mmfusion"};
    app.require_subcommand(1);
    Options o;

    auto* train_cmd = app.add_subcommand("train", "Train a fusion model from an experiment config");
    train_cmd->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--seed", o.seed, "Override train.seed");
    train_cmd->add_option("--mask-p", o.mask_p, "Override train.mask_probability");
    train_cmd->add_option("--variant", o.variant, "concat | co-attention | cross-attention");
    train_cmd->add_option("--out", o.out, "Output directory (model.bin, history.json)");

    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a trained model; writes report.json and summary.tsv");
    eval_cmd->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--model", o.model, "Model file (default <out>/model.bin)");
    eval_cmd->add_option("--data", o.data, "Dataset (default test_data)");
    eval_cmd->add_option("--mask-p", o.mask_p, "Test-time clinical drop probability");
    eval_cmd->add_option("--seed", o.seed, "Seed for test-time masking");
    eval_cmd->add_option("--out", o.out, "Output directory");

    auto* predict_cmd = app.add_subcommand("predict", "Print class probabilities for one record");
    predict_cmd->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--model", o.model, "Model file (default <out>/model.bin)");
    predict_cmd->add_option("--data", o.data, "Dataset holding the record")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--id", o.id, "Record id (default: first row)");
    predict_cmd->add_option("--out", o.out, "Output directory used to locate the default model");

    auto* synth_cmd = app.add_subcommand("gen-synth", "Generate synthetic train/test datasets");
    synth_cmd->add_option("--config", o.config, "Synth spec (JSON)")->required()->check(CLI::ExistingFile);
    synth_cmd->add_option("--vocabulary", o.vocabulary, "Vocabulary file (default built-in)");
    synth_cmd->add_option("--seed", o.seed, "Override the spec seed");
    synth_cmd->add_option("--out", o.out, "Output directory (default ./synth)");

    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of a reduced-size model");
    grad_cmd->add_option("--variant", o.variant, "concat | co-attention | cross-attention");
    grad_cmd->add_option("--seed", o.seed, "Model/input seed");
    grad_cmd->add_option("--threshold", o.threshold, "Maximum tolerated relative error");
    grad_cmd->add_option("--epsilon", o.epsilon, "Central-difference step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(o, out);
        if (eval_cmd->parsed()) return cmd_evaluate(o, out);
        if (predict_cmd->parsed()) return cmd_predict(o, out);
        if (synth_cmd->parsed()) return cmd_gen_synth(o, out);
        if (grad_cmd->parsed()) return cmd_gradcheck(o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const PersistenceError& e) {
        err << "persistence error: " << e.what() << "\n";
        return kPersistence;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kNumeric;
    } catch (const DegenerateInputError& e) {
        err << "degenerate input: " << e.what() << "\n";
        return kDegenerate;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kData;
    } catch (const VocabularyError& e) {
        err << "vocabulary error: " << e.what() << "\n";
        return kData;
    } catch (const DimensionError& e) {
        err << "dimension error: " << e.what() << "\n";
        return kData;
    } catch (const IndexError& e) {
        err << "index error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUnexpected;
    }
    return kUsage;
}

} // namespace mmfusion::cli
