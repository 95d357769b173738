#include "sdc/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sdc/datamodel.hpp"
#include "sdc/eval.hpp"
#include "sdc/features.hpp"
#include "sdc/trainer.hpp"

namespace sdc {

namespace {

struct SynthArgs {
    int subjects = 6, trials = 5, windows = 40, dim = 20, classes = 3;
    double shift = 1.0, noise = 0.25;
    std::uint64_t seed = 7;
    std::string out;
};

struct ExtractArgs {
    std::string raw, out;
    double window_sec = 1.0;
};

struct TrainArgs {
    std::string data, config, log, checkpoint;
    int target_subject = -1;
};

struct LosoArgs {
    std::string data, config, report;
    int jobs = 1;
};

struct MimapArgs {
    std::string checkpoint, data, out;
    int channels = 0;
};

struct ExportArgs {
    std::string checkpoint, data, out;
};

RunConfig config_or_default(const std::string& path) {
    if (path.empty()) {
        RunConfig cfg;
        cfg.validate();
        return cfg;
    }
    return load_run_config(path);
}

int do_synth(const SynthArgs& a) {
    FeatureTable table = make_synthetic_dataset(a.subjects, a.trials, a.windows, a.dim,
                                                a.classes, a.shift, a.noise, a.seed);
    save_feature_table(table, a.out);
    std::cout << "wrote " << table.records.size() << " records (dim " << table.dim << ", "
              << table.num_classes << " classes) to " << a.out << "\n";
    return 0;
}

int do_extract(const ExtractArgs& a) {
    auto trials = load_raw_trials(a.raw);
    SpectralConfig cfg;
    cfg.window_seconds = a.window_sec;
    cfg.hop_seconds = a.window_sec;
    FeatureTable table = extract_de_features(trials, cfg);
    save_feature_table(table, a.out);
    std::cout << "extracted " << table.records.size() << " records (dim " << table.dim
              << ") to " << a.out << "\n";
    return 0;
}

int do_train(const TrainArgs& a) {
    FeatureTable table = load_feature_table(a.data);
    RunConfig cfg = config_or_default(a.config);
    auto subjects = table.subject_ids();
    if (std::find(subjects.begin(), subjects.end(), a.target_subject) == subjects.end())
        throw ValidationError("train: subject " + std::to_string(a.target_subject) +
                              " not present in " + a.data);
    FeatureTable src, tgt;
    src.dim = tgt.dim = table.dim;
    src.num_classes = tgt.num_classes = table.num_classes;
    for (const auto& r : table.records)
        (r.subject_id == a.target_subject ? tgt : src).records.push_back(r);
    DomainSplit split(std::move(src), std::move(tgt));
    FitResult fr = fit(split, cfg);
    if (!a.log.empty()) save_epoch_logs(fr.epochs, a.log);
    if (!a.checkpoint.empty()) save_checkpoint(fr.model, a.checkpoint);
    auto [acc, cm] = evaluate(fr.model, split.evaluation_target());
    (void)cm;
    std::cout << "target subject " << a.target_subject << " accuracy " << acc << "\n";
    return 0;
}

int do_loso(const LosoArgs& a) {
    FeatureTable table = load_feature_table(a.data);
    RunConfig cfg = config_or_default(a.config);
    RunReport report = loso_run(table, cfg, a.jobs);
    save_report(report, a.report);
    std::cout << "loso mean accuracy " << report.mean_accuracy << " +- " << report.std_accuracy
              << " over " << report.folds.size() << " folds ("
              << report.negative_transfer_count << " negative transfer)\n";
    return 0;
}

int do_ablate(const LosoArgs& a) {
    FeatureTable table = load_feature_table(a.data);
    RunConfig cfg = config_or_default(a.config);
    auto rows = ablation_run(table, cfg, a.jobs);
    save_ablation(rows, a.report);
    for (const auto& r : rows)
        std::cout << r.name << " " << r.mean_accuracy << " +- " << r.std_accuracy << "\n";
    return 0;
}

int do_mimap(const MimapArgs& a) {
    Model model = load_checkpoint(a.checkpoint);
    FeatureTable table = load_feature_table(a.data);
    if (a.channels < 1) throw ValidationError("mimap: --channels must be >= 1");
    if (table.dim % a.channels != 0)
        throw ValidationError("mimap: dim " + std::to_string(table.dim) +
                              " is not divisible by channels " + std::to_string(a.channels));
    const int bands = table.dim / a.channels;
    Matrix probs = predict_probabilities(model, table);
    MiTensor mi = mi_topography(table, probs, bands, a.channels);
    save_mi_csv(mi, a.out);
    std::cout << "wrote MI tensor (" << mi.num_classes << " x " << mi.bands << " x "
              << mi.channels << ") to " << a.out << "\n";
    return 0;
}

int do_export(const ExportArgs& a) {
    Model model = load_checkpoint(a.checkpoint);
    FeatureTable table = load_feature_table(a.data);
    export_embeddings(model, table, a.out);
    std::cout << "wrote " << table.records.size() << " embeddings to " << a.out << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"SDC-Net domain-adaptation pipeline"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic covariate-shift dataset");
    synth_cmd->add_option("--subjects", synth.subjects, "Number of subjects")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--trials", synth.trials, "Trials per subject")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--windows", synth.windows, "Windows per trial")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--dim", synth.dim, "Feature dimension")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--classes", synth.classes, "Number of classes")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--shift", synth.shift, "Per-subject shift strength");
    synth_cmd->add_option("--noise", synth.noise, "Within-class noise sigma");
    synth_cmd->add_option("--seed", synth.seed, "Generator seed");
    synth_cmd->add_option("--out", synth.out, "Output feature CSV")->required();

    ExtractArgs extract;
    auto* extract_cmd = app.add_subcommand("extract", "Differential-entropy features from raw trials");
    extract_cmd->add_option("--raw", extract.raw, "Raw trial CSV")->required();
    extract_cmd->add_option("--out", extract.out, "Output feature CSV")->required();
    extract_cmd->add_option("--window-sec", extract.window_sec, "STFT window in seconds");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Adapt to one held-out subject");
    train_cmd->add_option("--data", train.data, "Feature CSV (all subjects labeled)")->required();
    train_cmd->add_option("--target-subject", train.target_subject, "Held-out subject id")->required();
    train_cmd->add_option("--config", train.config, "Run config file");
    train_cmd->add_option("--log", train.log, "JSONL training log path");
    train_cmd->add_option("--checkpoint", train.checkpoint, "Checkpoint output path");

    LosoArgs loso;
    auto* loso_cmd = app.add_subcommand("loso", "Leave-one-subject-out evaluation");
    loso_cmd->add_option("--data", loso.data, "Feature CSV")->required();
    loso_cmd->add_option("--config", loso.config, "Run config file");
    loso_cmd->add_option("--report", loso.report, "Report JSON path")->required();
    loso_cmd->add_option("--jobs", loso.jobs, "Parallel folds")->check(CLI::PositiveNumber);

    LosoArgs ablate;
    auto* ablate_cmd = app.add_subcommand("ablate", "Single-component-off ablation sweep");
    ablate_cmd->add_option("--data", ablate.data, "Feature CSV")->required();
    ablate_cmd->add_option("--config", ablate.config, "Run config file");
    ablate_cmd->add_option("--report", ablate.report, "Report JSON path")->required();
    ablate_cmd->add_option("--jobs", ablate.jobs, "Parallel folds")->check(CLI::PositiveNumber);

    MimapArgs mimap;
    auto* mimap_cmd = app.add_subcommand("mimap", "Mutual-information topography tensor");
    mimap_cmd->add_option("--checkpoint", mimap.checkpoint, "Model checkpoint")->required();
    mimap_cmd->add_option("--data", mimap.data, "Feature CSV")->required();
    mimap_cmd->add_option("--channels", mimap.channels, "Channel count")->required();
    mimap_cmd->add_option("--out", mimap.out, "Output CSV")->required();

    ExportArgs exp;
    auto* export_cmd = app.add_subcommand("export-emb", "Export 64-d embeddings as CSV");
    export_cmd->add_option("--checkpoint", exp.checkpoint, "Model checkpoint")->required();
    export_cmd->add_option("--data", exp.data, "Feature CSV")->required();
    export_cmd->add_option("--out", exp.out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
        if (synth_cmd->parsed()) return do_synth(synth);
        if (extract_cmd->parsed()) return do_extract(extract);
        if (train_cmd->parsed()) return do_train(train);
        if (loso_cmd->parsed()) return do_loso(loso);
        if (ablate_cmd->parsed()) return do_ablate(ablate);
        if (mimap_cmd->parsed()) return do_mimap(mimap);
        if (export_cmd->parsed()) return do_export(exp);
        return 1;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace sdc
