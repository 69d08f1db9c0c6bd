// Command-line front end: synthetic data generation, training, evaluation
// and the cross-environment / adaptation / orientation protocols.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 data or I/O error,
// 3 numeric failure (training divergence).

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mmsense/experiments.hpp"
#include "mmsense/synth.hpp"

namespace {

using namespace mmsense;

struct CommonTrainFlags {
    std::string manifest;
    std::string modality = "beamsnr";
    std::string out_dir;
    int epochs = 150;
    std::string batch = "auto";
    double lr = 3e-4;
    std::uint64_t seed = 1;
    int input_length = 0;
    int threads = 0;
};

void add_train_flags(CLI::App* cmd, CommonTrainFlags& f) {
    cmd->add_option("--manifest", f.manifest, "Manifest file (JSON lines)")->required();
    cmd->add_option("--modality", f.modality, "beamsnr or csi")
        ->check(CLI::IsMember({"beamsnr", "csi"}));
    cmd->add_option("--out", f.out_dir, "Report output directory")->required();
    cmd->add_option("--epochs", f.epochs, "Training epochs (default 150)");
    cmd->add_option("--batch", f.batch, "Batch size, or 'auto' for 16/64 by modality");
    cmd->add_option("--lr", f.lr, "Adam learning rate (default 3e-4)");
    cmd->add_option("--seed", f.seed, "Seed for init, shuffling and splits");
    cmd->add_option("--input-length", f.input_length,
                    "Resampled length (default 128 beamsnr / 512 csi)");
    cmd->add_option("--threads", f.threads, "Worker threads (default: MMSENSE_THREADS or all)");
}

TrainConfig make_config(const CommonTrainFlags& f) {
    TrainConfig cfg;
    const auto modality = modality_from_name(f.modality);
    if (!modality) throw ConfigError("unknown modality '" + f.modality + "'");
    cfg.modality = *modality;
    cfg.epochs = f.epochs;
    if (f.batch != "auto") {
        try {
            cfg.batch_size = std::stoi(f.batch);
        } catch (const std::exception&) {
            throw ConfigError("--batch expects a number or 'auto'");
        }
        if (cfg.batch_size < 1) throw ConfigError("--batch must be at least 1");
    }
    cfg.adam.lr = f.lr;
    cfg.seed = f.seed;
    cfg.input_length = f.input_length;
    cfg.threads = f.threads;
    return cfg;
}

void finish_run(ProtocolReport& report, const CommonTrainFlags& f) {
    report.config_echo["manifest"] = f.manifest;
    report_write(report, f.out_dir);
    for (const auto& note : report.notes) std::cerr << "note: " << note << "\n";
    std::printf("%s: train %zu / test %zu, overall accuracy %.4f\n", report.protocol.c_str(),
                report.train_size, report.test_size, report.confusion.overall_accuracy());
    std::printf("report written to %s\n", f.out_dir.c_str());
}

std::filesystem::path manifest_base(const std::string& manifest) {
    return std::filesystem::path(manifest).parent_path();
}

std::filesystem::path resolve_preset(const std::string& preset) {
    namespace fs = std::filesystem;
    if (fs::exists(preset)) return preset;
    const std::string file = preset + ".json";
    std::vector<fs::path> candidates;
    if (const char* dir = std::getenv("MMSENSE_PRESET_DIR")) candidates.push_back(fs::path(dir) / file);
    candidates.push_back(fs::path("presets") / file);
    candidates.push_back(fs::path("..") / "presets" / file);
    for (const auto& c : candidates) {
        if (fs::exists(c)) return c;
    }
    throw ConfigError("cannot find preset '" + preset + "' (looked for " + file +
                      " under $MMSENSE_PRESET_DIR and ./presets)");
}

int run(int argc, char** argv) {
    CLI::App app{"mmWave Wi-Fi gesture recognition engine"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset from a preset");
    std::string preset = "single-env";
    std::string synth_out;
    std::uint64_t synth_seed = 1;
    int instances = 50;
    std::string synth_modality = "beamsnr";
    synth_cmd->add_option("--preset", preset, "Preset name (single-env, two-env) or a file path");
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--seed", synth_seed, "Generator seed");
    synth_cmd->add_option("--instances", instances, "Instances per gesture class");
    synth_cmd->add_option("--modality", synth_modality, "beamsnr, csi or both")
        ->check(CLI::IsMember({"beamsnr", "csi", "both"}));

    // train
    auto* train_cmd = app.add_subcommand("train", "75:25 split, train and evaluate");
    CommonTrainFlags train_flags;
    add_train_flags(train_cmd, train_flags);
    std::string train_env;
    int train_orientation = -1;
    train_cmd->add_option("--env", train_env, "Restrict to one environment");
    train_cmd->add_option("--orientation", train_orientation, "Restrict to one orientation (0/90)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a saved model on a manifest");
    std::string eval_manifest, eval_model, eval_out, eval_env;
    int eval_threads = 0;
    eval_cmd->add_option("--manifest", eval_manifest, "Manifest file")->required();
    eval_cmd->add_option("--model", eval_model, "Model file (model.bin)")->required();
    eval_cmd->add_option("--out", eval_out, "Output directory for confusion.csv and summary");
    eval_cmd->add_option("--env", eval_env, "Restrict to one environment");
    eval_cmd->add_option("--threads", eval_threads, "Worker threads");

    // xenv
    auto* xenv_cmd = app.add_subcommand("xenv", "Train on one environment, test on another");
    CommonTrainFlags xenv_flags;
    add_train_flags(xenv_cmd, xenv_flags);
    std::string xenv_train_env, xenv_test_env;
    xenv_cmd->add_option("--train-env", xenv_train_env, "Training environment")->required();
    xenv_cmd->add_option("--test-env", xenv_test_env, "Test environment")->required();

    // adapt
    auto* adapt_cmd = app.add_subcommand("adapt", "Cross-environment adaptation with k extra instances");
    CommonTrainFlags adapt_flags;
    add_train_flags(adapt_cmd, adapt_flags);
    std::string adapt_base_env, adapt_env;
    int adapt_k = 10;
    adapt_cmd->add_option("--base-env", adapt_base_env, "Base (fully used) environment")->required();
    adapt_cmd->add_option("--adapt-env", adapt_env, "Adaptation environment")->required();
    adapt_cmd->add_option("--k", adapt_k, "Adaptation instances per gesture per person");

    // orient
    auto* orient_cmd = app.add_subcommand("orient", "Train on one orientation, test on another");
    CommonTrainFlags orient_flags;
    add_train_flags(orient_cmd, orient_flags);
    int orient_train = 0, orient_test = 90;
    std::string orient_env;
    orient_cmd->add_option("--train", orient_train, "Training orientation (degrees)");
    orient_cmd->add_option("--test", orient_test, "Test orientation (degrees)");
    orient_cmd->add_option("--env", orient_env, "Restrict to one environment");

    // report
    auto* report_cmd = app.add_subcommand("report", "Summarize an existing report directory");
    std::string report_dir;
    report_cmd->add_option("--dir", report_dir, "Report directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (*synth_cmd) {
        if (instances < 1) throw ConfigError("--instances must be at least 1");
        auto cfg = synth::load_gen_config(resolve_preset(preset));
        cfg.seed = synth_seed;
        cfg.instances_per_label = instances;
        std::size_t total = 0;
        if (synth_modality == "both") {
            cfg.modality = Modality::BeamSnr;
            auto metas = synth::gen_dataset(cfg, synth_out);
            cfg.modality = Modality::Csi;
            auto metas_csi = synth::gen_dataset_append(cfg, synth_out, metas);
            total = metas_csi.size();
        } else {
            cfg.modality = *modality_from_name(synth_modality);
            total = synth::gen_dataset(cfg, synth_out).size();
        }
        std::printf("wrote %zu samples and manifest.jsonl under %s\n", total, synth_out.c_str());
        return 0;
    }

    if (*train_cmd) {
        const TrainConfig cfg = make_config(train_flags);
        const auto metas = parse_manifest(train_flags.manifest);
        std::optional<std::string> env;
        if (!train_env.empty()) env = train_env;
        std::optional<int> orientation;
        if (train_orientation >= 0) orientation = train_orientation;
        auto report =
            run_single_env(metas, manifest_base(train_flags.manifest), env, orientation, cfg);
        finish_run(report, train_flags);
        return 0;
    }

    if (*eval_cmd) {
        const auto metas = parse_manifest(eval_manifest);
        const Model model = load_model(eval_model);
        const Modality modality =
            model.config().in_channels == modality_channels(Modality::Csi) ? Modality::Csi
                                                                           : Modality::BeamSnr;
        std::optional<std::string> env;
        if (!eval_env.empty()) env = eval_env;
        auto filtered = metas;
        filtered.erase(std::remove_if(filtered.begin(), filtered.end(),
                                      [&](const SampleMeta& m) {
                                          return m.modality != modality ||
                                                 (env && m.environment != *env);
                                      }),
                       filtered.end());
        if (filtered.empty()) throw DataError("eval: no matching samples in manifest");

        std::vector<TimeSeriesSample> samples;
        samples.reserve(filtered.size());
        const auto base = manifest_base(eval_manifest);
        const std::size_t length = static_cast<std::size_t>(model.config().input_length);
        for (const auto& m : filtered) {
            samples.push_back(resample_linear(load_sample(m, base), length));
        }
        // Evaluation-only runs fit normalization on the evaluated set itself.
        const auto stats = standardize_fit(samples);
        for (auto& s : samples) s = standardize_apply(s, stats);
        const auto cm = evaluate(model, samples, eval_threads);

        std::printf("evaluated %zu samples, overall accuracy %.4f\n",
                    static_cast<std::size_t>(cm.total()), cm.overall_accuracy());
        if (!eval_out.empty()) {
            std::filesystem::create_directories(eval_out);
            std::ofstream out(std::filesystem::path(eval_out) / "confusion.csv");
            for (int i = 0; i < kNumLabels; ++i) {
                for (int j = 0; j < kNumLabels; ++j) {
                    out << cm.counts[i][j] << (j + 1 < kNumLabels ? "," : "\n");
                }
            }
        }
        return 0;
    }

    if (*xenv_cmd) {
        const TrainConfig cfg = make_config(xenv_flags);
        const auto metas = parse_manifest(xenv_flags.manifest);
        auto report = run_cross_domain(metas, manifest_base(xenv_flags.manifest), xenv_train_env,
                                       xenv_test_env, cfg);
        finish_run(report, xenv_flags);
        return 0;
    }

    if (*adapt_cmd) {
        const TrainConfig cfg = make_config(adapt_flags);
        const auto metas = parse_manifest(adapt_flags.manifest);
        auto report = run_adaptation(metas, manifest_base(adapt_flags.manifest), adapt_base_env,
                                     adapt_env, adapt_k, cfg);
        finish_run(report, adapt_flags);
        return 0;
    }

    if (*orient_cmd) {
        const TrainConfig cfg = make_config(orient_flags);
        const auto metas = parse_manifest(orient_flags.manifest);
        std::optional<std::string> env;
        if (!orient_env.empty()) env = orient_env;
        auto report = run_orientation(metas, manifest_base(orient_flags.manifest), orient_train,
                                      orient_test, env, cfg);
        finish_run(report, orient_flags);
        return 0;
    }

    if (*report_cmd) {
        std::ifstream in(std::filesystem::path(report_dir) / "confusion.csv");
        if (!in) throw IoError("cannot open " + report_dir + "/confusion.csv");
        ConfusionMatrix cm;
        std::string line;
        for (int i = 0; i < kNumLabels; ++i) {
            if (!std::getline(in, line)) throw DataError("confusion.csv has too few rows");
            std::size_t pos = 0;
            for (int j = 0; j < kNumLabels; ++j) {
                cm.counts[i][j] = std::stol(line.substr(pos));
                const auto comma = line.find(',', pos);
                pos = comma == std::string::npos ? line.size() : comma + 1;
            }
        }
        std::printf("total %ld, overall accuracy %.4f\n", cm.total(), cm.overall_accuracy());
        for (int l = 0; l < kNumLabels; ++l) {
            const auto acc = cm.per_class_accuracy(l);
            if (acc) {
                std::printf("  %-4s %.4f\n", label_name(static_cast<GestureLabel>(l)), *acc);
            } else {
                std::printf("  %-4s n/a\n", label_name(static_cast<GestureLabel>(l)));
            }
        }
        return 0;
    }

    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const mmsense::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const mmsense::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const mmsense::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
