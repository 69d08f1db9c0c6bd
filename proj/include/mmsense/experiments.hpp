#pragma once

#include <array>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "mmsense/dataio.hpp"
#include "mmsense/model.hpp"
#include "mmsense/optim.hpp"

namespace mmsense {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MMSENSE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(std::min(hw, 16u)) : 1;
}

/// Static block partition over [0, n). Each index is handled by exactly one
/// worker and results land in caller-owned slots, so outputs do not depend
/// on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const std::size_t lo = static_cast<std::size_t>(w) * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

struct TrainConfig {
    Modality modality = Modality::BeamSnr;
    int epochs = 150;
    int batch_size = 0;    // 0 resolves to the paper's 16 (beam SNR) / 64 (CSI)
    int input_length = 0;  // 0 resolves to 128 (beam SNR) / 512 (CSI)
    AdamConfig adam;
    int sched_patience = 25;
    double sched_factor = 0.1;
    double sched_min_delta = 0.0;
    double split_ratio = 0.75;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = MMSENSE_THREADS or hardware concurrency

    int resolved_batch() const {
        if (batch_size > 0) return batch_size;
        return modality == Modality::BeamSnr ? 16 : 64;
    }

    int resolved_input_length() const {
        if (input_length > 0) return input_length;
        return modality == Modality::BeamSnr ? 128 : 512;
    }

    nlohmann::json echo() const {
        return {{"modality", modality_name(modality)},
                {"epochs", epochs},
                {"batch_size", resolved_batch()},
                {"input_length", resolved_input_length()},
                {"lr", adam.lr},
                {"beta1", adam.beta1},
                {"beta2", adam.beta2},
                {"eps", adam.eps},
                {"sched_patience", sched_patience},
                {"sched_factor", sched_factor},
                {"sched_min_delta", sched_min_delta},
                {"split_ratio", split_ratio},
                {"seed", seed},
                {"threads", resolve_threads(threads)}};
    }
};

struct ConfusionMatrix {
    std::array<std::array<long, kNumLabels>, kNumLabels> counts{};  // [true][predicted]

    void add(int truth, int predicted) { ++counts[truth][predicted]; }

    long total() const {
        long n = 0;
        for (const auto& row : counts) {
            for (long c : row) n += c;
        }
        return n;
    }

    long trace() const {
        long n = 0;
        for (int i = 0; i < kNumLabels; ++i) n += counts[i][i];
        return n;
    }

    long row_sum(int i) const {
        long n = 0;
        for (long c : counts[i]) n += c;
        return n;
    }

    double overall_accuracy() const {
        const long n = total();
        return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
    }

    std::optional<double> per_class_accuracy(int i) const {
        const long n = row_sum(i);
        if (n == 0) return std::nullopt;
        return static_cast<double>(counts[i][i]) / static_cast<double>(n);
    }
};

inline int argmax_class(const Tensor& logits) {
    int best = 0;
    for (std::size_t i = 1; i < logits.numel(); ++i) {
        if (logits.at(i) > logits.at(best)) best = static_cast<int>(i);  // ties keep lowest
    }
    return best;
}

/// Confusion counts from an arbitrary predictor; prediction fans out across
/// samples, accumulation stays in sample order.
template <typename Predict>
ConfusionMatrix evaluate_with(Predict&& predict, const std::vector<TimeSeriesSample>& test,
                              int threads = 0) {
    std::vector<int> predicted(test.size());
    parallel_for(test.size(), resolve_threads(threads),
                 [&](std::size_t i) { predicted[i] = predict(test[i]); });
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < test.size(); ++i) {
        cm.add(static_cast<int>(test[i].meta.label), predicted[i]);
    }
    return cm;
}

inline ConfusionMatrix evaluate(const Model& model, const std::vector<TimeSeriesSample>& test,
                                int threads = 0) {
    return evaluate_with(
        [&model](const TimeSeriesSample& s) { return argmax_class(model.forward(s.values)); },
        test, threads);
}

struct TrainResult {
    Model model;
    std::vector<double> loss_history;  // mean train loss per epoch
};

/// Seeded mini-batch training with the paper's recipe: Adam, mean
/// cross-entropy per batch, ReduceLROnPlateau stepped once per epoch on the
/// mean train loss. Per-sample forward/backward fans out across threads;
/// gradient reduction walks samples in order, so results are independent of
/// the thread count.
inline TrainResult train(const std::vector<TimeSeriesSample>& train_set, const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("train: epochs must be at least 1");
    if (train_set.empty()) throw DataError("train: empty training set");
    const std::size_t channels = static_cast<std::size_t>(modality_channels(cfg.modality));
    const std::size_t length = static_cast<std::size_t>(cfg.resolved_input_length());
    for (const auto& s : train_set) {
        if (s.values.dim(0) != channels || s.values.dim(1) != length) {
            throw ShapeError("train: sample " + s.meta.path + " has shape " +
                             shape_string(s.values) + ", expected [" + std::to_string(channels) +
                             "x" + std::to_string(length) + "]");
        }
        if (s.meta.modality != cfg.modality) {
            throw DataError("train: sample " + s.meta.path + " modality disagrees with config");
        }
    }

    TrainResult result;
    result.model = Model::build(ModelConfig{static_cast<int>(channels), kNumLabels,
                                            static_cast<int>(length), cfg.seed});
    auto named = result.model.parameters();
    std::vector<Tensor*> params;
    for (auto& p : named) params.push_back(p.tensor);

    AdamOptimizer<float> adam(cfg.adam);
    PlateauScheduler scheduler(cfg.sched_patience, cfg.sched_factor, cfg.sched_min_delta);
    const int threads = resolve_threads(cfg.threads);
    const std::size_t batch = static_cast<std::size_t>(cfg.resolved_batch());
    const std::size_t n = train_set.size();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng order_rng(cfg.seed, "epoch-shuffle", static_cast<std::uint64_t>(epoch));
        const auto order = shuffled_indices(n, order_rng);
        double loss_sum = 0.0;

        for (std::size_t b0 = 0; b0 < n; b0 += batch) {  // last partial batch is kept
            const std::size_t b1 = std::min(n, b0 + batch);
            const std::size_t bsz = b1 - b0;
            std::vector<double> losses(bsz);
            std::vector<std::vector<Tensor>> grads(bsz);

            parallel_for(bsz, threads, [&](std::size_t i) {
                const auto& sample = train_set[order[b0 + i]];
                ForwardTrace<float> trace;
                const Tensor logits = result.model.forward_traced(sample.values, trace);
                const auto sce =
                    softmax_cross_entropy(logits, static_cast<int>(sample.meta.label));
                losses[i] = sce.loss;
                result.model.backward(trace, sce.grad_logits, grads[i]);
            });

            for (std::size_t i = 0; i < bsz; ++i) {
                if (!std::isfinite(losses[i])) {
                    throw NumericError("train: non-finite loss at epoch " +
                                       std::to_string(epoch) + ", batch " +
                                       std::to_string(b0 / batch));
                }
                loss_sum += losses[i];
            }

            // Mean gradient over the batch, summed in sample order.
            const float inv = 1.0f / static_cast<float>(bsz);
            for (std::size_t j = 0; j < params.size(); ++j) {
                params[j]->zero_grad();
                auto& acc = params[j]->grad;
                for (std::size_t i = 0; i < bsz; ++i) {
                    const auto& g = grads[i][j].values;
                    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += g[k];
                }
                for (auto& v : acc) v *= inv;
            }
            adam.step(params);
        }

        const double mean_loss = loss_sum / static_cast<double>(n);
        result.loss_history.push_back(mean_loss);
        adam.set_lr(scheduler.update(mean_loss, adam.lr()));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Experiment protocols.
// ---------------------------------------------------------------------------

struct ProtocolReport {
    std::string protocol;
    nlohmann::json config_echo;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    ConfusionMatrix confusion;
    std::vector<double> loss_history;
    Model model;
    std::vector<std::string> notes;
};

namespace detail {

inline std::vector<SampleMeta> filter_metas(const std::vector<SampleMeta>& metas,
                                            Modality modality,
                                            const std::optional<std::string>& environment,
                                            const std::optional<int>& orientation) {
    std::vector<SampleMeta> out;
    for (const auto& m : metas) {
        if (m.modality != modality) continue;
        if (environment && m.environment != *environment) continue;
        if (orientation && m.orientation_deg != *orientation) continue;
        out.push_back(m);
    }
    return out;
}

inline void require_all_classes(const std::vector<SampleMeta>& metas, const std::string& what) {
    std::array<long, kNumLabels> counts{};
    for (const auto& m : metas) ++counts[static_cast<int>(m.label)];
    std::string present;
    bool missing = false;
    for (int l = 0; l < kNumLabels; ++l) {
        if (counts[l] > 0) {
            if (!present.empty()) present += ", ";
            present += label_name(static_cast<GestureLabel>(l));
        } else {
            missing = true;
        }
    }
    if (metas.empty() || missing) {
        throw DataError(what + ": not every gesture class is present; classes found: [" +
                        present + "]");
    }
}

struct Prepared {
    std::vector<TimeSeriesSample> train;
    std::vector<TimeSeriesSample> test;
    ChannelStats stats;
};

/// Loads, resamples to the configured length, and standardizes with
/// statistics fitted on the training portion only. Train/test ids must be
/// disjoint; this is asserted, not assumed.
inline Prepared prepare(const std::vector<SampleMeta>& train_metas,
                        const std::vector<SampleMeta>& test_metas,
                        const std::filesystem::path& base_dir, int input_length) {
    std::set<std::string> train_ids;
    for (const auto& m : train_metas) train_ids.insert(m.path);
    for (const auto& m : test_metas) {
        if (train_ids.count(m.path)) {
            throw Error("internal: sample '" + m.path + "' appears in both train and test");
        }
    }

    Prepared prep;
    prep.train.reserve(train_metas.size());
    for (const auto& m : train_metas) {
        prep.train.push_back(
            resample_linear(load_sample(m, base_dir), static_cast<std::size_t>(input_length)));
    }
    prep.stats = standardize_fit(prep.train);
    for (auto& s : prep.train) s = standardize_apply(s, prep.stats);

    prep.test.reserve(test_metas.size());
    for (const auto& m : test_metas) {
        auto s = resample_linear(load_sample(m, base_dir), static_cast<std::size_t>(input_length));
        prep.test.push_back(standardize_apply(s, prep.stats));
    }
    return prep;
}

inline ProtocolReport run_protocol(const std::string& protocol,
                                   const std::vector<SampleMeta>& train_metas,
                                   const std::vector<SampleMeta>& test_metas,
                                   const std::filesystem::path& base_dir, const TrainConfig& cfg,
                                   nlohmann::json extra_echo,
                                   std::vector<std::string> notes = {}) {
    auto prep = prepare(train_metas, test_metas, base_dir, cfg.resolved_input_length());
    TrainResult trained = train(prep.train, cfg);

    ProtocolReport report;
    report.protocol = protocol;
    report.config_echo = cfg.echo();
    report.config_echo["protocol"] = protocol;
    for (auto& [k, v] : extra_echo.items()) report.config_echo[k] = v;
    report.train_size = prep.train.size();
    report.test_size = prep.test.size();
    report.confusion = evaluate(trained.model, prep.test, cfg.threads);
    report.loss_history = std::move(trained.loss_history);
    report.model = std::move(trained.model);
    report.notes = std::move(notes);
    return report;
}

}  // namespace detail

/// Single-environment protocol: stratified 75:25 split, train, evaluate.
inline ProtocolReport run_single_env(const std::vector<SampleMeta>& metas,
                                     const std::filesystem::path& base_dir,
                                     const std::optional<std::string>& environment,
                                     const std::optional<int>& orientation,
                                     const TrainConfig& cfg) {
    auto filtered = detail::filter_metas(metas, cfg.modality, environment, orientation);
    detail::require_all_classes(filtered, "single-environment run");
    auto split = split_dataset(filtered, cfg.split_ratio, cfg.seed);

    nlohmann::json echo;
    if (environment) echo["environment"] = *environment;
    if (orientation) echo["orientation"] = *orientation;
    return detail::run_protocol("single-env", split.train, split.test, base_dir, cfg,
                                std::move(echo), std::move(split.warnings));
}

/// Train on one environment, test on another. Normalization statistics come
/// from the training environment only.
inline ProtocolReport run_cross_domain(const std::vector<SampleMeta>& metas,
                                       const std::filesystem::path& base_dir,
                                       const std::string& train_env, const std::string& test_env,
                                       const TrainConfig& cfg) {
    if (train_env == test_env) {
        throw ConfigError("cross-domain: training and test environments must differ");
    }
    auto train_metas = detail::filter_metas(metas, cfg.modality, train_env, std::nullopt);
    auto test_metas = detail::filter_metas(metas, cfg.modality, test_env, std::nullopt);
    if (train_metas.empty()) throw DataError("cross-domain: no samples in environment '" + train_env + "'");
    if (test_metas.empty()) throw DataError("cross-domain: no samples in environment '" + test_env + "'");

    return detail::run_protocol("cross-env", train_metas, test_metas, base_dir, cfg,
                                {{"train_env", train_env}, {"test_env", test_env}});
}

/// Cross-environment adaptation: all of the base environment plus a seeded
/// choice of k instances per gesture per person from the adaptation
/// environment join the training set; the remaining adaptation samples form
/// the test set. k = 0 degenerates to run_cross_domain.
inline ProtocolReport run_adaptation(const std::vector<SampleMeta>& metas,
                                     const std::filesystem::path& base_dir,
                                     const std::string& base_env, const std::string& adapt_env,
                                     int k_per_gesture, const TrainConfig& cfg) {
    if (base_env == adapt_env) {
        throw ConfigError("adaptation: base and adaptation environments must differ");
    }
    if (k_per_gesture < 0) throw ConfigError("adaptation: k must be non-negative");
    auto base_metas = detail::filter_metas(metas, cfg.modality, base_env, std::nullopt);
    auto adapt_metas = detail::filter_metas(metas, cfg.modality, adapt_env, std::nullopt);
    if (base_metas.empty()) throw DataError("adaptation: no samples in environment '" + base_env + "'");
    if (adapt_metas.empty()) throw DataError("adaptation: no samples in environment '" + adapt_env + "'");

    // Group the adaptation environment by (gesture, person) and promote the
    // first k of each seeded shuffle into training.
    std::map<std::pair<int, std::string>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < adapt_metas.size(); ++i) {
        groups[{static_cast<int>(adapt_metas[i].label), adapt_metas[i].person}].push_back(i);
    }
    std::vector<char> adapt_in_train(adapt_metas.size(), 0);
    for (auto& [key, idx] : groups) {
        if (static_cast<int>(idx.size()) < k_per_gesture) {
            throw DataError("adaptation: gesture " +
                            std::string(label_name(static_cast<GestureLabel>(key.first))) +
                            " has only " + std::to_string(idx.size()) + " instances for person '" +
                            key.second + "', need k=" + std::to_string(k_per_gesture));
        }
        Rng rng(cfg.seed, "adapt:" + std::string(label_name(static_cast<GestureLabel>(key.first))) +
                              ":" + key.second);
        seeded_shuffle(idx, rng);
        for (int i = 0; i < k_per_gesture; ++i) adapt_in_train[idx[i]] = 1;
    }

    std::vector<SampleMeta> train_metas = base_metas;
    std::vector<SampleMeta> test_metas;
    for (std::size_t i = 0; i < adapt_metas.size(); ++i) {
        (adapt_in_train[i] ? train_metas : test_metas).push_back(adapt_metas[i]);
    }

    return detail::run_protocol("adaptation", train_metas, test_metas, base_dir, cfg,
                                {{"base_env", base_env},
                                 {"adapt_env", adapt_env},
                                 {"k_per_gesture", k_per_gesture}});
}

/// Train on one orientation, test on the other.
inline ProtocolReport run_orientation(const std::vector<SampleMeta>& metas,
                                      const std::filesystem::path& base_dir, int train_orient,
                                      int test_orient,
                                      const std::optional<std::string>& environment,
                                      const TrainConfig& cfg) {
    if (train_orient == test_orient) {
        throw ConfigError("orientation: training and test orientations must differ");
    }
    auto train_metas = detail::filter_metas(metas, cfg.modality, environment, train_orient);
    auto test_metas = detail::filter_metas(metas, cfg.modality, environment, test_orient);
    if (train_metas.empty()) {
        throw DataError("orientation: no samples at " + std::to_string(train_orient) + " degrees");
    }
    if (test_metas.empty()) {
        throw DataError("orientation: no samples at " + std::to_string(test_orient) + " degrees");
    }

    nlohmann::json echo{{"train_orientation", train_orient}, {"test_orientation", test_orient}};
    if (environment) echo["environment"] = *environment;
    return detail::run_protocol("orientation", train_metas, test_metas, base_dir, cfg,
                                std::move(echo));
}

// ---------------------------------------------------------------------------
// Report files: report.txt, confusion.csv, loss.csv, model.bin, config.json.
// ---------------------------------------------------------------------------

inline void report_write(const ProtocolReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create report directory: " + out_dir.string());

    {
        std::ofstream out(out_dir / "confusion.csv", std::ios::trunc);
        if (!out) throw IoError("cannot write confusion.csv");
        for (int i = 0; i < kNumLabels; ++i) {
            for (int j = 0; j < kNumLabels; ++j) {
                out << report.confusion.counts[i][j] << (j + 1 < kNumLabels ? "," : "\n");
            }
        }
    }
    {
        std::ofstream out(out_dir / "loss.csv", std::ios::trunc);
        if (!out) throw IoError("cannot write loss.csv");
        out << "epoch,mean_train_loss\n";
        char buf[64];
        for (std::size_t e = 0; e < report.loss_history.size(); ++e) {
            std::snprintf(buf, sizeof buf, "%zu,%.9g\n", e, report.loss_history[e]);
            out << buf;
        }
    }
    {
        std::ofstream out(out_dir / "report.txt", std::ios::trunc);
        if (!out) throw IoError("cannot write report.txt");
        char buf[128];
        out << "protocol: " << report.protocol << "\n";
        out << "train size: " << report.train_size << "\n";
        out << "test size: " << report.test_size << "\n";
        std::snprintf(buf, sizeof buf, "overall accuracy: %.6f\n",
                      report.confusion.overall_accuracy());
        out << buf;
        out << "per-class accuracy:\n";
        for (int l = 0; l < kNumLabels; ++l) {
            const auto acc = report.confusion.per_class_accuracy(l);
            if (acc) {
                std::snprintf(buf, sizeof buf, "  %-4s %.6f\n",
                              label_name(static_cast<GestureLabel>(l)), *acc);
            } else {
                std::snprintf(buf, sizeof buf, "  %-4s n/a\n",
                              label_name(static_cast<GestureLabel>(l)));
            }
            out << buf;
        }
        for (const auto& note : report.notes) out << "note: " << note << "\n";
        out << "config: " << report.config_echo.dump() << "\n";
    }
    report.model.save(out_dir / "model.bin");
    {
        std::ofstream out(out_dir / "config.json", std::ios::trunc);
        if (!out) throw IoError("cannot write config.json");
        out << report.config_echo.dump(2) << "\n";
    }
}

}  // namespace mmsense
