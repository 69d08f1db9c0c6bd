#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmsense/rng.hpp"
#include "mmsense/tensor.hpp"

namespace mmsense {

// The ten XR gestures/poses, indexed 0-9 in this order.
enum class GestureLabel : int { E = 0, RL, LL, AU, AW, P, RS, LS, HRL, HRR };

inline constexpr int kNumLabels = 10;

inline const char* label_name(GestureLabel l) {
    static constexpr const char* names[kNumLabels] = {"E",  "RL", "LL", "AU",  "AW",
                                                      "P",  "RS", "LS", "HRL", "HRR"};
    return names[static_cast<int>(l)];
}

inline std::optional<GestureLabel> label_from_name(const std::string& name) {
    for (int i = 0; i < kNumLabels; ++i) {
        if (name == label_name(static_cast<GestureLabel>(i))) {
            return static_cast<GestureLabel>(i);
        }
    }
    return std::nullopt;
}

enum class Modality { BeamSnr, Csi };

inline int modality_channels(Modality m) { return m == Modality::BeamSnr ? 36 : 256; }

inline const char* modality_name(Modality m) { return m == Modality::BeamSnr ? "beamsnr" : "csi"; }

inline std::optional<Modality> modality_from_name(const std::string& name) {
    if (name == "beamsnr") return Modality::BeamSnr;
    if (name == "csi") return Modality::Csi;
    return std::nullopt;
}

struct SampleMeta {
    std::string path;  // sample file, relative to the manifest's directory
    GestureLabel label = GestureLabel::E;
    std::string person;
    std::string environment;
    int orientation_deg = 0;  // 0 or 90
    Modality modality = Modality::BeamSnr;
    std::string session = "s1";
};

/// One gesture instance: channels x length values plus its metadata.
struct TimeSeriesSample {
    Tensor values;
    SampleMeta meta;
};

// ---------------------------------------------------------------------------
// Manifest: line-delimited JSON, one SampleMeta per non-empty line.
// Unknown fields are ignored; anything malformed is rejected with its line
// number.
// ---------------------------------------------------------------------------

inline std::vector<SampleMeta> parse_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());

    std::vector<SampleMeta> metas;
    std::set<std::string> seen_paths;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "manifest line " + std::to_string(line_no) + ": ";

        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + "malformed record: " + e.what());
        }
        if (!rec.is_object()) throw DataError(where + "record is not a JSON object");

        SampleMeta meta;
        try {
            meta.path = rec.at("path").get<std::string>();
            const auto label = label_from_name(rec.at("label").get<std::string>());
            if (!label) {
                throw DataError(where + "unknown label '" +
                                rec.at("label").get<std::string>() + "'");
            }
            meta.label = *label;
            meta.person = rec.at("person").get<std::string>();
            meta.environment = rec.at("environment").get<std::string>();
            meta.orientation_deg = rec.at("orientation_deg").get<int>();
            const auto modality = modality_from_name(rec.at("modality").get<std::string>());
            if (!modality) {
                throw DataError(where + "unknown modality '" +
                                rec.at("modality").get<std::string>() + "'");
            }
            meta.modality = *modality;
            meta.session = rec.value("session", "s1");
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + "missing or ill-typed field: " + e.what());
        }
        if (meta.orientation_deg != 0 && meta.orientation_deg != 90) {
            throw DataError(where + "orientation_deg must be 0 or 90");
        }
        if (!seen_paths.insert(meta.path).second) {
            throw DataError(where + "duplicate sample path '" + meta.path + "'");
        }
        metas.push_back(std::move(meta));
    }
    return metas;
}

inline void write_manifest(const std::filesystem::path& path,
                           const std::vector<SampleMeta>& metas) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    for (const auto& m : metas) {
        nlohmann::json rec{{"path", m.path},
                           {"label", label_name(m.label)},
                           {"person", m.person},
                           {"environment", m.environment},
                           {"orientation_deg", m.orientation_deg},
                           {"modality", modality_name(m.modality)},
                           {"session", m.session}};
        out << rec.dump() << "\n";
    }
    if (!out) throw IoError("short write on manifest: " + path.string());
}

// ---------------------------------------------------------------------------
// Sample files: comma-separated text, one time step per row, one column per
// channel, no header.
// ---------------------------------------------------------------------------

inline TimeSeriesSample load_sample(const SampleMeta& meta,
                                    const std::filesystem::path& base_dir) {
    std::filesystem::path file(meta.path);
    if (file.is_relative()) file = base_dir / file;
    std::ifstream in(file);
    if (!in) throw IoError("cannot open sample file: " + file.string());

    const std::size_t channels = static_cast<std::size_t>(modality_channels(meta.modality));
    std::vector<float> rows;  // time-major while reading
    std::string line;
    std::size_t n_rows = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
        ++n_rows;
        std::size_t col = 0;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p < end && *p != '\r') {
            float v = 0.0f;
            const auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc()) {
                throw DataError(file.string() + ": non-numeric cell at row " +
                                std::to_string(n_rows) + ", column " + std::to_string(col + 1));
            }
            if (!std::isfinite(v)) {
                throw DataError(file.string() + ": non-finite value at row " +
                                std::to_string(n_rows) + ", column " + std::to_string(col + 1));
            }
            rows.push_back(v);
            ++col;
            p = res.ptr;
            if (p < end && *p == ',') ++p;
        }
        if (col != channels) {
            throw DataError(file.string() + ": row " + std::to_string(n_rows) + " has " +
                            std::to_string(col) + " columns, " + modality_name(meta.modality) +
                            " expects " + std::to_string(channels));
        }
    }
    if (n_rows < 2) {
        throw DataError(file.string() + ": sample needs at least 2 time steps, got " +
                        std::to_string(n_rows));
    }

    TimeSeriesSample sample;
    sample.meta = meta;
    sample.values = Tensor({channels, n_rows});
    for (std::size_t t = 0; t < n_rows; ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
            sample.values.at(c, t) = rows[t * channels + c];
        }
    }
    return sample;
}

inline void write_sample_file(const std::filesystem::path& file, const Tensor& values) {
    std::FILE* out = std::fopen(file.string().c_str(), "w");
    if (!out) throw IoError("cannot write sample file: " + file.string());
    const std::size_t channels = values.dim(0);
    const std::size_t len = values.dim(1);
    char buf[64];
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
            const int n = std::snprintf(buf, sizeof buf, "%s%.7g", c ? "," : "",
                                        static_cast<double>(values.at(c, t)));
            std::fwrite(buf, 1, static_cast<std::size_t>(n), out);
        }
        std::fputc('\n', out);
    }
    std::fclose(out);
}

// ---------------------------------------------------------------------------
// Transforms.
// ---------------------------------------------------------------------------

/// Per-channel linear interpolation onto a uniform grid of `target_len`
/// points. Endpoints are preserved exactly; target_len equal to the source
/// length reproduces the input bit for bit.
inline Tensor resample_linear(const Tensor& values, std::size_t target_len) {
    if (values.rank() != 2) throw ShapeError("resample: expects channels x time");
    const std::size_t src_len = values.dim(1);
    if (src_len < 2) throw DataError("resample: source length must be at least 2");
    if (target_len < 2) throw ConfigError("resample: target length must be at least 2");
    if (target_len == src_len) return values;

    Tensor out({values.dim(0), target_len});
    for (std::size_t c = 0; c < values.dim(0); ++c) {
        const float* src = values.data() + c * src_len;
        float* dst = out.data() + c * target_len;
        for (std::size_t i = 0; i < target_len; ++i) {
            const std::size_t num = i * (src_len - 1);
            const std::size_t idx = num / (target_len - 1);
            const std::size_t rem = num % (target_len - 1);
            if (rem == 0) {
                dst[i] = src[idx];
            } else {
                const double frac = static_cast<double>(rem) / static_cast<double>(target_len - 1);
                dst[i] = static_cast<float>((1.0 - frac) * src[idx] + frac * src[idx + 1]);
            }
        }
    }
    return out;
}

inline TimeSeriesSample resample_linear(const TimeSeriesSample& sample, std::size_t target_len) {
    TimeSeriesSample out;
    out.meta = sample.meta;
    out.values = resample_linear(sample.values, target_len);
    return out;
}

/// Per-channel statistics pooled over every time step of the fitting set.
/// Fitted once on training data and then shared by all transforms.
struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

inline ChannelStats standardize_fit(const std::vector<TimeSeriesSample>& samples) {
    if (samples.empty()) throw DataError("standardize: need at least one sample to fit");
    const std::size_t channels = samples[0].values.dim(0);
    std::vector<double> sum(channels, 0.0), sumsq(channels, 0.0);
    std::size_t count = 0;
    for (const auto& s : samples) {
        if (s.values.dim(0) != channels) {
            throw ShapeError("standardize: samples disagree on channel count");
        }
        const std::size_t len = s.values.dim(1);
        for (std::size_t c = 0; c < channels; ++c) {
            const float* row = s.values.data() + c * len;
            for (std::size_t t = 0; t < len; ++t) {
                const double v = row[t];
                sum[c] += v;
                sumsq[c] += v * v;
            }
        }
        count += len;
    }
    ChannelStats stats;
    stats.mean.resize(channels);
    stats.stddev.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        stats.mean[c] = sum[c] / static_cast<double>(count);
        const double var = std::max(0.0, sumsq[c] / static_cast<double>(count) -
                                             stats.mean[c] * stats.mean[c]);
        stats.stddev[c] = std::sqrt(var);
    }
    return stats;
}

inline TimeSeriesSample standardize_apply(const TimeSeriesSample& sample,
                                          const ChannelStats& stats) {
    const std::size_t channels = sample.values.dim(0);
    if (stats.mean.size() != channels) {
        throw ShapeError("standardize: stats fitted on a different channel count");
    }
    TimeSeriesSample out;
    out.meta = sample.meta;
    out.values = Tensor({channels, sample.values.dim(1)});
    const std::size_t len = sample.values.dim(1);
    for (std::size_t c = 0; c < channels; ++c) {
        const double inv = 1.0 / std::max(stats.stddev[c], 1e-6);
        const double mean = stats.mean[c];
        const float* src = sample.values.data() + c * len;
        float* dst = out.values.data() + c * len;
        for (std::size_t t = 0; t < len; ++t) {
            dst[t] = static_cast<float>((static_cast<double>(src[t]) - mean) * inv);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Seeded stratified split.
// ---------------------------------------------------------------------------

struct SplitResult {
    std::vector<SampleMeta> train;
    std::vector<SampleMeta> test;
    std::vector<std::string> warnings;
};

/// Stratified by label: within each label a seeded shuffle picks the train
/// subset. Per-label counts start at floor(ratio * n) and a largest-remainder
/// top-up brings the aggregate train size to exactly floor(ratio * total),
/// while every label with at least two samples keeps one in test. Labels with
/// fewer than two samples are forced into train with a warning.
inline SplitResult split_dataset(const std::vector<SampleMeta>& metas, double ratio,
                                 std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split: ratio must be in (0, 1)");

    std::vector<std::vector<std::size_t>> by_label(kNumLabels);
    for (std::size_t i = 0; i < metas.size(); ++i) {
        by_label[static_cast<int>(metas[i].label)].push_back(i);
    }

    const std::size_t target_train =
        static_cast<std::size_t>(std::floor(ratio * static_cast<double>(metas.size()) + 1e-9));

    SplitResult result;
    std::vector<std::size_t> train_count(kNumLabels, 0);
    std::vector<double> remainder(kNumLabels, 0.0);
    std::size_t assigned = 0;

    for (int l = 0; l < kNumLabels; ++l) {
        const std::size_t n = by_label[l].size();
        if (n == 0) continue;
        if (n < 2) {
            result.warnings.push_back(std::string("label ") +
                                      label_name(static_cast<GestureLabel>(l)) + " has " +
                                      std::to_string(n) +
                                      " sample(s); forcing into the training set");
            train_count[l] = n;
            assigned += n;
            continue;
        }
        const double exact = ratio * static_cast<double>(n);
        const std::size_t base = static_cast<std::size_t>(std::floor(exact + 1e-9));
        train_count[l] = std::min(base, n - 1);
        remainder[l] = exact - static_cast<double>(base);
        assigned += train_count[l];
    }

    // Largest-remainder top-up toward the exact aggregate target, keeping at
    // least one test sample per label.
    while (assigned < target_train) {
        int pick = -1;
        for (int l = 0; l < kNumLabels; ++l) {
            if (by_label[l].size() < 2) continue;
            if (train_count[l] >= by_label[l].size() - 1) continue;
            if (pick < 0 || remainder[l] > remainder[pick]) pick = l;
        }
        if (pick < 0) break;  // nothing left to promote
        ++train_count[pick];
        remainder[pick] -= 1.0;
        ++assigned;
    }

    std::vector<char> in_train(metas.size(), 0);
    for (int l = 0; l < kNumLabels; ++l) {
        auto idx = by_label[l];
        if (idx.empty()) continue;
        Rng rng(seed, "split", static_cast<std::uint64_t>(l));
        seeded_shuffle(idx, rng);
        for (std::size_t i = 0; i < train_count[l]; ++i) in_train[idx[i]] = 1;
    }

    for (std::size_t i = 0; i < metas.size(); ++i) {
        (in_train[i] ? result.train : result.test).push_back(metas[i]);
    }
    return result;
}

inline std::vector<TimeSeriesSample> load_samples(const std::vector<SampleMeta>& metas,
                                                  const std::filesystem::path& base_dir) {
    std::vector<TimeSeriesSample> out;
    out.reserve(metas.size());
    for (const auto& m : metas) out.push_back(load_sample(m, base_dir));
    return out;
}

}  // namespace mmsense
