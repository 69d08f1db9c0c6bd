#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmsense/dataio.hpp"
#include "mmsense/rng.hpp"

namespace mmsense::synth {

// ---------------------------------------------------------------------------
// Beam patterns: a uniform fan of Gaussian-shaped sector lobes standing in
// for the router's unpublished codebook. Peak gain is 1 at each sector's
// center azimuth.
// ---------------------------------------------------------------------------

struct BeamPatternSet {
    int n_sectors = 36;
    std::vector<double> center_deg;
    std::vector<double> width_deg;

    static BeamPatternSet uniform_fan(int n_sectors = 36, double span_deg = 60.0) {
        if (n_sectors < 1) throw ConfigError("beam patterns: need at least one sector");
        BeamPatternSet p;
        p.n_sectors = n_sectors;
        p.center_deg.resize(n_sectors);
        p.width_deg.resize(n_sectors);
        for (int k = 0; k < n_sectors; ++k) {
            p.center_deg[k] = (n_sectors == 1)
                                  ? 0.0
                                  : -span_deg + 2.0 * span_deg * k / (n_sectors - 1);
            // Beamwidths vary sector to sector (golden-ratio stepping keeps
            // neighbours dissimilar without a seed).
            const double frac = std::fmod(0.6180339887498949 * k, 1.0);
            p.width_deg[k] = 9.0 + 5.0 * frac;
        }
        return p;
    }

    double gain(int sector, double az_deg) const {
        const double d = (az_deg - center_deg[sector]) / width_deg[sector];
        return std::exp(-0.5 * d * d);
    }

    // Transmit and receive sides use the same codebook.
    double tx_gain(int sector, double az_deg) const { return gain(sector, az_deg); }
    double rx_gain(int sector, double az_deg) const { return gain(sector, az_deg); }
};

// ---------------------------------------------------------------------------
// Propagation paths. paths[0] is the line-of-sight path.
// ---------------------------------------------------------------------------

struct Path {
    double az_tx_deg = 0.0;
    double az_rx_deg = 0.0;
    double amplitude = 1.0;             // base gain, non-negative
    double blockage_sensitivity = 1.0;  // in [0, 1]: how much a body affects it
    double delay_ns = 10.0;
};

struct PathSet {
    std::vector<Path> paths;

    void validate() const {
        if (paths.empty()) throw ConfigError("path set: need at least the line-of-sight path");
        for (const auto& p : paths) {
            if (p.amplitude < 0.0) throw ConfigError("path set: negative path amplitude");
            if (p.blockage_sensitivity < 0.0 || p.blockage_sensitivity > 1.0) {
                throw ConfigError("path set: blockage sensitivity must be in [0, 1]");
            }
        }
    }
};

struct BeamEnvironment {
    std::string name;
    PathSet path_set;
    double sigma2 = 0.05;       // noise variance in the beam SNR model
    double sweep_rate_hz = 10;  // sector sweeps per second, within [1, 10]

    void validate() const {
        path_set.validate();
        if (sigma2 <= 0.0) throw ConfigError("environment: sigma^2 must be positive");
        if (sweep_rate_hz < 1.0 || sweep_rate_hz > 10.0) {
            throw ConfigError("environment: sweep rate must be within [1, 10] Hz");
        }
    }
};

/// Per-sector beam SNR: B_k = (1/sigma^2) * sum_n alpha_n * a_n * F_k(theta_n) * G_k(phi_n).
inline std::vector<double> beam_snr_eval(const BeamPatternSet& patterns, const PathSet& paths,
                                         const std::vector<double>& alpha, double sigma2) {
    if (sigma2 <= 0.0) throw ConfigError("beam_snr_eval: sigma^2 must be positive");
    if (alpha.size() != paths.paths.size()) {
        throw ShapeError("beam_snr_eval: one attenuation per path required");
    }
    std::vector<double> snr(patterns.n_sectors, 0.0);
    const double inv_sigma2 = 1.0 / sigma2;
    for (int k = 0; k < patterns.n_sectors; ++k) {
        double acc = 0.0;
        for (std::size_t n = 0; n < paths.paths.size(); ++n) {
            const auto& p = paths.paths[n];
            acc += alpha[n] * p.amplitude * patterns.tx_gain(k, p.az_tx_deg) *
                   patterns.rx_gain(k, p.az_rx_deg);
        }
        snr[k] = inv_sigma2 * acc;
    }
    return snr;
}

/// Per-subcarrier amplitude of H[k] = sum_n alpha_n * g_n * exp(-j 2 pi f_k tau_n)
/// on an 80 MHz grid. Measurement noise, when requested, is complex Gaussian
/// added before the modulus, so amplitudes stay non-negative.
inline std::vector<double> csi_eval(int n_subcarriers, const PathSet& paths,
                                    const std::vector<double>& alpha, double noise_var,
                                    Rng* rng = nullptr) {
    if (n_subcarriers < 1) throw ConfigError("csi_eval: need at least one subcarrier");
    if (noise_var < 0.0) throw ConfigError("csi_eval: noise variance must be non-negative");
    if (alpha.size() != paths.paths.size()) {
        throw ShapeError("csi_eval: one attenuation per path required");
    }
    if (noise_var > 0.0 && rng == nullptr) {
        throw ConfigError("csi_eval: noise requested without a random stream");
    }

    const double subcarrier_hz = 80e6 / n_subcarriers;
    const double noise_std = std::sqrt(noise_var);
    std::vector<double> amplitudes(n_subcarriers);
    for (int k = 0; k < n_subcarriers; ++k) {
        const double f = k * subcarrier_hz;
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < paths.paths.size(); ++n) {
            const auto& p = paths.paths[n];
            const double g = alpha[n] * p.amplitude;
            const double phase = -2.0 * M_PI * f * p.delay_ns * 1e-9;
            re += g * std::cos(phase);
            im += g * std::sin(phase);
        }
        if (noise_std > 0.0) {
            re += noise_std * rng->gaussian();
            im += noise_std * rng->gaussian();
        }
        amplitudes[k] = std::hypot(re, im);
    }
    return amplitudes;
}

// ---------------------------------------------------------------------------
// Gesture envelopes: parametric per-path attenuation trajectories over the
// 15 s window. Poses hold a static blockage field; gestures move it. The
// field is a Gaussian blob in azimuth sampled at each path's transmit angle.
// Swipe and head-rotation pairs are exact time reversals of each other.
// ---------------------------------------------------------------------------

struct GestureEnvelope {
    GestureLabel label = GestureLabel::E;
    double person_scale = 1.0;
    int orientation_deg = 0;  // 0 or 90
    double duration_s = 15.0;

    /// alpha_n(t) in [0, 1]; the Empty pose leaves every path untouched.
    double attenuation(const Path& path, double t) const {
        const double depth =
            path.blockage_sensitivity * person_scale * field(path.az_tx_deg, t);
        return std::clamp(1.0 - depth, 0.0, 1.0);
    }

    std::vector<double> attenuations(const PathSet& paths, double t) const {
        std::vector<double> a(paths.paths.size());
        for (std::size_t n = 0; n < paths.paths.size(); ++n) {
            a[n] = attenuation(paths.paths[n], t);
        }
        return a;
    }

    /// Blockage strength at azimuth `az` and time `t`.
    double field(double az, double t) const {
        double a = az;
        double scale = 1.0;
        if (orientation_deg == 90) {
            // A rotated body intersects a different slice of the path fan.
            a = 45.0 - 0.5 * az;
            scale = 0.85;
        }
        return scale * field_front(label, a, t, duration_s);
    }

private:
    static double lobe(double az, double center, double width) {
        const double d = (az - center) / width;
        return std::exp(-0.5 * d * d);
    }

    static double phase01(double t, double hz) {
        const double p = std::fmod(t * hz, 1.0);
        return p < 0.0 ? p + 1.0 : p;
    }

    // Piecewise-linear waveforms, continuous across the wrap and
    // deliberately time-asymmetric so reversed pairs stay distinguishable.
    static double pulse(double u) { return u < 0.3 ? u / 0.3 : (1.0 - u) / 0.7; }
    static double sweep(double u) { return u < 0.7 ? u / 0.7 : (1.0 - u) / 0.3; }

    static double field_front(GestureLabel label, double az, double t, double duration) {
        switch (label) {
            case GestureLabel::E:
                return 0.0;
            case GestureLabel::RL:
                return 0.70 * lobe(az, 28.0, 16.0);
            case GestureLabel::LL:
                return 0.70 * lobe(az, -28.0, 16.0);
            case GestureLabel::AU:
                return 0.50 * lobe(az, 0.0, 32.0);
            case GestureLabel::AW:
                return 0.60 * (lobe(az, -36.0, 16.0) + lobe(az, 36.0, 16.0));
            case GestureLabel::P:
                return 0.70 * pulse(phase01(t, 0.5)) * lobe(az, 0.0, 14.0);
            case GestureLabel::RS:
                return 0.65 * lobe(az, -42.0 + 84.0 * sweep(phase01(t, 0.4)), 14.0);
            case GestureLabel::LS:
                // Mirror pair: the left swipe is the right swipe reversed in time.
                return field_front(GestureLabel::RS, az, duration - t, duration);
            case GestureLabel::HRL:
                // Slow enough that the attack/decay asymmetry survives
                // resampling to the network's input grid.
                return 0.45 * lobe(az, -10.0 + 18.0 * sweep(phase01(t, 0.35)), 9.0);
            case GestureLabel::HRR:
                return field_front(GestureLabel::HRL, az, duration - t, duration);
        }
        return 0.0;
    }
};

inline double person_scale_for(const std::string& person) {
    return 0.88 + 0.28 * static_cast<double>(Rng::fnv1a(person) % 1000) / 1000.0;
}

// ---------------------------------------------------------------------------
// Dataset generation.
// ---------------------------------------------------------------------------

/// Environments get independently seeded path sets, so beam SNR signatures
/// differ strongly between them.
inline BeamEnvironment make_environment(const std::string& name, std::uint64_t base_seed,
                                        int n_reflectors, double sigma2, double sweep_rate_hz) {
    Rng rng(base_seed, "env:" + name);
    BeamEnvironment env;
    env.name = name;
    env.sigma2 = sigma2;
    env.sweep_rate_hz = sweep_rate_hz;
    env.path_set.paths.push_back(Path{0.0, 0.0, 1.0, 0.85, 10.0});  // line of sight
    for (int i = 0; i < n_reflectors; ++i) {
        Path p;
        p.az_tx_deg = rng.uniform(-55.0, 55.0);
        p.az_rx_deg = rng.uniform(-55.0, 55.0);
        p.amplitude = rng.uniform(0.25, 0.70);
        p.blockage_sensitivity = rng.uniform(0.35, 0.95);
        p.delay_ns = rng.uniform(15.0, 60.0);
        env.path_set.paths.push_back(p);
    }
    env.validate();
    return env;
}

struct EnvironmentSpec {
    std::string name;
    int n_reflectors = 7;
};

struct GenConfig {
    std::vector<EnvironmentSpec> environments;
    std::vector<std::string> persons;
    std::vector<int> orientations{0};
    int instances_per_label = 50;
    Modality modality = Modality::BeamSnr;
    double sigma2 = 0.05;
    double sweep_rate_hz = 10.0;
    double csi_rate_hz = 35.0;       // the ~1 kHz capture decimated to desk scale
    double noise_std_beam = 0.25;
    double noise_std_csi = 0.05;
    std::uint64_t seed = 1;

    void validate() const {
        if (environments.empty() || persons.empty() || orientations.empty()) {
            throw ConfigError("generator: environments, persons and orientations must be non-empty");
        }
        if (instances_per_label < 1) {
            throw ConfigError("generator: instances per label must be at least 1");
        }
        if (csi_rate_hz <= 0.0) throw ConfigError("generator: csi rate must be positive");
        for (int o : orientations) {
            if (o != 0 && o != 90) throw ConfigError("generator: orientations must be 0 or 90");
        }
    }
};

/// One gesture instance sampled over the 15 s window at the modality's rate,
/// with seeded measurement noise. Identical seeds give identical samples.
inline TimeSeriesSample gen_gesture_sample(const BeamEnvironment& env,
                                           const BeamPatternSet& patterns,
                                           const GestureEnvelope& envelope, Modality modality,
                                           std::uint64_t seed, double noise_std,
                                           double csi_rate_hz = 35.0) {
    env.validate();
    Rng rng(seed, "sample-noise");

    const double rate = modality == Modality::BeamSnr ? env.sweep_rate_hz : csi_rate_hz;
    const std::size_t steps =
        std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(envelope.duration_s * rate)));
    const std::size_t channels = static_cast<std::size_t>(modality_channels(modality));

    TimeSeriesSample sample;
    sample.values = Tensor({channels, steps});
    for (std::size_t t = 0; t < steps; ++t) {
        const double time_s = static_cast<double>(t) / rate;
        const auto alpha = envelope.attenuations(env.path_set, time_s);
        if (modality == Modality::BeamSnr) {
            const auto snr = beam_snr_eval(patterns, env.path_set, alpha, env.sigma2);
            for (std::size_t c = 0; c < channels; ++c) {
                const double noisy = snr[c] + noise_std * rng.gaussian();
                sample.values.at(c, t) = static_cast<float>(noisy);
            }
        } else {
            const auto amp =
                csi_eval(static_cast<int>(channels), env.path_set, alpha,
                         noise_std * noise_std, noise_std > 0.0 ? &rng : nullptr);
            for (std::size_t c = 0; c < channels; ++c) {
                sample.values.at(c, t) = static_cast<float>(amp[c]);
            }
        }
    }
    return sample;
}

namespace detail {

inline std::vector<SampleMeta> gen_dataset_impl(const GenConfig& config,
                                                const std::filesystem::path& out_dir);

}  // namespace detail

/// Writes sample files plus a manifest under `out_dir` and returns the
/// generated metadata. Fully deterministic for a fixed config and seed.
inline std::vector<SampleMeta> gen_dataset(const GenConfig& config,
                                           const std::filesystem::path& out_dir) {
    auto metas = detail::gen_dataset_impl(config, out_dir);
    write_manifest(out_dir / "manifest.jsonl", metas);
    return metas;
}

/// Adds another generation pass (typically the other modality) to an
/// existing tree; the manifest is rewritten to cover everything.
inline std::vector<SampleMeta> gen_dataset_append(const GenConfig& config,
                                                  const std::filesystem::path& out_dir,
                                                  std::vector<SampleMeta> existing) {
    auto metas = detail::gen_dataset_impl(config, out_dir);
    existing.insert(existing.end(), metas.begin(), metas.end());
    write_manifest(out_dir / "manifest.jsonl", existing);
    return existing;
}

namespace detail {

inline std::vector<SampleMeta> gen_dataset_impl(const GenConfig& config,
                                                const std::filesystem::path& out_dir) {
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "samples", ec);
    if (ec) throw IoError("cannot create output directory: " + (out_dir / "samples").string());

    const BeamPatternSet patterns = BeamPatternSet::uniform_fan();
    const double noise_std =
        config.modality == Modality::BeamSnr ? config.noise_std_beam : config.noise_std_csi;

    std::vector<SampleMeta> metas;
    for (std::size_t e = 0; e < config.environments.size(); ++e) {
        const auto& env_spec = config.environments[e];
        const BeamEnvironment env = make_environment(env_spec.name, config.seed,
                                                     env_spec.n_reflectors, config.sigma2,
                                                     config.sweep_rate_hz);
        for (std::size_t p = 0; p < config.persons.size(); ++p) {
            for (int orientation : config.orientations) {
                for (int l = 0; l < kNumLabels; ++l) {
                    for (int inst = 0; inst < config.instances_per_label; ++inst) {
                        GestureEnvelope envelope;
                        envelope.label = static_cast<GestureLabel>(l);
                        envelope.person_scale = person_scale_for(config.persons[p]);
                        envelope.orientation_deg = orientation;

                        std::uint64_t s = Rng::mix(config.seed, Rng::fnv1a(env_spec.name));
                        s = Rng::mix(s, Rng::fnv1a(config.persons[p]));
                        s = Rng::mix(s, static_cast<std::uint64_t>(orientation));
                        s = Rng::mix(s, static_cast<std::uint64_t>(l));
                        s = Rng::mix(s, static_cast<std::uint64_t>(inst));
                        s = Rng::mix(s, config.modality == Modality::BeamSnr ? 1u : 2u);

                        TimeSeriesSample sample =
                            gen_gesture_sample(env, patterns, envelope, config.modality, s,
                                               noise_std, config.csi_rate_hz);

                        char name[128];
                        std::snprintf(name, sizeof name, "%s_%s_%s_o%d_%s_%04d.csv",
                                      modality_name(config.modality), env_spec.name.c_str(),
                                      config.persons[p].c_str(), orientation,
                                      label_name(static_cast<GestureLabel>(l)), inst);
                        sample.meta.path = std::string("samples/") + name;
                        sample.meta.label = static_cast<GestureLabel>(l);
                        sample.meta.person = config.persons[p];
                        sample.meta.environment = env_spec.name;
                        sample.meta.orientation_deg = orientation;
                        sample.meta.modality = config.modality;
                        sample.meta.session = "s1";

                        write_sample_file(out_dir / sample.meta.path, sample.values);
                        metas.push_back(sample.meta);
                    }
                }
            }
        }
    }
    return metas;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Preset files: a declarative JSON description of a GenConfig.
// ---------------------------------------------------------------------------

inline GenConfig gen_config_from_json(const nlohmann::json& j) {
    GenConfig c;
    c.environments.clear();
    for (const auto& e : j.at("environments")) {
        EnvironmentSpec spec;
        spec.name = e.at("name").get<std::string>();
        spec.n_reflectors = e.value("n_reflectors", 7);
        c.environments.push_back(spec);
    }
    c.persons = j.at("persons").get<std::vector<std::string>>();
    if (j.contains("orientations")) c.orientations = j.at("orientations").get<std::vector<int>>();
    c.instances_per_label = j.value("instances_per_label", 50);
    if (j.contains("modality")) {
        const auto m = modality_from_name(j.at("modality").get<std::string>());
        if (!m) throw ConfigError("preset: unknown modality");
        c.modality = *m;
    }
    c.sigma2 = j.value("sigma2", 0.05);
    c.sweep_rate_hz = j.value("sweep_rate_hz", 10.0);
    c.csi_rate_hz = j.value("csi_rate_hz", 35.0);
    c.noise_std_beam = j.value("noise_std_beam", 0.25);
    c.noise_std_csi = j.value("noise_std_csi", 0.05);
    c.seed = j.value("seed", 1);
    return c;
}

inline GenConfig load_gen_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open generator preset: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("generator preset is not valid JSON: " + std::string(e.what()));
    }
    try {
        return gen_config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("generator preset malformed: " + std::string(e.what()));
    }
}

}  // namespace mmsense::synth
