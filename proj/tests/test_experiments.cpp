#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "mmsense/experiments.hpp"
#include "mmsense/synth.hpp"

using namespace mmsense;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "mmsense_experiments_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<TimeSeriesSample> balanced_stub_set(int per_class) {
    std::vector<TimeSeriesSample> set;
    for (int l = 0; l < kNumLabels; ++l) {
        for (int i = 0; i < per_class; ++i) {
            TimeSeriesSample s;
            s.values = Tensor::full({2, 4}, 0.0f);
            s.meta.label = static_cast<GestureLabel>(l);
            s.meta.path = "stub" + std::to_string(l * 100 + i);
            set.push_back(std::move(s));
        }
    }
    return set;
}

/// In-memory synthetic beam-SNR set, resampled and standardized.
std::vector<TimeSeriesSample> synth_beam_set(const std::string& env_name, int per_class,
                                             int input_length, std::uint64_t seed,
                                             int first_instance = 0) {
    const auto env = synth::make_environment(env_name, seed, 6, 0.05, 10.0);
    const auto patterns = synth::BeamPatternSet::uniform_fan();
    std::vector<TimeSeriesSample> set;
    for (int l = 0; l < kNumLabels; ++l) {
        for (int i = 0; i < per_class; ++i) {
            synth::GestureEnvelope e;
            e.label = static_cast<GestureLabel>(l);
            const std::uint64_t s =
                Rng::mix(Rng::mix(seed, static_cast<std::uint64_t>(l)),
                         static_cast<std::uint64_t>(first_instance + i));
            auto sample = synth::gen_gesture_sample(env, patterns, e, Modality::BeamSnr, s, 0.25);
            sample.meta.label = e.label;
            sample.meta.person = "p1";
            sample.meta.environment = env_name;
            sample.meta.modality = Modality::BeamSnr;
            sample.meta.path = env_name + "_" + std::to_string(l) + "_" +
                               std::to_string(first_instance + i);
            set.push_back(resample_linear(sample, static_cast<std::size_t>(input_length)));
        }
    }
    const auto stats = standardize_fit(set);
    for (auto& s : set) s = standardize_apply(s, stats);
    return set;
}

std::vector<float> model_params_flat(Model& m) {
    std::vector<float> out;
    for (const auto& p : m.parameters()) {
        out.insert(out.end(), p.tensor->values.begin(), p.tensor->values.end());
    }
    return out;
}

}  // namespace

TEST_CASE("evaluate_with stubs") {
    const auto set = balanced_stub_set(3);

    const auto lazy = evaluate_with([](const TimeSeriesSample&) { return 0; }, set);
    REQUIRE(lazy.total() == 30);
    REQUIRE(lazy.overall_accuracy() == Approx(0.1));

    const auto perfect = evaluate_with(
        [](const TimeSeriesSample& s) { return static_cast<int>(s.meta.label); }, set);
    REQUIRE(perfect.overall_accuracy() == Approx(1.0));
    for (int i = 0; i < kNumLabels; ++i) {
        for (int j = 0; j < kNumLabels; ++j) {
            REQUIRE(perfect.counts[i][j] == (i == j ? 3 : 0));
        }
    }

    // Per-class accuracy of an absent class has no value.
    ConfusionMatrix cm;
    cm.add(0, 0);
    REQUIRE(cm.per_class_accuracy(0).has_value());
    REQUIRE_FALSE(cm.per_class_accuracy(5).has_value());
}

TEST_CASE("argmax breaks ties toward the lowest class index") {
    Tensor logits({4}, {1.0f, 3.0f, 3.0f, 0.5f});
    REQUIRE(argmax_class(logits) == 1);
}

TEST_CASE("train rejects bad configs and empty sets") {
    TrainConfig cfg;
    cfg.epochs = 0;
    REQUIRE_THROWS_AS(train(synth_beam_set("e", 1, 128, 1), cfg), ConfigError);

    TrainConfig ok;
    REQUIRE_THROWS_AS(train({}, ok), DataError);
}

TEST_CASE("identical config, seed and data give identical training runs") {
    const auto set = synth_beam_set("det", 2, 64, 7);
    TrainConfig cfg;
    cfg.modality = Modality::BeamSnr;
    cfg.epochs = 3;
    cfg.input_length = 64;
    cfg.seed = 5;

    auto a = train(set, cfg);
    auto b = train(set, cfg);
    REQUIRE(a.loss_history == b.loss_history);
    REQUIRE(model_params_flat(a.model) == model_params_flat(b.model));

    // Thread count must not change the numbers.
    TrainConfig one_thread = cfg;
    one_thread.threads = 1;
    TrainConfig two_threads = cfg;
    two_threads.threads = 2;
    auto c = train(set, one_thread);
    auto d = train(set, two_threads);
    REQUIRE(c.loss_history == d.loss_history);
    REQUIRE(model_params_flat(c.model) == model_params_flat(d.model));
}

TEST_CASE("training learns a small synthetic task") {
    const auto set = synth_beam_set("learn", 3, 64, 11);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.input_length = 64;
    cfg.seed = 3;

    const auto result = train(set, cfg);
    REQUIRE(result.loss_history.size() == 30);
    REQUIRE(result.loss_history.back() < 0.25 * result.loss_history.front());
    const auto cm = evaluate(result.model, set);
    REQUIRE(cm.total() == 30);
    REQUIRE(cm.overall_accuracy() >= 0.9);
}

TEST_CASE("diverged training aborts with epoch and batch diagnostics") {
    const auto set = synth_beam_set("blow", 2, 64, 13);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.input_length = 64;
    cfg.adam.lr = 1e30;  // guarantees overflow within a couple of batches
    REQUIRE_THROWS_WITH(train(set, cfg), Catch::Matchers::ContainsSubstring("epoch"));
}

TEST_CASE("mirror-pair confusion stays below cross-class confusion") {
    // Aggregated over 5 seeds: the trained classifier may not confuse the
    // swipe pair or the head-rotation pair more than it confuses unrelated
    // classes on average.
    std::array<std::array<long, kNumLabels>, kNumLabels> total{};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto train_set = synth_beam_set("mirror", 3, 64, 100 + seed, 0);
        const auto test_set = synth_beam_set("mirror", 2, 64, 100 + seed, 3);
        TrainConfig cfg;
        cfg.epochs = 20;
        cfg.input_length = 64;
        cfg.seed = seed;
        const auto result = train(train_set, cfg);
        const auto cm = evaluate(result.model, test_set);
        for (int i = 0; i < kNumLabels; ++i) {
            for (int j = 0; j < kNumLabels; ++j) total[i][j] += cm.counts[i][j];
        }
    }

    const std::vector<std::pair<int, int>> pairs{
        {static_cast<int>(GestureLabel::RS), static_cast<int>(GestureLabel::LS)},
        {static_cast<int>(GestureLabel::HRL), static_cast<int>(GestureLabel::HRR)}};
    for (const auto& [a, b] : pairs) {
        const double pair_conf = static_cast<double>(total[a][b] + total[b][a]) / 2.0;
        double other = 0.0;
        int cells = 0;
        for (int c = 0; c < kNumLabels; ++c) {
            if (c == a || c == b) continue;
            other += static_cast<double>(total[a][c] + total[c][a] + total[b][c] + total[c][b]);
            cells += 4;
        }
        const double other_avg = other / cells;
        INFO("pair (" << a << "," << b << "): pair " << pair_conf << " vs other " << other_avg);
        REQUIRE(pair_conf <= other_avg + 1e-9);
    }
}

TEST_CASE("single-env protocol wiring") {
    synth::GenConfig gen;
    gen.environments = {{"home", 6}};
    gen.persons = {"p1"};
    gen.instances_per_label = 4;
    gen.seed = 21;
    const auto dir = fresh_dir("single_env");
    const auto metas = synth::gen_dataset(gen, dir);

    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.input_length = 64;
    cfg.seed = 9;
    const auto report = run_single_env(metas, dir, std::nullopt, std::nullopt, cfg);
    REQUIRE(report.train_size == 30);  // floor(0.75 * 40)
    REQUIRE(report.test_size == 10);
    REQUIRE(report.confusion.total() == 10);
    REQUIRE(report.loss_history.size() == 2);
    REQUIRE(report.config_echo.at("protocol") == "single-env");

    // Missing class: filter an environment that holds no samples.
    REQUIRE_THROWS_WITH(
        run_single_env(metas, dir, std::string("nowhere"), std::nullopt, cfg),
        Catch::Matchers::ContainsSubstring("classes found"));
}

TEST_CASE("adaptation with k=0 equals the cross-domain run") {
    synth::GenConfig gen;
    gen.environments = {{"home", 6}, {"office", 5}};
    gen.persons = {"p1"};
    gen.instances_per_label = 2;
    gen.seed = 31;
    const auto dir = fresh_dir("k0");
    const auto metas = synth::gen_dataset(gen, dir);

    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.input_length = 64;
    cfg.seed = 17;
    auto xenv = run_cross_domain(metas, dir, "home", "office", cfg);
    auto adapt0 = run_adaptation(metas, dir, "home", "office", 0, cfg);

    REQUIRE(xenv.train_size == adapt0.train_size);
    REQUIRE(xenv.test_size == adapt0.test_size);
    REQUIRE(xenv.loss_history == adapt0.loss_history);
    REQUIRE(xenv.confusion.counts == adapt0.confusion.counts);
    REQUIRE(model_params_flat(xenv.model) == model_params_flat(adapt0.model));

    REQUIRE_THROWS_AS(run_cross_domain(metas, dir, "home", "home", cfg), ConfigError);
    REQUIRE_THROWS_AS(run_adaptation(metas, dir, "home", "office", 3, cfg), DataError);
}

TEST_CASE("train and test never overlap") {
    synth::GenConfig gen;
    gen.environments = {{"home", 6}};
    gen.persons = {"p1"};
    gen.instances_per_label = 2;
    gen.seed = 41;
    const auto dir = fresh_dir("overlap");
    const auto metas = synth::gen_dataset(gen, dir);

    // The disjointness assertion fires when the same id lands on both sides.
    REQUIRE_THROWS_WITH(detail::prepare(metas, metas, dir, 64),
                        Catch::Matchers::ContainsSubstring("both train and test"));

    const auto split = split_dataset(metas, 0.75, 1);
    REQUIRE_NOTHROW(detail::prepare(split.train, split.test, dir, 64));
}

TEST_CASE("report files are written and deterministic") {
    synth::GenConfig gen;
    gen.environments = {{"home", 6}};
    gen.persons = {"p1"};
    gen.instances_per_label = 2;
    gen.seed = 51;
    const auto dir = fresh_dir("report");
    const auto metas = synth::gen_dataset(gen, dir);

    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.input_length = 64;
    cfg.seed = 23;
    const auto report = run_single_env(metas, dir, std::nullopt, std::nullopt, cfg);

    const auto out_a = fresh_dir("report_out_a");
    const auto out_b = fresh_dir("report_out_b");
    report_write(report, out_a);
    report_write(report, out_b);
    for (const char* name : {"report.txt", "confusion.csv", "loss.csv", "model.bin", "config.json"}) {
        REQUIRE(fs::exists(out_a / name));
        std::ifstream fa(out_a / name, std::ios::binary), fb(out_b / name, std::ios::binary);
        const std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
        const std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
        REQUIRE(ca == cb);
    }

    // The confusion CSV's trace equals the number of correct predictions.
    std::ifstream cfile(out_a / "confusion.csv");
    long total = 0;
    std::string line;
    while (std::getline(cfile, line)) {
        std::size_t pos = 0;
        while (pos < line.size()) {
            total += std::stol(line.substr(pos));
            const auto comma = line.find(',', pos);
            pos = comma == std::string::npos ? line.size() : comma + 1;
        }
    }
    REQUIRE(total == static_cast<long>(report.test_size));
}
