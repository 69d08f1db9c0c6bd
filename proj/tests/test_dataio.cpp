#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "mmsense/dataio.hpp"

using namespace mmsense;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

fs::path test_dir() {
    const auto dir = fs::temp_directory_path() / "mmsense_dataio_tests";
    fs::create_directories(dir);
    return dir;
}

fs::path write_text(const std::string& name, const std::string& content) {
    const auto path = test_dir() / name;
    std::ofstream out(path, std::ios::trunc);
    out << content;
    return path;
}

SampleMeta meta_for(const std::string& path, GestureLabel label,
                    Modality modality = Modality::BeamSnr) {
    SampleMeta m;
    m.path = path;
    m.label = label;
    m.person = "p1";
    m.environment = "home";
    m.orientation_deg = 0;
    m.modality = modality;
    return m;
}

std::vector<SampleMeta> metas_with_label_counts(const std::vector<int>& counts) {
    std::vector<SampleMeta> metas;
    for (int l = 0; l < kNumLabels; ++l) {
        for (int i = 0; i < counts[l]; ++i) {
            metas.push_back(meta_for("s" + std::to_string(l) + "_" + std::to_string(i) + ".csv",
                                     static_cast<GestureLabel>(l)));
        }
    }
    return metas;
}

}  // namespace

TEST_CASE("label taxonomy is bijective") {
    REQUIRE(kNumLabels == 10);
    const std::vector<std::string> names{"E", "RL", "LL", "AU", "AW", "P", "RS", "LS", "HRL", "HRR"};
    for (int i = 0; i < kNumLabels; ++i) {
        const auto l = static_cast<GestureLabel>(i);
        REQUIRE(label_name(l) == names[i]);
        REQUIRE(label_from_name(names[i]) == l);
    }
    REQUIRE_FALSE(label_from_name("XX").has_value());
}

TEST_CASE("manifest round trip with 854 records") {
    std::vector<SampleMeta> metas;
    for (int i = 0; i < 854; ++i) {
        metas.push_back(meta_for("samples/g" + std::to_string(i) + ".csv",
                                 static_cast<GestureLabel>(i % kNumLabels)));
    }
    const auto path = test_dir() / "big_manifest.jsonl";
    write_manifest(path, metas);
    const auto parsed = parse_manifest(path);
    REQUIRE(parsed.size() == 854);
    REQUIRE(parsed[3].path == "samples/g3.csv");
    REQUIRE(parsed[3].label == GestureLabel::AU);
}

TEST_CASE("manifest edge cases") {
    SECTION("empty file gives an empty list") {
        const auto path = write_text("empty.jsonl", "");
        REQUIRE(parse_manifest(path).empty());
    }
    SECTION("unknown label is rejected with its line number") {
        const auto path = write_text(
            "badlabel.jsonl",
            R"({"path":"a.csv","label":"XX","person":"p1","environment":"home","orientation_deg":0,"modality":"beamsnr"})"
            "\n");
        REQUIRE_THROWS_WITH(parse_manifest(path),
                            Catch::Matchers::ContainsSubstring("line 1") &&
                                Catch::Matchers::ContainsSubstring("XX"));
    }
    SECTION("duplicate path is rejected") {
        const std::string rec =
            R"({"path":"a.csv","label":"E","person":"p1","environment":"home","orientation_deg":0,"modality":"beamsnr"})";
        const auto path = write_text("dup.jsonl", rec + "\n" + rec + "\n");
        REQUIRE_THROWS_WITH(parse_manifest(path),
                            Catch::Matchers::ContainsSubstring("line 2") &&
                                Catch::Matchers::ContainsSubstring("duplicate"));
    }
    SECTION("unknown fields are ignored") {
        const auto path = write_text(
            "extra.jsonl",
            R"({"path":"a.csv","label":"E","person":"p1","environment":"home","orientation_deg":0,"modality":"beamsnr","rssi":-40,"extra":"x"})"
            "\n");
        REQUIRE(parse_manifest(path).size() == 1);
    }
    SECTION("malformed JSON names the line") {
        const auto path = write_text("mangled.jsonl", "{not json}\n");
        REQUIRE_THROWS_WITH(parse_manifest(path), Catch::Matchers::ContainsSubstring("line 1"));
    }
    SECTION("missing field names the line") {
        const auto path = write_text(
            "missing.jsonl", R"({"path":"a.csv","label":"E","person":"p1"})" "\n");
        REQUIRE_THROWS_WITH(parse_manifest(path), Catch::Matchers::ContainsSubstring("line 1"));
    }
    SECTION("blank lines are skipped") {
        const auto path = write_text(
            "blank.jsonl",
            "\n"
            R"({"path":"a.csv","label":"E","person":"p1","environment":"home","orientation_deg":0,"modality":"beamsnr"})"
            "\n\n");
        REQUIRE(parse_manifest(path).size() == 1);
    }
}

TEST_CASE("sample files load transposed into channels x time") {
    // 150 sweeps of 36 sectors, one row per time step.
    std::string csv;
    for (int t = 0; t < 150; ++t) {
        for (int c = 0; c < 36; ++c) {
            csv += std::to_string(t * 100 + c);
            csv += (c + 1 < 36) ? "," : "\n";
        }
    }
    write_text("beam.csv", csv);
    const auto sample = load_sample(meta_for("beam.csv", GestureLabel::E), test_dir());
    REQUIRE(sample.values.shape == std::vector<std::size_t>{36, 150});
    REQUIRE(sample.values.at(5, 7) == Approx(7 * 100 + 5));
}

TEST_CASE("sample file guards") {
    SECTION("36 columns declared as csi is a channel-count error") {
        write_text("mislabelled.csv", "1,2,3\n4,5,6\n");
        auto m = meta_for("mislabelled.csv", GestureLabel::E, Modality::Csi);
        REQUIRE_THROWS_WITH(load_sample(m, test_dir()),
                            Catch::Matchers::ContainsSubstring("columns"));
    }
    SECTION("NaN cells are rejected") {
        std::string csv;
        for (int t = 0; t < 3; ++t) {
            for (int c = 0; c < 36; ++c) csv += (c ? "," : "") + std::string(t == 1 && c == 4 ? "nan" : "1.0");
            csv += "\n";
        }
        write_text("withnan.csv", csv);
        REQUIRE_THROWS_AS(load_sample(meta_for("withnan.csv", GestureLabel::E), test_dir()),
                          DataError);
    }
    SECTION("non-numeric cells are rejected") {
        std::string csv;
        for (int t = 0; t < 2; ++t) {
            for (int c = 0; c < 36; ++c) csv += (c ? "," : "") + std::string(t == 1 && c == 0 ? "abc" : "1");
            csv += "\n";
        }
        write_text("nonnum.csv", csv);
        REQUIRE_THROWS_AS(load_sample(meta_for("nonnum.csv", GestureLabel::E), test_dir()),
                          DataError);
    }
    SECTION("fewer than two time steps is rejected") {
        std::string csv;
        for (int c = 0; c < 36; ++c) csv += (c ? ",1" : "1");
        write_text("short.csv", csv + "\n");
        REQUIRE_THROWS_AS(load_sample(meta_for("short.csv", GestureLabel::E), test_dir()),
                          DataError);
    }
    SECTION("missing file") {
        REQUIRE_THROWS_AS(load_sample(meta_for("nope.csv", GestureLabel::E), test_dir()), IoError);
    }
}

TEST_CASE("resample_linear") {
    SECTION("constant channels stay constant") {
        const Tensor c = Tensor::full({3, 17}, 2.5f);
        for (std::size_t t : {2u, 5u, 16u, 17u, 40u}) {
            const Tensor y = resample_linear(c, t);
            REQUIRE(y.dim(1) == t);
            for (float v : y.values) REQUIRE(v == 2.5f);
        }
    }
    SECTION("linear midpoint") {
        const Tensor x({1, 2}, {0.0f, 1.0f});
        const Tensor y = resample_linear(x, 3);
        REQUIRE(y.values == std::vector<float>{0.0f, 0.5f, 1.0f});
    }
    SECTION("matching length is the identity") {
        Rng rng(3);
        Tensor x({4, 20});
        for (auto& v : x.values) v = static_cast<float>(rng.uniform(-5, 5));
        REQUIRE(resample_linear(x, 20).values == x.values);
    }
    SECTION("endpoints always preserved") {
        const Tensor x({1, 5}, {3.0f, 1.0f, 4.0f, 1.0f, 5.0f});
        for (std::size_t t : {2u, 3u, 7u, 128u}) {
            const Tensor y = resample_linear(x, t);
            REQUIRE(y.at(0, 0) == 3.0f);
            REQUIRE(y.at(0, t - 1) == 5.0f);
        }
    }
    SECTION("guards") {
        const Tensor x({1, 5}, {1, 2, 3, 4, 5});
        REQUIRE_THROWS_AS(resample_linear(x, 1), ConfigError);
        REQUIRE_THROWS_AS(resample_linear(Tensor({1, 1}, {1.0f}), 4), DataError);
    }
}

TEST_CASE("standardize fit and apply") {
    Rng rng(7);
    TimeSeriesSample s;
    s.meta = meta_for("x.csv", GestureLabel::E);
    s.values = Tensor({3, 200});
    for (std::size_t t = 0; t < 200; ++t) {
        s.values.at(0, t) = static_cast<float>(10.0 + 4.0 * rng.gaussian());
        s.values.at(1, t) = static_cast<float>(-3.0 + 0.5 * rng.gaussian());
        s.values.at(2, t) = 42.0f;  // constant channel
    }
    const auto stats = standardize_fit({s});
    const auto z = standardize_apply(s, stats);

    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0.0, var = 0.0;
        for (std::size_t t = 0; t < 200; ++t) mean += z.values.at(c, t);
        mean /= 200.0;
        for (std::size_t t = 0; t < 200; ++t) {
            const double d = z.values.at(c, t) - mean;
            var += d * d;
        }
        var /= 200.0;
        REQUIRE(std::abs(mean) < 1e-6);
        REQUIRE(std::sqrt(var) == Approx(1.0).epsilon(1e-4));
    }
    for (std::size_t t = 0; t < 200; ++t) REQUIRE(z.values.at(2, t) == 0.0f);

    // Train-fitted stats preserve ordering on unseen data.
    TimeSeriesSample other = s;
    for (auto& v : other.values.values) v += 1.5f;
    const auto zo = standardize_apply(other, stats);
    for (std::size_t t = 1; t < 200; ++t) {
        const bool raw_less = other.values.at(0, t - 1) < other.values.at(0, t);
        const bool std_less = zo.values.at(0, t - 1) < zo.values.at(0, t);
        REQUIRE(raw_less == std_less);
    }

    REQUIRE_THROWS_AS(standardize_fit({}), DataError);
}

TEST_CASE("split reproduces the published sizes exactly") {
    struct Case {
        std::vector<int> counts;
        std::size_t train, test;
    };
    const std::vector<Case> cases{
        {{49, 49, 49, 49, 49, 49, 48, 48, 48, 48}, 364, 122},  // home: 486
        {{22, 22, 22, 22, 22, 22, 22, 22, 22, 23}, 165, 56},   // office: 221
        {{71, 71, 71, 71, 71, 71, 70, 70, 70, 71}, 530, 177},  // combined: 707
    };
    for (const auto& c : cases) {
        const auto metas = metas_with_label_counts(c.counts);
        const auto split = split_dataset(metas, 0.75, 99);
        REQUIRE(split.train.size() == c.train);
        REQUIRE(split.test.size() == c.test);
    }
}

TEST_CASE("split is a seeded partition") {
    const auto metas = metas_with_label_counts({49, 49, 49, 49, 49, 49, 48, 48, 48, 48});
    const auto a = split_dataset(metas, 0.75, 7);
    const auto b = split_dataset(metas, 0.75, 7);
    const auto c = split_dataset(metas, 0.75, 8);

    REQUIRE(a.train.size() + a.test.size() == metas.size());
    std::set<std::string> seen;
    for (const auto& m : a.train) seen.insert(m.path);
    for (const auto& m : a.test) REQUIRE(seen.insert(m.path).second);
    REQUIRE(seen.size() == metas.size());

    auto paths = [](const std::vector<SampleMeta>& v) {
        std::vector<std::string> p;
        for (const auto& m : v) p.push_back(m.path);
        return p;
    };
    REQUIRE(paths(a.train) == paths(b.train));
    REQUIRE(paths(a.test) == paths(b.test));
    REQUIRE(paths(a.train) != paths(c.train));

    // Every label keeps at least one test sample.
    std::array<int, kNumLabels> test_counts{};
    for (const auto& m : a.test) ++test_counts[static_cast<int>(m.label)];
    for (int l = 0; l < kNumLabels; ++l) REQUIRE(test_counts[l] >= 1);
}

TEST_CASE("labels with fewer than two samples are forced into train") {
    std::vector<int> counts{1, 5, 5, 5, 5, 5, 5, 5, 5, 5};
    const auto metas = metas_with_label_counts(counts);
    const auto split = split_dataset(metas, 0.75, 3);
    REQUIRE(split.warnings.size() == 1);
    REQUIRE_THAT(split.warnings[0], Catch::Matchers::ContainsSubstring("E"));
    int e_in_train = 0, e_in_test = 0;
    for (const auto& m : split.train) e_in_train += m.label == GestureLabel::E;
    for (const auto& m : split.test) e_in_test += m.label == GestureLabel::E;
    REQUIRE(e_in_train == 1);
    REQUIRE(e_in_test == 0);

    REQUIRE_THROWS_AS(split_dataset(metas, 0.0, 1), ConfigError);
    REQUIRE_THROWS_AS(split_dataset(metas, 1.0, 1), ConfigError);
}
