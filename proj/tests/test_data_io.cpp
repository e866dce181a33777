#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "cogdiag/data_io.hpp"

using namespace cogdiag;

namespace {

std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "cogdiag_io_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
    auto path = scratch_dir() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

bool error_mentions(const std::function<void()>& fn, const std::string& needle) {
    try {
        fn();
    } catch (const std::exception& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
}

}  // namespace

TEST_CASE("three-line response fixture loads with interned ids") {
    std::string path = write_file("basic.jsonl",
                                  R"({"learner": "knn", "sample": "s1", "score": 1})"
                                  "\n"
                                  R"({"learner": "svm", "sample": "s1", "score": 0})"
                                  "\n"
                                  R"({"learner": "knn", "sample": "s2", "score": 1})"
                                  "\n");
    ResponseMatrix m = load_response_logs(path, TaskKind::Classification);
    CHECK(m.n_learners() == 2);
    CHECK(m.n_samples() == 2);
    CHECK(m.n_triples() == 3);
    // first-appearance interning
    CHECK(m.learner_names()[0] == "knn");
    CHECK(m.learner_names()[1] == "svm");
    CHECK(m.sample_names()[0] == "s1");
    CHECK(m.triple(2).learner == 0);
    CHECK(m.triple(2).sample == 1);
}

TEST_CASE("loader errors carry the offending line number") {
    std::string bad_score = write_file("bad_score.jsonl",
                                       R"({"learner": "a", "sample": "s", "score": 0})"
                                       "\n"
                                       R"({"learner": "b", "sample": "s", "score": 1.5})"
                                       "\n");
    CHECK(error_mentions(
        [&] { load_response_logs(bad_score, TaskKind::Classification); }, ":2:"));

    std::string malformed = write_file("malformed.jsonl",
                                       R"({"learner": "a", "sample": "s", "score": 1})"
                                       "\n"
                                       "{not json\n");
    CHECK(error_mentions(
        [&] { load_response_logs(malformed, TaskKind::Classification); }, ":2:"));

    std::string duplicate = write_file("dup.jsonl",
                                       R"({"learner": "a", "sample": "s", "score": 1})"
                                       "\n"
                                       R"({"learner": "a", "sample": "s", "score": 0})"
                                       "\n");
    CHECK(error_mentions(
        [&] { load_response_logs(duplicate, TaskKind::Classification); }, "duplicate"));

    std::string fractional = write_file("frac.jsonl",
                                        R"({"learner": "a", "sample": "s", "score": 0.25})"
                                        "\n");
    CHECK_THROWS_AS(load_response_logs(fractional, TaskKind::Classification),
                    std::invalid_argument);
    CHECK_NOTHROW(load_response_logs(fractional, TaskKind::Regression));
}

TEST_CASE("skill matrix CSV round trip and validation") {
    std::vector<std::string> samples{"s1", "s2"};
    std::string identity = write_file("q_identity.csv", "sample,skill_a,skill_b\ns1,1,0\ns2,0,1\n");
    SkillMatrix q = load_skill_matrix(identity, samples);
    CHECK(q.n_skills() == 2);
    CHECK(q.at(0, 0) == 1);
    CHECK(q.at(0, 1) == 0);
    CHECK(q.at(1, 1) == 1);
    CHECK(q.skill_names()[1] == "skill_b");

    std::string both = write_file("q_both.csv", "sample,skill_a,skill_b\ns1,1,1\ns2,0,1\n");
    SkillMatrix q_both = load_skill_matrix(both, samples);
    CHECK(q_both.row_skill_count(0) == 2);

    std::string zero_row = write_file("q_zero.csv", "sample,a,b\ns1,0,0\ns2,1,0\n");
    CHECK(error_mentions([&] { load_skill_matrix(zero_row, samples); }, "no skills"));

    std::string non_binary = write_file("q_two.csv", "sample,a,b\ns1,2,0\ns2,1,0\n");
    CHECK_THROWS_AS(load_skill_matrix(non_binary, samples), std::invalid_argument);

    std::string unknown = write_file("q_unknown.csv", "sample,a,b\ns1,1,0\nzz,1,0\n");
    CHECK(error_mentions([&] { load_skill_matrix(unknown, samples); }, "unknown sample"));

    std::string missing = write_file("q_missing.csv", "sample,a,b\ns1,1,0\n");
    CHECK(error_mentions([&] { load_skill_matrix(missing, samples); }, "missing row"));
}

TEST_CASE("regression transform: sample-wise min-max, reversed") {
    std::string path = write_file("reg.jsonl",
                                  R"({"learner": "m1", "sample": "s1", "abs_error": 0})"
                                  "\n"
                                  R"({"learner": "m2", "sample": "s1", "abs_error": 2})"
                                  "\n"
                                  R"({"learner": "m3", "sample": "s1", "abs_error": 4})"
                                  "\n"
                                  R"({"learner": "m1", "sample": "s2", "abs_error": 7})"
                                  "\n");
    RawRegressionLog raw = load_raw_regression(path);
    ResponseMatrix scores = regression_scores(raw);
    CHECK(scores.task() == TaskKind::Regression);
    CHECK(scores.triple(0).score == 1.0);
    CHECK(scores.triple(1).score == 0.5);
    CHECK(scores.triple(2).score == 0.0);
    // lone observation on s2: jointly best
    CHECK(scores.triple(3).score == 1.0);
}

TEST_CASE("regression transform properties on random logs") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> err(0.0, 10.0);
    RawRegressionLog raw;
    const int n_learners = 6, n_samples = 9;
    for (int i = 0; i < n_learners; ++i) raw.learner_names.push_back("m" + std::to_string(i));
    for (int j = 0; j < n_samples; ++j) raw.sample_names.push_back("s" + std::to_string(j));
    for (int i = 0; i < n_learners; ++i)
        for (int j = 0; j < n_samples; ++j) raw.entries.push_back({i, j, err(rng)});
    ResponseMatrix scores = regression_scores(raw);
    std::vector<double> best(n_samples, 0.0), worst(n_samples, 1.0);
    for (const Triple& t : scores.triples()) {
        CHECK(t.score >= 0.0);
        CHECK(t.score <= 1.0);
        best[static_cast<size_t>(t.sample)] = std::max(best[static_cast<size_t>(t.sample)], t.score);
        worst[static_cast<size_t>(t.sample)] = std::min(worst[static_cast<size_t>(t.sample)], t.score);
    }
    for (int j = 0; j < n_samples; ++j) {
        CHECK(best[static_cast<size_t>(j)] == 1.0);
        CHECK(worst[static_cast<size_t>(j)] == 0.0);
    }
}

TEST_CASE("negative error is rejected") {
    std::string path = write_file("neg.jsonl",
                                  R"({"learner": "a", "sample": "s", "abs_error": -1})"
                                  "\n");
    CHECK_THROWS_AS(load_raw_regression(path), std::invalid_argument);
}

TEST_CASE("6:2:2 split: 100 triples give 60/20/20") {
    SyntheticSpec spec;
    spec.n_learners = 10;
    spec.n_samples = 10;
    SyntheticData data = generate_synthetic(spec);
    DatasetSplit split = split_622(data.responses, 42);
    CHECK(split.train.size() == 60);
    CHECK(split.validation.size() == 20);
    CHECK(split.test.size() == 20);

    DatasetSplit again = split_622(data.responses, 42);
    CHECK(split.train == again.train);
    CHECK(split.validation == again.validation);
    CHECK(split.test == again.test);

    DatasetSplit other = split_622(data.responses, 43);
    CHECK(split.train != other.train);
}

TEST_CASE("split covers all triples exactly once for any size and seed") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        int n_learners = 1 + static_cast<int>(rng() % 4);
        int n_samples = 5 + static_cast<int>(rng() % 40);
        SyntheticSpec spec;
        spec.n_learners = n_learners;
        spec.n_samples = n_samples;
        spec.seed = rng();
        SyntheticData data = generate_synthetic(spec);
        const int n = data.responses.n_triples();
        for (uint64_t seed : {uint64_t{1}, uint64_t{21}, uint64_t{42}, uint64_t{84},
                              uint64_t{168}, uint64_t{336}, uint64_t{672}, uint64_t{1344},
                              uint64_t{2688}, uint64_t{5376}}) {
            DatasetSplit split = split_622(data.responses, seed);
            CHECK(static_cast<int>(split.train.size()) == (3 * n + 4) / 5);
            std::set<int> all;
            all.insert(split.train.begin(), split.train.end());
            all.insert(split.validation.begin(), split.validation.end());
            all.insert(split.test.begin(), split.test.end());
            CHECK(static_cast<int>(all.size()) == n);
            CHECK(split.train.size() + split.validation.size() + split.test.size() ==
                  static_cast<size_t>(n));
        }
    }
}

TEST_CASE("split rejects fewer than five triples") {
    ResponseMatrix tiny(2, 2, TaskKind::Classification,
                        {{0, 0, 1.0}, {0, 1, 0.0}, {1, 0, 1.0}, {1, 1, 1.0}});
    CHECK_THROWS_AS(split_622(tiny, 1), std::invalid_argument);
}

TEST_CASE("synthetic generation is deterministic for a fixed configuration") {
    SyntheticSpec spec;
    spec.family = DiagnoserFamily::Mirt;
    spec.n_learners = 8;
    spec.n_samples = 12;
    spec.seed = 7;
    SyntheticData a = generate_synthetic(spec);
    SyntheticData b = generate_synthetic(spec);
    REQUIRE(a.responses.n_triples() == b.responses.n_triples());
    for (int i = 0; i < a.responses.n_triples(); ++i) {
        CHECK(a.responses.triple(i).learner == b.responses.triple(i).learner);
        CHECK(a.responses.triple(i).score == b.responses.triple(i).score);
    }
    CHECK(a.planted == b.planted);
}

TEST_CASE("thresholded synthetic responses follow the planted ordering") {
    SyntheticSpec spec;
    spec.family = DiagnoserFamily::Irt;
    spec.n_learners = 6;
    spec.n_samples = 10;
    spec.seed = 3;
    spec.bernoulli = false;  // threshold probabilities at one half
    SyntheticData data = generate_synthetic(spec);
    std::vector<double> a = data.planted["ability"].get<std::vector<double>>();
    std::vector<double> d = data.planted["difficulty"].get<std::vector<double>>();
    std::vector<double> k = data.planted["discrimination"].get<std::vector<double>>();
    for (const Triple& t : data.responses.triples()) {
        REQUIRE(k[static_cast<size_t>(t.sample)] > 0.0);
        double expected =
            a[static_cast<size_t>(t.learner)] >= d[static_cast<size_t>(t.sample)] ? 1.0 : 0.0;
        CHECK(t.score == expected);
    }
}

TEST_CASE("every family has a generator and unknown configs are rejected") {
    for (DiagnoserFamily family : all_families()) {
        SyntheticSpec spec;
        spec.family = family;
        spec.n_learners = 4;
        spec.n_samples = 6;
        spec.n_skills = 3;
        SyntheticData data = generate_synthetic(spec);
        CHECK(data.responses.n_triples() == 24);
        if (family_needs_skills(family)) CHECK(data.skills.has_value());
    }
    SyntheticSpec bad;
    bad.n_learners = 0;
    CHECK_THROWS_AS(generate_synthetic(bad), std::invalid_argument);
}

TEST_CASE("save and reload a response matrix byte-identically") {
    SyntheticSpec spec;
    spec.n_learners = 5;
    spec.n_samples = 7;
    spec.task = TaskKind::Regression;
    spec.seed = 77;
    SyntheticData data = generate_synthetic(spec);
    auto path = (scratch_dir() / "roundtrip.jsonl").string();
    save_response_logs(data.responses, path);
    ResponseMatrix loaded = load_response_logs(path, TaskKind::Regression);
    REQUIRE(loaded.n_triples() == data.responses.n_triples());
    CHECK(loaded.learner_names() == data.responses.learner_names());
    CHECK(loaded.sample_names() == data.responses.sample_names());
    for (int i = 0; i < loaded.n_triples(); ++i) {
        CHECK(loaded.triple(i).learner == data.responses.triple(i).learner);
        CHECK(loaded.triple(i).sample == data.responses.triple(i).sample);
        CHECK(loaded.triple(i).score == data.responses.triple(i).score);
    }

    // second round trip is exactly stable
    auto path2 = (scratch_dir() / "roundtrip2.jsonl").string();
    save_response_logs(loaded, path2);
    std::ifstream f1(path), f2(path2);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
}

TEST_CASE("skill matrix save and reload") {
    SyntheticSpec spec;
    spec.family = DiagnoserFamily::CamillaBase;
    spec.n_learners = 4;
    spec.n_samples = 9;
    spec.n_skills = 3;
    SyntheticData data = generate_synthetic(spec);
    REQUIRE(data.skills.has_value());
    auto path = (scratch_dir() / "q_roundtrip.csv").string();
    save_skill_matrix(*data.skills, data.responses.sample_names(), path);
    SkillMatrix loaded = load_skill_matrix(path, data.responses.sample_names());
    CHECK(loaded.cells() == data.skills->cells());
    CHECK(loaded.skill_names() == data.skills->skill_names());
}
