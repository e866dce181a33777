#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogdiag/dataset.hpp"
#include "cogdiag/diagnoser.hpp"

namespace cogdiag {

/// Reads JSON Lines response logs ({"learner", "sample", "score"} per line).
/// Names are interned to dense indices in first-appearance order.
ResponseMatrix load_response_logs(const std::string& path, TaskKind task);
void save_response_logs(const ResponseMatrix& data, const std::string& path);

/// Reads a CSV skill matrix: header "sample,<skill names...>", one 0/1 row
/// per sample. Rows are matched to `sample_names` (every sample needs a row).
SkillMatrix load_skill_matrix(const std::string& path,
                              const std::vector<std::string>& sample_names);
void save_skill_matrix(const SkillMatrix& skills,
                       const std::vector<std::string>& sample_names,
                       const std::string& path);

/// Raw regression log: absolute prediction errors before the response-score
/// transform. Names interned in first-appearance order.
struct RawRegressionLog {
    struct Entry {
        int learner = -1;
        int sample = -1;
        double abs_error = 0.0;
    };
    std::vector<Entry> entries;
    std::vector<std::string> learner_names;
    std::vector<std::string> sample_names;
};

RawRegressionLog load_raw_regression(const std::string& path);

/// Sample-wise min-max normalization of absolute errors, reversed so the best
/// learner on each sample scores 1 and the worst 0. When all errors on a
/// sample are equal (including a single observation), everyone scores 1.
ResponseMatrix regression_scores(const RawRegressionLog& raw);

/// Seeded shuffle followed by contiguous 6:2:2 slicing (train ceil(0.6 n),
/// validation ceil(0.2 n) of the remainder, test the rest).
DatasetSplit split_622(const ResponseMatrix& data, uint64_t seed);

/// Synthetic dataset drawn from a diagnoser family's forward model with
/// planted parameters; used by the recovery and stability test harnesses.
struct SyntheticSpec {
    DiagnoserFamily family = DiagnoserFamily::Irt;
    TaskKind task = TaskKind::Classification;
    int n_learners = 20;
    int n_samples = 50;
    int n_skills = 5;        // explicit-skill families / latent dimension
    uint64_t seed = 42;
    bool bernoulli = true;   // classification: Bernoulli draws vs 0.5 threshold
    double noise_sd = 0.05;  // regression: clipped Gaussian noise on scores
};

struct SyntheticData {
    ResponseMatrix responses;
    std::optional<SkillMatrix> skills;
    nlohmann::json planted;  // the planted parameter values
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace cogdiag
