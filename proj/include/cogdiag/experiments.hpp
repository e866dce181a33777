#pragma once

#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogdiag/dataset.hpp"
#include "cogdiag/diagnoser.hpp"

namespace cogdiag {

/// Declared hyperparameter value sets for random search.
struct ExperimentGrids {
    std::vector<double> lr = {0.0001, 0.001, 0.005, 0.01};
    std::vector<int> ld1 = {16, 32, 64, 128, 256, 512};
    std::vector<int> ld2 = {16, 32, 64};
    std::vector<int> latent_skills = {5, 10, 20, 50};
};

struct ExperimentConfig {
    DiagnoserFamily family = DiagnoserFamily::Camilla;
    TaskKind task = TaskKind::Classification;
    std::string responses_path;
    std::string qmatrix_path;
    std::string out_dir = ".";
    std::vector<uint64_t> seeds = {1, 21, 42, 84, 168, 336, 672, 1344, 2688, 5376};
    HyperParams hyper;
    TrainConfig train;
    std::vector<int> partition_sizes = {10, 20, 40, 80, 160};
    int search_budget = 16;
    ExperimentGrids grids;
};

/// Per-seed 6:2:2 fit with early stopping, evaluated on the held-out test
/// slice. Returns the report document (also written by the CLI).
nlohmann::json run_reliability(const ExperimentConfig& config, const ResponseMatrix& data,
                               const std::optional<SkillMatrix>& skills);

/// Correlation between the overall-ability ranking and the coarse per-learner
/// metric ranking (mean score for classification, mean reversed score for
/// regression, where it tracks normalized MAE).
nlohmann::json run_rank_consistency(const ExperimentConfig& config,
                                    const ResponseMatrix& data,
                                    const std::optional<SkillMatrix>& skills);

/// Kendall tau between learner rankings fitted on two disjoint sample
/// partitions, swept over partition sizes with a 95% CI per size.
nlohmann::json run_rank_stability(const ExperimentConfig& config,
                                  const ResponseMatrix& data,
                                  const std::optional<SkillMatrix>& skills);

/// Fits one model and writes per-learner ability and per-sample factor CSVs
/// plus a checkpoint. Returns run metadata (paths included).
nlohmann::json run_diagnose(const ExperimentConfig& config, const ResponseMatrix& data,
                            const std::optional<SkillMatrix>& skills);

/// Uniform random search over the declared grids, selected by validation
/// metric; returns winner plus the full trial log.
nlohmann::json run_search(const ExperimentConfig& config, const ResponseMatrix& data,
                          const std::optional<SkillMatrix>& skills);

// --- building blocks shared with the test suites ---

/// Mean response score per learner (classification) or mean reversed score
/// (regression). Learners without triples get NaN.
std::vector<double> coarse_learner_metric(const ResponseMatrix& data);

/// Fits a model on the given triples: closed-form families consume them all,
/// gradient-trained families hold out 20% (seeded) for early stopping.
std::unique_ptr<Diagnoser> fit_for_ranking(const ExperimentConfig& config,
                                           const ResponseMatrix& data,
                                           const std::optional<SkillMatrix>& skills,
                                           std::span<const int> triples, uint64_t seed);

/// Overall ability of every learner under a fitted model.
std::vector<double> overall_abilities(const Diagnoser& model);

/// Fits the configured family independently on two sample partitions (same
/// training seed on both sides) and returns the Kendall tau between the two
/// overall-ability rankings.
double stability_partition_tau(const ExperimentConfig& config, const ResponseMatrix& data,
                               const std::optional<SkillMatrix>& skills,
                               std::span<const int> partition_a,
                               std::span<const int> partition_b, uint64_t seed);

/// Two disjoint sample partitions. With a single-skill matrix the draw is
/// balanced per skill (`size` samples of each skill per partition); otherwise
/// uniform (`size` samples per partition).
std::pair<std::vector<int>, std::vector<int>> draw_stability_partitions(
    const ResponseMatrix& data, const std::optional<SkillMatrix>& skills, int size,
    std::mt19937_64& rng);

void write_report(const nlohmann::json& report, const std::string& path);
std::string timestamp_utc();

}  // namespace cogdiag
