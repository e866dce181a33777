#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cogdiag {

enum class TaskKind { Classification, Regression };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

/// One observed response: learner `learner` scored `score` on sample `sample`.
/// Scores live in [0,1]; classification scores are exactly 0 or 1.
struct Triple {
    int learner = -1;
    int sample = -1;
    double score = 0.0;
};

/// Sparse learner-sample response log. Learner and sample ids are dense
/// indices 0..N-1 / 0..M-1 with unique external names.
class ResponseMatrix {
  public:
    ResponseMatrix(int n_learners, int n_samples, TaskKind task,
                   std::vector<Triple> triples,
                   std::vector<std::string> learner_names = {},
                   std::vector<std::string> sample_names = {});

    int n_learners() const { return n_learners_; }
    int n_samples() const { return n_samples_; }
    TaskKind task() const { return task_; }
    const std::vector<Triple>& triples() const { return triples_; }
    const Triple& triple(int i) const { return triples_.at(static_cast<size_t>(i)); }
    int n_triples() const { return static_cast<int>(triples_.size()); }

    const std::vector<std::string>& learner_names() const { return learner_names_; }
    const std::vector<std::string>& sample_names() const { return sample_names_; }

  private:
    int n_learners_;
    int n_samples_;
    TaskKind task_;
    std::vector<Triple> triples_;
    std::vector<std::string> learner_names_;
    std::vector<std::string> sample_names_;
};

/// Binary sample-skill relevancy matrix. Row j lists the skills needed by
/// sample j; every row has at least one nonzero entry.
class SkillMatrix {
  public:
    SkillMatrix(int n_samples, int n_skills, std::vector<uint8_t> cells,
                std::vector<std::string> skill_names = {});

    int n_samples() const { return n_samples_; }
    int n_skills() const { return n_skills_; }
    uint8_t at(int sample, int skill) const {
        return cells_[static_cast<size_t>(sample) * n_skills_ + skill];
    }
    std::span<const uint8_t> row(int sample) const {
        return {cells_.data() + static_cast<size_t>(sample) * n_skills_,
                static_cast<size_t>(n_skills_)};
    }
    /// Indices of the skills relevant to `sample`.
    std::vector<int> skills_of(int sample) const;
    int row_skill_count(int sample) const;
    const std::vector<std::string>& skill_names() const { return skill_names_; }
    const std::vector<uint8_t>& cells() const { return cells_; }

  private:
    int n_samples_;
    int n_skills_;
    std::vector<uint8_t> cells_;  // row-major n_samples x n_skills
    std::vector<std::string> skill_names_;
};

/// Disjoint 6:2:2 partition of triple indices. Train takes ceil(0.6 n),
/// validation ceil(0.2 n) of what remains, test the rest.
struct DatasetSplit {
    std::vector<int> train;
    std::vector<int> validation;
    std::vector<int> test;
    uint64_t seed = 0;
};

enum class SpaceKind { ExplicitSkill, LatentSkill, Unidimensional };

std::string to_string(SpaceKind kind);

/// Multidimensional ability of one learner plus a scalar summary in [0,1].
struct AbilityProfile {
    int learner = -1;
    std::vector<double> ability;
    double overall = 0.0;
    SpaceKind space_kind = SpaceKind::Unidimensional;
};

}  // namespace cogdiag
