#include "cogdiag/dataset.hpp"

#include <cmath>
#include <unordered_set>

namespace cogdiag {

std::string to_string(TaskKind kind) {
    return kind == TaskKind::Classification ? "classification" : "regression";
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "classification" || s == "cls") return TaskKind::Classification;
    if (s == "regression" || s == "reg") return TaskKind::Regression;
    throw std::invalid_argument("unknown task kind: " + s);
}

std::string to_string(SpaceKind kind) {
    switch (kind) {
        case SpaceKind::ExplicitSkill: return "explicit-skill";
        case SpaceKind::LatentSkill: return "latent-skill";
        case SpaceKind::Unidimensional: return "unidimensional";
    }
    return "unknown";
}

namespace {

std::vector<std::string> default_names(const char* prefix, int n) {
    std::vector<std::string> names;
    names.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) names.push_back(std::string(prefix) + std::to_string(i));
    return names;
}

}  // namespace

ResponseMatrix::ResponseMatrix(int n_learners, int n_samples, TaskKind task,
                               std::vector<Triple> triples,
                               std::vector<std::string> learner_names,
                               std::vector<std::string> sample_names)
    : n_learners_(n_learners),
      n_samples_(n_samples),
      task_(task),
      triples_(std::move(triples)),
      learner_names_(std::move(learner_names)),
      sample_names_(std::move(sample_names)) {
    if (n_learners_ <= 0 || n_samples_ <= 0)
        throw std::invalid_argument("ResponseMatrix: learner and sample counts must be positive");
    if (learner_names_.empty()) learner_names_ = default_names("learner_", n_learners_);
    if (sample_names_.empty()) sample_names_ = default_names("sample_", n_samples_);
    if (static_cast<int>(learner_names_.size()) != n_learners_ ||
        static_cast<int>(sample_names_.size()) != n_samples_)
        throw std::invalid_argument("ResponseMatrix: name table size mismatch");

    std::unordered_set<int64_t> seen;
    seen.reserve(triples_.size() * 2);
    for (const Triple& t : triples_) {
        if (t.learner < 0 || t.learner >= n_learners_)
            throw std::invalid_argument("ResponseMatrix: learner index out of range");
        if (t.sample < 0 || t.sample >= n_samples_)
            throw std::invalid_argument("ResponseMatrix: sample index out of range");
        if (!std::isfinite(t.score) || t.score < 0.0 || t.score > 1.0)
            throw std::invalid_argument("ResponseMatrix: score outside [0,1]");
        if (task_ == TaskKind::Classification && t.score != 0.0 && t.score != 1.0)
            throw std::invalid_argument(
                "ResponseMatrix: classification scores must be 0 or 1");
        int64_t key = static_cast<int64_t>(t.learner) * n_samples_ + t.sample;
        if (!seen.insert(key).second)
            throw std::invalid_argument(
                "ResponseMatrix: duplicate (learner, sample) pair: " +
                learner_names_[static_cast<size_t>(t.learner)] + ", " +
                sample_names_[static_cast<size_t>(t.sample)]);
    }
}

SkillMatrix::SkillMatrix(int n_samples, int n_skills, std::vector<uint8_t> cells,
                         std::vector<std::string> skill_names)
    : n_samples_(n_samples), n_skills_(n_skills), cells_(std::move(cells)),
      skill_names_(std::move(skill_names)) {
    if (n_samples_ <= 0 || n_skills_ <= 0)
        throw std::invalid_argument("SkillMatrix: counts must be positive");
    if (cells_.size() != static_cast<size_t>(n_samples_) * n_skills_)
        throw std::invalid_argument("SkillMatrix: cell count mismatch");
    if (skill_names_.empty()) skill_names_ = default_names("skill_", n_skills_);
    if (static_cast<int>(skill_names_.size()) != n_skills_)
        throw std::invalid_argument("SkillMatrix: skill name count mismatch");
    for (uint8_t c : cells_)
        if (c != 0 && c != 1)
            throw std::invalid_argument("SkillMatrix: cells must be 0 or 1");
    for (int j = 0; j < n_samples_; ++j)
        if (row_skill_count(j) == 0)
            throw std::invalid_argument("SkillMatrix: sample " + std::to_string(j) +
                                        " has no skills");
}

std::vector<int> SkillMatrix::skills_of(int sample) const {
    std::vector<int> out;
    for (int k = 0; k < n_skills_; ++k)
        if (at(sample, k)) out.push_back(k);
    return out;
}

int SkillMatrix::row_skill_count(int sample) const {
    int n = 0;
    for (int k = 0; k < n_skills_; ++k) n += at(sample, k);
    return n;
}

}  // namespace cogdiag
