#include <cmath>
#include <stdexcept>

#include "cogdiag/diagnosers.hpp"
#include "cogdiag/metrics.hpp"

namespace cogdiag {

namespace {

void validate_triples(const ResponseMatrix& data, std::span<const int> indices) {
    for (int i : indices)
        if (i < 0 || i >= data.n_triples())
            throw std::invalid_argument("fit: triple index out of range");
}

/// Shared summary bookkeeping for the closed-form families: one pseudo-epoch
/// with a squared-error training loss and the usual validation metric.
FitSummary summarize_closed_form(const Diagnoser& model, const ResponseMatrix& data,
                                 std::span<const int> train,
                                 std::span<const int> validation) {
    FitSummary summary;
    summary.epochs_run = 1;
    summary.best_epoch = 0;
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> targets;
    for (int i : train) {
        const Triple& t = data.triple(i);
        pairs.emplace_back(t.learner, t.sample);
        targets.push_back(t.score);
    }
    std::vector<double> preds = model.predict(pairs);
    double sq = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        double diff = preds[i] - targets[i];
        sq += diff * diff;
    }
    summary.train_loss.push_back(sq / static_cast<double>(preds.size()));

    if (!validation.empty()) {
        pairs.clear();
        targets.clear();
        for (int i : validation) {
            const Triple& t = data.triple(i);
            pairs.emplace_back(t.learner, t.sample);
            targets.push_back(t.score);
        }
        preds = model.predict(pairs);
        bool use_auc = false;
        if (data.task() == TaskKind::Classification) {
            bool has_pos = false, has_neg = false;
            for (double y : targets) (y == 1.0 ? has_pos : has_neg) = true;
            use_auc = has_pos && has_neg;
        }
        summary.val_metric_name = use_auc ? "auc" : "rmse";
        summary.val_metric.push_back(use_auc ? auc(preds, targets) : rmse(preds, targets));
    }
    return summary;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vanilla
// ---------------------------------------------------------------------------

VanillaDiagnoser::VanillaDiagnoser(TaskKind task, int n_learners, int n_samples)
    : task_(task), n_learners_(n_learners), n_samples_(n_samples) {
    if (n_learners <= 0 || n_samples <= 0)
        throw std::invalid_argument("diagnoser: counts must be positive");
}

FitSummary VanillaDiagnoser::fit(const ResponseMatrix& data, std::span<const int> train,
                                 std::span<const int> validation,
                                 const TrainConfig& /*config*/) {
    if (train.empty()) throw std::invalid_argument("fit: empty training set");
    validate_triples(data, train);
    validate_triples(data, validation);
    if (data.n_learners() != n_learners_ || data.n_samples() != n_samples_)
        throw std::invalid_argument("fit: dataset shape does not match the model");

    std::vector<double> sum(static_cast<size_t>(n_learners_), 0.0);
    std::vector<long> count(static_cast<size_t>(n_learners_), 0);
    double total = 0.0;
    for (int i : train) {
        const Triple& t = data.triple(i);
        sum[static_cast<size_t>(t.learner)] += t.score;
        count[static_cast<size_t>(t.learner)] += 1;
        total += t.score;
    }
    global_mean_ = total / static_cast<double>(train.size());
    mean_.assign(static_cast<size_t>(n_learners_), 0.0);
    seen_.assign(static_cast<size_t>(n_learners_), 0);
    int fallback = 0;
    for (int i = 0; i < n_learners_; ++i) {
        if (count[static_cast<size_t>(i)] > 0) {
            mean_[static_cast<size_t>(i)] =
                sum[static_cast<size_t>(i)] / static_cast<double>(count[static_cast<size_t>(i)]);
            seen_[static_cast<size_t>(i)] = 1;
        } else {
            ++fallback;
        }
    }
    fitted_ = true;

    FitSummary summary = summarize_closed_form(*this, data, train, validation);
    summary.mean_fallback_learners = fallback;
    return summary;
}

double VanillaDiagnoser::learner_mean(int learner) const {
    if (!fitted_) throw std::logic_error("model has not been fitted");
    if (learner < 0 || learner >= n_learners_)
        throw std::invalid_argument("learner index out of range");
    return seen_[static_cast<size_t>(learner)] ? mean_[static_cast<size_t>(learner)]
                                               : global_mean_;
}

std::vector<double> VanillaDiagnoser::predict(
    std::span<const std::pair<int, int>> pairs) const {
    if (!fitted_) throw std::logic_error("predict: model has not been fitted");
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [learner, sample] : pairs) {
        if (sample < 0 || sample >= n_samples_)
            throw std::invalid_argument("predict: sample index out of range");
        out.push_back(learner_mean(learner));
    }
    return out;
}

AbilityProfile VanillaDiagnoser::ability(int learner) const {
    double m = learner_mean(learner);
    return {learner, {m}, m, SpaceKind::Unidimensional};
}

void VanillaDiagnoser::save_state(nlohmann::json& state) const {
    state["mean"] = mean_;
    state["seen"] = seen_;
    state["global_mean"] = global_mean_;
}

void VanillaDiagnoser::load_state(const nlohmann::json& state) {
    mean_ = state.at("mean").get<std::vector<double>>();
    seen_ = state.at("seen").get<std::vector<uint8_t>>();
    global_mean_ = state.at("global_mean").get<double>();
    if (static_cast<int>(mean_.size()) != n_learners_)
        throw std::invalid_argument("checkpoint: mean table size mismatch");
    fitted_ = true;
}

// ---------------------------------------------------------------------------
// Skill-Vanilla
// ---------------------------------------------------------------------------

SkillVanillaDiagnoser::SkillVanillaDiagnoser(TaskKind task, int n_learners,
                                             SkillMatrix skills)
    : task_(task), n_learners_(n_learners), skills_(std::move(skills)) {
    if (n_learners <= 0) throw std::invalid_argument("diagnoser: counts must be positive");
}

FitSummary SkillVanillaDiagnoser::fit(const ResponseMatrix& data,
                                      std::span<const int> train,
                                      std::span<const int> validation,
                                      const TrainConfig& /*config*/) {
    if (train.empty()) throw std::invalid_argument("fit: empty training set");
    validate_triples(data, train);
    validate_triples(data, validation);
    if (data.n_learners() != n_learners_ || data.n_samples() != skills_.n_samples())
        throw std::invalid_argument("fit: dataset shape does not match the model");

    const int K = skills_.n_skills();
    std::vector<double> sum(static_cast<size_t>(n_learners_) * K, 0.0);
    std::vector<long> count(static_cast<size_t>(n_learners_) * K, 0);
    std::vector<double> learner_sum(static_cast<size_t>(n_learners_), 0.0);
    std::vector<long> learner_count(static_cast<size_t>(n_learners_), 0);
    double total = 0.0;
    for (int i : train) {
        const Triple& t = data.triple(i);
        for (int k = 0; k < K; ++k)
            if (skills_.at(t.sample, k)) {
                size_t cell = static_cast<size_t>(t.learner) * K + k;
                sum[cell] += t.score;
                count[cell] += 1;
            }
        learner_sum[static_cast<size_t>(t.learner)] += t.score;
        learner_count[static_cast<size_t>(t.learner)] += 1;
        total += t.score;
    }
    global_mean_ = total / static_cast<double>(train.size());
    skill_mean_.assign(static_cast<size_t>(n_learners_) * K, 0.0);
    skill_seen_.assign(static_cast<size_t>(n_learners_) * K, 0);
    learner_mean_.assign(static_cast<size_t>(n_learners_), 0.0);
    learner_seen_.assign(static_cast<size_t>(n_learners_), 0);
    int fallback = 0;
    for (int i = 0; i < n_learners_; ++i) {
        for (int k = 0; k < K; ++k) {
            size_t cell = static_cast<size_t>(i) * K + k;
            if (count[cell] > 0) {
                skill_mean_[cell] = sum[cell] / static_cast<double>(count[cell]);
                skill_seen_[cell] = 1;
            }
        }
        if (learner_count[static_cast<size_t>(i)] > 0) {
            learner_mean_[static_cast<size_t>(i)] =
                learner_sum[static_cast<size_t>(i)] /
                static_cast<double>(learner_count[static_cast<size_t>(i)]);
            learner_seen_[static_cast<size_t>(i)] = 1;
        } else {
            ++fallback;
        }
    }
    fitted_ = true;

    FitSummary summary = summarize_closed_form(*this, data, train, validation);
    summary.mean_fallback_learners = fallback;
    return summary;
}

double SkillVanillaDiagnoser::skill_mean(int learner, int skill) const {
    return skill_mean_[static_cast<size_t>(learner) * skills_.n_skills() + skill];
}

std::vector<double> SkillVanillaDiagnoser::predict(
    std::span<const std::pair<int, int>> pairs) const {
    if (!fitted_) throw std::logic_error("predict: model has not been fitted");
    std::vector<double> out;
    out.reserve(pairs.size());
    const int K = skills_.n_skills();
    for (const auto& [learner, sample] : pairs) {
        if (learner < 0 || learner >= n_learners_)
            throw std::invalid_argument("predict: learner index out of range");
        if (sample < 0 || sample >= skills_.n_samples())
            throw std::invalid_argument("predict: sample index out of range");
        double acc = 0.0;
        int used = 0;
        for (int k = 0; k < K; ++k) {
            if (!skills_.at(sample, k)) continue;
            size_t cell = static_cast<size_t>(learner) * K + k;
            if (skill_seen_[cell]) {
                acc += skill_mean_[cell];
                ++used;
            }
        }
        if (used > 0)
            out.push_back(acc / static_cast<double>(used));
        else
            out.push_back(learner_seen_[static_cast<size_t>(learner)]
                              ? learner_mean_[static_cast<size_t>(learner)]
                              : global_mean_);
    }
    return out;
}

AbilityProfile SkillVanillaDiagnoser::ability(int learner) const {
    if (!fitted_) throw std::logic_error("ability: model has not been fitted");
    if (learner < 0 || learner >= n_learners_)
        throw std::invalid_argument("ability: learner index out of range");
    const int K = skills_.n_skills();
    double learner_fallback = learner_seen_[static_cast<size_t>(learner)]
                                  ? learner_mean_[static_cast<size_t>(learner)]
                                  : global_mean_;
    std::vector<double> coords(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) {
        size_t cell = static_cast<size_t>(learner) * K + k;
        coords[static_cast<size_t>(k)] = skill_seen_[cell] ? skill_mean_[cell] : learner_fallback;
    }
    return {learner, std::move(coords), learner_fallback, SpaceKind::ExplicitSkill};
}

void SkillVanillaDiagnoser::save_state(nlohmann::json& state) const {
    state["skill_mean"] = skill_mean_;
    state["skill_seen"] = skill_seen_;
    state["learner_mean"] = learner_mean_;
    state["learner_seen"] = learner_seen_;
    state["global_mean"] = global_mean_;
}

void SkillVanillaDiagnoser::load_state(const nlohmann::json& state) {
    skill_mean_ = state.at("skill_mean").get<std::vector<double>>();
    skill_seen_ = state.at("skill_seen").get<std::vector<uint8_t>>();
    learner_mean_ = state.at("learner_mean").get<std::vector<double>>();
    learner_seen_ = state.at("learner_seen").get<std::vector<uint8_t>>();
    global_mean_ = state.at("global_mean").get<double>();
    if (skill_mean_.size() != static_cast<size_t>(n_learners_) * skills_.n_skills())
        throw std::invalid_argument("checkpoint: skill mean table size mismatch");
    fitted_ = true;
}

}  // namespace cogdiag
