#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cogdiag/dataset.hpp"

namespace cogdiag {

enum class DiagnoserFamily {
    Vanilla,
    SkillVanilla,
    Irt,
    Mirt,
    Mf,
    NeuralCd,
    CamillaBase,
    Camilla,
};

std::string to_string(DiagnoserFamily family);
DiagnoserFamily family_from_string(const std::string& name);
/// True for families that need an explicit skill matrix (Skill-Vanilla,
/// NeuralCD, Camilla-Base).
bool family_needs_skills(DiagnoserFamily family);
/// True for gradient-trained families (everything but the two Vanillas).
bool family_is_parametric(DiagnoserFamily family);
std::vector<DiagnoserFamily> all_families();

struct HyperParams {
    int latent_skills = 5;      // latent ability dimension K'
    int ld1 = 128;              // first hidden width of the NeuralCD MLP
    int ld2 = 64;               // second hidden width (NeuralCD) / hidden width (Camilla)
    double l2_weight = 1e-4;    // embedding penalty for MF
    bool raw_discrimination = false;  // Camilla-Base: use the raw table, no softplus
};

class Diagnoser;

struct TrainConfig {
    double lr = 0.001;
    int batch_size = 256;
    int max_epochs = 500;
    int patience = 20;
    uint64_t seed = 42;
    /// Test hook, invoked after every optimizer step (post projection).
    std::function<void(const Diagnoser&)> on_step;
};

struct FitSummary {
    std::vector<double> train_loss;   // one entry per epoch run
    std::vector<double> val_metric;   // per-epoch validation metric
    std::string val_metric_name;      // "auc", "rmse", or "" without validation
    int best_epoch = -1;              // epoch whose parameters were kept
    int epochs_run = 0;
    int mean_fallback_learners = 0;   // learners absent from the training split
};

/// Contract shared by every diagnoser family: fit on response triples,
/// predict response scores, and report per-learner ability.
class Diagnoser {
  public:
    virtual ~Diagnoser() = default;

    virtual DiagnoserFamily family() const = 0;
    virtual TaskKind task() const = 0;
    virtual int n_learners() const = 0;
    virtual int n_samples() const = 0;
    virtual bool fitted() const = 0;

    /// Trains on the given triple indices. `validation` drives early stopping
    /// (best-epoch parameters are restored); when empty, all epochs run.
    virtual FitSummary fit(const ResponseMatrix& data, std::span<const int> train,
                           std::span<const int> validation,
                           const TrainConfig& config) = 0;

    /// One score in [0,1] per (learner, sample) pair.
    virtual std::vector<double> predict(
        std::span<const std::pair<int, int>> pairs) const = 0;

    double predict_one(int learner, int sample) const;

    virtual AbilityProfile ability(int learner) const = 0;

    /// Sample factors mapped into [0,1] for reporting; NaN when the family
    /// does not model the factor.
    virtual double sample_difficulty(int sample) const;
    virtual double sample_discrimination(int sample) const;

    /// Whether AbilityProfile coordinates already live in [0,1] (otherwise
    /// reports rescale them through a sigmoid).
    virtual bool ability_in_unit_interval() const = 0;

    virtual HyperParams hyper() const = 0;
    /// The explicit skill matrix, for families that carry one.
    virtual const SkillMatrix* skills() const { return nullptr; }

    virtual void save_state(nlohmann::json& state) const = 0;
    virtual void load_state(const nlohmann::json& state) = 0;
};

std::unique_ptr<Diagnoser> make_diagnoser(DiagnoserFamily family, TaskKind task,
                                          int n_learners, int n_samples,
                                          const std::optional<SkillMatrix>& skills,
                                          const HyperParams& hyper = {});

/// Versioned checkpoint document: family tag, hyperparameters, and every
/// parameter table. save -> load -> predict round-trips bit-identically.
nlohmann::json checkpoint_to_json(const Diagnoser& model);
std::unique_ptr<Diagnoser> diagnoser_from_checkpoint(const nlohmann::json& doc);
void save_checkpoint(const Diagnoser& model, const std::string& path);
std::unique_ptr<Diagnoser> load_checkpoint(const std::string& path);

}  // namespace cogdiag
