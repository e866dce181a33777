#pragma once

#include <random>

#include "cogdiag/diagnoser.hpp"
#include "cogdiag/tensor.hpp"

namespace cogdiag {

/// Predicts every learner's mean training score regardless of the sample.
class VanillaDiagnoser final : public Diagnoser {
  public:
    VanillaDiagnoser(TaskKind task, int n_learners, int n_samples);

    DiagnoserFamily family() const override { return DiagnoserFamily::Vanilla; }
    TaskKind task() const override { return task_; }
    int n_learners() const override { return n_learners_; }
    int n_samples() const override { return n_samples_; }
    bool fitted() const override { return fitted_; }
    HyperParams hyper() const override { return {}; }

    FitSummary fit(const ResponseMatrix& data, std::span<const int> train,
                   std::span<const int> validation, const TrainConfig& config) override;
    std::vector<double> predict(std::span<const std::pair<int, int>> pairs) const override;
    AbilityProfile ability(int learner) const override;
    bool ability_in_unit_interval() const override { return true; }

    void save_state(nlohmann::json& state) const override;
    void load_state(const nlohmann::json& state) override;

    double learner_mean(int learner) const;
    double global_mean() const { return global_mean_; }

  private:
    TaskKind task_;
    int n_learners_;
    int n_samples_;
    bool fitted_ = false;
    std::vector<double> mean_;
    std::vector<uint8_t> seen_;
    double global_mean_ = 0.0;
};

/// Per-(learner, skill) mean scores; a prediction averages the per-skill
/// means over the sample's skills, falling back to the learner mean when all
/// of them are unseen.
class SkillVanillaDiagnoser final : public Diagnoser {
  public:
    SkillVanillaDiagnoser(TaskKind task, int n_learners, SkillMatrix skills);

    DiagnoserFamily family() const override { return DiagnoserFamily::SkillVanilla; }
    TaskKind task() const override { return task_; }
    int n_learners() const override { return n_learners_; }
    int n_samples() const override { return skills_.n_samples(); }
    bool fitted() const override { return fitted_; }
    HyperParams hyper() const override { return {}; }
    const SkillMatrix* skills() const override { return &skills_; }

    FitSummary fit(const ResponseMatrix& data, std::span<const int> train,
                   std::span<const int> validation, const TrainConfig& config) override;
    std::vector<double> predict(std::span<const std::pair<int, int>> pairs) const override;
    AbilityProfile ability(int learner) const override;
    bool ability_in_unit_interval() const override { return true; }

    void save_state(nlohmann::json& state) const override;
    void load_state(const nlohmann::json& state) override;

  private:
    double skill_mean(int learner, int skill) const;

    TaskKind task_;
    int n_learners_;
    SkillMatrix skills_;
    bool fitted_ = false;
    std::vector<double> skill_mean_;    // n_learners x n_skills
    std::vector<uint8_t> skill_seen_;
    std::vector<double> learner_mean_;
    std::vector<uint8_t> learner_seen_;
    double global_mean_ = 0.0;
};

/// Shared machinery for the gradient-trained families: seeded parameter
/// initialization, mini-batch Adam with early stopping, prediction batching,
/// and generic parameter-table serialization.
class ParametricDiagnoser : public Diagnoser {
  public:
    TaskKind task() const override { return task_; }
    int n_learners() const override { return n_learners_; }
    int n_samples() const override { return n_samples_; }
    bool fitted() const override { return fitted_; }
    HyperParams hyper() const override { return hyper_; }

    FitSummary fit(const ResponseMatrix& data, std::span<const int> train,
                   std::span<const int> validation, const TrainConfig& config) override;
    std::vector<double> predict(std::span<const std::pair<int, int>> pairs) const override;

    /// Seeds and draws fresh parameter values (uniform on [-s, s] with
    /// s = 1/sqrt(fan_in); bias vectors start at zero). fit() calls this.
    void initialize_parameters(uint64_t seed);

    /// Named parameter tables in registration order; handles share storage
    /// with the model.
    std::vector<std::pair<std::string, Tensor>> named_parameters() const;

    /// Training-loss value on the given triples without touching gradients.
    double loss_value(const ResponseMatrix& data, std::span<const int> triples) const;
    /// Forward + backward on the given triples, leaving gradients in place.
    double accumulate_gradients(const ResponseMatrix& data, std::span<const int> triples);

    /// Raw forward scores for (learner, sample) index vectors.
    std::vector<double> scores_for(std::span<const int> learners,
                                   std::span<const int> samples) const;

    void save_state(nlohmann::json& state) const override;
    void load_state(const nlohmann::json& state) override;

  protected:
    ParametricDiagnoser(TaskKind task, int n_learners, int n_samples, HyperParams hyper);

    struct ParamSpec {
        std::string name;
        Tensor tensor;
        int fan_in = 1;
        bool zero_init = false;
    };

    Tensor& register_param(const std::string& name, int rows, int cols, int fan_in);
    Tensor& register_bias(const std::string& name, int rows, int cols);
    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;

    virtual Tensor forward_scores(std::span<const int> learners,
                                  std::span<const int> samples) const = 0;
    /// Default: BCE (classification) or MSE (regression) on forward scores.
    virtual Tensor training_loss(std::span<const int> learners,
                                 std::span<const int> samples,
                                 const Tensor& targets) const;
    /// Parameter tensors clamped to be non-negative after every step.
    virtual std::vector<Tensor> nonnegative_params() const { return {}; }
    /// Families whose outputs must stay strictly inside (0,1) clamp predictions.
    virtual bool open_interval_outputs() const { return false; }
    /// Resolves sign indeterminacies after training (prediction-preserving);
    /// default is a no-op.
    virtual void canonicalize() {}

    TaskKind task_;
    int n_learners_;
    int n_samples_;
    HyperParams hyper_;
    bool fitted_ = false;

  private:
    std::vector<ParamSpec> params_;

    void init_values(std::mt19937_64& rng);
    std::vector<std::vector<double>> snapshot_values() const;
    void restore_values(const std::vector<std::vector<double>>& snapshot);
    double validation_metric(const ResponseMatrix& data, std::span<const int> validation,
                             bool use_auc) const;
};

/// Two-parameter logistic response model: sigmoid(1.7 k_j (a_i - d_j)).
class IrtDiagnoser final : public ParametricDiagnoser {
  public:
    IrtDiagnoser(TaskKind task, int n_learners, int n_samples, HyperParams hyper = {});

    DiagnoserFamily family() const override { return DiagnoserFamily::Irt; }
    AbilityProfile ability(int learner) const override;
    bool ability_in_unit_interval() const override { return false; }
    double sample_difficulty(int sample) const override;
    double sample_discrimination(int sample) const override;

  protected:
    Tensor forward_scores(std::span<const int> learners,
                          std::span<const int> samples) const override;
    void canonicalize() override;
};

/// Multidimensional logistic model: sigmoid(k_j . theta_i - d_j).
class MirtDiagnoser final : public ParametricDiagnoser {
  public:
    MirtDiagnoser(TaskKind task, int n_learners, int n_samples, HyperParams hyper = {});

    DiagnoserFamily family() const override { return DiagnoserFamily::Mirt; }
    AbilityProfile ability(int learner) const override;
    bool ability_in_unit_interval() const override { return false; }
    double sample_difficulty(int sample) const override;
    double sample_discrimination(int sample) const override;

  protected:
    Tensor forward_scores(std::span<const int> learners,
                          std::span<const int> samples) const override;
    void canonicalize() override;
};

/// Matrix factorization: sigmoid(u_i . v_j) with an L2 embedding penalty.
class MfDiagnoser final : public ParametricDiagnoser {
  public:
    MfDiagnoser(TaskKind task, int n_learners, int n_samples, HyperParams hyper = {});

    DiagnoserFamily family() const override { return DiagnoserFamily::Mf; }
    AbilityProfile ability(int learner) const override;
    bool ability_in_unit_interval() const override { return false; }

  protected:
    Tensor forward_scores(std::span<const int> learners,
                          std::span<const int> samples) const override;
    Tensor training_loss(std::span<const int> learners, std::span<const int> samples,
                         const Tensor& targets) const override;
    bool open_interval_outputs() const override { return true; }
    void canonicalize() override;
};

/// Neural diagnosis over explicit skills: a non-negative MLP applied to
/// Q_j o (a_i - d_j) * k_j with sigmoid-mapped factors.
class NeuralCdDiagnoser final : public ParametricDiagnoser {
  public:
    NeuralCdDiagnoser(TaskKind task, int n_learners, SkillMatrix skills,
                      HyperParams hyper = {});

    DiagnoserFamily family() const override { return DiagnoserFamily::NeuralCd; }
    const SkillMatrix* skills() const override { return &skills_; }
    AbilityProfile ability(int learner) const override;
    bool ability_in_unit_interval() const override { return true; }
    double sample_difficulty(int sample) const override;
    double sample_discrimination(int sample) const override;

  protected:
    Tensor forward_scores(std::span<const int> learners,
                          std::span<const int> samples) const override;
    std::vector<Tensor> nonnegative_params() const override;
    bool open_interval_outputs() const override { return true; }

  private:
    SkillMatrix skills_;
};

/// Masked multidimensional logistic model over explicit skills:
/// sigmoid((Q_j o softplus(b_j)) . (A_i - D_j)).
class CamillaBaseDiagnoser final : public ParametricDiagnoser {
  public:
    CamillaBaseDiagnoser(TaskKind task, int n_learners, SkillMatrix skills,
                         HyperParams hyper = {});

    DiagnoserFamily family() const override { return DiagnoserFamily::CamillaBase; }
    const SkillMatrix* skills() const override { return &skills_; }
    AbilityProfile ability(int learner) const override;
    bool ability_in_unit_interval() const override { return true; }
    double sample_difficulty(int sample) const override;
    double sample_discrimination(int sample) const override;

    /// Mean over samples of the skill-masked mean of the sigmoid abilities.
    double overall_ability(int learner) const;

  protected:
    Tensor forward_scores(std::span<const int> learners,
                          std::span<const int> samples) const override;

  private:
    SkillMatrix skills_;
};

/// Latent-skill diagnoser: learned softmax skill masks, sigmoid ability /
/// difficulty / discrimination factors, and a non-negative MLP head.
class CamillaDiagnoser final : public ParametricDiagnoser {
  public:
    CamillaDiagnoser(TaskKind task, int n_learners, int n_samples,
                     HyperParams hyper = {});

    DiagnoserFamily family() const override { return DiagnoserFamily::Camilla; }
    AbilityProfile ability(int learner) const override;
    bool ability_in_unit_interval() const override { return true; }
    double sample_difficulty(int sample) const override;
    double sample_discrimination(int sample) const override;

    /// Ability on a sample subset: the learner's ability vector weighted by
    /// the subset's mean skill mask.
    double subset_ability(int learner, std::span<const int> samples) const;
    /// Skill mask row of one sample (softmax of its mask parameters).
    std::vector<double> skill_mask(int sample) const;

  protected:
    Tensor forward_scores(std::span<const int> learners,
                          std::span<const int> samples) const override;
    std::vector<Tensor> nonnegative_params() const override;
    bool open_interval_outputs() const override { return true; }
};

}  // namespace cogdiag
