#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cogdiag/diagnosers.hpp"
#include "cogdiag/metrics.hpp"
#include "cogdiag/optim.hpp"

namespace cogdiag {

double Diagnoser::predict_one(int learner, int sample) const {
    std::pair<int, int> pair{learner, sample};
    return predict({&pair, 1})[0];
}

double Diagnoser::sample_difficulty(int) const {
    return std::numeric_limits<double>::quiet_NaN();
}

double Diagnoser::sample_discrimination(int) const {
    return std::numeric_limits<double>::quiet_NaN();
}

namespace {

void validate_triple_indices(const ResponseMatrix& data, std::span<const int> indices,
                             const char* which) {
    for (int i : indices)
        if (i < 0 || i >= data.n_triples())
            throw std::invalid_argument(std::string("fit: ") + which +
                                        " triple index out of range");
}

constexpr double kOutputFloor = 1e-12;

}  // namespace

ParametricDiagnoser::ParametricDiagnoser(TaskKind task, int n_learners, int n_samples,
                                         HyperParams hyper)
    : task_(task), n_learners_(n_learners), n_samples_(n_samples), hyper_(hyper) {
    if (n_learners <= 0 || n_samples <= 0)
        throw std::invalid_argument("diagnoser: counts must be positive");
}

Tensor& ParametricDiagnoser::register_param(const std::string& name, int rows, int cols,
                                            int fan_in) {
    params_.push_back({name, Tensor::zeros(rows, cols, /*requires_grad=*/true), fan_in,
                       /*zero_init=*/false});
    return params_.back().tensor;
}

Tensor& ParametricDiagnoser::register_bias(const std::string& name, int rows, int cols) {
    params_.push_back({name, Tensor::zeros(rows, cols, /*requires_grad=*/true), 1,
                       /*zero_init=*/true});
    return params_.back().tensor;
}

Tensor& ParametricDiagnoser::param(const std::string& name) {
    for (auto& spec : params_)
        if (spec.name == name) return spec.tensor;
    throw std::logic_error("unknown parameter: " + name);
}

const Tensor& ParametricDiagnoser::param(const std::string& name) const {
    for (const auto& spec : params_)
        if (spec.name == name) return spec.tensor;
    throw std::logic_error("unknown parameter: " + name);
}

void ParametricDiagnoser::initialize_parameters(uint64_t seed) {
    std::mt19937_64 rng(seed);
    init_values(rng);
}

void ParametricDiagnoser::init_values(std::mt19937_64& rng) {
    for (auto& spec : params_) {
        if (spec.zero_init) {
            std::fill(spec.tensor.values().begin(), spec.tensor.values().end(), 0.0);
        } else {
            double s = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
            std::uniform_real_distribution<double> dist(-s, s);
            for (double& v : spec.tensor.values()) v = dist(rng);
        }
        spec.tensor.zero_grad();
    }
    fitted_ = true;
}

std::vector<std::pair<std::string, Tensor>> ParametricDiagnoser::named_parameters()
    const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(params_.size());
    for (const auto& spec : params_) out.emplace_back(spec.name, spec.tensor);
    return out;
}

Tensor ParametricDiagnoser::training_loss(std::span<const int> learners,
                                          std::span<const int> samples,
                                          const Tensor& targets) const {
    Tensor scores = forward_scores(learners, samples);
    return task_ == TaskKind::Classification ? bce_loss(scores, targets)
                                             : mse_loss(scores, targets);
}

std::vector<double> ParametricDiagnoser::scores_for(std::span<const int> learners,
                                                    std::span<const int> samples) const {
    NoGradGuard guard;
    Tensor scores = forward_scores(learners, samples);
    return scores.values();
}

double ParametricDiagnoser::loss_value(const ResponseMatrix& data,
                                       std::span<const int> triples) const {
    NoGradGuard guard;
    std::vector<int> learners, samples;
    std::vector<double> targets;
    learners.reserve(triples.size());
    samples.reserve(triples.size());
    targets.reserve(triples.size());
    for (int i : triples) {
        const Triple& t = data.triple(i);
        learners.push_back(t.learner);
        samples.push_back(t.sample);
        targets.push_back(t.score);
    }
    Tensor y = Tensor::from(std::move(targets), static_cast<int>(triples.size()), 1);
    return training_loss(learners, samples, y).item();
}

double ParametricDiagnoser::accumulate_gradients(const ResponseMatrix& data,
                                                 std::span<const int> triples) {
    std::vector<int> learners, samples;
    std::vector<double> targets;
    learners.reserve(triples.size());
    samples.reserve(triples.size());
    targets.reserve(triples.size());
    for (int i : triples) {
        const Triple& t = data.triple(i);
        learners.push_back(t.learner);
        samples.push_back(t.sample);
        targets.push_back(t.score);
    }
    Tensor y = Tensor::from(std::move(targets), static_cast<int>(triples.size()), 1);
    Tensor loss = training_loss(learners, samples, y);
    backward(loss);
    return loss.item();
}

std::vector<std::vector<double>> ParametricDiagnoser::snapshot_values() const {
    std::vector<std::vector<double>> snapshot;
    snapshot.reserve(params_.size());
    for (const auto& spec : params_) snapshot.push_back(spec.tensor.values());
    return snapshot;
}

void ParametricDiagnoser::restore_values(const std::vector<std::vector<double>>& snapshot) {
    for (size_t i = 0; i < params_.size(); ++i) params_[i].tensor.values() = snapshot[i];
}

double ParametricDiagnoser::validation_metric(const ResponseMatrix& data,
                                              std::span<const int> validation,
                                              bool use_auc) const {
    std::vector<int> learners, samples;
    std::vector<double> targets;
    for (int i : validation) {
        const Triple& t = data.triple(i);
        learners.push_back(t.learner);
        samples.push_back(t.sample);
        targets.push_back(t.score);
    }
    std::vector<double> preds = scores_for(learners, samples);
    return use_auc ? auc(preds, targets) : rmse(preds, targets);
}

FitSummary ParametricDiagnoser::fit(const ResponseMatrix& data,
                                    std::span<const int> train,
                                    std::span<const int> validation,
                                    const TrainConfig& config) {
    if (train.empty()) throw std::invalid_argument("fit: empty training set");
    validate_triple_indices(data, train, "train");
    validate_triple_indices(data, validation, "validation");
    if (data.n_learners() != n_learners_ || data.n_samples() != n_samples_)
        throw std::invalid_argument("fit: dataset shape does not match the model");
    if (data.task() != task_)
        throw std::invalid_argument("fit: dataset task does not match the model");
    if (config.batch_size <= 0) throw std::invalid_argument("fit: batch size must be positive");
    if (config.max_epochs < 0) throw std::invalid_argument("fit: negative epoch count");

    // One generator drives both the parameter draws and the epoch shuffles.
    std::mt19937_64 rng(config.seed);
    init_values(rng);

    FitSummary summary;
    bool use_auc = false;
    if (!validation.empty()) {
        if (task_ == TaskKind::Classification) {
            bool has_pos = false, has_neg = false;
            for (int i : validation)
                (data.triple(i).score == 1.0 ? has_pos : has_neg) = true;
            use_auc = has_pos && has_neg;
        }
        summary.val_metric_name = use_auc ? "auc" : "rmse";
    }

    std::vector<Tensor> param_tensors;
    for (const auto& [name, tensor] : named_parameters()) param_tensors.push_back(tensor);
    AdamOptimizer optimizer(std::move(param_tensors), AdamConfig{.lr = config.lr});
    std::vector<Tensor> constrained = nonnegative_params();

    std::vector<int> order(train.begin(), train.end());
    std::vector<int> batch_learners, batch_samples;
    std::vector<double> batch_targets;

    double best_metric = 0.0;
    int best_epoch = -1;
    int epochs_since_best = 0;
    std::vector<std::vector<double>> best_state;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            size_t end = std::min(order.size(), start + config.batch_size);
            batch_learners.clear();
            batch_samples.clear();
            batch_targets.clear();
            for (size_t i = start; i < end; ++i) {
                const Triple& t = data.triple(order[i]);
                batch_learners.push_back(t.learner);
                batch_samples.push_back(t.sample);
                batch_targets.push_back(t.score);
            }
            Tensor targets = Tensor::from(batch_targets,
                                          static_cast<int>(batch_targets.size()), 1);
            Tensor loss = training_loss(batch_learners, batch_samples, targets);
            double loss_value = loss.item();
            if (!std::isfinite(loss_value))
                throw std::runtime_error("fit: non-finite loss at epoch " +
                                         std::to_string(epoch));
            backward(loss);
            optimizer.step();
            project_nonnegative(constrained);
            if (config.on_step) config.on_step(*this);
            epoch_loss += loss_value * static_cast<double>(end - start);
        }
        summary.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
        summary.epochs_run = epoch + 1;

        if (!validation.empty()) {
            double metric = validation_metric(data, validation, use_auc);
            summary.val_metric.push_back(metric);
            bool improved = best_epoch < 0 ||
                            (use_auc ? metric > best_metric : metric < best_metric);
            if (improved) {
                best_metric = metric;
                best_epoch = epoch;
                best_state = snapshot_values();
                epochs_since_best = 0;
            } else if (++epochs_since_best >= config.patience) {
                break;
            }
        }
    }

    if (!validation.empty() && best_epoch >= 0) {
        restore_values(best_state);
        summary.best_epoch = best_epoch;
    } else {
        summary.best_epoch = summary.epochs_run - 1;
    }
    if (summary.epochs_run > 0 && config.lr > 0.0) canonicalize();
    return summary;
}

std::vector<double> ParametricDiagnoser::predict(
    std::span<const std::pair<int, int>> pairs) const {
    if (!fitted_) throw std::logic_error("predict: model has not been fitted");
    std::vector<int> learners, samples;
    learners.reserve(pairs.size());
    samples.reserve(pairs.size());
    for (const auto& [learner, sample] : pairs) {
        if (learner < 0 || learner >= n_learners_)
            throw std::invalid_argument("predict: learner index out of range");
        if (sample < 0 || sample >= n_samples_)
            throw std::invalid_argument("predict: sample index out of range");
        learners.push_back(learner);
        samples.push_back(sample);
    }
    if (pairs.empty()) return {};
    std::vector<double> out = scores_for(learners, samples);
    if (open_interval_outputs())
        for (double& p : out) p = std::clamp(p, kOutputFloor, 1.0 - kOutputFloor);
    return out;
}

void ParametricDiagnoser::save_state(nlohmann::json& state) const {
    nlohmann::json tables = nlohmann::json::object();
    for (const auto& spec : params_) {
        tables[spec.name] = {{"rows", spec.tensor.rows()},
                             {"cols", spec.tensor.cols()},
                             {"values", spec.tensor.values()}};
    }
    state["params"] = std::move(tables);
}

void ParametricDiagnoser::load_state(const nlohmann::json& state) {
    const auto& tables = state.at("params");
    for (auto& spec : params_) {
        const auto& entry = tables.at(spec.name);
        if (entry.at("rows").get<int>() != spec.tensor.rows() ||
            entry.at("cols").get<int>() != spec.tensor.cols())
            throw std::invalid_argument("checkpoint: shape mismatch for " + spec.name);
        std::vector<double> values = entry.at("values").get<std::vector<double>>();
        if (values.size() != spec.tensor.values().size())
            throw std::invalid_argument("checkpoint: size mismatch for " + spec.name);
        spec.tensor.values() = std::move(values);
        spec.tensor.zero_grad();
    }
    fitted_ = true;
}

}  // namespace cogdiag
