#include "cogdiag/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace cogdiag {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    if (params_.empty()) throw std::invalid_argument("AdamOptimizer: no parameters");
    if (config_.lr < 0.0) throw std::invalid_argument("AdamOptimizer: negative lr");
    first_moment_.reserve(params_.size());
    second_moment_.reserve(params_.size());
    for (const Tensor& p : params_) {
        if (!p.defined() || !p.requires_grad())
            throw std::invalid_argument("AdamOptimizer: parameter does not require grad");
        first_moment_.emplace_back(p.values().size(), 0.0);
        second_moment_.emplace_back(p.values().size(), 0.0);
    }
}

void AdamOptimizer::step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        auto& values = params_[pi].values();
        auto& grad = params_[pi].grad();
        auto& m = first_moment_[pi];
        auto& v = second_moment_[pi];
        if (grad.size() != values.size())
            throw std::logic_error("AdamOptimizer: gradient buffer missing");
        for (size_t i = 0; i < values.size(); ++i) {
            double g = grad[i];
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
            double m_hat = m[i] / bc1;
            double v_hat = v[i] / bc2;
            values[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
        params_[pi].zero_grad();
    }
}

void project_nonnegative(Tensor& t) {
    for (double& v : t.values())
        if (v < 0.0) v = 0.0;
}

void project_nonnegative(std::vector<Tensor>& tensors) {
    for (Tensor& t : tensors) project_nonnegative(t);
}

}  // namespace cogdiag
