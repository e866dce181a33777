#pragma once

#include <cstdint>
#include <vector>

#include "cogdiag/tensor.hpp"

namespace cogdiag {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. step() consumes the
/// accumulated gradients and zeroes them.
class AdamOptimizer {
  public:
    AdamOptimizer(std::vector<Tensor> params, AdamConfig config);

    void step();
    int64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return config_; }

  private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> first_moment_;
    std::vector<std::vector<double>> second_moment_;
    AdamConfig config_;
    int64_t step_count_ = 0;
};

/// Clamps every entry to max(entry, 0). Idempotent.
void project_nonnegative(Tensor& t);
void project_nonnegative(std::vector<Tensor>& tensors);

}  // namespace cogdiag
