#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cogdiag {

namespace detail {

struct TensorNode {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;
    std::vector<double> grad;  // allocated iff requires_grad
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backprop;  // pushes this->grad into parents

    size_t size() const { return values.size(); }
};

}  // namespace detail

/// Dense (rows x cols) matrix of doubles with reverse-mode differentiation
/// over a fixed op set. Copies share the underlying node (value semantics on
/// the handle, shared storage), which is what parameter tables need: the
/// optimizer and the forward graph see the same buffer.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor from(std::vector<double> values, int rows, int cols,
                       bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    int rows() const { return node_->rows; }
    int cols() const { return node_->cols; }
    int size() const { return node_->rows * node_->cols; }
    bool requires_grad() const { return node_->requires_grad; }

    double at(int r, int c) const;
    double& at(int r, int c);
    /// Value of a 1x1 tensor.
    double item() const;

    std::vector<double>& values() { return node_->values; }
    const std::vector<double>& values() const { return node_->values; }
    /// Gradient accumulator; only present on requires_grad tensors.
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void zero_grad();

    std::shared_ptr<detail::TensorNode> node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

  private:
    std::shared_ptr<detail::TensorNode> node_;
};

// Forward ops. Each validates shapes, refuses non-finite results, and records
// the computation graph when grad mode is on and an operand requires grad.
//
// Binary elementwise ops broadcast the right operand when it is a (1 x C) row,
// an (R x 1) column, or a (1 x 1) scalar against an (R x C) left operand.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor elementwise_mul(const Tensor& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);
/// Gathers table rows: (N x K) table + B indices -> (B x K).
Tensor row_lookup(const Tensor& table, std::vector<int> indices);
Tensor scalar_mul(const Tensor& a, double factor);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
/// Row-wise softmax; each output row sums to 1.
Tensor softmax_row(const Tensor& a);
/// (R x C) -> (R x 1) row sums.
Tensor sum_row(const Tensor& a);
/// Mean over all entries -> (1 x 1).
Tensor mean_all(const Tensor& a);
/// Mean binary cross entropy; target is treated as a constant.
Tensor bce_loss(const Tensor& pred, const Tensor& target);
/// Mean squared error; target is treated as a constant.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

/// Backpropagates from a scalar loss, filling grad accumulators of every
/// requires_grad tensor in its graph.
void backward(const Tensor& loss);

/// Disables graph recording for its lifetime (prediction / evaluation paths).
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool previous_;
};

bool grad_enabled();

double sigmoid_scalar(double x);
double softplus_scalar(double x);

}  // namespace cogdiag
