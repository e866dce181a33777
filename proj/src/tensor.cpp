#include "cogdiag/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace cogdiag {

namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<detail::TensorNode>;

NodePtr make_node(int rows, int cols) {
    auto n = std::make_shared<detail::TensorNode>();
    n->rows = rows;
    n->cols = cols;
    n->values.assign(static_cast<size_t>(rows) * cols, 0.0);
    return n;
}

void check_finite(const detail::TensorNode& n, const char* op) {
    for (double v : n.values)
        if (!std::isfinite(v))
            throw std::runtime_error(std::string("non-finite value produced by ") + op);
}

bool record_graph(std::initializer_list<const Tensor*> operands) {
    if (!g_grad_enabled) return false;
    for (const Tensor* t : operands)
        if (t->requires_grad()) return true;
    return false;
}

void ensure_grad_buffer(detail::TensorNode& n) {
    if (n.grad.size() != n.values.size()) n.grad.assign(n.values.size(), 0.0);
}

// Right-operand broadcast over the left operand's shape.
enum class Bcast { Same, Row, Col, Scalar };

Bcast classify_bcast(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() == b.rows() && a.cols() == b.cols()) return Bcast::Same;
    if (b.rows() == 1 && b.cols() == 1) return Bcast::Scalar;
    if (b.rows() == 1 && b.cols() == a.cols()) return Bcast::Row;
    if (b.cols() == 1 && b.rows() == a.rows()) return Bcast::Col;
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
}

size_t bcast_index(Bcast kind, int r, int c, int cols) {
    switch (kind) {
        case Bcast::Same: return static_cast<size_t>(r) * cols + c;
        case Bcast::Row: return static_cast<size_t>(c);
        case Bcast::Col: return static_cast<size_t>(r);
        case Bcast::Scalar: return 0;
    }
    return 0;
}

// out = f(a, b) with df/da, df/db supplied as lambdas over entries.
template <typename Fwd, typename DA, typename DB>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, DA da,
                 DB db) {
    Bcast kind = classify_bcast(a, b, name);
    NodePtr out = make_node(a.rows(), a.cols());
    const int rows = a.rows(), cols = a.cols();
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            size_t i = static_cast<size_t>(r) * cols + c;
            out->values[i] = fwd(av[i], bv[bcast_index(kind, r, c, cols)]);
        }
    check_finite(*out, name);
    if (record_graph({&a, &b})) {
        out->requires_grad = true;
        ensure_grad_buffer(*out);
        NodePtr an = a.node(), bn = b.node();
        out->parents = {an, bn};
        out->backprop = [an, bn, kind, rows, cols, da, db](detail::TensorNode& self) {
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) {
                    size_t i = static_cast<size_t>(r) * cols + c;
                    size_t j = bcast_index(kind, r, c, cols);
                    double g = self.grad[i];
                    if (an->requires_grad)
                        an->grad[i] += g * da(an->values[i], bn->values[j]);
                    if (bn->requires_grad)
                        bn->grad[j] += g * db(an->values[i], bn->values[j]);
                }
        };
    }
    return Tensor(out);
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus_scalar(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("Tensor: non-positive shape");
    NodePtr n = make_node(rows, cols);
    n->requires_grad = requires_grad;
    if (requires_grad) ensure_grad_buffer(*n);
    return Tensor(n);
}

Tensor Tensor::from(std::vector<double> values, int rows, int cols, bool requires_grad) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("Tensor: non-positive shape");
    if (values.size() != static_cast<size_t>(rows) * cols)
        throw std::invalid_argument("Tensor: value count does not match shape");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("Tensor: non-finite value");
    NodePtr n = std::make_shared<detail::TensorNode>();
    n->rows = rows;
    n->cols = cols;
    n->values = std::move(values);
    n->requires_grad = requires_grad;
    if (requires_grad) ensure_grad_buffer(*n);
    return Tensor(n);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from({v}, 1, 1, requires_grad);
}

double Tensor::at(int r, int c) const {
    return node_->values.at(static_cast<size_t>(r) * node_->cols + c);
}

double& Tensor::at(int r, int c) {
    return node_->values.at(static_cast<size_t>(r) * node_->cols + c);
}

double Tensor::item() const {
    if (size() != 1) throw std::invalid_argument("Tensor::item: not a 1x1 tensor");
    return node_->values[0];
}

std::vector<double>& Tensor::grad() {
    if (!node_->requires_grad)
        throw std::logic_error("Tensor::grad: tensor does not require grad");
    ensure_grad_buffer(*node_);
    return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
    if (!node_->requires_grad)
        throw std::logic_error("Tensor::grad: tensor does not require grad");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_->requires_grad) node_->grad.assign(node_->values.size(), 0.0);
}

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "elementwise_mul", [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions disagree (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
    const int R = a.rows(), K = a.cols(), C = b.cols();
    NodePtr out = make_node(R, C);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int r = 0; r < R; ++r)
        for (int k = 0; k < K; ++k) {
            double x = av[static_cast<size_t>(r) * K + k];
            if (x == 0.0) continue;
            for (int c = 0; c < C; ++c)
                out->values[static_cast<size_t>(r) * C + c] +=
                    x * bv[static_cast<size_t>(k) * C + c];
        }
    check_finite(*out, "matmul");
    if (record_graph({&a, &b})) {
        out->requires_grad = true;
        ensure_grad_buffer(*out);
        NodePtr an = a.node(), bn = b.node();
        out->parents = {an, bn};
        out->backprop = [an, bn, R, K, C](detail::TensorNode& self) {
            if (an->requires_grad)
                for (int r = 0; r < R; ++r)
                    for (int k = 0; k < K; ++k) {
                        double s = 0.0;
                        for (int c = 0; c < C; ++c)
                            s += self.grad[static_cast<size_t>(r) * C + c] *
                                 bn->values[static_cast<size_t>(k) * C + c];
                        an->grad[static_cast<size_t>(r) * K + k] += s;
                    }
            if (bn->requires_grad)
                for (int k = 0; k < K; ++k)
                    for (int c = 0; c < C; ++c) {
                        double s = 0.0;
                        for (int r = 0; r < R; ++r)
                            s += an->values[static_cast<size_t>(r) * K + k] *
                                 self.grad[static_cast<size_t>(r) * C + c];
                        bn->grad[static_cast<size_t>(k) * C + c] += s;
                    }
        };
    }
    return Tensor(out);
}

Tensor row_lookup(const Tensor& table, std::vector<int> indices) {
    const int N = table.rows(), K = table.cols();
    const int B = static_cast<int>(indices.size());
    if (B == 0) throw std::invalid_argument("row_lookup: empty index list");
    for (int idx : indices)
        if (idx < 0 || idx >= N)
            throw std::invalid_argument("row_lookup: index " + std::to_string(idx) +
                                        " out of range [0, " + std::to_string(N) + ")");
    NodePtr out = make_node(B, K);
    const auto& tv = table.values();
    for (int b = 0; b < B; ++b)
        std::copy_n(tv.begin() + static_cast<size_t>(indices[b]) * K, K,
                    out->values.begin() + static_cast<size_t>(b) * K);
    if (record_graph({&table})) {
        out->requires_grad = true;
        ensure_grad_buffer(*out);
        NodePtr tn = table.node();
        out->parents = {tn};
        out->backprop = [tn, idx = std::move(indices), K](detail::TensorNode& self) {
            if (!tn->requires_grad) return;
            for (size_t b = 0; b < idx.size(); ++b)
                for (int k = 0; k < K; ++k)
                    tn->grad[static_cast<size_t>(idx[b]) * K + k] +=
                        self.grad[b * K + k];
        };
    }
    return Tensor(out);
}

Tensor scalar_mul(const Tensor& a, double factor) {
    if (!std::isfinite(factor)) throw std::invalid_argument("scalar_mul: non-finite factor");
    NodePtr out = make_node(a.rows(), a.cols());
    const auto& av = a.values();
    for (size_t i = 0; i < av.size(); ++i) out->values[i] = av[i] * factor;
    check_finite(*out, "scalar_mul");
    if (record_graph({&a})) {
        out->requires_grad = true;
        ensure_grad_buffer(*out);
        NodePtr an = a.node();
        out->parents = {an};
        out->backprop = [an, factor](detail::TensorNode& self) {
            if (!an->requires_grad) return;
            for (size_t i = 0; i < self.grad.size(); ++i)
                an->grad[i] += self.grad[i] * factor;
        };
    }
    return Tensor(out);
}

Tensor sigmoid(const Tensor& a) {
    NodePtr out = make_node(a.rows(), a.cols());
    const auto& av = a.values();
    for (size_t i = 0; i < av.size(); ++i) out->values[i] = sigmoid_scalar(av[i]);
    check_finite(*out, "sigmoid");
    if (record_graph({&a})) {
        out->requires_grad = true;
        ensure_grad_buffer(*out);
        NodePtr an = a.node();
        out->parents = {an};
        out->backprop = [an](detail::TensorNode& self) {
            if (!an->requires_grad) return;
            for (size_t i = 0; i < self.grad.size(); ++i) {
                double s = self.values[i];
                an->grad[i] += self.grad[i] * s * (1.0 - s);
            }
        };
    }
    return Tensor(out);
}

Tensor softplus(const Tensor& a) {
    NodePtr out = make_node(a.rows(), a.cols());
    const auto& av = a.values();
    for (size_t i = 0; i < av.size(); ++i) out->values[i] = softplus_scalar(av[i]);
    check_finite(*out, "softplus");
    if (record_graph({&a})) {
        out->requires_grad = true;
        ensure_grad_buffer(*out);
        NodePtr an = a.node();
        out->parents = {an};
        out->backprop = [an](detail::TensorNode& self) {
            if (!an->requires_grad) return;
            for (size_t i = 0; i < self.grad.size(); ++i)
                an->grad[i] += self.grad[i] * sigmoid_scalar(an->values[i]);
        };
    }
    return Tensor(out);
}

Tensor softmax_row(const Tensor& a) {
    const int R = a.rows(), C = a.cols();
    NodePtr out = make_node(R, C);
    const auto& av = a.values();
    for (int r = 0; r < R; ++r) {
        size_t base = static_cast<size_t>(r) * C;
        double mx = av[base];
        for (int c = 1; c < C; ++c) mx = std::max(mx, av[base + c]);
        double denom = 0.0;
        for (int c = 0; c < C; ++c) {
            out->values[base + c] = std::exp(av[base + c] - mx);
            denom += out->values[base + c];
        }
        for (int c = 0; c < C; ++c) out->values[base + c] /= denom;
    }
    check_finite(*out, "softmax_row");
    if (record_graph({&a})) {
        out->requires_grad = true;
        ensure_grad_buffer(*out);
        NodePtr an = a.node();
        out->parents = {an};
        out->backprop = [an, R, C](detail::TensorNode& self) {
            if (!an->requires_grad) return;
            for (int r = 0; r < R; ++r) {
                size_t base = static_cast<size_t>(r) * C;
                double dot = 0.0;
                for (int c = 0; c < C; ++c) dot += self.grad[base + c] * self.values[base + c];
                for (int c = 0; c < C; ++c)
                    an->grad[base + c] +=
                        self.values[base + c] * (self.grad[base + c] - dot);
            }
        };
    }
    return Tensor(out);
}

Tensor sum_row(const Tensor& a) {
    const int R = a.rows(), C = a.cols();
    NodePtr out = make_node(R, 1);
    const auto& av = a.values();
    for (int r = 0; r < R; ++r) {
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += av[static_cast<size_t>(r) * C + c];
        out->values[static_cast<size_t>(r)] = s;
    }
    check_finite(*out, "sum_row");
    if (record_graph({&a})) {
        out->requires_grad = true;
        ensure_grad_buffer(*out);
        NodePtr an = a.node();
        out->parents = {an};
        out->backprop = [an, R, C](detail::TensorNode& self) {
            if (!an->requires_grad) return;
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c)
                    an->grad[static_cast<size_t>(r) * C + c] += self.grad[static_cast<size_t>(r)];
        };
    }
    return Tensor(out);
}

Tensor mean_all(const Tensor& a) {
    NodePtr out = make_node(1, 1);
    const auto& av = a.values();
    double s = 0.0;
    for (double v : av) s += v;
    out->values[0] = s / static_cast<double>(av.size());
    check_finite(*out, "mean_all");
    if (record_graph({&a})) {
        out->requires_grad = true;
        ensure_grad_buffer(*out);
        NodePtr an = a.node();
        out->parents = {an};
        out->backprop = [an](detail::TensorNode& self) {
            if (!an->requires_grad) return;
            double g = self.grad[0] / static_cast<double>(an->values.size());
            for (size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
        };
    }
    return Tensor(out);
}

namespace {

constexpr double kProbFloor = 1e-12;

void check_loss_operands(const Tensor& pred, const Tensor& target, const char* name) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument(std::string(name) + ": shape mismatch");
    if (target.requires_grad())
        throw std::invalid_argument(std::string(name) +
                                    ": target must not require grad");
}

}  // namespace

Tensor bce_loss(const Tensor& pred, const Tensor& target) {
    check_loss_operands(pred, target, "bce_loss");
    const auto& pv = pred.values();
    const auto& yv = target.values();
    const double n = static_cast<double>(pv.size());
    NodePtr out = make_node(1, 1);
    double total = 0.0;
    for (size_t i = 0; i < pv.size(); ++i) {
        double p = std::clamp(pv[i], kProbFloor, 1.0 - kProbFloor);
        total += -(yv[i] * std::log(p) + (1.0 - yv[i]) * std::log(1.0 - p));
    }
    out->values[0] = total / n;
    check_finite(*out, "bce_loss");
    if (record_graph({&pred})) {
        out->requires_grad = true;
        ensure_grad_buffer(*out);
        NodePtr pn = pred.node();
        NodePtr yn = target.node();
        out->parents = {pn};
        out->backprop = [pn, yn, n](detail::TensorNode& self) {
            if (!pn->requires_grad) return;
            for (size_t i = 0; i < pn->grad.size(); ++i) {
                double p = std::clamp(pn->values[i], kProbFloor, 1.0 - kProbFloor);
                pn->grad[i] += self.grad[0] * (p - yn->values[i]) / (p * (1.0 - p)) / n;
            }
        };
    }
    return Tensor(out);
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    check_loss_operands(pred, target, "mse_loss");
    const auto& pv = pred.values();
    const auto& yv = target.values();
    const double n = static_cast<double>(pv.size());
    NodePtr out = make_node(1, 1);
    double total = 0.0;
    for (size_t i = 0; i < pv.size(); ++i) {
        double d = pv[i] - yv[i];
        total += d * d;
    }
    out->values[0] = total / n;
    check_finite(*out, "mse_loss");
    if (record_graph({&pred})) {
        out->requires_grad = true;
        ensure_grad_buffer(*out);
        NodePtr pn = pred.node();
        NodePtr yn = target.node();
        out->parents = {pn};
        out->backprop = [pn, yn, n](detail::TensorNode& self) {
            if (!pn->requires_grad) return;
            for (size_t i = 0; i < pn->grad.size(); ++i)
                pn->grad[i] +=
                    self.grad[0] * 2.0 * (pn->values[i] - yn->values[i]) / n;
        };
    }
    return Tensor(out);
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw std::invalid_argument("backward: loss must be a 1x1 tensor");
    if (!loss.requires_grad())
        throw std::invalid_argument("backward: loss is detached from any graph");

    // Post-order DFS (iterative; graphs can be deep for long chains).
    std::vector<detail::TensorNode*> order;
    std::unordered_set<detail::TensorNode*> visited;
    std::vector<std::pair<detail::TensorNode*, size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::TensorNode* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second)
                stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (detail::TensorNode* n : order) ensure_grad_buffer(*n);
    loss.node()->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop) (*it)->backprop(**it);
}

}  // namespace cogdiag
