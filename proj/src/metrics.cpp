#include "cogdiag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cogdiag {

namespace {

void require_nonempty_same_size(std::span<const double> a, std::span<const double> b,
                                const char* name) {
    if (a.empty()) throw std::invalid_argument(std::string(name) + ": empty input");
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(name) + ": length mismatch");
}

void require_binary(std::span<const double> labels, const char* name) {
    for (double y : labels)
        if (y != 0.0 && y != 1.0)
            throw std::invalid_argument(std::string(name) + ": labels must be 0 or 1");
}

/// 1-based average ranks (ties share the mean of their rank run).
std::vector<double> average_ranks(std::span<const double> x) {
    const size_t n = x.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

bool all_tied(std::span<const double> x) {
    for (double v : x)
        if (v != x[0]) return false;
    return true;
}

}  // namespace

double accuracy(std::span<const double> preds, std::span<const double> labels,
                double threshold) {
    require_nonempty_same_size(preds, labels, "accuracy");
    require_binary(labels, "accuracy");
    size_t hits = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        double predicted = preds[i] >= threshold ? 1.0 : 0.0;
        if (predicted == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double macro_f1(std::span<const double> preds, std::span<const double> labels,
                double threshold) {
    require_nonempty_same_size(preds, labels, "macro_f1");
    require_binary(labels, "macro_f1");
    double f1_sum = 0.0;
    for (int cls = 0; cls <= 1; ++cls) {
        long tp = 0, fp = 0, fn = 0;
        for (size_t i = 0; i < preds.size(); ++i) {
            int predicted = preds[i] >= threshold ? 1 : 0;
            int actual = labels[i] == 1.0 ? 1 : 0;
            if (predicted == cls && actual == cls) ++tp;
            else if (predicted == cls && actual != cls) ++fp;
            else if (predicted != cls && actual == cls) ++fn;
        }
        double denom = static_cast<double>(2 * tp + fp + fn);
        f1_sum += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
    }
    return f1_sum / 2.0;
}

double auc(std::span<const double> scores, std::span<const double> labels) {
    require_nonempty_same_size(scores, labels, "auc");
    require_binary(labels, "auc");
    long n_pos = 0;
    for (double y : labels) n_pos += y == 1.0;
    long n_neg = static_cast<long>(labels.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("auc: needs at least one positive and one negative");
    std::vector<double> ranks = average_ranks(scores);
    double pos_rank_sum = 0.0;
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == 1.0) pos_rank_sum += ranks[i];
    double u = pos_rank_sum -
               static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double rmse(std::span<const double> preds, std::span<const double> targets) {
    require_nonempty_same_size(preds, targets, "rmse");
    double total = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        double d = preds[i] - targets[i];
        total += d * d;
    }
    return std::sqrt(total / static_cast<double>(preds.size()));
}

double mae(std::span<const double> preds, std::span<const double> targets) {
    require_nonempty_same_size(preds, targets, "mae");
    double total = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) total += std::abs(preds[i] - targets[i]);
    return total / static_cast<double>(preds.size());
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
    require_nonempty_same_size(x, y, "kendall_tau");
    if (x.size() < 2) throw std::invalid_argument("kendall_tau: needs length >= 2");
    if (all_tied(x) || all_tied(y))
        throw std::invalid_argument("kendall_tau: undefined for an all-tied vector");
    // Pair classification: ties in both coordinates drop out of both factors.
    double concordant = 0.0, discordant = 0.0, ties_x_only = 0.0, ties_y_only = 0.0;
    const size_t n = x.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            double dx = x[i] - x[j];
            double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0) ties_x_only += 1.0;
            else if (dy == 0.0) ties_y_only += 1.0;
            else if (dx * dy > 0.0) concordant += 1.0;
            else discordant += 1.0;
        }
    double fx = concordant + discordant + ties_x_only;
    double fy = concordant + discordant + ties_y_only;
    if (fx == 0.0 || fy == 0.0)
        throw std::invalid_argument("kendall_tau: undefined (no untied pairs)");
    return (concordant - discordant) / std::sqrt(fx * fy);
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    require_nonempty_same_size(x, y, "spearman_rho");
    if (x.size() < 2) throw std::invalid_argument("spearman_rho: needs length >= 2");
    if (all_tied(x) || all_tied(y))
        throw std::invalid_argument("spearman_rho: undefined for an all-tied vector");
    std::vector<double> rx = average_ranks(x);
    std::vector<double> ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (size_t i = 0; i < rx.size(); ++i) {
        mean_x += rx[i];
        mean_y += ry[i];
    }
    mean_x /= n;
    mean_y /= n;
    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (size_t i = 0; i < rx.size(); ++i) {
        double dx = rx[i] - mean_x;
        double dy = ry[i] - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    return cov / std::sqrt(var_x * var_y);
}

double jaccard_response_similarity(std::span<const double> responses_a,
                                   std::span<const double> responses_b) {
    require_nonempty_same_size(responses_a, responses_b, "jaccard_response_similarity");
    require_binary(responses_a, "jaccard_response_similarity");
    require_binary(responses_b, "jaccard_response_similarity");
    size_t agree = 0;
    for (size_t i = 0; i < responses_a.size(); ++i)
        if (responses_a[i] == responses_b[i]) ++agree;
    return static_cast<double>(agree) / static_cast<double>(responses_a.size());
}

MetricBundle evaluate_predictions(TaskKind task, std::span<const double> preds,
                                  std::span<const double> targets) {
    MetricBundle bundle;
    bundle.task = task;
    bundle.rmse = rmse(preds, targets);
    if (task == TaskKind::Classification) {
        bundle.acc = accuracy(preds, targets);
        bundle.f1_macro = macro_f1(preds, targets);
        bool has_pos = false, has_neg = false;
        for (double y : targets) (y == 1.0 ? has_pos : has_neg) = true;
        bundle.auc = (has_pos && has_neg)
                         ? auc(preds, targets)
                         : std::numeric_limits<double>::quiet_NaN();
    } else {
        bundle.mae = mae(preds, targets);
    }
    return bundle;
}

RankCorrelation rank_correlation(std::span<const double> x, std::span<const double> y) {
    RankCorrelation rc;
    rc.kendall_tau = kendall_tau(x, y);
    rc.spearman_rho = spearman_rho(x, y);
    rc.n = static_cast<int>(x.size());
    return rc;
}

double mean_of(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean_of: empty input");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    double m = mean_of(values);
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size() - 1));
}

namespace {

// Two-sided 97.5% Student-t critical values by degrees of freedom (1..30).
constexpr double kT975[] = {
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
    2.2621571628,  // 9 dof: ten runs per experiment
    2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
    2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};

double t975(size_t dof) {
    if (dof == 0) return 0.0;
    if (dof <= 30) return kT975[dof - 1];
    return 1.96;
}

}  // namespace

ConfidenceInterval mean_ci95(std::span<const double> values) {
    ConfidenceInterval ci;
    ci.mean = mean_of(values);
    if (values.size() < 2) {
        ci.low = ci.high = ci.mean;
        return ci;
    }
    double half = t975(values.size() - 1) * sample_std(values) /
                  std::sqrt(static_cast<double>(values.size()));
    ci.low = ci.mean - half;
    ci.high = ci.mean + half;
    return ci;
}

}  // namespace cogdiag
