#pragma once

#include <span>
#include <vector>

#include "cogdiag/dataset.hpp"

namespace cogdiag {

/// Fraction of (pred >= threshold) == label. Labels must be exactly 0 or 1.
double accuracy(std::span<const double> preds, std::span<const double> labels,
                double threshold = 0.5);

/// Unweighted mean of per-class F1 over classes {0, 1}. A class absent from
/// both predictions and labels contributes F1 = 0.
double macro_f1(std::span<const double> preds, std::span<const double> labels,
                double threshold = 0.5);

/// Probability that a random positive outranks a random negative, ties
/// counting one half (rank-statistic form). Needs both classes present.
double auc(std::span<const double> scores, std::span<const double> labels);

double rmse(std::span<const double> preds, std::span<const double> targets);
double mae(std::span<const double> preds, std::span<const double> targets);

/// Tie-corrected Kendall tau-b. Throws when either vector is all-tied.
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks. Throws when either vector is all-tied.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// Fraction of samples on which two learners' binary responses agree.
double jaccard_response_similarity(std::span<const double> responses_a,
                                   std::span<const double> responses_b);

/// Metric set reported per experiment run; which fields are meaningful
/// depends on the task.
struct MetricBundle {
    TaskKind task = TaskKind::Classification;
    double acc = 0.0;
    double f1_macro = 0.0;
    double auc = 0.0;   // NaN when the test labels are single-class
    double rmse = 0.0;
    double mae = 0.0;   // regression only
};

MetricBundle evaluate_predictions(TaskKind task, std::span<const double> preds,
                                  std::span<const double> targets);

struct RankCorrelation {
    double kendall_tau = 0.0;
    double spearman_rho = 0.0;
    int n = 0;
};

RankCorrelation rank_correlation(std::span<const double> x, std::span<const double> y);

/// Two-sided 95% confidence interval of the mean from Student's t; the
/// critical value is pinned for n = 10 (9 degrees of freedom).
struct ConfidenceInterval {
    double mean = 0.0;
    double low = 0.0;
    double high = 0.0;
};

ConfidenceInterval mean_ci95(std::span<const double> values);

double mean_of(std::span<const double> values);
double sample_std(std::span<const double> values);

}  // namespace cogdiag
