#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cogdiag/metrics.hpp"
#include "oracles.hpp"

using namespace cogdiag;

namespace {

std::vector<double> random_scores(size_t n, std::mt19937_64& rng, bool quantized = false) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> out(n);
    // Quantizing forces ties, which is where the tie-handling diverges.
    for (double& v : out)
        v = quantized ? std::round(dist(rng) * 8.0) / 8.0 : dist(rng);
    return out;
}

std::vector<double> random_labels(size_t n, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    std::vector<double> out(n);
    for (double& v : out) v = coin(rng) ? 1.0 : 0.0;
    return out;
}

bool has_both_classes(const std::vector<double>& labels) {
    bool pos = false, neg = false;
    for (double y : labels) (y == 1.0 ? pos : neg) = true;
    return pos && neg;
}

bool not_all_tied(const std::vector<double>& v) {
    for (double x : v)
        if (x != v[0]) return true;
    return false;
}

}  // namespace

TEST_CASE("accuracy examples") {
    CHECK(accuracy(std::vector<double>{0.9, 0.1, 0.9}, std::vector<double>{1, 1, 1}) ==
          doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(accuracy(std::vector<double>{1, 0, 1}, std::vector<double>{1, 0, 1}) == 1.0);
    CHECK_THROWS_AS(accuracy({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(accuracy(std::vector<double>{0.5}, std::vector<double>{0.3}),
                    std::invalid_argument);
}

TEST_CASE("macro F1 examples") {
    CHECK(macro_f1(std::vector<double>{1, 0, 1, 0}, std::vector<double>{1, 0, 1, 0}) == 1.0);
    // Everything predicted positive, labels half and half: mean of 2/3 and 0.
    CHECK(macro_f1(std::vector<double>{1, 1, 1, 1}, std::vector<double>{1, 1, 0, 0}) ==
          doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("macro F1 is symmetric under a class flip") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> preds = random_labels(20, rng);
        std::vector<double> labels = random_labels(20, rng);
        std::vector<double> preds_flipped, labels_flipped;
        for (double p : preds) preds_flipped.push_back(1.0 - p);
        for (double y : labels) labels_flipped.push_back(1.0 - y);
        CHECK(macro_f1(preds, labels) ==
              doctest::Approx(macro_f1(preds_flipped, labels_flipped)).epsilon(1e-12));
    }
}

TEST_CASE("AUC examples") {
    CHECK(auc(std::vector<double>{0.9, 0.1}, std::vector<double>{1, 0}) == 1.0);
    // 3 concordant of 4 positive/negative pairs.
    CHECK(auc(std::vector<double>{0.8, 0.6, 0.4, 0.2}, std::vector<double>{1, 0, 1, 0}) ==
          doctest::Approx(0.75).epsilon(1e-12));
    CHECK(auc(std::vector<double>{0.5, 0.5, 0.5}, std::vector<double>{1, 0, 1}) == 0.5);
    CHECK_THROWS_AS(auc(std::vector<double>{0.4, 0.6}, std::vector<double>{1, 1}),
                    std::invalid_argument);
}

TEST_CASE("AUC is invariant under strictly increasing transforms") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> scores = random_scores(25, rng, trial % 2 == 0);
        std::vector<double> labels = random_labels(25, rng);
        if (!has_both_classes(labels)) continue;
        std::vector<double> warped;
        for (double s : scores) warped.push_back(std::exp(3.0 * s) + 1.0);
        CHECK(auc(scores, labels) == doctest::Approx(auc(warped, labels)).epsilon(1e-12));
    }
}

TEST_CASE("error metric examples") {
    std::vector<double> same{0.3, 0.8};
    CHECK(rmse(same, same) == 0.0);
    CHECK(mae(same, same) == 0.0);
    std::vector<double> zeros{0, 0}, targets{3, 4};
    CHECK(mae(zeros, targets) == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(rmse(zeros, targets) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
}

TEST_CASE("RMSE dominates MAE") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a = random_scores(15, rng);
        std::vector<double> b = random_scores(15, rng);
        CHECK(rmse(a, b) >= mae(a, b) - 1e-15);
    }
}

TEST_CASE("Kendall tau examples") {
    std::vector<double> x{1, 2, 3, 4};
    CHECK(kendall_tau(x, x) == 1.0);
    std::vector<double> reversed{4, 3, 2, 1};
    CHECK(kendall_tau(x, reversed) == -1.0);
    std::vector<double> y{1, 3, 2, 4};
    CHECK(kendall_tau(x, y) == doctest::Approx(4.0 / 6).epsilon(1e-12));
    CHECK_THROWS_AS(kendall_tau(std::vector<double>{1}, std::vector<double>{1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(kendall_tau(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
                    std::invalid_argument);
}

TEST_CASE("Spearman examples") {
    std::vector<double> x{0.1, 0.5, 0.9};
    std::vector<double> warped;
    for (double v : x) warped.push_back(std::exp(v));
    CHECK(spearman_rho(x, warped) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> negated;
    for (double v : x) negated.push_back(-v);
    CHECK(spearman_rho(x, negated) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) ==
          doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("rank correlations are symmetric and transform-invariant") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> x = random_scores(20, rng, true);
        std::vector<double> y = random_scores(20, rng, true);
        if (!not_all_tied(x) || !not_all_tied(y)) continue;
        CHECK(kendall_tau(x, y) == doctest::Approx(kendall_tau(y, x)).epsilon(1e-12));
        CHECK(spearman_rho(x, y) == doctest::Approx(spearman_rho(y, x)).epsilon(1e-12));
        std::vector<double> warped;
        for (double v : x) warped.push_back(2.0 * v * v * v + 5.0);  // increasing on [0,1]
        CHECK(kendall_tau(warped, y) == doctest::Approx(kendall_tau(x, y)).epsilon(1e-12));
        CHECK(spearman_rho(warped, y) == doctest::Approx(spearman_rho(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("response agreement examples") {
    std::vector<double> a{1, 1, 0};
    CHECK(jaccard_response_similarity(a, a) == 1.0);
    std::vector<double> complement{0, 0, 1};
    CHECK(jaccard_response_similarity(a, complement) == 0.0);
    std::vector<double> b{0, 1, 1};
    CHECK(jaccard_response_similarity(a, b) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK_THROWS_AS(jaccard_response_similarity(a, std::vector<double>{1, 0}),
                    std::invalid_argument);
}

TEST_CASE("every metric agrees with its brute-force oracle on random inputs") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<size_t> length(2, 50);
    int done = 0;
    while (done < 100) {
        size_t n = length(rng);
        bool quantized = done % 2 == 0;
        std::vector<double> scores = random_scores(n, rng, quantized);
        std::vector<double> preds = random_scores(n, rng, quantized);
        std::vector<double> labels = random_labels(n, rng);
        std::vector<double> binary_a = random_labels(n, rng);
        std::vector<double> binary_b = random_labels(n, rng);

        CHECK(std::abs(accuracy(preds, labels) - oracles::accuracy(preds, labels)) <= 1e-12);
        CHECK(std::abs(macro_f1(preds, labels) - oracles::macro_f1(preds, labels)) <= 1e-12);
        CHECK(std::abs(rmse(preds, scores) - oracles::rmse(preds, scores)) <= 1e-12);
        CHECK(std::abs(mae(preds, scores) - oracles::mae(preds, scores)) <= 1e-12);
        CHECK(std::abs(jaccard_response_similarity(binary_a, binary_b) -
                       oracles::jaccard(binary_a, binary_b)) <= 1e-12);
        if (has_both_classes(labels))
            CHECK(std::abs(auc(scores, labels) - oracles::auc(scores, labels)) <= 1e-12);
        if (not_all_tied(scores) && not_all_tied(preds)) {
            CHECK(std::abs(kendall_tau(scores, preds) -
                           oracles::kendall_tau(scores, preds)) <= 1e-12);
            CHECK(std::abs(spearman_rho(scores, preds) -
                           oracles::spearman_rho(scores, preds)) <= 1e-12);
        }
        ++done;
    }
}

TEST_CASE("evaluate_predictions fills the task-appropriate bundle") {
    std::vector<double> preds{0.9, 0.2, 0.7, 0.4};
    std::vector<double> labels{1, 0, 1, 0};
    MetricBundle cls = evaluate_predictions(TaskKind::Classification, preds, labels);
    CHECK(cls.acc == 1.0);
    CHECK(cls.auc == 1.0);
    CHECK(cls.rmse > 0.0);

    std::vector<double> targets{0.8, 0.1, 0.9, 0.3};
    MetricBundle reg = evaluate_predictions(TaskKind::Regression, preds, targets);
    CHECK(reg.mae == doctest::Approx(mae(preds, targets)));
    CHECK(reg.rmse == doctest::Approx(rmse(preds, targets)));
}

TEST_CASE("95% confidence interval via Student t over ten values") {
    std::vector<double> values{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    ConfidenceInterval ci = mean_ci95(values);
    CHECK(ci.mean == doctest::Approx(0.55).epsilon(1e-12));
    double sd = sample_std(values);
    double half = 2.2621571628 * sd / std::sqrt(10.0);
    CHECK(ci.low == doctest::Approx(0.55 - half).epsilon(1e-12));
    CHECK(ci.high == doctest::Approx(0.55 + half).epsilon(1e-12));
    CHECK(ci.low <= ci.high);
}
