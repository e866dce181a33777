// Acceptance suite: every release gate in one binary, one verdict line per
// criterion. Exits non-zero if any gate fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cogdiag/data_io.hpp"
#include "cogdiag/diagnosers.hpp"
#include "cogdiag/experiments.hpp"
#include "cogdiag/metrics.hpp"
#include "cogdiag/optim.hpp"
#include "oracles.hpp"

using namespace cogdiag;

namespace {

struct Verdict {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

Verdict pass(std::string detail = "") { return {true, false, std::move(detail)}; }
Verdict fail(std::string detail) { return {false, false, std::move(detail)}; }
Verdict skip(std::string detail) { return {true, true, std::move(detail)}; }

std::vector<int> all_indices(const ResponseMatrix& data) {
    std::vector<int> idx(static_cast<size_t>(data.n_triples()));
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

Tensor find_param(ParametricDiagnoser& model, const std::string& name) {
    for (auto& [param_name, tensor] : model.named_parameters())
        if (param_name == name) return tensor;
    throw std::logic_error("missing param " + name);
}

// ---------------------------------------------------------------------------
// 1. gradient correctness
// ---------------------------------------------------------------------------

Verdict check_gradients() {
    const double h = 1e-5;
    const double tolerance = 1e-4;
    HyperParams hyper;
    hyper.latent_skills = 4;
    hyper.ld1 = 6;
    hyper.ld2 = 5;
    double worst = 0.0;
    for (DiagnoserFamily family :
         {DiagnoserFamily::Irt, DiagnoserFamily::Mirt, DiagnoserFamily::Mf,
          DiagnoserFamily::NeuralCd, DiagnoserFamily::CamillaBase,
          DiagnoserFamily::Camilla}) {
        SyntheticSpec spec;
        spec.family = family;
        spec.n_learners = 6;
        spec.n_samples = 8;
        spec.n_skills = 3;
        spec.seed = 9;
        SyntheticData data = generate_synthetic(spec);
        std::vector<int> batch(24);
        std::iota(batch.begin(), batch.end(), 0);

        for (uint64_t seed = 1; seed <= 5; ++seed) {
            auto model =
                make_diagnoser(family, TaskKind::Classification, 6, 8, data.skills, hyper);
            auto* parametric = dynamic_cast<ParametricDiagnoser*>(model.get());
            parametric->initialize_parameters(seed);
            parametric->accumulate_gradients(data.responses, batch);
            for (auto& [name, tensor] : parametric->named_parameters()) {
                std::vector<double> analytic = tensor.grad();
                for (size_t i = 0; i < tensor.values().size(); ++i) {
                    double saved = tensor.values()[i];
                    tensor.values()[i] = saved + h;
                    double up = parametric->loss_value(data.responses, batch);
                    tensor.values()[i] = saved - h;
                    double down = parametric->loss_value(data.responses, batch);
                    tensor.values()[i] = saved;
                    double fd = (up - down) / (2 * h);
                    double rel =
                        std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd));
                    worst = std::max(worst, rel);
                    if (rel >= tolerance)
                        return fail(to_string(family) + "/" + name + "[" +
                                    std::to_string(i) + "]: rel err " +
                                    std::to_string(rel));
                }
                tensor.zero_grad();
            }
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "worst relative error %.2e across 6 families x 5 seeds",
                  worst);
    return pass(buf);
}

// ---------------------------------------------------------------------------
// 2. monotonicity
// ---------------------------------------------------------------------------

Verdict check_monotonicity() {
    const double slack = 1e-12;
    std::mt19937_64 rng(117);
    std::uniform_real_distribution<double> delta(0.01, 2.0);
    const int n_learners = 6, n_samples = 8;

    std::vector<uint8_t> cells(static_cast<size_t>(n_samples) * 3, 0);
    for (int j = 0; j < n_samples; ++j) cells[static_cast<size_t>(j) * 3 + (j % 3)] = 1;
    SkillMatrix q(n_samples, 3, cells);

    struct FamilyProbe {
        DiagnoserFamily family;
        const char* ability_param;
    };
    const FamilyProbe families[] = {
        {DiagnoserFamily::Irt, "ability"},
        {DiagnoserFamily::Mirt, "theta"},
        {DiagnoserFamily::NeuralCd, "ability"},
        {DiagnoserFamily::CamillaBase, "ability"},
        {DiagnoserFamily::Camilla, "ability"},
    };
    HyperParams hyper;
    hyper.latent_skills = 3;
    hyper.ld1 = 5;
    hyper.ld2 = 4;

    for (const FamilyProbe& probe : families) {
        std::optional<SkillMatrix> skills;
        if (family_needs_skills(probe.family)) skills = q;
        std::unique_ptr<Diagnoser> model;
        ParametricDiagnoser* parametric = nullptr;
        for (int i = 0; i < 1000; ++i) {
            if (i % 50 == 0) {  // fresh random state every 50 probes
                model = make_diagnoser(probe.family, TaskKind::Classification, n_learners,
                                       n_samples, skills, hyper);
                parametric = dynamic_cast<ParametricDiagnoser*>(model.get());
                parametric->initialize_parameters(rng());
                for (auto& [name, tensor] : parametric->named_parameters())
                    if (name == "w1" || name == "w2" || name == "w3")
                        project_nonnegative(tensor);
                if (probe.family == DiagnoserFamily::Irt ||
                    probe.family == DiagnoserFamily::Mirt) {
                    Tensor k = find_param(*parametric, "discrimination");
                    for (double& v : k.values()) v = std::abs(v) + 0.05;
                }
            }
            int learner = static_cast<int>(rng() % n_learners);
            int sample = static_cast<int>(rng() % n_samples);
            Tensor ability = find_param(*parametric, probe.ability_param);
            int coord = static_cast<int>(rng() % static_cast<uint64_t>(ability.cols()));
            double before = model->predict_one(learner, sample);
            ability.at(learner, coord) += delta(rng);
            double after = model->predict_one(learner, sample);
            if (after < before - slack)
                return fail(to_string(probe.family) + ": probe " + std::to_string(i) +
                            " dropped by " + std::to_string(before - after));
        }
    }

    // non-negative MLP weights through a whole seeded run
    SyntheticSpec spec;
    spec.family = DiagnoserFamily::Camilla;
    spec.n_learners = 12;
    spec.n_samples = 40;
    spec.seed = 21;
    SyntheticData data = generate_synthetic(spec);
    CamillaDiagnoser camilla(TaskKind::Classification, 12, 40);
    TrainConfig config;
    config.seed = 21;
    config.max_epochs = 100;
    long steps = 0;
    bool weights_ok = true;
    config.on_step = [&](const Diagnoser& m) {
        ++steps;
        auto& cam = const_cast<CamillaDiagnoser&>(dynamic_cast<const CamillaDiagnoser&>(m));
        for (auto& [name, tensor] : cam.named_parameters())
            if (name == "w1" || name == "w2")
                for (double v : tensor.values())
                    if (v < 0.0) weights_ok = false;
    };
    camilla.fit(data.responses, all_indices(data.responses), {}, config);
    if (!weights_ok) return fail("negative MLP weight slipped past the projection");
    return pass("5000 probes clean; weights non-negative across " +
                std::to_string(steps) + " optimizer steps");
}

// ---------------------------------------------------------------------------
// 3. metric oracles
// ---------------------------------------------------------------------------

Verdict check_metric_oracles() {
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<size_t> length(2, 50);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const double tol = 1e-12;

    for (int instance = 0; instance < 100; ++instance) {
        size_t n = length(rng);
        bool quantized = instance % 2 == 0;
        auto draw_scores = [&] {
            std::vector<double> v(n);
            for (double& x : v)
                x = quantized ? std::round(unit(rng) * 8.0) / 8.0 : unit(rng);
            return v;
        };
        auto draw_labels = [&] {
            std::vector<double> v(n);
            for (double& x : v) x = coin(rng) ? 1.0 : 0.0;
            return v;
        };
        std::vector<double> scores = draw_scores(), preds = draw_scores();
        std::vector<double> labels = draw_labels(), ra = draw_labels(), rb = draw_labels();

        auto close = [&](double a, double b) { return std::abs(a - b) <= tol; };
        if (!close(accuracy(preds, labels), oracles::accuracy(preds, labels)))
            return fail("accuracy diverged at instance " + std::to_string(instance));
        if (!close(macro_f1(preds, labels), oracles::macro_f1(preds, labels)))
            return fail("macro F1 diverged at instance " + std::to_string(instance));
        if (!close(rmse(preds, scores), oracles::rmse(preds, scores)))
            return fail("rmse diverged at instance " + std::to_string(instance));
        if (!close(mae(preds, scores), oracles::mae(preds, scores)))
            return fail("mae diverged at instance " + std::to_string(instance));
        if (!close(jaccard_response_similarity(ra, rb), oracles::jaccard(ra, rb)))
            return fail("jaccard diverged at instance " + std::to_string(instance));
        bool pos = false, neg = false;
        for (double y : labels) (y == 1.0 ? pos : neg) = true;
        if (pos && neg && !close(auc(scores, labels), oracles::auc(scores, labels)))
            return fail("auc diverged at instance " + std::to_string(instance));
        auto varied = [](const std::vector<double>& v) {
            for (double x : v)
                if (x != v[0]) return true;
            return false;
        };
        if (varied(scores) && varied(preds)) {
            if (!close(kendall_tau(scores, preds), oracles::kendall_tau(scores, preds)))
                return fail("kendall diverged at instance " + std::to_string(instance));
            if (!close(spearman_rho(scores, preds), oracles::spearman_rho(scores, preds)))
                return fail("spearman diverged at instance " + std::to_string(instance));
        }
    }
    return pass("8 metrics x 100 instances within 1e-12 of brute force");
}

// ---------------------------------------------------------------------------
// 4. baseline exactness
// ---------------------------------------------------------------------------

Verdict check_baseline_exactness() {
    std::mt19937_64 rng(56);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n_learners = 10, n_samples = 20, n_skills = 4;
    std::vector<uint8_t> cells(static_cast<size_t>(n_samples) * n_skills, 0);
    for (int j = 0; j < n_samples; ++j) {
        cells[static_cast<size_t>(j) * n_skills + (j % n_skills)] = 1;
        if (j % 3 == 0) cells[static_cast<size_t>(j) * n_skills + ((j + 2) % n_skills)] = 1;
    }
    SkillMatrix q(n_samples, n_skills, cells);
    std::vector<Triple> triples;
    for (int i = 0; i < n_learners; ++i)
        for (int j = 0; j < n_samples; ++j)
            if ((i * 7 + j) % 5 != 0) triples.push_back({i, j, unit(rng)});
    ResponseMatrix data(n_learners, n_samples, TaskKind::Regression, triples);

    VanillaDiagnoser vanilla(TaskKind::Regression, n_learners, n_samples);
    vanilla.fit(data, all_indices(data), {}, {});
    for (int i = 0; i < n_learners; ++i) {
        double sum = 0.0;
        long count = 0;
        for (const Triple& t : data.triples())
            if (t.learner == i) {
                sum += t.score;
                ++count;
            }
        double expected = count > 0 ? sum / double(count) : 0.0;
        for (int j = 0; j < n_samples; ++j)
            if (vanilla.predict_one(i, j) != expected)
                return fail("vanilla mean mismatch at learner " + std::to_string(i));
    }

    SkillVanillaDiagnoser skill_vanilla(TaskKind::Regression, n_learners, q);
    skill_vanilla.fit(data, all_indices(data), {}, {});
    for (int i = 0; i < n_learners; ++i)
        for (int j = 0; j < n_samples; ++j) {
            double acc = 0.0;
            int used = 0;
            for (int k = 0; k < n_skills; ++k) {
                if (!q.at(j, k)) continue;
                double sum = 0.0;
                long count = 0;
                for (const Triple& t : data.triples())
                    if (t.learner == i && q.at(t.sample, k)) {
                        sum += t.score;
                        ++count;
                    }
                if (count > 0) {
                    acc += sum / double(count);
                    ++used;
                }
            }
            double expected;
            if (used > 0) {
                expected = acc / double(used);
            } else {
                double sum = 0.0;
                long count = 0;
                for (const Triple& t : data.triples())
                    if (t.learner == i) {
                        sum += t.score;
                        ++count;
                    }
                expected = sum / double(count);
            }
            if (skill_vanilla.predict_one(i, j) != expected)
                return fail("skill-vanilla mismatch at (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
        }
    return pass("group means reproduced bit-exactly on the 10x20 fixture");
}

// ---------------------------------------------------------------------------
// 5. synthetic recovery
// ---------------------------------------------------------------------------

Verdict check_synthetic_recovery() {
    SyntheticSpec spec;
    spec.family = DiagnoserFamily::Irt;
    spec.n_learners = 100;
    spec.n_samples = 500;
    spec.seed = 42;
    SyntheticData data = generate_synthetic(spec);
    std::vector<double> planted = data.planted["ability"].get<std::vector<double>>();
    DatasetSplit split = split_622(data.responses, 42);
    std::vector<std::pair<int, int>> test_pairs;
    std::vector<double> test_targets;
    for (int i : split.test) {
        const Triple& t = data.responses.triple(i);
        test_pairs.emplace_back(t.learner, t.sample);
        test_targets.push_back(t.score);
    }

    IrtDiagnoser irt(TaskKind::Classification, 100, 500);
    TrainConfig config;
    config.seed = 42;
    irt.fit(data.responses, split.train, split.validation, config);
    std::vector<double> estimated;
    for (int i = 0; i < 100; ++i) estimated.push_back(irt.ability(i).ability[0]);
    double rho = spearman_rho(planted, estimated);
    if (rho < 0.9)
        return fail("planted-ability Spearman " + std::to_string(rho) + " < 0.9");
    double irt_auc = auc(irt.predict(test_pairs), test_targets);

    CamillaDiagnoser camilla(TaskKind::Classification, 100, 500);
    camilla.fit(data.responses, split.train, split.validation, config);
    double camilla_auc = auc(camilla.predict(test_pairs), test_targets);
    if (camilla_auc < irt_auc - 0.02)
        return fail("held-out AUC " + std::to_string(camilla_auc) +
                    " more than 0.02 below the generating family's " +
                    std::to_string(irt_auc));
    char buf[128];
    std::snprintf(buf, sizeof(buf), "Spearman %.3f; held-out AUC %.3f vs %.3f", rho,
                  camilla_auc, irt_auc);
    return pass(buf);
}

// ---------------------------------------------------------------------------
// 6. rank-stability trend
// ---------------------------------------------------------------------------

Verdict check_stability_trend() {
    SyntheticSpec spec;
    spec.family = DiagnoserFamily::Mirt;
    spec.n_learners = 30;
    spec.n_samples = 400;
    spec.n_skills = 5;
    spec.seed = 42;
    SyntheticData data = generate_synthetic(spec);

    ExperimentConfig config;
    config.family = DiagnoserFamily::Mirt;
    config.partition_sizes = {10, 20, 40, 80, 160};
    nlohmann::json report = run_rank_stability(config, data.responses, std::nullopt);

    std::string curve;
    double previous = -2.0;
    for (const auto& entry : report["per_size"]) {
        double mean = entry["mean"].get<double>();
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s%.3f", curve.empty() ? "" : " -> ", mean);
        curve += buf;
        if (mean < previous)
            return fail("mean tau dipped at size " +
                        std::to_string(entry["size"].get<int>()) + " (" + curve + ")");
        previous = mean;
    }
    return pass("mean tau over sizes: " + curve);
}

// ---------------------------------------------------------------------------
// 7. rank-consistency degenerate check
// ---------------------------------------------------------------------------

Verdict check_consistency_degenerate() {
    SyntheticSpec spec;
    spec.family = DiagnoserFamily::Irt;
    spec.n_learners = 10;
    spec.n_samples = 10;
    spec.seed = 7;
    SyntheticData data = generate_synthetic(spec);
    ExperimentConfig config;
    config.family = DiagnoserFamily::Vanilla;
    config.seeds = {1, 21, 42};
    nlohmann::json report = run_rank_consistency(config, data.responses, std::nullopt);
    for (const auto& record : report["per_seed"])
        if (record["kendall_tau"].get<double>() != 1.0)
            return fail("tau " + record["kendall_tau"].dump() + " != 1.0");
    return pass("tau exactly 1.0 against the accuracy ranking on every seed");
}

// ---------------------------------------------------------------------------
// 8. optional dataset reproduction
// ---------------------------------------------------------------------------

Verdict check_dataset_reproduction() {
    std::string path = std::string(COGDIAG_SOURCE_DIR) + "/data/titanic/responses.jsonl";
    if (const char* env = std::getenv("COGDIAG_TITANIC_LOGS")) path = env;
    if (!std::filesystem::exists(path))
        return skip("response logs not present at " + path +
                    " (set COGDIAG_TITANIC_LOGS to run)");

    ResponseMatrix data = load_response_logs(path, TaskKind::Classification);
    if (data.n_learners() != 353 || data.n_samples() != 418 || data.n_triples() != 147554)
        return fail("unexpected log statistics: " + std::to_string(data.n_learners()) +
                    " learners, " + std::to_string(data.n_samples()) + " samples, " +
                    std::to_string(data.n_triples()) + " triples");

    ExperimentConfig config;
    config.family = DiagnoserFamily::Camilla;
    config.hyper.latent_skills = 5;
    config.hyper.ld1 = 128;
    config.hyper.ld2 = 64;
    config.train.lr = 0.001;
    nlohmann::json report = run_reliability(config, data, std::nullopt);
    double mean_auc = report["aggregate"]["auc"]["mean"].get<double>();
    double mean_acc = report["aggregate"]["acc"]["mean"].get<double>();
    char buf[96];
    std::snprintf(buf, sizeof(buf), "mean test AUC %.3f (>= 0.94), ACC %.3f (>= 0.88)",
                  mean_auc, mean_acc);
    if (mean_auc < 0.94 || mean_acc < 0.88) return fail(buf);
    return pass(buf);
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Verdict()> run;
        double budget_seconds;  // 0 = no stated budget
    };
    const Criterion criteria[] = {
        {"gradient correctness", check_gradients, 30.0},
        {"monotonicity suite", check_monotonicity, 60.0},
        {"metric oracles", check_metric_oracles, 10.0},
        {"baseline exactness", check_baseline_exactness, 0.0},
        {"synthetic recovery", check_synthetic_recovery, 300.0},
        {"rank-stability trend", check_stability_trend, 600.0},
        {"rank-consistency degenerate check", check_consistency_degenerate, 0.0},
        {"dataset reproduction (optional)", check_dataset_reproduction, 900.0},
    };

    int failures = 0;
    int index = 0;
    for (const Criterion& criterion : criteria) {
        ++index;
        auto start = std::chrono::steady_clock::now();
        Verdict verdict;
        try {
            verdict = criterion.run();
        } catch (const std::exception& e) {
            verdict = fail(std::string("exception: ") + e.what());
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (verdict.pass && !verdict.skipped && criterion.budget_seconds > 0.0 &&
            seconds > criterion.budget_seconds) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "over the %.0fs runtime budget",
                          criterion.budget_seconds);
            verdict = fail(verdict.detail + "; " + buf);
        }
        const char* tag = verdict.skipped ? "SKIP" : (verdict.pass ? "PASS" : "FAIL");
        std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n", tag, index, criterion.name,
                    seconds, verdict.detail.empty() ? "" : " - ",
                    verdict.detail.c_str());
        if (!verdict.pass) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
