#include "cogdiag/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "cogdiag/data_io.hpp"
#include "cogdiag/diagnosers.hpp"
#include "cogdiag/metrics.hpp"

namespace cogdiag {

namespace {

nlohmann::json stats_over_seeds(const std::vector<double>& values) {
    std::vector<double> present;
    for (double v : values)
        if (!std::isnan(v)) present.push_back(v);
    if (present.empty()) return {{"mean", nullptr}, {"std", nullptr}};
    return {{"mean", mean_of(present)}, {"std", sample_std(present)}};
}

nlohmann::json hyper_to_json(const HyperParams& hyper) {
    return {{"latent_skills", hyper.latent_skills},
            {"ld1", hyper.ld1},
            {"ld2", hyper.ld2},
            {"l2_weight", hyper.l2_weight},
            {"raw_discrimination", hyper.raw_discrimination}};
}

nlohmann::json train_to_json(const TrainConfig& train) {
    return {{"lr", train.lr},
            {"batch_size", train.batch_size},
            {"max_epochs", train.max_epochs},
            {"patience", train.patience}};
}

nlohmann::json report_header(const char* command, const ExperimentConfig& config,
                             const ResponseMatrix& data) {
    nlohmann::json doc;
    doc["command"] = command;
    doc["family"] = to_string(config.family);
    doc["task"] = to_string(data.task());
    doc["n_learners"] = data.n_learners();
    doc["n_samples"] = data.n_samples();
    doc["n_triples"] = data.n_triples();
    doc["hyper"] = hyper_to_json(config.hyper);
    doc["train"] = train_to_json(config.train);
    doc["generated_at"] = timestamp_utc();
    return doc;
}

std::vector<double> triple_targets(const ResponseMatrix& data,
                                   std::span<const int> indices) {
    std::vector<double> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(data.triple(i).score);
    return out;
}

std::vector<std::pair<int, int>> triple_pairs(const ResponseMatrix& data,
                                              std::span<const int> indices) {
    std::vector<std::pair<int, int>> out;
    out.reserve(indices.size());
    for (int i : indices) {
        const Triple& t = data.triple(i);
        out.emplace_back(t.learner, t.sample);
    }
    return out;
}

bool single_skill_matrix(const SkillMatrix& skills) {
    for (int j = 0; j < skills.n_samples(); ++j)
        if (skills.row_skill_count(j) != 1) return false;
    return true;
}

std::string format_double(double v) {
    std::ostringstream ss;
    ss << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return ss.str();
}

}  // namespace

std::string timestamp_utc() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_report(const nlohmann::json& report, const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << report.dump(2) << "\n";
}

std::vector<double> coarse_learner_metric(const ResponseMatrix& data) {
    const size_t n = static_cast<size_t>(data.n_learners());
    std::vector<double> sum(n, 0.0);
    std::vector<long> count(n, 0);
    for (const Triple& t : data.triples()) {
        double v = data.task() == TaskKind::Classification ? t.score : 1.0 - t.score;
        sum[static_cast<size_t>(t.learner)] += v;
        count[static_cast<size_t>(t.learner)] += 1;
    }
    std::vector<double> metric(n, std::numeric_limits<double>::quiet_NaN());
    for (size_t i = 0; i < n; ++i)
        if (count[i] > 0) metric[i] = sum[i] / static_cast<double>(count[i]);
    return metric;
}

std::unique_ptr<Diagnoser> fit_for_ranking(const ExperimentConfig& config,
                                           const ResponseMatrix& data,
                                           const std::optional<SkillMatrix>& skills,
                                           std::span<const int> triples, uint64_t seed) {
    auto model = make_diagnoser(config.family, data.task(), data.n_learners(),
                                data.n_samples(), skills, config.hyper);
    TrainConfig train_config = config.train;
    train_config.seed = seed;
    if (!family_is_parametric(config.family)) {
        // Closed-form statistics consume every triple as given.
        model->fit(data, triples, {}, train_config);
        return model;
    }
    // Gradient-trained families hold out 20% for early stopping.
    std::vector<int> shuffled(triples.begin(), triples.end());
    std::mt19937_64 rng(seed);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    size_t n_val = shuffled.size() / 5;
    std::vector<int> val(shuffled.begin(), shuffled.begin() + n_val);
    std::vector<int> train(shuffled.begin() + n_val, shuffled.end());
    model->fit(data, train, val, train_config);
    return model;
}

std::vector<double> overall_abilities(const Diagnoser& model) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(model.n_learners()));
    for (int i = 0; i < model.n_learners(); ++i) out.push_back(model.ability(i).overall);
    return out;
}

// ---------------------------------------------------------------------------
// reliability
// ---------------------------------------------------------------------------

nlohmann::json run_reliability(const ExperimentConfig& config, const ResponseMatrix& data,
                               const std::optional<SkillMatrix>& skills) {
    if (config.seeds.empty()) throw std::invalid_argument("reliability: no seeds");
    nlohmann::json doc = report_header("reliability", config, data);
    nlohmann::json per_seed = nlohmann::json::array();

    const bool classification = data.task() == TaskKind::Classification;
    std::vector<double> accs, f1s, aucs, rmses, maes;
    for (uint64_t seed : config.seeds) {
        DatasetSplit split = split_622(data, seed);
        auto model = make_diagnoser(config.family, data.task(), data.n_learners(),
                                    data.n_samples(), skills, config.hyper);
        TrainConfig train_config = config.train;
        train_config.seed = seed;
        FitSummary summary = model->fit(data, split.train, split.validation, train_config);
        std::vector<double> preds = model->predict(triple_pairs(data, split.test));
        std::vector<double> targets = triple_targets(data, split.test);
        MetricBundle bundle = evaluate_predictions(data.task(), preds, targets);

        nlohmann::json record;
        record["seed"] = seed;
        record["best_epoch"] = summary.best_epoch;
        record["epochs_run"] = summary.epochs_run;
        nlohmann::json metrics;
        metrics["rmse"] = bundle.rmse;
        rmses.push_back(bundle.rmse);
        if (classification) {
            metrics["acc"] = bundle.acc;
            metrics["f1_macro"] = bundle.f1_macro;
            metrics["auc"] = bundle.auc;
            accs.push_back(bundle.acc);
            f1s.push_back(bundle.f1_macro);
            aucs.push_back(bundle.auc);
        } else {
            metrics["mae"] = bundle.mae;
            maes.push_back(bundle.mae);
        }
        record["metrics"] = std::move(metrics);
        per_seed.push_back(std::move(record));
    }
    doc["per_seed"] = std::move(per_seed);
    nlohmann::json aggregate;
    aggregate["rmse"] = stats_over_seeds(rmses);
    if (classification) {
        aggregate["acc"] = stats_over_seeds(accs);
        aggregate["f1_macro"] = stats_over_seeds(f1s);
        aggregate["auc"] = stats_over_seeds(aucs);
    } else {
        aggregate["mae"] = stats_over_seeds(maes);
    }
    doc["aggregate"] = std::move(aggregate);
    return doc;
}

// ---------------------------------------------------------------------------
// rank consistency
// ---------------------------------------------------------------------------

nlohmann::json run_rank_consistency(const ExperimentConfig& config,
                                    const ResponseMatrix& data,
                                    const std::optional<SkillMatrix>& skills) {
    if (config.seeds.empty()) throw std::invalid_argument("consistency: no seeds");
    if (data.n_learners() < 2)
        throw std::invalid_argument("consistency: needs at least 2 learners");

    std::vector<double> coarse = coarse_learner_metric(data);
    std::vector<int> ranked_learners;
    for (int i = 0; i < data.n_learners(); ++i)
        if (!std::isnan(coarse[static_cast<size_t>(i)])) ranked_learners.push_back(i);
    if (ranked_learners.size() < 2)
        throw std::invalid_argument("consistency: fewer than 2 learners with responses");

    std::vector<int> all(static_cast<size_t>(data.n_triples()));
    std::iota(all.begin(), all.end(), 0);

    nlohmann::json doc = report_header("consistency", config, data);
    doc["coarse_metric"] =
        data.task() == TaskKind::Classification ? "accuracy" : "normalized_mae";
    doc["fit_protocol"] =
        "closed-form families fit on all triples; gradient-trained families hold out "
        "20% of triples (seeded) for early stopping";
    nlohmann::json per_seed = nlohmann::json::array();
    std::vector<double> taus, rhos;
    for (uint64_t seed : config.seeds) {
        auto model = fit_for_ranking(config, data, skills, all, seed);
        std::vector<double> ability_values, coarse_values;
        for (int learner : ranked_learners) {
            ability_values.push_back(model->ability(learner).overall);
            coarse_values.push_back(coarse[static_cast<size_t>(learner)]);
        }
        RankCorrelation rc = rank_correlation(ability_values, coarse_values);
        taus.push_back(rc.kendall_tau);
        rhos.push_back(rc.spearman_rho);
        per_seed.push_back(
            {{"seed", seed}, {"kendall_tau", rc.kendall_tau}, {"spearman_rho", rc.spearman_rho}});
    }
    doc["per_seed"] = std::move(per_seed);
    doc["aggregate"] = {{"kendall_tau", stats_over_seeds(taus)},
                        {"spearman_rho", stats_over_seeds(rhos)}};
    doc["n_ranked_learners"] = ranked_learners.size();
    return doc;
}

// ---------------------------------------------------------------------------
// rank stability
// ---------------------------------------------------------------------------

std::pair<std::vector<int>, std::vector<int>> draw_stability_partitions(
    const ResponseMatrix& data, const std::optional<SkillMatrix>& skills, int size,
    std::mt19937_64& rng) {
    if (size <= 0) throw std::invalid_argument("stability: partition size must be positive");
    std::vector<int> part_a, part_b;
    if (skills.has_value() && single_skill_matrix(*skills)) {
        // Class-balanced draw: `size` samples of every skill per partition.
        for (int k = 0; k < skills->n_skills(); ++k) {
            std::vector<int> members;
            for (int j = 0; j < skills->n_samples(); ++j)
                if (skills->at(j, k)) members.push_back(j);
            if (static_cast<int>(members.size()) < 2 * size)
                throw std::invalid_argument(
                    "stability: partition size too large for skill " +
                    skills->skill_names()[static_cast<size_t>(k)]);
            std::shuffle(members.begin(), members.end(), rng);
            part_a.insert(part_a.end(), members.begin(), members.begin() + size);
            part_b.insert(part_b.end(), members.begin() + size, members.begin() + 2 * size);
        }
    } else {
        std::vector<int> samples(static_cast<size_t>(data.n_samples()));
        std::iota(samples.begin(), samples.end(), 0);
        if (static_cast<int>(samples.size()) < 2 * size)
            throw std::invalid_argument("stability: partition size too large");
        std::shuffle(samples.begin(), samples.end(), rng);
        part_a.assign(samples.begin(), samples.begin() + size);
        part_b.assign(samples.begin() + size, samples.begin() + 2 * size);
    }
    return {std::move(part_a), std::move(part_b)};
}

namespace {

/// Seed derived from the partition's sample set (order-independent) mixed with
/// the run seed. Distinct partitions get independent fits; identical
/// partitions fit identically, so their rankings agree exactly.
uint64_t partition_seed(uint64_t run_seed, std::span<const int> partition) {
    std::vector<int> sorted(partition.begin(), partition.end());
    std::sort(sorted.begin(), sorted.end());
    uint64_t h = 1469598103934665603ull ^ run_seed;
    for (int j : sorted) {
        h ^= static_cast<uint64_t>(j) + 0x9e3779b97f4a7c15ull;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

double stability_partition_tau(const ExperimentConfig& config, const ResponseMatrix& data,
                               const std::optional<SkillMatrix>& skills,
                               std::span<const int> partition_a,
                               std::span<const int> partition_b, uint64_t seed) {
    auto triples_in = [&](std::span<const int> partition) {
        std::vector<uint8_t> member(static_cast<size_t>(data.n_samples()), 0);
        for (int j : partition) member[static_cast<size_t>(j)] = 1;
        std::vector<int> indices;
        for (int i = 0; i < data.n_triples(); ++i)
            if (member[static_cast<size_t>(data.triple(i).sample)]) indices.push_back(i);
        return indices;
    };
    std::vector<int> triples_a = triples_in(partition_a);
    std::vector<int> triples_b = triples_in(partition_b);
    if (triples_a.empty() || triples_b.empty())
        throw std::invalid_argument("stability: a partition has no responses");
    auto model_a =
        fit_for_ranking(config, data, skills, triples_a, partition_seed(seed, partition_a));
    auto model_b =
        fit_for_ranking(config, data, skills, triples_b, partition_seed(seed, partition_b));
    return kendall_tau(overall_abilities(*model_a), overall_abilities(*model_b));
}

nlohmann::json run_rank_stability(const ExperimentConfig& config,
                                  const ResponseMatrix& data,
                                  const std::optional<SkillMatrix>& skills) {
    if (config.seeds.empty()) throw std::invalid_argument("stability: no seeds");
    if (config.partition_sizes.empty())
        throw std::invalid_argument("stability: no partition sizes");
    if (data.n_learners() < 2)
        throw std::invalid_argument("stability: needs at least 2 learners");

    nlohmann::json doc = report_header("stability", config, data);
    doc["partition_scheme"] = skills.has_value() && single_skill_matrix(*skills)
                                  ? "per-skill-balanced"
                                  : "uniform";
    doc["fit_protocol"] =
        "each partition fit on 80% of its triples with 20% held out for early stopping";
    doc["partition_sizes"] = config.partition_sizes;
    nlohmann::json per_size = nlohmann::json::array();
    for (int size : config.partition_sizes) {
        std::vector<double> taus;
        for (uint64_t seed : config.seeds) {
            std::seed_seq seq{seed, static_cast<uint64_t>(size)};
            std::mt19937_64 rng(seq);
            auto [part_a, part_b] = draw_stability_partitions(data, skills, size, rng);
            taus.push_back(
                stability_partition_tau(config, data, skills, part_a, part_b, seed));
        }
        ConfidenceInterval ci = mean_ci95(taus);
        per_size.push_back({{"size", size},
                            {"taus", taus},
                            {"mean", ci.mean},
                            {"ci_low", ci.low},
                            {"ci_high", ci.high}});
    }
    doc["per_size"] = std::move(per_size);
    return doc;
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

nlohmann::json run_diagnose(const ExperimentConfig& config, const ResponseMatrix& data,
                            const std::optional<SkillMatrix>& skills) {
    if (config.seeds.empty()) throw std::invalid_argument("diagnose: no seeds");
    std::vector<int> all(static_cast<size_t>(data.n_triples()));
    std::iota(all.begin(), all.end(), 0);
    auto model = fit_for_ranking(config, data, skills, all, config.seeds.front());

    std::filesystem::create_directories(config.out_dir);
    std::filesystem::path base(config.out_dir);
    std::string abilities_path = (base / "abilities.csv").string();
    std::string samples_path = (base / "samples.csv").string();
    std::string checkpoint_path = (base / "checkpoint.json").string();

    const bool unit = model->ability_in_unit_interval();
    int ability_dim = static_cast<int>(model->ability(0).ability.size());
    {
        std::ofstream out(abilities_path);
        if (!out) throw std::runtime_error("cannot open " + abilities_path);
        out << "learner,name,overall";
        for (int k = 1; k <= ability_dim; ++k) out << ",ability_" << k;
        out << "\n";
        for (int i = 0; i < data.n_learners(); ++i) {
            AbilityProfile profile = model->ability(i);
            out << i << "," << data.learner_names()[static_cast<size_t>(i)] << ","
                << format_double(profile.overall);
            for (double coord : profile.ability)
                out << "," << format_double(unit ? coord : sigmoid_scalar(coord));
            out << "\n";
        }
    }
    {
        std::ofstream out(samples_path);
        if (!out) throw std::runtime_error("cannot open " + samples_path);
        out << "sample,name,difficulty,discrimination\n";
        for (int j = 0; j < data.n_samples(); ++j) {
            double difficulty = model->sample_difficulty(j);
            double discrimination = model->sample_discrimination(j);
            out << j << "," << data.sample_names()[static_cast<size_t>(j)] << ",";
            if (!std::isnan(difficulty)) out << format_double(difficulty);
            out << ",";
            if (!std::isnan(discrimination)) out << format_double(discrimination);
            out << "\n";
        }
    }
    save_checkpoint(*model, checkpoint_path);

    nlohmann::json doc = report_header("diagnose", config, data);
    doc["seed"] = config.seeds.front();
    doc["ability_dim"] = ability_dim;
    doc["space_kind"] = to_string(model->ability(0).space_kind);
    doc["abilities_csv"] = abilities_path;
    doc["samples_csv"] = samples_path;
    doc["checkpoint"] = checkpoint_path;
    return doc;
}

// ---------------------------------------------------------------------------
// hyperparameter search
// ---------------------------------------------------------------------------

nlohmann::json run_search(const ExperimentConfig& config, const ResponseMatrix& data,
                          const std::optional<SkillMatrix>& skills) {
    if (config.search_budget < 1)
        throw std::invalid_argument("search: budget must be >= 1");
    if (config.grids.lr.empty() || config.grids.ld1.empty() || config.grids.ld2.empty() ||
        config.grids.latent_skills.empty())
        throw std::invalid_argument("search: empty hyperparameter grid");
    if (config.seeds.empty()) throw std::invalid_argument("search: no seeds");

    std::mt19937_64 rng(config.train.seed);
    auto pick = [&rng](const auto& grid) {
        std::uniform_int_distribution<size_t> dist(0, grid.size() - 1);
        return grid[dist(rng)];
    };

    nlohmann::json doc = report_header("search", config, data);
    nlohmann::json trials = nlohmann::json::array();
    std::string metric_name;
    double best_value = 0.0;
    int best_index = -1;
    nlohmann::json best_trial;

    for (int trial = 0; trial < config.search_budget; ++trial) {
        ExperimentConfig candidate = config;
        candidate.train.lr = pick(config.grids.lr);
        candidate.hyper.ld1 = pick(config.grids.ld1);
        candidate.hyper.ld2 = pick(config.grids.ld2);
        candidate.hyper.latent_skills = pick(config.grids.latent_skills);

        std::vector<double> values;
        std::string trial_metric;
        for (uint64_t seed : candidate.seeds) {
            DatasetSplit split = split_622(data, seed);
            auto model = make_diagnoser(candidate.family, data.task(), data.n_learners(),
                                        data.n_samples(), skills, candidate.hyper);
            TrainConfig train_config = candidate.train;
            train_config.seed = seed;
            FitSummary summary =
                model->fit(data, split.train, split.validation, train_config);
            if (summary.val_metric.empty())
                throw std::runtime_error("search: fit produced no validation metric");
            values.push_back(summary.val_metric[static_cast<size_t>(summary.best_epoch)]);
            if (trial_metric.empty()) trial_metric = summary.val_metric_name;
            else if (trial_metric != summary.val_metric_name)
                throw std::runtime_error("search: inconsistent validation metrics");
        }
        if (metric_name.empty()) metric_name = trial_metric;
        double value = mean_of(values);
        nlohmann::json record = {{"trial", trial},
                                 {"lr", candidate.train.lr},
                                 {"ld1", candidate.hyper.ld1},
                                 {"ld2", candidate.hyper.ld2},
                                 {"latent_skills", candidate.hyper.latent_skills},
                                 {"val_metric", value}};
        bool higher_better = metric_name == "auc";
        if (best_index < 0 || (higher_better ? value > best_value : value < best_value)) {
            best_value = value;
            best_index = trial;
            best_trial = record;
        }
        trials.push_back(std::move(record));
    }
    doc["val_metric_name"] = metric_name;
    doc["trials"] = std::move(trials);
    doc["best"] = std::move(best_trial);
    return doc;
}

}  // namespace cogdiag
