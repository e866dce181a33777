// Command-line driver: diagnoses learner ability from response logs and runs
// the reliability / rank-consistency / rank-stability protocols.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cogdiag/data_io.hpp"
#include "cogdiag/diagnosers.hpp"
#include "cogdiag/experiments.hpp"

namespace {

using cogdiag::ExperimentConfig;

std::vector<uint64_t> parse_u64_csv(const std::string& csv) {
    std::vector<uint64_t> out;
    std::stringstream ss(csv);
    std::string field;
    while (std::getline(ss, field, ','))
        if (!field.empty()) out.push_back(std::stoull(field));
    if (out.empty()) throw std::invalid_argument("empty seed list");
    return out;
}

std::vector<int> parse_int_csv(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string field;
    while (std::getline(ss, field, ','))
        if (!field.empty()) out.push_back(std::stoi(field));
    if (out.empty()) throw std::invalid_argument("empty size list");
    return out;
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.contains("family"))
        config.family = cogdiag::family_from_string(doc["family"].get<std::string>());
    if (doc.contains("task"))
        config.task = cogdiag::task_kind_from_string(doc["task"].get<std::string>());
    if (doc.contains("responses")) config.responses_path = doc["responses"];
    if (doc.contains("qmatrix")) config.qmatrix_path = doc["qmatrix"];
    if (doc.contains("out")) config.out_dir = doc["out"];
    if (doc.contains("seeds")) config.seeds = doc["seeds"].get<std::vector<uint64_t>>();
    if (doc.contains("lr")) config.train.lr = doc["lr"];
    if (doc.contains("batch_size")) config.train.batch_size = doc["batch_size"];
    if (doc.contains("max_epochs")) config.train.max_epochs = doc["max_epochs"];
    if (doc.contains("patience")) config.train.patience = doc["patience"];
    if (doc.contains("ld1")) config.hyper.ld1 = doc["ld1"];
    if (doc.contains("ld2")) config.hyper.ld2 = doc["ld2"];
    if (doc.contains("latent_skills")) config.hyper.latent_skills = doc["latent_skills"];
    if (doc.contains("l2_weight")) config.hyper.l2_weight = doc["l2_weight"];
    if (doc.contains("raw_discrimination"))
        config.hyper.raw_discrimination = doc["raw_discrimination"];
    if (doc.contains("partition_sizes"))
        config.partition_sizes = doc["partition_sizes"].get<std::vector<int>>();
    if (doc.contains("budget")) config.search_budget = doc["budget"];
    if (doc.contains("grids")) {
        const auto& g = doc["grids"];
        if (g.contains("lr")) config.grids.lr = g["lr"].get<std::vector<double>>();
        if (g.contains("ld1")) config.grids.ld1 = g["ld1"].get<std::vector<int>>();
        if (g.contains("ld2")) config.grids.ld2 = g["ld2"].get<std::vector<int>>();
        if (g.contains("latent_skills"))
            config.grids.latent_skills = g["latent_skills"].get<std::vector<int>>();
    }
}

struct CommonFlags {
    std::string config_path;
    std::string responses;
    std::string qmatrix;
    std::string out;
    std::string task;
    std::string family;
    std::string seeds_csv;
    std::string sizes_csv;
    double lr = 0.0;
    int ld1 = 0, ld2 = 0, latent = 0, batch = 0, epochs = 0, patience = 0, budget = 0;
    double l2 = 0.0;
    bool raw_disc = false;

    CLI::Option* opt_responses = nullptr;
    CLI::Option* opt_qmatrix = nullptr;
    CLI::Option* opt_out = nullptr;
    CLI::Option* opt_task = nullptr;
    CLI::Option* opt_family = nullptr;
    CLI::Option* opt_seeds = nullptr;
    CLI::Option* opt_sizes = nullptr;
    CLI::Option* opt_config = nullptr;
    CLI::Option* opt_lr = nullptr;
    CLI::Option* opt_ld1 = nullptr;
    CLI::Option* opt_ld2 = nullptr;
    CLI::Option* opt_latent = nullptr;
    CLI::Option* opt_batch = nullptr;
    CLI::Option* opt_epochs = nullptr;
    CLI::Option* opt_patience = nullptr;
    CLI::Option* opt_budget = nullptr;
    CLI::Option* opt_l2 = nullptr;
    CLI::Option* opt_raw_disc = nullptr;
};

void attach_common(CLI::App* cmd, CommonFlags& flags) {
    flags.opt_responses =
        cmd->add_option("--responses", flags.responses, "response log (JSON Lines)");
    flags.opt_qmatrix =
        cmd->add_option("--qmatrix", flags.qmatrix, "skill matrix CSV (optional)");
    flags.opt_task = cmd->add_option("--task", flags.task, "task kind: cls or reg");
    flags.opt_family = cmd->add_option("--family", flags.family, "diagnoser family");
    flags.opt_seeds = cmd->add_option("--seeds", flags.seeds_csv, "comma-separated seeds");
    flags.opt_out = cmd->add_option("--out", flags.out, "output directory");
    flags.opt_config = cmd->add_option("--config", flags.config_path,
                                       "JSON config file (flags override it)");
    flags.opt_lr = cmd->add_option("--lr", flags.lr, "learning rate");
    flags.opt_ld1 = cmd->add_option("--ld1", flags.ld1, "first hidden width");
    flags.opt_ld2 = cmd->add_option("--ld2", flags.ld2, "second hidden width");
    flags.opt_latent =
        cmd->add_option("--latent-skills", flags.latent, "latent skill dimension");
    flags.opt_batch = cmd->add_option("--batch-size", flags.batch, "mini-batch size");
    flags.opt_epochs = cmd->add_option("--max-epochs", flags.epochs, "epoch cap");
    flags.opt_patience =
        cmd->add_option("--patience", flags.patience, "early-stopping patience");
    flags.opt_l2 = cmd->add_option("--l2-weight", flags.l2, "MF embedding penalty");
    flags.opt_raw_disc = cmd->add_flag("--raw-discrimination", flags.raw_disc,
                                       "Camilla-Base: skip the softplus transform");
}

ExperimentConfig build_config(const CommonFlags& flags) {
    ExperimentConfig config;
    if (flags.opt_config->count()) apply_config_file(config, flags.config_path);
    if (flags.opt_family->count())
        config.family = cogdiag::family_from_string(flags.family);
    if (flags.opt_task->count()) config.task = cogdiag::task_kind_from_string(flags.task);
    if (flags.opt_responses->count()) config.responses_path = flags.responses;
    if (flags.opt_qmatrix->count()) config.qmatrix_path = flags.qmatrix;
    if (flags.opt_out->count()) config.out_dir = flags.out;
    if (flags.opt_seeds->count()) config.seeds = parse_u64_csv(flags.seeds_csv);
    if (flags.opt_sizes && flags.opt_sizes->count())
        config.partition_sizes = parse_int_csv(flags.sizes_csv);
    if (flags.opt_lr->count()) config.train.lr = flags.lr;
    if (flags.opt_batch->count()) config.train.batch_size = flags.batch;
    if (flags.opt_epochs->count()) config.train.max_epochs = flags.epochs;
    if (flags.opt_patience->count()) config.train.patience = flags.patience;
    if (flags.opt_ld1->count()) config.hyper.ld1 = flags.ld1;
    if (flags.opt_ld2->count()) config.hyper.ld2 = flags.ld2;
    if (flags.opt_latent->count()) config.hyper.latent_skills = flags.latent;
    if (flags.opt_l2->count()) config.hyper.l2_weight = flags.l2;
    if (flags.opt_raw_disc->count()) config.hyper.raw_discrimination = true;
    if (flags.opt_budget && flags.opt_budget->count()) config.search_budget = flags.budget;
    return config;
}

struct LoadedData {
    cogdiag::ResponseMatrix responses;
    std::optional<cogdiag::SkillMatrix> skills;
};

LoadedData load_data(const ExperimentConfig& config) {
    if (config.responses_path.empty())
        throw std::invalid_argument("--responses (or config key) is required");
    cogdiag::ResponseMatrix responses =
        cogdiag::load_response_logs(config.responses_path, config.task);
    std::optional<cogdiag::SkillMatrix> skills;
    if (!config.qmatrix_path.empty())
        skills = cogdiag::load_skill_matrix(config.qmatrix_path, responses.sample_names());
    return {std::move(responses), std::move(skills)};
}

int run_command(const std::string& name, const ExperimentConfig& config) {
    LoadedData data = load_data(config);
    nlohmann::json report;
    std::string out_name;
    if (name == "reliability") {
        report = cogdiag::run_reliability(config, data.responses, data.skills);
        out_name = "reliability.json";
    } else if (name == "consistency") {
        report = cogdiag::run_rank_consistency(config, data.responses, data.skills);
        out_name = "consistency.json";
    } else if (name == "stability") {
        report = cogdiag::run_rank_stability(config, data.responses, data.skills);
        out_name = "stability.json";
    } else if (name == "diagnose") {
        report = cogdiag::run_diagnose(config, data.responses, data.skills);
        out_name = "diagnose_run.json";
    } else if (name == "search") {
        report = cogdiag::run_search(config, data.responses, data.skills);
        out_name = "search.json";
    } else {
        throw std::logic_error("unknown command: " + name);
    }
    std::string path =
        (std::filesystem::path(config.out_dir) / out_name).string();
    cogdiag::write_report(report, path);
    std::cout << name << ": wrote " << path << "\n";
    return 0;
}

struct SynthFlags {
    std::string family = "irt";
    std::string task = "cls";
    std::string out = ".";
    int learners = 20;
    int samples = 50;
    int skills = 5;
    uint64_t seed = 42;
    bool deterministic = false;
    double noise_sd = 0.05;
};

int run_synth(const SynthFlags& flags) {
    cogdiag::SyntheticSpec spec;
    spec.family = cogdiag::family_from_string(flags.family);
    spec.task = cogdiag::task_kind_from_string(flags.task);
    spec.n_learners = flags.learners;
    spec.n_samples = flags.samples;
    spec.n_skills = flags.skills;
    spec.seed = flags.seed;
    spec.bernoulli = !flags.deterministic;
    spec.noise_sd = flags.noise_sd;
    cogdiag::SyntheticData data = cogdiag::generate_synthetic(spec);

    std::filesystem::create_directories(flags.out);
    std::filesystem::path base(flags.out);
    cogdiag::save_response_logs(data.responses, (base / "responses.jsonl").string());
    if (data.skills)
        cogdiag::save_skill_matrix(*data.skills, data.responses.sample_names(),
                                   (base / "q_matrix.csv").string());
    cogdiag::write_report(data.planted, (base / "planted.json").string());
    std::cout << "synth: wrote " << (base / "responses.jsonl").string() << " ("
              << data.responses.n_triples() << " triples)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learner ability diagnosis from response logs"};
    app.require_subcommand(1);

    CommonFlags reliability_flags, consistency_flags, stability_flags, diagnose_flags,
        search_flags;
    CLI::App* reliability =
        app.add_subcommand("reliability", "held-out response prediction quality");
    attach_common(reliability, reliability_flags);
    CLI::App* consistency =
        app.add_subcommand("consistency", "ability vs coarse-metric rank correlation");
    attach_common(consistency, consistency_flags);
    CLI::App* stability =
        app.add_subcommand("stability", "ranking agreement across sample partitions");
    attach_common(stability, stability_flags);
    stability_flags.opt_sizes = stability->add_option(
        "--partition-sizes", stability_flags.sizes_csv, "comma-separated sizes");
    CLI::App* diagnose =
        app.add_subcommand("diagnose", "export ability and sample-factor reports");
    attach_common(diagnose, diagnose_flags);
    CLI::App* search =
        app.add_subcommand("search", "random hyperparameter search on the grids");
    attach_common(search, search_flags);
    search_flags.opt_budget =
        search->add_option("--budget", search_flags.budget, "number of trials");

    SynthFlags synth_flags;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--family", synth_flags.family, "generating family");
    synth->add_option("--task", synth_flags.task, "task kind: cls or reg");
    synth->add_option("--learners", synth_flags.learners, "learner count");
    synth->add_option("--samples", synth_flags.samples, "sample count");
    synth->add_option("--skills", synth_flags.skills, "skill / latent dimension");
    synth->add_option("--seed", synth_flags.seed, "generation seed");
    synth->add_flag("--deterministic", synth_flags.deterministic,
                    "threshold probabilities instead of sampling");
    synth->add_option("--noise-sd", synth_flags.noise_sd, "regression noise level");
    synth->add_option("--out", synth_flags.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(reliability))
            return run_command("reliability", build_config(reliability_flags));
        if (app.got_subcommand(consistency))
            return run_command("consistency", build_config(consistency_flags));
        if (app.got_subcommand(stability))
            return run_command("stability", build_config(stability_flags));
        if (app.got_subcommand(diagnose))
            return run_command("diagnose", build_config(diagnose_flags));
        if (app.got_subcommand(search))
            return run_command("search", build_config(search_flags));
        if (app.got_subcommand(synth)) return run_synth(synth_flags);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
