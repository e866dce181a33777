#include <fstream>

#include "cogdiag/diagnosers.hpp"

namespace cogdiag {

std::string to_string(DiagnoserFamily family) {
    switch (family) {
        case DiagnoserFamily::Vanilla: return "vanilla";
        case DiagnoserFamily::SkillVanilla: return "skill_vanilla";
        case DiagnoserFamily::Irt: return "irt";
        case DiagnoserFamily::Mirt: return "mirt";
        case DiagnoserFamily::Mf: return "mf";
        case DiagnoserFamily::NeuralCd: return "neuralcd";
        case DiagnoserFamily::CamillaBase: return "camilla_base";
        case DiagnoserFamily::Camilla: return "camilla";
    }
    return "unknown";
}

DiagnoserFamily family_from_string(const std::string& name) {
    for (DiagnoserFamily family : all_families())
        if (to_string(family) == name) return family;
    throw std::invalid_argument("unknown diagnoser family: " + name);
}

bool family_needs_skills(DiagnoserFamily family) {
    return family == DiagnoserFamily::SkillVanilla ||
           family == DiagnoserFamily::NeuralCd || family == DiagnoserFamily::CamillaBase;
}

bool family_is_parametric(DiagnoserFamily family) {
    return family != DiagnoserFamily::Vanilla && family != DiagnoserFamily::SkillVanilla;
}

std::vector<DiagnoserFamily> all_families() {
    return {DiagnoserFamily::Vanilla,  DiagnoserFamily::SkillVanilla,
            DiagnoserFamily::Irt,      DiagnoserFamily::Mirt,
            DiagnoserFamily::Mf,       DiagnoserFamily::NeuralCd,
            DiagnoserFamily::CamillaBase, DiagnoserFamily::Camilla};
}

std::unique_ptr<Diagnoser> make_diagnoser(DiagnoserFamily family, TaskKind task,
                                          int n_learners, int n_samples,
                                          const std::optional<SkillMatrix>& skills,
                                          const HyperParams& hyper) {
    if (family_needs_skills(family)) {
        if (!skills.has_value())
            throw std::invalid_argument(to_string(family) +
                                        " requires an explicit skill matrix");
        if (skills->n_samples() != n_samples)
            throw std::invalid_argument("skill matrix sample count does not match");
    }
    switch (family) {
        case DiagnoserFamily::Vanilla:
            return std::make_unique<VanillaDiagnoser>(task, n_learners, n_samples);
        case DiagnoserFamily::SkillVanilla:
            return std::make_unique<SkillVanillaDiagnoser>(task, n_learners, *skills);
        case DiagnoserFamily::Irt:
            return std::make_unique<IrtDiagnoser>(task, n_learners, n_samples, hyper);
        case DiagnoserFamily::Mirt:
            return std::make_unique<MirtDiagnoser>(task, n_learners, n_samples, hyper);
        case DiagnoserFamily::Mf:
            return std::make_unique<MfDiagnoser>(task, n_learners, n_samples, hyper);
        case DiagnoserFamily::NeuralCd:
            return std::make_unique<NeuralCdDiagnoser>(task, n_learners, *skills, hyper);
        case DiagnoserFamily::CamillaBase:
            return std::make_unique<CamillaBaseDiagnoser>(task, n_learners, *skills, hyper);
        case DiagnoserFamily::Camilla:
            return std::make_unique<CamillaDiagnoser>(task, n_learners, n_samples, hyper);
    }
    throw std::invalid_argument("unknown diagnoser family");
}

nlohmann::json checkpoint_to_json(const Diagnoser& model) {
    if (!model.fitted())
        throw std::logic_error("checkpoint: model has not been fitted");
    nlohmann::json doc;
    doc["format_version"] = 1;
    doc["family"] = to_string(model.family());
    doc["task"] = to_string(model.task());
    doc["n_learners"] = model.n_learners();
    doc["n_samples"] = model.n_samples();
    HyperParams hyper = model.hyper();
    doc["hyper"] = {{"latent_skills", hyper.latent_skills},
                    {"ld1", hyper.ld1},
                    {"ld2", hyper.ld2},
                    {"l2_weight", hyper.l2_weight},
                    {"raw_discrimination", hyper.raw_discrimination}};
    if (const SkillMatrix* skills = model.skills()) {
        doc["skills"] = {{"n_skills", skills->n_skills()},
                         {"cells", skills->cells()},
                         {"names", skills->skill_names()}};
    }
    nlohmann::json state = nlohmann::json::object();
    model.save_state(state);
    doc["state"] = std::move(state);
    return doc;
}

std::unique_ptr<Diagnoser> diagnoser_from_checkpoint(const nlohmann::json& doc) {
    if (doc.at("format_version").get<int>() != 1)
        throw std::invalid_argument("checkpoint: unsupported format version");
    DiagnoserFamily family = family_from_string(doc.at("family").get<std::string>());
    TaskKind task = task_kind_from_string(doc.at("task").get<std::string>());
    int n_learners = doc.at("n_learners").get<int>();
    int n_samples = doc.at("n_samples").get<int>();
    HyperParams hyper;
    const auto& h = doc.at("hyper");
    hyper.latent_skills = h.at("latent_skills").get<int>();
    hyper.ld1 = h.at("ld1").get<int>();
    hyper.ld2 = h.at("ld2").get<int>();
    hyper.l2_weight = h.at("l2_weight").get<double>();
    hyper.raw_discrimination = h.at("raw_discrimination").get<bool>();
    std::optional<SkillMatrix> skills;
    if (doc.contains("skills")) {
        const auto& s = doc.at("skills");
        skills.emplace(n_samples, s.at("n_skills").get<int>(),
                       s.at("cells").get<std::vector<uint8_t>>(),
                       s.at("names").get<std::vector<std::string>>());
    }
    auto model = make_diagnoser(family, task, n_learners, n_samples, skills, hyper);
    model->load_state(doc.at("state"));
    return model;
}

void save_checkpoint(const Diagnoser& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << checkpoint_to_json(model).dump(2) << "\n";
}

std::unique_ptr<Diagnoser> load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json doc = nlohmann::json::parse(in);
    return diagnoser_from_checkpoint(doc);
}

}  // namespace cogdiag
