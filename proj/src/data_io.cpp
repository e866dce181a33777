#include "cogdiag/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cogdiag/diagnosers.hpp"
#include "cogdiag/optim.hpp"

namespace cogdiag {

namespace {

[[noreturn]] void line_error(const std::string& path, size_t line_no,
                             const std::string& what) {
    throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + what);
}

struct Interner {
    std::unordered_map<std::string, int> index;
    std::vector<std::string> names;

    int intern(const std::string& name) {
        auto [it, inserted] = index.try_emplace(name, static_cast<int>(names.size()));
        if (inserted) names.push_back(name);
        return it->second;
    }
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

std::string strip(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

ResponseMatrix load_response_logs(const std::string& path, TaskKind task) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    Interner learners, samples;
    std::vector<Triple> triples;
    std::unordered_set<int64_t> seen;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            line_error(path, line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object() || !obj.contains("learner") || !obj.contains("sample") ||
            !obj.contains("score"))
            line_error(path, line_no, "expected keys learner, sample, score");
        if (!obj["learner"].is_string() || !obj["sample"].is_string() ||
            !obj["score"].is_number())
            line_error(path, line_no, "learner/sample must be strings, score a number");
        double score = obj["score"].get<double>();
        if (!std::isfinite(score) || score < 0.0 || score > 1.0)
            line_error(path, line_no, "score outside [0,1]");
        if (task == TaskKind::Classification && score != 0.0 && score != 1.0)
            line_error(path, line_no, "classification score must be 0 or 1");
        int li = learners.intern(obj["learner"].get<std::string>());
        int si = samples.intern(obj["sample"].get<std::string>());
        // Pair keys use a wide stride so interning order cannot collide.
        int64_t key = static_cast<int64_t>(li) * (1ll << 31) + si;
        if (!seen.insert(key).second)
            line_error(path, line_no, "duplicate (learner, sample) pair");
        triples.push_back({li, si, score});
    }
    if (triples.empty()) throw std::invalid_argument(path + ": no response triples");
    const int n_learners = static_cast<int>(learners.names.size());
    const int n_samples = static_cast<int>(samples.names.size());
    return ResponseMatrix(n_learners, n_samples, task, std::move(triples),
                          std::move(learners.names), std::move(samples.names));
}

void save_response_logs(const ResponseMatrix& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const Triple& t : data.triples()) {
        nlohmann::json obj = {
            {"learner", data.learner_names()[static_cast<size_t>(t.learner)]},
            {"sample", data.sample_names()[static_cast<size_t>(t.sample)]},
            {"score", t.score}};
        out << obj.dump() << "\n";
    }
}

SkillMatrix load_skill_matrix(const std::string& path,
                              const std::vector<std::string>& sample_names) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::unordered_map<std::string, int> sample_index;
    for (size_t i = 0; i < sample_names.size(); ++i)
        sample_index[sample_names[i]] = static_cast<int>(i);

    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
    std::vector<std::string> header = split_csv_line(strip(line));
    if (header.size() < 2 || strip(header[0]) != "sample")
        throw std::invalid_argument(path + ": header must be sample,<skill names>");
    std::vector<std::string> skill_names(header.begin() + 1, header.end());
    for (std::string& name : skill_names) name = strip(name);
    const int n_skills = static_cast<int>(skill_names.size());
    const int n_samples = static_cast<int>(sample_names.size());

    std::vector<uint8_t> cells(static_cast<size_t>(n_samples) * n_skills, 0);
    std::vector<uint8_t> filled(static_cast<size_t>(n_samples), 0);
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        std::vector<std::string> fields = split_csv_line(strip(line));
        if (static_cast<int>(fields.size()) != n_skills + 1)
            line_error(path, line_no, "expected " + std::to_string(n_skills + 1) +
                                          " fields");
        std::string name = strip(fields[0]);
        auto it = sample_index.find(name);
        if (it == sample_index.end())
            line_error(path, line_no, "unknown sample name: " + name);
        if (filled[static_cast<size_t>(it->second)])
            line_error(path, line_no, "duplicate row for sample: " + name);
        filled[static_cast<size_t>(it->second)] = 1;
        int row_sum = 0;
        for (int k = 0; k < n_skills; ++k) {
            std::string cell = strip(fields[static_cast<size_t>(k) + 1]);
            if (cell != "0" && cell != "1")
                line_error(path, line_no, "cells must be 0 or 1, got: " + cell);
            uint8_t v = cell == "1" ? 1 : 0;
            cells[static_cast<size_t>(it->second) * n_skills + k] = v;
            row_sum += v;
        }
        if (row_sum == 0)
            line_error(path, line_no, "sample " + name + " has no skills");
    }
    for (int j = 0; j < n_samples; ++j)
        if (!filled[static_cast<size_t>(j)])
            throw std::invalid_argument(path + ": missing row for sample " +
                                        sample_names[static_cast<size_t>(j)]);
    return SkillMatrix(n_samples, n_skills, std::move(cells), std::move(skill_names));
}

void save_skill_matrix(const SkillMatrix& skills,
                       const std::vector<std::string>& sample_names,
                       const std::string& path) {
    if (static_cast<int>(sample_names.size()) != skills.n_samples())
        throw std::invalid_argument("save_skill_matrix: sample name count mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "sample";
    for (const std::string& name : skills.skill_names()) out << "," << name;
    out << "\n";
    for (int j = 0; j < skills.n_samples(); ++j) {
        out << sample_names[static_cast<size_t>(j)];
        for (int k = 0; k < skills.n_skills(); ++k)
            out << "," << static_cast<int>(skills.at(j, k));
        out << "\n";
    }
}

RawRegressionLog load_raw_regression(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    Interner learners, samples;
    RawRegressionLog raw;
    std::unordered_set<int64_t> seen;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            line_error(path, line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object() || !obj.contains("learner") || !obj.contains("sample") ||
            !obj.contains("abs_error"))
            line_error(path, line_no, "expected keys learner, sample, abs_error");
        if (!obj["abs_error"].is_number())
            line_error(path, line_no, "abs_error must be a number");
        double err = obj["abs_error"].get<double>();
        if (!std::isfinite(err) || err < 0.0)
            line_error(path, line_no, "abs_error must be finite and >= 0");
        int li = learners.intern(obj["learner"].get<std::string>());
        int si = samples.intern(obj["sample"].get<std::string>());
        int64_t key = static_cast<int64_t>(li) * (1ll << 31) + si;
        if (!seen.insert(key).second)
            line_error(path, line_no, "duplicate (learner, sample) pair");
        raw.entries.push_back({li, si, err});
    }
    if (raw.entries.empty()) throw std::invalid_argument(path + ": no entries");
    raw.learner_names = std::move(learners.names);
    raw.sample_names = std::move(samples.names);
    return raw;
}

ResponseMatrix regression_scores(const RawRegressionLog& raw) {
    const int n_samples = static_cast<int>(raw.sample_names.size());
    std::vector<double> min_err(static_cast<size_t>(n_samples),
                                std::numeric_limits<double>::infinity());
    std::vector<double> max_err(static_cast<size_t>(n_samples),
                                -std::numeric_limits<double>::infinity());
    for (const auto& e : raw.entries) {
        if (e.abs_error < 0.0)
            throw std::invalid_argument("regression_scores: negative error");
        min_err[static_cast<size_t>(e.sample)] =
            std::min(min_err[static_cast<size_t>(e.sample)], e.abs_error);
        max_err[static_cast<size_t>(e.sample)] =
            std::max(max_err[static_cast<size_t>(e.sample)], e.abs_error);
    }
    std::vector<Triple> triples;
    triples.reserve(raw.entries.size());
    for (const auto& e : raw.entries) {
        double lo = min_err[static_cast<size_t>(e.sample)];
        double hi = max_err[static_cast<size_t>(e.sample)];
        // All errors equal on a sample (including a lone observation): every
        // learner is jointly best and scores 1.
        double score = hi > lo ? 1.0 - (e.abs_error - lo) / (hi - lo) : 1.0;
        triples.push_back({e.learner, e.sample, score});
    }
    return ResponseMatrix(static_cast<int>(raw.learner_names.size()), n_samples,
                          TaskKind::Regression, std::move(triples), raw.learner_names,
                          raw.sample_names);
}

DatasetSplit split_622(const ResponseMatrix& data, uint64_t seed) {
    const int n = data.n_triples();
    if (n < 5) throw std::invalid_argument("split_622: needs at least 5 triples");
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const int n_train = (3 * n + 4) / 5;           // ceil(0.6 n)
    const int n_val = std::min((n + 4) / 5, n - n_train);  // ceil(0.2 n), capped
    DatasetSplit split;
    split.seed = seed;
    split.train.assign(idx.begin(), idx.begin() + n_train);
    split.validation.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    split.test.assign(idx.begin() + n_train + n_val, idx.end());
    return split;
}

namespace {

/// Builds a single-skill matrix assigning sample j to skill j mod K.
SkillMatrix round_robin_skills(int n_samples, int n_skills) {
    std::vector<uint8_t> cells(static_cast<size_t>(n_samples) * n_skills, 0);
    for (int j = 0; j < n_samples; ++j)
        cells[static_cast<size_t>(j) * n_skills + (j % n_skills)] = 1;
    return SkillMatrix(n_samples, n_skills, std::move(cells));
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_learners <= 0 || spec.n_samples <= 0 || spec.n_skills <= 0)
        throw std::invalid_argument("generate_synthetic: counts must be positive");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const int N = spec.n_learners, M = spec.n_samples, K = spec.n_skills;
    nlohmann::json planted;
    planted["family"] = to_string(spec.family);
    std::optional<SkillMatrix> skills;

    // Probability matrix p[i][j] per the family's forward model.
    std::vector<double> probs(static_cast<size_t>(N) * M, 0.5);
    auto prob = [&](int i, int j) -> double& {
        return probs[static_cast<size_t>(i) * M + j];
    };

    switch (spec.family) {
        case DiagnoserFamily::Vanilla: {
            std::vector<double> means(static_cast<size_t>(N));
            for (double& m : means) m = 0.2 + 0.7 * unit(rng);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < M; ++j) prob(i, j) = means[static_cast<size_t>(i)];
            planted["learner_mean"] = means;
            break;
        }
        case DiagnoserFamily::SkillVanilla: {
            skills = round_robin_skills(M, K);
            std::vector<double> theta(static_cast<size_t>(N) * K);
            for (double& t : theta) t = 0.05 + 0.9 * unit(rng);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < M; ++j)
                    prob(i, j) = theta[static_cast<size_t>(i) * K + (j % K)];
            planted["skill_mean"] = theta;
            break;
        }
        case DiagnoserFamily::Irt: {
            std::vector<double> a(static_cast<size_t>(N)), d(static_cast<size_t>(M)),
                k(static_cast<size_t>(M));
            for (double& v : a) v = normal(rng);
            for (double& v : d) v = normal(rng);
            for (double& v : k) v = 0.5 + 1.5 * unit(rng);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < M; ++j)
                    prob(i, j) = sigmoid_scalar(
                        1.7 * k[static_cast<size_t>(j)] *
                        (a[static_cast<size_t>(i)] - d[static_cast<size_t>(j)]));
            planted["ability"] = a;
            planted["difficulty"] = d;
            planted["discrimination"] = k;
            break;
        }
        case DiagnoserFamily::Mirt: {
            std::vector<double> theta(static_cast<size_t>(N) * K),
                k(static_cast<size_t>(M) * K), d(static_cast<size_t>(M));
            for (double& v : theta) v = normal(rng);
            for (double& v : k) v = 0.3 + 0.9 * unit(rng);
            for (double& v : d) v = normal(rng);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < M; ++j) {
                    double logit = -d[static_cast<size_t>(j)];
                    for (int s = 0; s < K; ++s)
                        logit += theta[static_cast<size_t>(i) * K + s] *
                                 k[static_cast<size_t>(j) * K + s];
                    prob(i, j) = sigmoid_scalar(logit);
                }
            planted["theta"] = theta;
            planted["discrimination"] = k;
            planted["intercept"] = d;
            break;
        }
        case DiagnoserFamily::Mf: {
            std::vector<double> u(static_cast<size_t>(N) * K),
                v(static_cast<size_t>(M) * K);
            for (double& x : u) x = 0.7 * normal(rng);
            for (double& x : v) x = 0.7 * normal(rng);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < M; ++j) {
                    double dot = 0.0;
                    for (int s = 0; s < K; ++s)
                        dot += u[static_cast<size_t>(i) * K + s] *
                               v[static_cast<size_t>(j) * K + s];
                    prob(i, j) = sigmoid_scalar(dot);
                }
            planted["learner_factors"] = u;
            planted["sample_factors"] = v;
            break;
        }
        case DiagnoserFamily::CamillaBase: {
            skills = round_robin_skills(M, K);
            std::vector<double> a(static_cast<size_t>(N) * K), d(static_cast<size_t>(M)),
                b(static_cast<size_t>(M) * K);
            for (double& v : a) v = normal(rng);
            for (double& v : d) v = normal(rng);
            for (double& v : b) v = 0.5 * normal(rng);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < M; ++j) {
                    double logit = 0.0;
                    for (int s = 0; s < K; ++s)
                        if (skills->at(j, s))
                            logit += softplus_scalar(b[static_cast<size_t>(j) * K + s]) *
                                     (a[static_cast<size_t>(i) * K + s] -
                                      d[static_cast<size_t>(j)]);
                    prob(i, j) = sigmoid_scalar(logit);
                }
            planted["ability"] = a;
            planted["difficulty"] = d;
            planted["discrimination"] = b;
            break;
        }
        case DiagnoserFamily::NeuralCd:
        case DiagnoserFamily::Camilla: {
            // Plant a scaled random instance of the model itself and sample
            // from its predictions.
            if (spec.family == DiagnoserFamily::NeuralCd)
                skills = round_robin_skills(M, K);
            HyperParams hyper;
            hyper.latent_skills = K;
            auto model = make_diagnoser(spec.family, TaskKind::Classification, N, M,
                                        skills, hyper);
            auto* parametric = dynamic_cast<ParametricDiagnoser*>(model.get());
            parametric->initialize_parameters(spec.seed);
            for (auto& [name, tensor] : parametric->named_parameters()) {
                for (double& v : tensor.values()) v *= 4.0;
                if (name == "w1" || name == "w2" || name == "w3")
                    project_nonnegative(tensor);
            }
            std::vector<std::pair<int, int>> pairs;
            pairs.reserve(static_cast<size_t>(N) * M);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < M; ++j) pairs.emplace_back(i, j);
            std::vector<double> scores = model->predict(pairs);
            for (size_t idx = 0; idx < scores.size(); ++idx) probs[idx] = scores[idx];
            planted["checkpoint"] = checkpoint_to_json(*model);
            break;
        }
    }

    std::vector<Triple> triples;
    triples.reserve(static_cast<size_t>(N) * M);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < M; ++j) {
            double p = prob(i, j);
            double score;
            if (spec.task == TaskKind::Classification) {
                score = spec.bernoulli ? (unit(rng) < p ? 1.0 : 0.0)
                                       : (p >= 0.5 ? 1.0 : 0.0);
            } else {
                score = p;
                if (spec.bernoulli && spec.noise_sd > 0.0)
                    score = std::clamp(p + spec.noise_sd * normal(rng), 0.0, 1.0);
            }
            triples.push_back({i, j, score});
        }
    ResponseMatrix responses(N, M, spec.task, std::move(triples));
    return {std::move(responses), std::move(skills), std::move(planted)};
}

}  // namespace cogdiag
