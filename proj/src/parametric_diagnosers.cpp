#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cogdiag/diagnosers.hpp"

namespace cogdiag {

namespace {

/// Constant (no-grad) tensor of the skill-matrix rows for a sample batch.
Tensor skill_rows_tensor(const SkillMatrix& skills, std::span<const int> samples) {
    const int K = skills.n_skills();
    std::vector<double> cells;
    cells.reserve(samples.size() * static_cast<size_t>(K));
    for (int j : samples)
        for (int k = 0; k < K; ++k) cells.push_back(static_cast<double>(skills.at(j, k)));
    return Tensor::from(std::move(cells), static_cast<int>(samples.size()), K);
}

/// Mean over all samples of the skill-masked mean of unit-interval abilities.
double masked_mean_ability(const SkillMatrix& skills, std::span<const double> ability) {
    double total = 0.0;
    for (int j = 0; j < skills.n_samples(); ++j) {
        double dot = 0.0;
        int count = 0;
        for (int k = 0; k < skills.n_skills(); ++k)
            if (skills.at(j, k)) {
                dot += ability[static_cast<size_t>(k)];
                ++count;
            }
        total += dot / static_cast<double>(count);
    }
    return total / static_cast<double>(skills.n_samples());
}

void check_learner_index(int learner, int n_learners) {
    if (learner < 0 || learner >= n_learners)
        throw std::invalid_argument("ability: learner index out of range");
}

void check_sample_index(int sample, int n_samples) {
    if (sample < 0 || sample >= n_samples)
        throw std::invalid_argument("sample index out of range");
}

double column_mean(const Tensor& t, int col) {
    double s = 0.0;
    for (int r = 0; r < t.rows(); ++r) s += t.at(r, col);
    return s / static_cast<double>(t.rows());
}

void negate_column(Tensor& t, int col) {
    for (int r = 0; r < t.rows(); ++r) t.at(r, col) = -t.at(r, col);
}

}  // namespace

// ---------------------------------------------------------------------------
// IRT
// ---------------------------------------------------------------------------

IrtDiagnoser::IrtDiagnoser(TaskKind task, int n_learners, int n_samples,
                           HyperParams hyper)
    : ParametricDiagnoser(task, n_learners, n_samples, hyper) {
    register_param("ability", n_learners, 1, 1);
    register_param("difficulty", n_samples, 1, 1);
    register_param("discrimination", n_samples, 1, 1);
}

Tensor IrtDiagnoser::forward_scores(std::span<const int> learners,
                                    std::span<const int> samples) const {
    Tensor a = row_lookup(param("ability"), {learners.begin(), learners.end()});
    Tensor d = row_lookup(param("difficulty"), {samples.begin(), samples.end()});
    Tensor k = row_lookup(param("discrimination"), {samples.begin(), samples.end()});
    Tensor logit = scalar_mul(elementwise_mul(k, sub(a, d)), 1.7);
    return sigmoid(logit);
}

AbilityProfile IrtDiagnoser::ability(int learner) const {
    if (!fitted()) throw std::logic_error("ability: model has not been fitted");
    check_learner_index(learner, n_learners_);
    double a = param("ability").at(learner, 0);
    return {learner, {a}, sigmoid_scalar(a), SpaceKind::Unidimensional};
}

// The response curve is invariant under jointly negating (a, d, k); orient
// the fit so discrimination is net positive.
void IrtDiagnoser::canonicalize() {
    Tensor& k = param("discrimination");
    if (column_mean(k, 0) >= 0.0) return;
    negate_column(k, 0);
    negate_column(param("ability"), 0);
    negate_column(param("difficulty"), 0);
}

double IrtDiagnoser::sample_difficulty(int sample) const {
    check_sample_index(sample, n_samples_);
    return sigmoid_scalar(param("difficulty").at(sample, 0));
}

double IrtDiagnoser::sample_discrimination(int sample) const {
    check_sample_index(sample, n_samples_);
    return sigmoid_scalar(param("discrimination").at(sample, 0));
}

// ---------------------------------------------------------------------------
// MIRT
// ---------------------------------------------------------------------------

MirtDiagnoser::MirtDiagnoser(TaskKind task, int n_learners, int n_samples,
                             HyperParams hyper)
    : ParametricDiagnoser(task, n_learners, n_samples, hyper) {
    const int dim = hyper_.latent_skills;
    if (dim < 1) throw std::invalid_argument("MIRT: latent dimension must be >= 1");
    register_param("theta", n_learners, dim, dim);
    register_param("discrimination", n_samples, dim, dim);
    register_param("intercept", n_samples, 1, 1);
}

Tensor MirtDiagnoser::forward_scores(std::span<const int> learners,
                                     std::span<const int> samples) const {
    Tensor theta = row_lookup(param("theta"), {learners.begin(), learners.end()});
    Tensor k = row_lookup(param("discrimination"), {samples.begin(), samples.end()});
    Tensor d = row_lookup(param("intercept"), {samples.begin(), samples.end()});
    Tensor logit = sub(sum_row(elementwise_mul(theta, k)), d);
    return sigmoid(logit);
}

AbilityProfile MirtDiagnoser::ability(int learner) const {
    if (!fitted()) throw std::logic_error("ability: model has not been fitted");
    check_learner_index(learner, n_learners_);
    const Tensor& theta = param("theta");
    std::vector<double> coords(static_cast<size_t>(theta.cols()));
    for (int k = 0; k < theta.cols(); ++k) coords[static_cast<size_t>(k)] = theta.at(learner, k);
    double mean = std::accumulate(coords.begin(), coords.end(), 0.0) /
                  static_cast<double>(coords.size());
    return {learner, std::move(coords), sigmoid_scalar(mean), SpaceKind::LatentSkill};
}

// k . theta is invariant under flipping the sign of any latent dimension in
// both factors; orient each so discrimination is net positive.
void MirtDiagnoser::canonicalize() {
    Tensor& k = param("discrimination");
    Tensor& theta = param("theta");
    for (int c = 0; c < k.cols(); ++c)
        if (column_mean(k, c) < 0.0) {
            negate_column(k, c);
            negate_column(theta, c);
        }
}

double MirtDiagnoser::sample_difficulty(int sample) const {
    check_sample_index(sample, n_samples_);
    return sigmoid_scalar(param("intercept").at(sample, 0));
}

double MirtDiagnoser::sample_discrimination(int sample) const {
    check_sample_index(sample, n_samples_);
    const Tensor& k = param("discrimination");
    double mean = 0.0;
    for (int c = 0; c < k.cols(); ++c) mean += k.at(sample, c);
    return sigmoid_scalar(mean / static_cast<double>(k.cols()));
}

// ---------------------------------------------------------------------------
// MF
// ---------------------------------------------------------------------------

MfDiagnoser::MfDiagnoser(TaskKind task, int n_learners, int n_samples, HyperParams hyper)
    : ParametricDiagnoser(task, n_learners, n_samples, hyper) {
    const int dim = hyper_.latent_skills;
    if (dim < 1) throw std::invalid_argument("MF: latent dimension must be >= 1");
    if (hyper_.l2_weight < 0.0) throw std::invalid_argument("MF: negative l2 weight");
    register_param("learner_factors", n_learners, dim, dim);
    register_param("sample_factors", n_samples, dim, dim);
}

Tensor MfDiagnoser::forward_scores(std::span<const int> learners,
                                   std::span<const int> samples) const {
    Tensor u = row_lookup(param("learner_factors"), {learners.begin(), learners.end()});
    Tensor v = row_lookup(param("sample_factors"), {samples.begin(), samples.end()});
    return sigmoid(sum_row(elementwise_mul(u, v)));
}

Tensor MfDiagnoser::training_loss(std::span<const int> learners,
                                  std::span<const int> samples,
                                  const Tensor& targets) const {
    Tensor u = row_lookup(param("learner_factors"), {learners.begin(), learners.end()});
    Tensor v = row_lookup(param("sample_factors"), {samples.begin(), samples.end()});
    Tensor scores = sigmoid(sum_row(elementwise_mul(u, v)));
    Tensor data_term = task_ == TaskKind::Classification ? bce_loss(scores, targets)
                                                         : mse_loss(scores, targets);
    // Squared-norm penalty on the embeddings of the batch, mean per triple.
    Tensor norms = add(sum_row(elementwise_mul(u, u)), sum_row(elementwise_mul(v, v)));
    return add(data_term, scalar_mul(mean_all(norms), hyper_.l2_weight));
}

void MfDiagnoser::canonicalize() {
    Tensor& u = param("learner_factors");
    Tensor& v = param("sample_factors");
    for (int c = 0; c < v.cols(); ++c)
        if (column_mean(v, c) < 0.0) {
            negate_column(v, c);
            negate_column(u, c);
        }
}

AbilityProfile MfDiagnoser::ability(int learner) const {
    if (!fitted()) throw std::logic_error("ability: model has not been fitted");
    check_learner_index(learner, n_learners_);
    const Tensor& u = param("learner_factors");
    std::vector<double> coords(static_cast<size_t>(u.cols()));
    for (int k = 0; k < u.cols(); ++k) coords[static_cast<size_t>(k)] = u.at(learner, k);
    double mean = std::accumulate(coords.begin(), coords.end(), 0.0) /
                  static_cast<double>(coords.size());
    return {learner, std::move(coords), sigmoid_scalar(mean), SpaceKind::LatentSkill};
}

// ---------------------------------------------------------------------------
// NeuralCD
// ---------------------------------------------------------------------------

NeuralCdDiagnoser::NeuralCdDiagnoser(TaskKind task, int n_learners, SkillMatrix skills,
                                     HyperParams hyper)
    : ParametricDiagnoser(task, n_learners, skills.n_samples(), hyper),
      skills_(std::move(skills)) {
    const int K = skills_.n_skills();
    if (hyper_.ld1 < 1 || hyper_.ld2 < 1)
        throw std::invalid_argument("NeuralCD: hidden widths must be >= 1");
    register_param("ability", n_learners, K, K);
    register_param("difficulty", n_samples_, K, K);
    register_param("discrimination", n_samples_, 1, 1);
    register_param("w1", K, hyper_.ld1, K);
    register_bias("b1", 1, hyper_.ld1);
    register_param("w2", hyper_.ld1, hyper_.ld2, hyper_.ld1);
    register_bias("b2", 1, hyper_.ld2);
    register_param("w3", hyper_.ld2, 1, hyper_.ld2);
    register_bias("b3", 1, 1);
}

Tensor NeuralCdDiagnoser::forward_scores(std::span<const int> learners,
                                         std::span<const int> samples) const {
    Tensor a = sigmoid(row_lookup(param("ability"), {learners.begin(), learners.end()}));
    Tensor d = sigmoid(row_lookup(param("difficulty"), {samples.begin(), samples.end()}));
    Tensor k =
        sigmoid(row_lookup(param("discrimination"), {samples.begin(), samples.end()}));
    Tensor q = skill_rows_tensor(skills_, samples);
    Tensor x = elementwise_mul(elementwise_mul(q, sub(a, d)), k);
    Tensor h1 = sigmoid(add(matmul(x, param("w1")), param("b1")));
    Tensor h2 = sigmoid(add(matmul(h1, param("w2")), param("b2")));
    return sigmoid(add(matmul(h2, param("w3")), param("b3")));
}

std::vector<Tensor> NeuralCdDiagnoser::nonnegative_params() const {
    return {param("w1"), param("w2"), param("w3")};
}

AbilityProfile NeuralCdDiagnoser::ability(int learner) const {
    if (!fitted()) throw std::logic_error("ability: model has not been fitted");
    check_learner_index(learner, n_learners_);
    const Tensor& a = param("ability");
    std::vector<double> coords(static_cast<size_t>(a.cols()));
    for (int k = 0; k < a.cols(); ++k)
        coords[static_cast<size_t>(k)] = sigmoid_scalar(a.at(learner, k));
    double overall = masked_mean_ability(skills_, coords);
    return {learner, std::move(coords), overall, SpaceKind::ExplicitSkill};
}

double NeuralCdDiagnoser::sample_difficulty(int sample) const {
    check_sample_index(sample, n_samples_);
    const Tensor& d = param("difficulty");
    double dot = 0.0;
    int count = 0;
    for (int k = 0; k < skills_.n_skills(); ++k)
        if (skills_.at(sample, k)) {
            dot += sigmoid_scalar(d.at(sample, k));
            ++count;
        }
    return dot / static_cast<double>(count);
}

double NeuralCdDiagnoser::sample_discrimination(int sample) const {
    check_sample_index(sample, n_samples_);
    return sigmoid_scalar(param("discrimination").at(sample, 0));
}

// ---------------------------------------------------------------------------
// Camilla-Base
// ---------------------------------------------------------------------------

CamillaBaseDiagnoser::CamillaBaseDiagnoser(TaskKind task, int n_learners,
                                           SkillMatrix skills, HyperParams hyper)
    : ParametricDiagnoser(task, n_learners, skills.n_samples(), hyper),
      skills_(std::move(skills)) {
    const int K = skills_.n_skills();
    register_param("ability", n_learners, K, K);
    register_param("difficulty", n_samples_, 1, 1);
    register_param("discrimination", n_samples_, K, K);
}

Tensor CamillaBaseDiagnoser::forward_scores(std::span<const int> learners,
                                            std::span<const int> samples) const {
    Tensor a = row_lookup(param("ability"), {learners.begin(), learners.end()});
    Tensor d = row_lookup(param("difficulty"), {samples.begin(), samples.end()});
    Tensor b = row_lookup(param("discrimination"), {samples.begin(), samples.end()});
    Tensor disc = hyper_.raw_discrimination ? b : softplus(b);
    Tensor q = skill_rows_tensor(skills_, samples);
    Tensor logit = sum_row(elementwise_mul(elementwise_mul(q, disc), sub(a, d)));
    return sigmoid(logit);
}

AbilityProfile CamillaBaseDiagnoser::ability(int learner) const {
    if (!fitted()) throw std::logic_error("ability: model has not been fitted");
    check_learner_index(learner, n_learners_);
    const Tensor& a = param("ability");
    std::vector<double> coords(static_cast<size_t>(a.cols()));
    for (int k = 0; k < a.cols(); ++k)
        coords[static_cast<size_t>(k)] = sigmoid_scalar(a.at(learner, k));
    double overall = masked_mean_ability(skills_, coords);
    return {learner, std::move(coords), overall, SpaceKind::ExplicitSkill};
}

double CamillaBaseDiagnoser::overall_ability(int learner) const {
    return ability(learner).overall;
}

double CamillaBaseDiagnoser::sample_difficulty(int sample) const {
    check_sample_index(sample, n_samples_);
    return sigmoid_scalar(param("difficulty").at(sample, 0));
}

double CamillaBaseDiagnoser::sample_discrimination(int sample) const {
    check_sample_index(sample, n_samples_);
    const Tensor& b = param("discrimination");
    double mean = 0.0;
    for (int c = 0; c < b.cols(); ++c) mean += b.at(sample, c);
    return sigmoid_scalar(mean / static_cast<double>(b.cols()));
}

// ---------------------------------------------------------------------------
// Camilla
// ---------------------------------------------------------------------------

CamillaDiagnoser::CamillaDiagnoser(TaskKind task, int n_learners, int n_samples,
                                   HyperParams hyper)
    : ParametricDiagnoser(task, n_learners, n_samples, hyper) {
    const int dim = hyper_.latent_skills;
    if (dim < 1) throw std::invalid_argument("Camilla: latent dimension must be >= 1");
    if (hyper_.ld2 < 1) throw std::invalid_argument("Camilla: hidden width must be >= 1");
    register_param("ability", n_learners, dim, dim);
    register_param("skill_mask", n_samples, dim, dim);
    register_param("difficulty", n_samples, dim, dim);
    register_param("discrimination", n_samples, 1, 1);
    register_param("w1", dim, hyper_.ld2, dim);
    register_bias("b1", 1, hyper_.ld2);
    register_param("w2", hyper_.ld2, 1, hyper_.ld2);
    register_bias("b2", 1, 1);
}

Tensor CamillaDiagnoser::forward_scores(std::span<const int> learners,
                                        std::span<const int> samples) const {
    Tensor a = sigmoid(row_lookup(param("ability"), {learners.begin(), learners.end()}));
    Tensor q =
        softmax_row(row_lookup(param("skill_mask"), {samples.begin(), samples.end()}));
    Tensor d = sigmoid(row_lookup(param("difficulty"), {samples.begin(), samples.end()}));
    Tensor b =
        sigmoid(row_lookup(param("discrimination"), {samples.begin(), samples.end()}));
    Tensor y = elementwise_mul(elementwise_mul(q, sub(a, d)), b);
    Tensor o = sigmoid(add(matmul(y, param("w1")), param("b1")));
    return sigmoid(add(matmul(o, param("w2")), param("b2")));
}

std::vector<Tensor> CamillaDiagnoser::nonnegative_params() const {
    return {param("w1"), param("w2")};
}

std::vector<double> CamillaDiagnoser::skill_mask(int sample) const {
    check_sample_index(sample, n_samples_);
    const Tensor& w = param("skill_mask");
    std::vector<double> row(static_cast<size_t>(w.cols()));
    double mx = w.at(sample, 0);
    for (int k = 1; k < w.cols(); ++k) mx = std::max(mx, w.at(sample, k));
    double denom = 0.0;
    for (int k = 0; k < w.cols(); ++k) {
        row[static_cast<size_t>(k)] = std::exp(w.at(sample, k) - mx);
        denom += row[static_cast<size_t>(k)];
    }
    for (double& v : row) v /= denom;
    return row;
}

AbilityProfile CamillaDiagnoser::ability(int learner) const {
    if (!fitted()) throw std::logic_error("ability: model has not been fitted");
    check_learner_index(learner, n_learners_);
    std::vector<int> all(static_cast<size_t>(n_samples_));
    std::iota(all.begin(), all.end(), 0);
    const Tensor& a = param("ability");
    std::vector<double> coords(static_cast<size_t>(a.cols()));
    for (int k = 0; k < a.cols(); ++k)
        coords[static_cast<size_t>(k)] = sigmoid_scalar(a.at(learner, k));
    double overall = subset_ability(learner, all);
    return {learner, std::move(coords), overall, SpaceKind::LatentSkill};
}

double CamillaDiagnoser::subset_ability(int learner, std::span<const int> samples) const {
    if (!fitted()) throw std::logic_error("subset_ability: model has not been fitted");
    check_learner_index(learner, n_learners_);
    if (samples.empty()) throw std::invalid_argument("subset_ability: empty sample subset");
    const int dim = hyper_.latent_skills;
    std::vector<double> mask_mean(static_cast<size_t>(dim), 0.0);
    for (int j : samples) {
        std::vector<double> mask = skill_mask(j);
        for (int k = 0; k < dim; ++k) mask_mean[static_cast<size_t>(k)] += mask[static_cast<size_t>(k)];
    }
    const Tensor& a = param("ability");
    double total = 0.0;
    for (int k = 0; k < dim; ++k)
        total += mask_mean[static_cast<size_t>(k)] / static_cast<double>(samples.size()) *
                 sigmoid_scalar(a.at(learner, k));
    return total;
}

double CamillaDiagnoser::sample_difficulty(int sample) const {
    check_sample_index(sample, n_samples_);
    std::vector<double> mask = skill_mask(sample);
    const Tensor& d = param("difficulty");
    double total = 0.0;
    for (int k = 0; k < d.cols(); ++k)
        total += mask[static_cast<size_t>(k)] * sigmoid_scalar(d.at(sample, k));
    return total;
}

double CamillaDiagnoser::sample_discrimination(int sample) const {
    check_sample_index(sample, n_samples_);
    return sigmoid_scalar(param("discrimination").at(sample, 0));
}

}  // namespace cogdiag
