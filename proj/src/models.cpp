#include "sas/models.hpp"

#include <cmath>

#include "sas/rng.hpp"

namespace sas {

void GaussianMixtureData::validate() const {
  if (weights.empty() || means.size() != weights.size() || variances.size() != weights.size())
    raise(ErrorCode::InvalidParams, "mixture needs matching weights/means/variances");
  double wsum = 0;
  for (double w : weights) {
    if (!(w >= 0)) raise(ErrorCode::InvalidParams, "mixture weights must be >= 0");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    raise(ErrorCode::InvalidParams, "mixture weights must sum to 1");
  for (double v : variances)
    if (!(v > 0)) raise(ErrorCode::InvalidParams, "component variances must be > 0");
  const size_t d = means.front().size();
  for (const auto& m : means)
    if (m.size() != d) raise(ErrorCode::DimensionMismatch, "component means disagree on dim");
}

GaussianMixtureData GaussianMixtureData::single(std::vector<double> mean, double variance) {
  GaussianMixtureData g;
  g.weights = {1.0};
  g.means = {std::move(mean)};
  g.variances = {variance};
  g.validate();
  return g;
}

GaussianMixtureData GaussianMixtureData::standard_normal(int dim) {
  return single(std::vector<double>(dim, 0.0), 1.0);
}

namespace {

// log N(x; alpha*mu, s2 I) up to the shared normalization in x-dim
double component_log_density(const GaussianMixtureData& g, int k, double alpha, double s2,
                             const double* x) {
  const int d = g.dim();
  double q = 0;
  for (int j = 0; j < d; ++j) {
    const double r = x[j] - alpha * g.means[k][j];
    q += r * r;
  }
  return -0.5 * q / s2 - 0.5 * d * std::log(s2);
}

}  // namespace

void data_predict_gmm(const GaussianMixtureData& g, const NoiseSchedule& s, const double* x,
                      double t, double* out) {
  const int d = g.dim(), K = g.components();
  const double alpha = s.alpha(t), sigma = s.sigma(t);
  const double sig2 = sigma * sigma;

  if (K == 1) {
    const double s2 = alpha * alpha * g.variances[0] + sig2;
    const double a = alpha * g.variances[0] / s2;
    const double c = sig2 / s2;
    for (int j = 0; j < d; ++j) out[j] = a * x[j] + c * g.means[0][j];
    return;
  }

  // responsibilities in log space
  double logw[64];
  if (K > 64) raise(ErrorCode::InvalidParams, "too many mixture components");
  double logmax = -1e300;
  for (int k = 0; k < K; ++k) {
    const double s2 = alpha * alpha * g.variances[k] + sig2;
    logw[k] = std::log(g.weights[k]) + component_log_density(g, k, alpha, s2, x);
    logmax = std::max(logmax, logw[k]);
  }
  double wsum = 0;
  for (int k = 0; k < K; ++k) {
    logw[k] = std::exp(logw[k] - logmax);
    wsum += logw[k];
  }
  for (int j = 0; j < d; ++j) out[j] = 0;
  for (int k = 0; k < K; ++k) {
    const double r = logw[k] / wsum;
    const double s2 = alpha * alpha * g.variances[k] + sig2;
    const double a = alpha * g.variances[k] / s2;
    const double c = sig2 / s2;
    for (int j = 0; j < d; ++j) out[j] += r * (a * x[j] + c * g.means[k][j]);
  }
}

void gmm_marginal_score(const GaussianMixtureData& g, const NoiseSchedule& s, const double* x,
                        double t, double* out) {
  const int d = g.dim(), K = g.components();
  const double alpha = s.alpha(t), sigma = s.sigma(t);
  const double sig2 = sigma * sigma;
  double logw[64];
  if (K > 64) raise(ErrorCode::InvalidParams, "too many mixture components");
  double logmax = -1e300;
  for (int k = 0; k < K; ++k) {
    const double s2 = alpha * alpha * g.variances[k] + sig2;
    logw[k] = std::log(g.weights[k]) + component_log_density(g, k, alpha, s2, x);
    logmax = std::max(logmax, logw[k]);
  }
  double wsum = 0;
  for (int k = 0; k < K; ++k) {
    logw[k] = std::exp(logw[k] - logmax);
    wsum += logw[k];
  }
  for (int j = 0; j < d; ++j) out[j] = 0;
  for (int k = 0; k < K; ++k) {
    const double r = logw[k] / wsum;
    const double s2 = alpha * alpha * g.variances[k] + sig2;
    for (int j = 0; j < d; ++j) out[j] += r * -(x[j] - alpha * g.means[k][j]) / s2;
  }
}

double exact_marginal_cdf(const GaussianMixtureData& g, const NoiseSchedule& s, double t,
                          double x) {
  if (g.dim() != 1) raise(ErrorCode::DimensionMismatch, "marginal CDF is 1-D only");
  const double alpha = s.alpha(t), sigma = s.sigma(t);
  double acc = 0;
  for (int k = 0; k < g.components(); ++k) {
    const double sd = std::sqrt(alpha * alpha * g.variances[k] + sigma * sigma);
    const double z = (x - alpha * g.means[k][0]) / sd;
    acc += g.weights[k] * 0.5 * std::erfc(-z / M_SQRT2);
  }
  return acc;
}

double exact_marginal_quantile(const GaussianMixtureData& g, const NoiseSchedule& s, double t,
                               double p) {
  if (!(p > 0) || !(p < 1)) raise(ErrorCode::OutOfRange, "quantile needs p in (0,1)");
  const double alpha = s.alpha(t), sigma = s.sigma(t);
  double lo = 1e300, hi = -1e300;
  for (int k = 0; k < g.components(); ++k) {
    const double sd = std::sqrt(alpha * alpha * g.variances[k] + sigma * sigma);
    lo = std::min(lo, alpha * g.means[k][0] - 40.0 * sd);
    hi = std::max(hi, alpha * g.means[k][0] + 40.0 * sd);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (exact_marginal_cdf(g, s, t, mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double gmm_sample(const GaussianMixtureData& g, uint64_t seed, uint64_t stream, uint64_t index) {
  if (g.dim() != 1) raise(ErrorCode::DimensionMismatch, "gmm_sample is 1-D only");
  const double u = uniform_at(seed, stream, RngPurpose::DirectSample, 2 * index);
  double acc = 0;
  int k = 0;
  for (; k < g.components() - 1; ++k) {
    acc += g.weights[k];
    if (u < acc) break;
  }
  const double z = normal_at(seed, stream, RngPurpose::DirectSample, 2 * index + 1);
  return g.means[k][0] + std::sqrt(g.variances[k]) * z;
}

GmmModel::GmmModel(GaussianMixtureData data, NoiseSchedule schedule)
    : data_(std::move(data)), schedule_(std::move(schedule)) {
  data_.validate();
}

void GmmModel::evaluate(const double* x, double t, double* x0_hat) const {
  data_predict_gmm(data_, schedule_, x, t, x0_hat);
}

void GmmModel::affine_coeffs(double t, double* a, double* c_mean) const {
  if (!affine()) raise(ErrorCode::InvalidParams, "affine form needs a single component");
  const double alpha = schedule_.alpha(t), sigma = schedule_.sigma(t);
  const double s2 = alpha * alpha * data_.variances[0] + sigma * sigma;
  *a = alpha * data_.variances[0] / s2;
  *c_mean = sigma * sigma / s2;  // multiplies the component mean
}

PerturbedModel::PerturbedModel(std::shared_ptr<const DataPredictionModel> base,
                               NoiseSchedule schedule, double epsilon, uint64_t seed)
    : base_(std::move(base)), schedule_(std::move(schedule)), epsilon_(epsilon) {
  if (!(epsilon >= 0)) raise(ErrorCode::InvalidParams, "epsilon must be >= 0");
  omega_ = 0.5 + 2.0 * uniform_at(seed, 0, RngPurpose::Generic, 0);
  phi_ = 2.0 * M_PI * uniform_at(seed, 0, RngPurpose::Generic, 1);
}

void PerturbedModel::evaluate(const double* x, double t, double* x0_hat) const {
  base_->evaluate(x, t, x0_hat);
  if (epsilon_ == 0.0) return;  // bit-exact reduction to the base model
  const double alpha = schedule_.alpha(t), sigma = schedule_.sigma(t);
  const double scale = sigma * sigma / alpha * epsilon_;
  for (int j = 0; j < dim(); ++j) x0_hat[j] += scale * std::sin(omega_ * x[j] + phi_);
}

std::shared_ptr<PerturbedModel> perturb_model(std::shared_ptr<const DataPredictionModel> base,
                                              const NoiseSchedule& s, double epsilon,
                                              uint64_t seed) {
  return std::make_shared<PerturbedModel>(std::move(base), s, epsilon, seed);
}

}  // namespace sas
