#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "sas/schedule.hpp"

namespace sas {

// Data-prediction oracle x0_hat(x, t) = E[x_0 | x_t = x]. Evaluation is pure
// and deterministic, so models are safe to share across threads.
class DataPredictionModel {
public:
  virtual ~DataPredictionModel() = default;
  virtual int dim() const = 0;
  virtual void evaluate(const double* x, double t, double* x0_hat) const = 0;

  std::vector<double> evaluate(const std::vector<double>& x, double t) const {
    std::vector<double> out(x.size());
    evaluate(x.data(), t, out.data());
    return out;
  }
};

// Isotropic Gaussian mixture data distribution; every component has a scalar
// variance shared across dimensions.
struct GaussianMixtureData {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<double> variances;

  int dim() const { return means.empty() ? 0 : int(means.front().size()); }
  int components() const { return int(weights.size()); }
  void validate() const;

  static GaussianMixtureData single(std::vector<double> mean, double variance);
  static GaussianMixtureData standard_normal(int dim);
};

// posterior mean E[x_0 | x_t = x] under the mixture prior
// (GmmModel::evaluate delegates here)
void data_predict_gmm(const GaussianMixtureData& g, const NoiseSchedule& s, const double* x,
                      double t, double* out);

// analytic score of the time-t marginal of the mixture
void gmm_marginal_score(const GaussianMixtureData& g, const NoiseSchedule& s, const double* x,
                        double t, double* out);

// CDF / quantile / density of the 1-D time-t marginal
double exact_marginal_cdf(const GaussianMixtureData& g, const NoiseSchedule& s, double t,
                          double x);
double exact_marginal_quantile(const GaussianMixtureData& g, const NoiseSchedule& s, double t,
                               double p);
// one draw from the 1-D data distribution (component choice + normal), fully
// addressable by (seed, stream, index)
double gmm_sample(const GaussianMixtureData& g, uint64_t seed, uint64_t stream, uint64_t index);

class GmmModel : public DataPredictionModel {
public:
  GmmModel(GaussianMixtureData data, NoiseSchedule schedule);
  int dim() const override { return data_.dim(); }
  void evaluate(const double* x, double t, double* x0_hat) const override;
  const GaussianMixtureData& data() const { return data_; }

  // single-component models are affine: x0_hat = a(t) x + c(t)
  bool affine() const { return data_.components() == 1; }
  void affine_coeffs(double t, double* a, double* c_mean) const;

private:
  GaussianMixtureData data_;
  NoiseSchedule schedule_;
};

// Wraps a base model so the implied score is shifted by
// epsilon * sin(omega x + phi) elementwise; (omega, phi) are drawn once from
// the seed. epsilon = 0 returns the base output bit-exactly.
class PerturbedModel : public DataPredictionModel {
public:
  PerturbedModel(std::shared_ptr<const DataPredictionModel> base, NoiseSchedule schedule,
                 double epsilon, uint64_t seed);
  int dim() const override { return base_->dim(); }
  void evaluate(const double* x, double t, double* x0_hat) const override;

  double epsilon() const { return epsilon_; }
  double omega() const { return omega_; }
  double phi() const { return phi_; }

private:
  std::shared_ptr<const DataPredictionModel> base_;
  NoiseSchedule schedule_;
  double epsilon_;
  double omega_, phi_;
};

std::shared_ptr<PerturbedModel> perturb_model(std::shared_ptr<const DataPredictionModel> base,
                                              const NoiseSchedule& s, double epsilon,
                                              uint64_t seed);

}  // namespace sas
