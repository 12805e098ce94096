#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "sas/coefficients.hpp"
#include "sas/models.hpp"
#include "sas/rng.hpp"

namespace sas {

struct SolverConfig {
  int predictor_steps = 3;  // s_p >= 1
  int corrector_steps = 0;  // s_c >= 0; 0 means predictor-only
  CoeffModePolicy coeff_mode = CoeffModePolicy::Auto;
  int quadrature_order = 32;
  uint64_t seed = 0;
  bool record_trajectory = false;
};

// Ring buffer of past model evaluations (t, x0_hat), newest last.
class EvalBuffer {
public:
  explicit EvalBuffer(int capacity) : capacity_(capacity) {}

  void push(double t, std::vector<double> eval) {
    entries_.push_back({t, std::move(eval)});
    if (int(entries_.size()) > capacity_) entries_.pop_front();
  }
  int size() const { return int(entries_.size()); }
  int capacity() const { return capacity_; }
  // k = 0 newest, k = 1 the one before, ...
  const std::vector<double>& eval_back(int k) const { return entries_[entries_.size() - 1 - k].eval; }
  double time_back(int k) const { return entries_[entries_.size() - 1 - k].t; }
  void clear() { entries_.clear(); }

private:
  struct Entry {
    double t;
    std::vector<double> eval;
  };
  int capacity_;
  std::deque<Entry> entries_;
};

// Standard-normal draws per (sample, iteration); implementations must be pure
// in (sample, iteration) so batches can run in any order.
class NoiseSource {
public:
  virtual ~NoiseSource() = default;
  virtual void initial_xi(uint64_t sample, double* out, int dim) const = 0;
  virtual void iteration_xi(uint64_t sample, int iteration, double* out, int dim) const = 0;
};

class GaussianNoiseSource : public NoiseSource {
public:
  explicit GaussianNoiseSource(uint64_t seed) : seed_(seed) {}
  void initial_xi(uint64_t sample, double* out, int dim) const override;
  void iteration_xi(uint64_t sample, int iteration, double* out, int dim) const override;

private:
  uint64_t seed_;
};

struct StepDiagnostics {
  double noise_std = 0;
  double predictor_weight_sum = 0;
  double corrector_weight_sum = 0;
};

struct RunRecord {
  TimeGrid grid;
  SolverConfig config;
  int n_samples = 0;
  int dim = 0;
  std::vector<double> final_state;  // n_samples * dim, row-major
  std::vector<StepDiagnostics> step_diagnostics;
  // states per iteration (0 = initial), each n_samples * dim; only filled
  // when config.record_trajectory is set
  std::vector<std::vector<double>> trajectory;
  long nfe_count = 0;  // per sample
};

struct StepPlan {
  StepCoefficients pred;
  StepCoefficients corr;
  bool has_corrector = false;
};

std::vector<StepPlan> build_step_plan(const NoiseSchedule& s, const TauSchedule& ts,
                                      const TimeGrid& grid, const SolverConfig& cfg);

// x_{i+1} = state_decay x_i + sum_j b_j eval_j + noise_std xi
void sa_predictor_step(const double* x_i, const EvalBuffer& buffer, const StepCoefficients& c,
                       const double* xi, int dim, double* out);

// corrector: weights [b_next, b_i, b_{i-1}, ...]; the freshly predicted
// evaluation enters only through b_next, the buffer supplies the rest, and xi
// is the same draw the predictor used this iteration
void sa_corrector_step(const double* x_i, const double* x_pred_eval, const EvalBuffer& buffer,
                       const StepCoefficients& c, const double* xi, int dim, double* out);

RunRecord sa_solve(const DataPredictionModel& model, const NoiseSchedule& s,
                   const TauSchedule& ts, const TimeGrid& grid, const SolverConfig& cfg,
                   int n_samples, bool parallel = true, const NoiseSource* noise = nullptr);

// DDIM update (VP schedules only), eta in [0, 1]:
//   sigma_hat = eta sqrt((1-a_n^2)/(1-a_i^2) (1 - a_i^2/a_n^2))
void ddim_step(const double* x_i, const double* model_eval, double eta, const NoiseSchedule& s,
               double t_i, double t_next, const double* xi, int dim, double* out);

RunRecord ddim_solve(const DataPredictionModel& model, const NoiseSchedule& s,
                     const TimeGrid& grid, double eta, uint64_t seed, int n_samples,
                     bool record_trajectory = false, bool parallel = true,
                     const NoiseSource* noise = nullptr);

// first-order discretization of the variance-controlled reverse SDE
void euler_maruyama_step(const double* x_i, const double* score_eval, const NoiseSchedule& s,
                         const TauSchedule& ts, double t_i, double t_next, const double* xi,
                         int dim, double* out);

// one-step exact update of the noise-prediction parameterization; model_eval
// is the data prediction, converted internally
void noise_param_onestep(const double* x_i, const double* model_eval, const NoiseSchedule& s,
                         const TauSchedule& ts, double t_i, double t_next, const double* xi,
                         int dim, double* out);

}  // namespace sas
