#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sas/quadrature.hpp"
#include "sas/schedule.hpp"
#include "sas/tau.hpp"

namespace sas {

enum class CoeffMode { Quadrature, ClosedForm };
std::string to_string(CoeffMode m);

enum class CoeffModePolicy { Auto, Quadrature, ClosedForm };
std::string to_string(CoeffModePolicy m);
CoeffModePolicy coeff_mode_from_string(const std::string& name);

// One update x_{i+1} = state_decay * x_i + sum_j model_weights[j] * eval_j
//                      + noise_std * xi
// model_weights are ordered newest evaluation first.
struct StepCoefficients {
  double state_decay = 0.0;
  std::vector<double> model_weights;
  double noise_std = 0.0;
  CoeffMode mode = CoeffMode::Quadrature;

  double weight_sum() const;
};

// l_j(lambda) = prod_{k != j} (lambda - lambda_k) / (lambda_j - lambda_k)
double lagrange_basis(const std::vector<double>& lambdas, int j, double lambda);

// Explicit (predictor) coefficients for the step t_i -> t_{i+1} using the
// `steps` most recent evaluation nodes t_i, t_{i-1}, ..., t_{i-steps+1}:
//   b_{i-j} = sigma_{t_{i+1}} int_{lam_i}^{lam_{i+1}}
//             e^{-int_lam^{lam_{i+1}} tau^2} (1 + tau^2(lam)) e^lam l_{i-j}(lam) dlam
StepCoefficients predictor_coefficients(const NoiseSchedule& s, const TauSchedule& ts,
                                        const TimeGrid& grid, int i, int steps,
                                        const QuadratureRule& q,
                                        CoeffModePolicy policy = CoeffModePolicy::Quadrature);

// Implicit (corrector) coefficients: same weight, nodes additionally include
// t_{i+1}; weights ordered [b_{i+1}, b_i, b_{i-1}, ...], length steps+1.
StepCoefficients corrector_coefficients(const NoiseSchedule& s, const TauSchedule& ts,
                                        const TimeGrid& grid, int i, int steps,
                                        const QuadratureRule& q,
                                        CoeffModePolicy policy = CoeffModePolicy::Quadrature);

// Injected-noise std over the step:
//   sigma_{t_next} * sqrt(1 - exp(-2 int tau^2 dlambda))
double noise_std(const NoiseSchedule& s, const TauSchedule& ts, double t_i, double t_next);

double state_decay(const NoiseSchedule& s, const TauSchedule& ts, double t_i, double t_next);

// Injected-noise variance of the noise-prediction parameterization:
//   alpha_{t_next}^2 int_{lam_i}^{lam_next} 2 e^{-2 lam} tau^2(lam) dlam
double noise_param_variance(const NoiseSchedule& s, const TauSchedule& ts, double t_i,
                            double t_next);

// Leading-order 2-step predictor pair plus the elementary 1-step corrector
// pair for a step with constant tau. The predictor's trailing weight keeps
// only the h^2 term, so it differs from the exact coefficient by O(h^3); both
// pairs satisfy the sum identity b_new + b_old = alpha (1 - e^{-(1+tau^2) h})
// exactly by construction.
std::pair<StepCoefficients, StepCoefficients> closed_form_2p1c(const NoiseSchedule& s,
                                                               const TauSchedule& ts,
                                                               const TimeGrid& grid, int i);

}  // namespace sas
