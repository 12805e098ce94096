#include "sas/coefficients.hpp"

#include <algorithm>
#include <cmath>

namespace sas {

std::string to_string(CoeffMode m) {
  return m == CoeffMode::Quadrature ? "quadrature" : "closed_form";
}

std::string to_string(CoeffModePolicy m) {
  switch (m) {
    case CoeffModePolicy::Auto: return "auto";
    case CoeffModePolicy::Quadrature: return "quadrature";
    case CoeffModePolicy::ClosedForm: return "closed_form";
  }
  return "?";
}

CoeffModePolicy coeff_mode_from_string(const std::string& name) {
  if (name == "auto") return CoeffModePolicy::Auto;
  if (name == "quadrature") return CoeffModePolicy::Quadrature;
  if (name == "closed_form") return CoeffModePolicy::ClosedForm;
  raise(ErrorCode::InvalidParams, "unknown coeff mode '" + name + "'");
}

double StepCoefficients::weight_sum() const {
  double acc = 0;
  for (double w : model_weights) acc += w;
  return acc;
}

double lagrange_basis(const std::vector<double>& lambdas, int j, double lambda) {
  double acc = 1.0;
  for (size_t k = 0; k < lambdas.size(); ++k) {
    if (int(k) == j) continue;
    const double den = lambdas[j] - lambdas[k];
    if (std::abs(den) < 1e-14)
      raise(ErrorCode::DegenerateNodes, "lambda nodes closer than 1e-14");
    acc *= (lambda - lambdas[k]) / den;
  }
  return acc;
}

namespace {

// e^{-x} + x - 1 without cancellation for small x
double expm1_plus_x_minus_1(double x) {
  if (std::abs(x) > 0.5) return std::expm1(-x) + x;
  // sum_{k>=2} (-x)^k / k!
  double term = 0.5 * x * x, acc = term;
  for (int k = 3; k <= 16; ++k) {
    term *= -x / k;
    acc += term;
  }
  return acc;
}

struct StepFrame {
  double lam_i, lam_next;  // lam_next > lam_i
  double sigma_next, alpha_next;
  std::vector<double> nodes;  // interpolation nodes, newest first
};

StepFrame make_frame(const NoiseSchedule& s, const TimeGrid& grid, int i, int steps,
                     bool include_next) {
  if (steps < 1) raise(ErrorCode::InvalidParams, "steps must be >= 1");
  if (i < steps - 1)
    raise(ErrorCode::InsufficientHistory, "step " + std::to_string(i) + " has fewer than " +
                                              std::to_string(steps) + " past evaluations");
  if (i + 1 >= int(grid.times.size()))
    raise(ErrorCode::OutOfRange, "step index past the end of the grid");
  StepFrame f;
  const double t_i = grid.times[i], t_next = grid.times[i + 1];
  f.lam_i = s.lambda(t_i);
  f.lam_next = s.lambda(t_next);
  f.sigma_next = s.sigma(t_next);
  f.alpha_next = s.alpha(t_next);
  if (include_next) f.nodes.push_back(f.lam_next);
  for (int j = 0; j < steps; ++j) f.nodes.push_back(s.lambda(grid.times[i - j]));
  for (size_t a = 0; a < f.nodes.size(); ++a)
    for (size_t b = a + 1; b < f.nodes.size(); ++b)
      if (std::abs(f.nodes[a] - f.nodes[b]) < 1e-12)
        raise(ErrorCode::DegenerateNodes, "grid lambda values closer than 1e-12");
  return f;
}

// weights by quadrature in lambda, split at tau piece boundaries so every
// sub-interval has a smooth integrand (constant tau => pure exponential * poly)
std::vector<double> quadrature_weights(const StepFrame& f, const TauSchedule& ts,
                                       const QuadratureRule& q) {
  std::vector<double> cuts = ts.lambda_breakpoints(f.lam_i, f.lam_next);
  cuts.insert(cuts.begin(), f.lam_i);
  cuts.push_back(f.lam_next);
  std::vector<double> w(f.nodes.size(), 0.0);
  for (size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c], b = cuts[c + 1];
    for (size_t j = 0; j < f.nodes.size(); ++j) {
      const double val = q.integrate(a, b, [&](double lam) {
        const double tau = ts.eval_lambda(std::min(lam, f.lam_next));
        const double inner = ts.tau2_integral_lambda(lam, f.lam_next);
        return std::exp(lam - inner) * (1.0 + tau * tau) *
               lagrange_basis(f.nodes, int(j), lam);
      });
      w[j] += f.sigma_next * val;
    }
  }
  return w;
}

double step_tau2_integral(const StepFrame& f, const TauSchedule& ts) {
  return ts.tau2_integral_lambda(f.lam_i, f.lam_next);
}

void fill_decay_and_noise(const NoiseSchedule& s, const TauSchedule& ts, const TimeGrid& grid,
                          int i, const StepFrame& f, StepCoefficients* c) {
  const double integral = step_tau2_integral(f, ts);
  const double sigma_i = s.sigma(grid.times[i]);
  c->state_decay = f.sigma_next / sigma_i * std::exp(-integral);
  c->noise_std = f.sigma_next * std::sqrt(-std::expm1(-2.0 * integral));
}

bool closed_form_available(const StepFrame& f, const TauSchedule& ts, int steps,
                           bool corrector) {
  if (corrector && steps > 1) return false;
  if (!corrector && steps > 2) return false;
  return ts.constant_on_lambda(f.lam_i, f.lam_next);
}

}  // namespace

StepCoefficients predictor_coefficients(const NoiseSchedule& s, const TauSchedule& ts,
                                        const TimeGrid& grid, int i, int steps,
                                        const QuadratureRule& q, CoeffModePolicy policy) {
  const StepFrame f = make_frame(s, grid, i, steps, /*include_next=*/false);
  StepCoefficients c;
  fill_decay_and_noise(s, ts, grid, i, f, &c);

  const bool closed = policy != CoeffModePolicy::Quadrature &&
                      closed_form_available(f, ts, steps, /*corrector=*/false);
  if (policy == CoeffModePolicy::ClosedForm && !closed)
    raise(ErrorCode::NonConstantTau,
          "closed form needs constant tau on the step and steps <= 2");

  if (!closed) {
    c.model_weights = quadrature_weights(f, ts, q);
    c.mode = CoeffMode::Quadrature;
    return c;
  }

  const double tau = ts.eval_lambda(0.5 * (f.lam_i + f.lam_next));
  const double A = 1.0 + tau * tau;
  const double h = f.lam_next - f.lam_i;
  const double total = f.alpha_next * -std::expm1(-A * h);
  if (steps == 1) {
    c.model_weights = {total};
  } else {
    const double lam_prev = f.nodes[1];
    const double b_old = f.alpha_next * expm1_plus_x_minus_1(A * h) / (A * (lam_prev - f.lam_i));
    c.model_weights = {total - b_old, b_old};
  }
  c.mode = CoeffMode::ClosedForm;
  return c;
}

StepCoefficients corrector_coefficients(const NoiseSchedule& s, const TauSchedule& ts,
                                        const TimeGrid& grid, int i, int steps,
                                        const QuadratureRule& q, CoeffModePolicy policy) {
  const StepFrame f = make_frame(s, grid, i, steps, /*include_next=*/true);
  StepCoefficients c;
  fill_decay_and_noise(s, ts, grid, i, f, &c);

  const bool closed = policy != CoeffModePolicy::Quadrature &&
                      closed_form_available(f, ts, steps, /*corrector=*/true);
  if (policy == CoeffModePolicy::ClosedForm && !closed)
    raise(ErrorCode::NonConstantTau,
          "closed form needs constant tau on the step and steps <= 1");

  if (!closed) {
    c.model_weights = quadrature_weights(f, ts, q);
    c.mode = CoeffMode::Quadrature;
    return c;
  }

  const double tau = ts.eval_lambda(0.5 * (f.lam_i + f.lam_next));
  const double A = 1.0 + tau * tau;
  const double h = f.lam_next - f.lam_i;
  const double total = f.alpha_next * -std::expm1(-A * h);
  const double b_next = f.alpha_next * expm1_plus_x_minus_1(A * h) / (A * h);
  c.model_weights = {b_next, total - b_next};
  c.mode = CoeffMode::ClosedForm;
  return c;
}

double noise_std(const NoiseSchedule& s, const TauSchedule& ts, double t_i, double t_next) {
  if (!(t_next < t_i)) raise(ErrorCode::OutOfDomain, "requires t_next < t_i (reverse time)");
  const double integral = ts.tau2_integral_lambda(s.lambda(t_i), s.lambda(t_next));
  return s.sigma(t_next) * std::sqrt(-std::expm1(-2.0 * integral));
}

double state_decay(const NoiseSchedule& s, const TauSchedule& ts, double t_i, double t_next) {
  if (!(t_next < t_i)) raise(ErrorCode::OutOfDomain, "requires t_next < t_i (reverse time)");
  const double integral = ts.tau2_integral_lambda(s.lambda(t_i), s.lambda(t_next));
  return s.sigma(t_next) / s.sigma(t_i) * std::exp(-integral);
}

double noise_param_variance(const NoiseSchedule& s, const TauSchedule& ts, double t_i,
                            double t_next) {
  if (!(t_next < t_i)) raise(ErrorCode::OutOfDomain, "requires t_next < t_i (reverse time)");
  const double lam_a = s.lambda(t_i), lam_b = s.lambda(t_next);
  // piecewise closed form: per constant piece,
  //   int 2 e^{-2 lam} tau^2 dlam = tau^2 (e^{-2 lo} - e^{-2 hi})
  std::vector<double> cuts = ts.lambda_breakpoints(lam_a, lam_b);
  cuts.insert(cuts.begin(), lam_a);
  cuts.push_back(lam_b);
  double acc = 0;
  for (size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double tau = ts.eval_lambda(0.5 * (cuts[c] + cuts[c + 1]));
    acc += tau * tau * (std::exp(-2.0 * cuts[c]) - std::exp(-2.0 * cuts[c + 1]));
  }
  const double an = s.alpha(t_next);
  return an * an * acc;
}

std::pair<StepCoefficients, StepCoefficients> closed_form_2p1c(const NoiseSchedule& s,
                                                               const TauSchedule& ts,
                                                               const TimeGrid& grid, int i) {
  if (i < 1) raise(ErrorCode::InsufficientHistory, "2-step predictor needs one past node");
  const StepFrame f = make_frame(s, grid, i, 2, /*include_next=*/false);
  if (!ts.constant_on_lambda(f.lam_i, f.lam_next))
    raise(ErrorCode::NonConstantTau, "closed_form_2p1c requires constant tau on the step");
  const double tau = ts.eval_lambda(0.5 * (f.lam_i + f.lam_next));
  const double A = 1.0 + tau * tau;
  const double h = f.lam_next - f.lam_i;
  const double lam_prev = f.nodes[1];
  const double total = f.alpha_next * -std::expm1(-A * h);

  StepCoefficients pred;
  fill_decay_and_noise(s, ts, grid, i, f, &pred);
  pred.mode = CoeffMode::ClosedForm;
  // leading h^2 term of the exact trailing coefficient; negative, since
  // lam_prev < lam_i on a reverse-time grid. Re-deriving it from the rounded
  // partner keeps the pair sum bitwise equal to the total.
  double b_old = f.alpha_next * 0.5 * A * h * h / (lam_prev - f.lam_i);
  const double b_new = total - b_old;
  b_old = total - b_new;
  pred.model_weights = {b_new, b_old};

  StepCoefficients corr;
  fill_decay_and_noise(s, ts, grid, i, f, &corr);
  corr.mode = CoeffMode::ClosedForm;
  double b_next = f.alpha_next * expm1_plus_x_minus_1(A * h) / (A * h);
  const double b_cur = total - b_next;
  b_next = total - b_cur;
  corr.model_weights = {b_next, b_cur};
  return {pred, corr};
}

}  // namespace sas
