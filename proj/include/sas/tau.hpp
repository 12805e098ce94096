#pragma once

#include <array>
#include <string>
#include <vector>

#include "sas/schedule.hpp"

namespace sas {

enum class TauKind { Zero, Constant, PiecewiseConstant };

std::string to_string(TauKind k);

struct TauPiece {
  double t_lo, t_hi;  // right-closed / left-open in t: covers (t_lo, t_hi]
  double value;
};

// Stochasticity magnitude tau(t) >= 0. tau = 0 is the probability-flow ODE,
// tau = 1 the standard reverse SDE. Piecewise schedules carry an exact
// lambda-space view so integrals of tau^2 d(lambda) are piecewise sums, not
// quadrature.
class TauSchedule {
public:
  static TauSchedule zero();
  static TauSchedule constant(double value);
  // pieces cover the schedule domain; gaps are filled with tau = 0
  static TauSchedule piecewise_t(const NoiseSchedule& s, std::vector<TauPiece> pieces);
  // piece bounds given in sigma_edm units (lo, hi, value), as in configs
  static TauSchedule piecewise_sigma_edm(const NoiseSchedule& s,
                                         const std::vector<std::array<double, 3>>& pieces);
  // one piece per grid step [t_{i+1}, t_i]
  static TauSchedule per_step(const NoiseSchedule& s, const TimeGrid& grid,
                              const std::vector<double>& values);

  TauKind kind() const { return kind_; }
  bool is_zero() const;
  double constant_value() const;
  double max_value() const;

  double eval_t(double t) const;
  double eval_lambda(double lambda) const;
  // exact integral of tau^2 over [lambda_a, lambda_b], lambda_a <= lambda_b
  double tau2_integral_lambda(double lambda_a, double lambda_b) const;
  // piece boundaries strictly inside (lambda_a, lambda_b), ascending
  std::vector<double> lambda_breakpoints(double lambda_a, double lambda_b) const;
  bool constant_on_lambda(double lambda_a, double lambda_b) const;

  const std::vector<TauPiece>& pieces_t() const { return pieces_t_; }

private:
  TauKind kind_ = TauKind::Zero;
  double value_ = 0.0;
  std::vector<TauPiece> pieces_t_;  // ascending in t, contiguous cover of the domain
  // same pieces in lambda, ascending in lambda (i.e. reversed)
  struct LambdaPiece {
    double lo, hi, value;
  };
  std::vector<LambdaPiece> pieces_lambda_;
  double lambda_lo_ = 0, lambda_hi_ = 0;
  bool bounded_domain_ = false;
  double t_lo_ = 0, t_hi_ = 0;
};

// Per-step tau reproducing the DDIM-eta noise level on [t_next, t_i]
// (t_next < t_i, VP schedules only).
double tau_from_eta(double eta, const NoiseSchedule& s, double t_i, double t_next);

// Whole-grid DDIM-equivalent schedule: piecewise constant, one piece per step.
TauSchedule ddim_equivalent_tau(double eta, const NoiseSchedule& s, const TimeGrid& grid);

}  // namespace sas
