// Test-only oracles, independent of the implementation paths they check:
// fine Riemann sums of the coefficient integrand, exact symbolic integrals of
// exp(lambda) * polynomial, and an exponential Adams-Bashforth / Moulton
// recurrence for affine models built from those symbolic weights.
#pragma once

#include <cmath>
#include <vector>

#include "sas/models.hpp"
#include "sas/schedule.hpp"
#include "sas/tau.hpp"

namespace oracles {

// midpoint Riemann sum of the predictor/corrector weight integrand
//   e^{-int_lam^lam_end tau^2} (1 + tau^2(lam)) e^lam l_j(lam)
inline double riemann_weight(const sas::NoiseSchedule& s, const sas::TauSchedule& ts,
                             const std::vector<double>& nodes, int j, double lam_a,
                             double lam_b, double sigma_end, long n) {
  double acc = 0;
  for (long k = 0; k < n; ++k) {
    const double lam = lam_a + (lam_b - lam_a) * (k + 0.5) / double(n);
    const double tau = ts.eval_lambda(lam);
    const double inner = ts.tau2_integral_lambda(lam, lam_b);
    double basis = 1.0;
    for (size_t m = 0; m < nodes.size(); ++m)
      if (int(m) != j) basis *= (lam - nodes[m]) / (nodes[j] - nodes[m]);
    acc += std::exp(lam - inner) * (1.0 + tau * tau) * basis;
  }
  (void)s;
  return sigma_end * acc * (lam_b - lam_a) / double(n);
}

// same integrand against a monomial (lam - ref)^m instead of the basis
inline double riemann_moment(const sas::TauSchedule& ts, double ref, int m, double lam_a,
                             double lam_b, double sigma_end, long n) {
  double acc = 0;
  for (long k = 0; k < n; ++k) {
    const double lam = lam_a + (lam_b - lam_a) * (k + 0.5) / double(n);
    const double tau = ts.eval_lambda(lam);
    const double inner = ts.tau2_integral_lambda(lam, lam_b);
    acc += std::exp(lam - inner) * (1.0 + tau * tau) * std::pow(lam - ref, m);
  }
  return sigma_end * acc * (lam_b - lam_a) / double(n);
}

// exact int_a^b e^lam p(lam) dlam via e^lam sum_k (-1)^k p^(k)(lam)
inline double exp_poly_integral(std::vector<double> p, double a, double b) {
  auto horner = [](const std::vector<double>& c, double x) {
    double v = 0;
    for (size_t k = c.size(); k-- > 0;) v = v * x + c[k];
    return v;
  };
  auto deriv = [](const std::vector<double>& c) {
    std::vector<double> d;
    for (size_t k = 1; k < c.size(); ++k) d.push_back(double(k) * c[k]);
    return d;
  };
  double va = 0, vb = 0, sign = 1;
  std::vector<double> cur = p;
  while (!cur.empty()) {
    va += sign * horner(cur, a);
    vb += sign * horner(cur, b);
    cur = deriv(cur);
    sign = -sign;
  }
  return std::exp(b) * vb - std::exp(a) * va;
}

// monomial coefficients of the Lagrange basis l_j over the given nodes
inline std::vector<double> lagrange_poly(const std::vector<double>& nodes, int j) {
  std::vector<double> p = {1.0};
  double den = 1.0;
  for (size_t m = 0; m < nodes.size(); ++m) {
    if (int(m) == j) continue;
    den *= nodes[j] - nodes[m];
    std::vector<double> q(p.size() + 1, 0.0);
    for (size_t k = 0; k < p.size(); ++k) {
      q[k + 1] += p[k];
      q[k] -= nodes[m] * p[k];
    }
    p = q;
  }
  for (double& c : p) c /= den;
  return p;
}

// exact tau = 0 predictor/corrector weights: sigma_end int e^lam l_j(lam) dlam
inline std::vector<double> exp_adams_weights(const std::vector<double>& nodes, double lam_a,
                                             double lam_b, double sigma_end) {
  std::vector<double> w(nodes.size());
  for (size_t j = 0; j < nodes.size(); ++j)
    w[j] = sigma_end * exp_poly_integral(lagrange_poly(nodes, int(j)), lam_a, lam_b);
  return w;
}

// Exponential Adams-Bashforth(+Moulton PECE) recurrence for affine models on
// a reverse-time grid, tau = 0. Mirrors the solver's warm-up and buffer flow
// but computes every weight symbolically.
inline std::vector<double> exp_adams_pece(const sas::GmmModel& model,
                                          const sas::NoiseSchedule& s,
                                          const sas::TimeGrid& grid, int sp, int sc,
                                          double x0) {
  const double mu = model.data().means[0][0];
  std::vector<double> lam(grid.times.size());
  for (size_t i = 0; i < grid.times.size(); ++i) lam[i] = s.lambda(grid.times[i]);

  auto eval_model = [&](double x, int i) {
    double a, cm;
    model.affine_coeffs(grid.times[i], &a, &cm);
    return a * x + cm * mu;
  };

  std::vector<double> states = {x0};
  std::vector<double> evals = {eval_model(x0, 0)};  // newest last
  double x = x0;
  const int M = grid.steps();
  for (int it = 1; it <= M; ++it) {
    const int spm = std::min(it, sp);
    const int scm = std::min(it, sc);
    const double decay = s.sigma(grid.times[it]) / s.sigma(grid.times[it - 1]);
    // predictor over nodes lam_{it-1}, ..., lam_{it-spm}
    std::vector<double> pn;
    for (int j = 0; j < spm; ++j) pn.push_back(lam[it - 1 - j]);
    const auto pw = exp_adams_weights(pn, lam[it - 1], lam[it], s.sigma(grid.times[it]));
    double xp = decay * x;
    for (int j = 0; j < spm; ++j) xp += pw[j] * evals[evals.size() - 1 - j];
    if (sc > 0) {
      // corrector nodes lam_it, lam_{it-1}, ..., lam_{it-scm}
      std::vector<double> cn = {lam[it]};
      for (int j = 0; j < scm; ++j) cn.push_back(lam[it - 1 - j]);
      const auto cw = exp_adams_weights(cn, lam[it - 1], lam[it], s.sigma(grid.times[it]));
      double xc = decay * x + cw[0] * eval_model(xp, it);
      for (int j = 0; j < scm; ++j) xc += cw[j + 1] * evals[evals.size() - 1 - j];
      x = xc;
      evals.push_back(eval_model(x, it));
    } else {
      x = xp;
      evals.push_back(eval_model(xp, it));
    }
    states.push_back(x);
  }
  return states;
}

}  // namespace oracles
