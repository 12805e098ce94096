#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "sas/coefficients.hpp"
#include "sas/rng.hpp"
#include "sas/tau.hpp"

using namespace sas;

TEST_CASE("constant tau evaluates everywhere") {
  const TauSchedule ts = TauSchedule::constant(1.0);
  CHECK(ts.eval_t(0.123) == 1.0);
  CHECK(ts.eval_lambda(-3.0) == 1.0);
  CHECK(ts.max_value() == 1.0);
}

TEST_CASE("zero equals constant(0) in downstream coefficients, bitwise") {
  const auto s = NoiseSchedule::vp_linear();
  const TimeGrid g = make_time_grid(s, GridKind::UniformLambda, 8);
  const QuadratureRule q = QuadratureRule::gauss_legendre(32);
  for (int i = 1; i < 6; ++i) {
    const auto a = predictor_coefficients(s, TauSchedule::zero(), g, i, 2, q);
    const auto b = predictor_coefficients(s, TauSchedule::constant(0.0), g, i, 2, q);
    CHECK(std::memcmp(&a.state_decay, &b.state_decay, sizeof(double)) == 0);
    CHECK(std::memcmp(&a.noise_std, &b.noise_std, sizeof(double)) == 0);
    REQUIRE(a.model_weights.size() == b.model_weights.size());
    CHECK(std::memcmp(a.model_weights.data(), b.model_weights.data(),
                      a.model_weights.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("piecewise tau in sigma_edm units") {
  const auto s = NoiseSchedule::ve(0.02, 80.0);
  const TauSchedule ts = TauSchedule::piecewise_sigma_edm(s, {{0.05, 1.0, 1.0}});
  SUBCASE("inside the active band") {
    const double t = s.sigma_edm_inverse(0.5);
    CHECK(ts.eval_t(t) == 1.0);
  }
  SUBCASE("zero outside the band") {
    CHECK(ts.eval_t(s.sigma_edm_inverse(0.02 * 1.001)) == 0.0);
    CHECK(ts.eval_t(s.sigma_edm_inverse(40.0)) == 0.0);
  }
  SUBCASE("boundary is right-closed in t") {
    const double edge = s.sigma_edm_inverse(1.0);  // upper end of the active piece in t
    CHECK(ts.eval_t(edge) == 1.0);
    CHECK(ts.eval_t(edge + 1e-9) == 0.0);
  }
  SUBCASE("out of domain raises") { CHECK_THROWS_AS(ts.eval_t(2.0), Error); }
}

TEST_CASE("tau^2 integral: constant integrand") {
  const TauSchedule ts = TauSchedule::constant(0.7);
  CHECK(ts.tau2_integral_lambda(-1.0, 2.5) ==
        doctest::Approx(0.7 * 0.7 * 3.5).epsilon(1e-14));
  CHECK(TauSchedule::zero().tau2_integral_lambda(-4.0, 4.0) == 0.0);
}

TEST_CASE("two-piece integral straddles a boundary, vs a 1e6-node Riemann sum") {
  const auto s = NoiseSchedule::vp_linear();
  const double t_split = s.sigma_edm_inverse(1.0);
  // tau = 1 for t <= t_split, 0 above
  const TauSchedule ts =
      TauSchedule::piecewise_t(s, {{s.t_min(), t_split, 1.0}, {t_split, s.t_max(), 0.0}});
  const double la = s.lambda_lo() + 0.5, lb = s.lambda_hi() - 0.5;
  const int n = 1000000;
  double acc = 0;
  for (int k = 0; k < n; ++k) {
    const double lam = la + (lb - la) * (k + 0.5) / n;
    const double tau = ts.eval_lambda(lam);
    acc += tau * tau;
  }
  acc *= (lb - la) / n;
  CHECK(ts.tau2_integral_lambda(la, lb) == doctest::Approx(acc).epsilon(1e-5));
}

TEST_CASE("integral additivity over random split points") {
  const auto s = NoiseSchedule::vp_cosine();
  const TauSchedule ts = TauSchedule::piecewise_sigma_edm(s, {{0.05, 1.0, 1.3}, {1.0, 5.0, 0.4}});
  for (int i = 0; i < 200; ++i) {
    double u[3];
    for (int k = 0; k < 3; ++k) u[k] = uniform_at(5, 9, RngPurpose::Generic, 3 * i + k);
    std::sort(u, u + 3);
    const double span = s.lambda_hi() - s.lambda_lo();
    const double a = s.lambda_lo() + u[0] * span;
    const double b = s.lambda_lo() + u[1] * span;
    const double c = s.lambda_lo() + u[2] * span;
    const double whole = ts.tau2_integral_lambda(a, c);
    const double split = ts.tau2_integral_lambda(a, b) + ts.tau2_integral_lambda(b, c);
    CHECK(std::abs(whole - split) < 1e-14 * (1.0 + whole));
  }
}

TEST_CASE("integral scales quadratically in the tau value") {
  const double base = TauSchedule::constant(0.6).tau2_integral_lambda(-2.0, 1.0);
  const double scaled = TauSchedule::constant(1.8).tau2_integral_lambda(-2.0, 1.0);
  CHECK(scaled == doctest::Approx(9.0 * base).epsilon(1e-14));
}

TEST_CASE("integral bound ordering is enforced") {
  CHECK_THROWS_AS(TauSchedule::constant(1.0).tau2_integral_lambda(2.0, 1.0), Error);
}

TEST_CASE("tau_from_eta") {
  const auto s = NoiseSchedule::vp_linear();
  const TimeGrid g = make_time_grid(s, GridKind::UniformLambda, 10);

  SUBCASE("eta = 0 gives tau = 0") {
    CHECK(tau_from_eta(0.0, s, g.times[3], g.times[4]) == 0.0);
  }

  SUBCASE("eta = 1 matches a bisection oracle on the noise-std match") {
    const double t_i = g.times[3], t_n = g.times[4];
    const double ai = s.alpha(t_i), an = s.alpha(t_n), si = s.sigma(t_i), sn = s.sigma(t_n);
    const double h = s.lambda(t_n) - s.lambda(t_i);
    const double ddim_std = 1.0 * std::sqrt((sn * sn) / (si * si) * (1.0 - ai * ai / (an * an)));
    // oracle: solve sn * sqrt(1 - exp(-2 tau^2 h)) = ddim_std for tau by bisection
    double lo = 0.0, hi = 20.0;
    while (hi - lo > 1e-14) {
      const double mid = 0.5 * (lo + hi);
      const double v = sn * std::sqrt(-std::expm1(-2.0 * mid * mid * h));
      (v < ddim_std ? lo : hi) = mid;
    }
    CHECK(tau_from_eta(1.0, s, t_i, t_n) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-10));
  }

  SUBCASE("round trip: the implied noise std reproduces DDIM's sigma_hat") {
    for (int i = 0; i < g.steps(); ++i) {
      const double t_i = g.times[i], t_n = g.times[i + 1];
      for (double eta : {0.1, 0.5, 0.9, 1.0}) {
        const double tau = tau_from_eta(eta, s, t_i, t_n);
        const double h = s.lambda(t_n) - s.lambda(t_i);
        const double sa_std = s.sigma(t_n) * std::sqrt(-std::expm1(-2.0 * tau * tau * h));
        const double ai = s.alpha(t_i), an = s.alpha(t_n), si = s.sigma(t_i), sn = s.sigma(t_n);
        const double ddim_std =
            eta * std::sqrt((sn * sn) / (si * si) * (1.0 - ai * ai / (an * an)));
        CHECK(std::abs(sa_std - ddim_std) < 1e-12);
      }
    }
  }

  SUBCASE("too-large eta raises") {
    // the log argument goes non-positive once eta^2 (1 - ai^2/an^2) >= si^2
    CHECK_THROWS_AS(tau_from_eta(50.0, s, g.times[0], g.times[1]), Error);
  }
}

TEST_CASE("eta-tau consistency: identical 1-step update coefficients") {
  // 100 random (schedule, grid step, eta) triples: the DDIM-eta update and
  // the 1-step predictor with tau_eta share state, model, and noise
  // coefficients to 1e-10
  const QuadratureRule q = QuadratureRule::gauss_legendre(32);
  int tested = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const bool cosine = uniform_at(99, 0, RngPurpose::Generic, 3 * trial) < 0.5;
    const NoiseSchedule s = cosine ? NoiseSchedule::vp_cosine() : NoiseSchedule::vp_linear();
    const int M = 4 + int(uniform_at(99, 0, RngPurpose::Generic, 3 * trial + 1) * 28);
    const TimeGrid g = make_time_grid(s, GridKind::UniformLambda, M);
    const double eta = uniform_at(99, 0, RngPurpose::Generic, 3 * trial + 2);
    const int i = trial % M;
    const double t_i = g.times[i], t_n = g.times[i + 1];

    const double tau = tau_from_eta(eta, s, t_i, t_n);
    const TauSchedule ts = TauSchedule::constant(tau);
    const auto c = predictor_coefficients(s, ts, g, i, 1, q);

    const double ai = s.alpha(t_i), an = s.alpha(t_n), si = s.sigma(t_i), sn = s.sigma(t_n);
    const double sig_hat = eta * std::sqrt((sn * sn) / (si * si) * (1.0 - ai * ai / (an * an)));
    const double resid = std::sqrt(sn * sn - sig_hat * sig_hat);
    // DDIM in data form: x' = (resid/si) x + (an - resid ai/si) x0_hat + sig_hat xi
    CHECK(std::abs(c.state_decay - resid / si) < 1e-10);
    CHECK(std::abs(c.model_weights[0] - (an - resid * ai / si)) < 1e-10);
    CHECK(std::abs(c.noise_std - sig_hat) < 1e-10);
    ++tested;
  }
  CHECK(tested == 100);
}

TEST_CASE("ddim_equivalent_tau builds one piece per grid step") {
  const auto s = NoiseSchedule::vp_linear();
  const TimeGrid g = make_time_grid(s, GridKind::UniformLambda, 6);
  const TauSchedule ts = ddim_equivalent_tau(0.8, s, g);
  CHECK(ts.kind() == TauKind::PiecewiseConstant);
  for (int i = 0; i < g.steps(); ++i) {
    const double mid = 0.5 * (g.times[i] + g.times[i + 1]);
    const double expected = tau_from_eta(0.8, s, g.times[i], g.times[i + 1]);
    CHECK(ts.eval_t(mid) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("piece validation") {
  const auto s = NoiseSchedule::ve();
  CHECK_THROWS_AS(TauSchedule::constant(-1.0), Error);
  CHECK_THROWS_AS(TauSchedule::piecewise_sigma_edm(s, {{1.0, 0.5, 1.0}}), Error);
  // overlapping pieces
  CHECK_THROWS_AS(
      TauSchedule::piecewise_t(s, {{0.1, 0.6, 1.0}, {0.5, 0.9, 0.5}}), Error);
}
