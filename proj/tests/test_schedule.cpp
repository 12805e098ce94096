#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "sas/rng.hpp"
#include "sas/schedule.hpp"

using namespace sas;

namespace {

std::vector<NoiseSchedule> all_schedules() {
  return {NoiseSchedule::vp_linear(), NoiseSchedule::vp_cosine(), NoiseSchedule::ve(),
          NoiseSchedule::edm()};
}

double random_t(const NoiseSchedule& s, uint64_t i) {
  const double u = uniform_at(42, 1, RngPurpose::Generic, i);
  return s.t_min() + u * (s.t_max() - s.t_min());
}

}  // namespace

TEST_CASE("vp identity alpha^2 + sigma^2 = 1") {
  for (const auto& s : {NoiseSchedule::vp_linear(), NoiseSchedule::vp_cosine()}) {
    for (int i = 0; i < 200; ++i) {
      const double t = random_t(s, i);
      const auto e = s.eval(t);
      CHECK(std::abs(e.alpha * e.alpha + e.sigma * e.sigma - 1.0) < 1e-12);
      CHECK(e.alpha > 0);
      CHECK(e.sigma > 0);
    }
  }
}

TEST_CASE("vp-cosine endpoint behaviour") {
  const auto s = NoiseSchedule::vp_cosine();
  // alpha -> 1, sigma -> 0 as t -> 0; t = 0 itself is excluded by t_eps
  const auto e = s.eval(s.t_min());
  CHECK(e.alpha > 0.999);
  CHECK(e.sigma < 0.01);
  CHECK(std::abs(e.alpha * e.alpha + e.sigma * e.sigma - 1.0) < 1e-12);
}

TEST_CASE("ve schedule: alpha = 1 and the endpoint hits sigma_max") {
  const auto s = NoiseSchedule::ve(0.02, 80.0);
  for (int i = 0; i < 100; ++i) CHECK(s.alpha(random_t(s, i)) == 1.0);
  CHECK(s.sigma(s.t_max()) == doctest::Approx(80.0).epsilon(1e-12));
  CHECK(s.sigma(s.t_min()) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("vp-linear at t = 0.5 matches trapezoid quadrature of the beta integral") {
  const auto s = NoiseSchedule::vp_linear(0.1, 20.0);
  const double t = 0.5;
  // oracle: log alpha = -1/2 int_0^t beta(u) du by trapezoid at 1e6 nodes
  const int n = 1000000;
  double acc = 0;
  for (int k = 0; k <= n; ++k) {
    const double u = t * k / n;
    const double beta = 0.1 + u * (20.0 - 0.1);
    acc += (k == 0 || k == n) ? 0.5 * beta : beta;
  }
  const double log_alpha = -0.5 * acc * (t / n);
  const double alpha = std::exp(log_alpha);
  const double sigma = std::sqrt(1.0 - alpha * alpha);
  const auto e = s.eval(t);
  CHECK(e.alpha == doctest::Approx(alpha).epsilon(1e-10));
  CHECK(e.sigma == doctest::Approx(sigma).epsilon(1e-10));
  CHECK(e.lambda == doctest::Approx(std::log(alpha / sigma)).epsilon(1e-10));
}

TEST_CASE("lambda is strictly decreasing in t") {
  for (const auto& s : all_schedules()) {
    for (int i = 0; i < 1000; ++i) {
      double t1 = random_t(s, 2 * i), t2 = random_t(s, 2 * i + 1);
      if (t1 == t2) continue;
      if (t1 > t2) std::swap(t1, t2);
      CHECK(s.lambda(t1) > s.lambda(t2));
    }
  }
}

TEST_CASE("lambda_inverse is a left inverse of lambda") {
  for (const auto& s : all_schedules()) {
    for (int i = 0; i < 1000; ++i) {
      const double t = random_t(s, i);
      CHECK(std::abs(s.lambda_inverse(s.lambda(t)) - t) <
            1e-10 * (1.0 + std::abs(s.t_max())));
    }
  }
}

TEST_CASE("ve lambda is -log sigma") {
  const auto s = NoiseSchedule::ve(0.02, 80.0);
  const double t = s.lambda_inverse(-std::log(80.0));
  CHECK(s.sigma(t) == doctest::Approx(80.0).epsilon(1e-10));
}

TEST_CASE("vp-linear lambda zero crossing agrees with a bisection oracle") {
  const auto s = NoiseSchedule::vp_linear();
  // independent bisection on lambda(t) = 0 at 1e-14 interval width
  double lo = s.t_min(), hi = s.t_max();
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    (s.lambda(mid) > 0 ? lo : hi) = mid;
  }
  const double oracle = 0.5 * (lo + hi);
  CHECK(std::abs(s.lambda_inverse(0.0) - oracle) < 1e-10);
}

TEST_CASE("sigma_edm_inverse") {
  SUBCASE("ve: time with sigma = value") {
    const auto s = NoiseSchedule::ve();
    const double t = s.sigma_edm_inverse(3.7);
    CHECK(s.sigma(t) == doctest::Approx(3.7).epsilon(1e-10));
  }
  SUBCASE("vp-cosine: sigma_edm = 1 is the lambda = 0 time") {
    const auto s = NoiseSchedule::vp_cosine();
    const double t = s.sigma_edm_inverse(1.0);
    CHECK(std::abs(s.lambda(t)) < 1e-9);
  }
  SUBCASE("vp-linear: sigma_edm = 50 vs bisection oracle") {
    const auto s = NoiseSchedule::vp_linear();
    double lo = s.t_min(), hi = s.t_max();
    while (hi - lo > 1e-14) {
      const double mid = 0.5 * (lo + hi);
      (s.sigma(mid) / s.alpha(mid) < 50.0 ? lo : hi) = mid;
    }
    CHECK(std::abs(s.sigma_edm_inverse(50.0) - 0.5 * (lo + hi)) < 1e-9);
  }
  SUBCASE("out of range raises") {
    const auto s = NoiseSchedule::ve();
    CHECK_THROWS_AS(s.sigma_edm_inverse(1000.0), Error);
  }
}

TEST_CASE("g^2 equals -2 sigma^2 dlambda/dt and the finite-difference form") {
  for (const auto& s : all_schedules()) {
    for (int i = 0; i < 50; ++i) {
      const double span = s.t_max() - s.t_min();
      const double t = s.t_min() + (0.05 + 0.9 * uniform_at(7, 2, RngPurpose::Generic, i)) * span;
      const double dt = 1e-6 * span;
      // central differences of sigma^2 and log alpha
      const double ds2 = (std::pow(s.sigma(t + dt), 2) - std::pow(s.sigma(t - dt), 2)) / (2 * dt);
      const double dla = (s.log_alpha(t + dt) - s.log_alpha(t - dt)) / (2 * dt);
      const double g2_fd = ds2 - 2.0 * dla * s.sigma(t) * s.sigma(t);
      const double g2 = s.g_squared(t);
      CHECK(std::abs(g2 - g2_fd) < 1e-6 * (1.0 + std::abs(g2)));
      // and the analytic dlambda/dt against finite differences
      const double dl_fd = (s.lambda(t + dt) - s.lambda(t - dt)) / (2 * dt);
      CHECK(std::abs(s.dlambda_dt(t) - dl_fd) < 1e-5 * (1.0 + std::abs(dl_fd)));
    }
  }
}

TEST_CASE("out-of-domain times raise") {
  const auto s = NoiseSchedule::vp_linear();
  CHECK_THROWS_AS(s.eval(s.t_max() + 0.5), Error);
  CHECK_THROWS_AS(s.eval(-1.0), Error);
  CHECK_THROWS_AS(s.lambda_inverse(s.lambda_hi() + 1.0), Error);
}

TEST_CASE("uniform-lambda grid spacing") {
  for (const auto& s : all_schedules()) {
    const TimeGrid g = make_time_grid(s, GridKind::UniformLambda, 17);
    std::vector<double> lams;
    for (double t : g.times) lams.push_back(s.lambda(t));
    const double d0 = lams[1] - lams[0];
    for (size_t i = 1; i + 1 < lams.size(); ++i)
      CHECK(std::abs((lams[i + 1] - lams[i]) - d0) < 1e-10 * (1.0 + std::abs(d0)));
  }
}

TEST_CASE("uniform-lambda midpoint of a 3-step grid is exact") {
  const auto s = NoiseSchedule::vp_linear();
  const TimeGrid g = make_time_grid(s, GridKind::UniformLambda, 3);
  const double l0 = s.lambda(g.times[0]), l1 = s.lambda(g.times[1]), l2 = s.lambda(g.times[2]);
  CHECK(std::abs(l1 - 0.5 * (l0 + l2)) < 1e-10);
}

TEST_CASE("edm-rho grid follows the rho = 7 node formula") {
  const auto s = NoiseSchedule::ve(0.02, 80.0);
  const int M = 5;
  const TimeGrid g = make_time_grid(s, GridKind::EdmRho, M);
  for (int i = 0; i <= M; ++i) {
    const double se =
        std::pow(std::pow(80.0, 1.0 / 7.0) + (double(i) / M) * (std::pow(0.02, 1.0 / 7.0) -
                                                                std::pow(80.0, 1.0 / 7.0)),
                 7.0);
    CHECK(std::abs(s.sigma_edm(g.times[i]) - se) < 1e-10 * (1.0 + se));
  }
  // endpoints map to sigma_max and sigma_min
  CHECK(s.sigma_edm(g.times[0]) == doctest::Approx(80.0).epsilon(1e-10));
  CHECK(s.sigma_edm(g.times[M]) == doctest::Approx(0.02).epsilon(1e-10));
}

TEST_CASE("edm-rho grid on a vp schedule uses the schedule's attainable range") {
  const auto s = NoiseSchedule::vp_cosine();
  const TimeGrid g = make_time_grid(s, GridKind::EdmRho, 8);
  CHECK(g.times.front() == doctest::Approx(s.t_max()).epsilon(1e-9));
  CHECK(g.times.back() == doctest::Approx(s.t_min()).epsilon(1e-9));
}

TEST_CASE("grids are strictly decreasing and respect the domain") {
  for (const auto& s : all_schedules()) {
    for (GridKind k : {GridKind::UniformT, GridKind::UniformLambda, GridKind::EdmRho}) {
      const TimeGrid g = make_time_grid(s, k, 11);
      REQUIRE(g.steps() == 11);
      for (int i = 0; i < g.steps(); ++i) CHECK(g.times[i] > g.times[i + 1]);
      CHECK(g.times.front() <= s.t_max() + 1e-12);
      CHECK(g.times.back() >= s.t_min() - 1e-12);
    }
  }
}

TEST_CASE("grid parameter validation") {
  const auto s = NoiseSchedule::ve();
  CHECK_THROWS_AS(make_time_grid(s, GridKind::UniformT, 1), Error);
  GridParams bad;
  bad.sigma_min = 3.0;
  bad.sigma_max = 1.0;
  CHECK_THROWS_AS(make_time_grid(s, GridKind::EdmRho, 8, bad), Error);
  CHECK_THROWS_AS(NoiseSchedule::ve(2.0, 1.0), Error);
  CHECK_THROWS_AS(NoiseSchedule::vp_linear(1.0, 0.5), Error);
}

TEST_CASE("doubling the step count reproduces coarse nodes bitwise") {
  // the strong-order harness couples nested grids through this property
  for (const auto& s : all_schedules()) {
    for (GridKind k : {GridKind::UniformT, GridKind::UniformLambda, GridKind::EdmRho}) {
      const TimeGrid g1 = make_time_grid(s, k, 8);
      const TimeGrid g2 = make_time_grid(s, k, 32);
      for (int i = 0; i <= 8; ++i) CHECK(g1.times[i] == g2.times[4 * i]);
    }
  }
}
