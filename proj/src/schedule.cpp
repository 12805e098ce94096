#include "sas/schedule.hpp"

#include <cmath>

namespace sas {

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::VpLinear: return "vp-linear";
    case ScheduleKind::VpCosine: return "vp-cosine";
    case ScheduleKind::Ve: return "ve";
    case ScheduleKind::Edm: return "edm";
  }
  return "?";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "vp-linear") return ScheduleKind::VpLinear;
  if (name == "vp-cosine") return ScheduleKind::VpCosine;
  if (name == "ve") return ScheduleKind::Ve;
  if (name == "edm") return ScheduleKind::Edm;
  raise(ErrorCode::InvalidParams, "unknown schedule kind '" + name + "'");
}

NoiseSchedule NoiseSchedule::vp_linear(double beta_min, double beta_max, double t_eps,
                                       double t_max) {
  if (!(beta_min > 0) || !(beta_max > beta_min))
    raise(ErrorCode::InvalidParams, "vp-linear requires 0 < beta_min < beta_max");
  if (!(t_eps > 0) || !(t_max > t_eps))
    raise(ErrorCode::InvalidParams, "vp-linear requires 0 < t_eps < t_max");
  NoiseSchedule s;
  s.kind_ = ScheduleKind::VpLinear;
  s.beta_min_ = beta_min;
  s.beta_max_ = beta_max;
  s.t_min_ = t_eps;
  s.t_max_ = t_max;
  s.finish_init();
  return s;
}

NoiseSchedule NoiseSchedule::vp_cosine(double offset, double t_eps, double t_max) {
  if (!(offset >= 0)) raise(ErrorCode::InvalidParams, "vp-cosine offset must be >= 0");
  if (!(t_eps > 0) || !(t_max > t_eps) || !(t_max < 1.0))
    raise(ErrorCode::InvalidParams, "vp-cosine requires 0 < t_eps < t_max < 1");
  NoiseSchedule s;
  s.kind_ = ScheduleKind::VpCosine;
  s.cosine_offset_ = offset;
  s.t_min_ = t_eps;
  s.t_max_ = t_max;
  s.finish_init();
  return s;
}

NoiseSchedule NoiseSchedule::ve(double sigma_min, double sigma_max) {
  if (!(sigma_min > 0) || !(sigma_max > sigma_min))
    raise(ErrorCode::InvalidParams, "ve requires 0 < sigma_min < sigma_max");
  NoiseSchedule s;
  s.kind_ = ScheduleKind::Ve;
  s.sigma_min_ = sigma_min;
  s.sigma_max_ = sigma_max;
  s.t_min_ = 0.0;
  s.t_max_ = 1.0;
  s.finish_init();
  return s;
}

NoiseSchedule NoiseSchedule::edm(double sigma_min, double sigma_max) {
  if (!(sigma_min > 0) || !(sigma_max > sigma_min))
    raise(ErrorCode::InvalidParams, "edm requires 0 < sigma_min < sigma_max");
  NoiseSchedule s;
  s.kind_ = ScheduleKind::Edm;
  s.sigma_min_ = sigma_min;
  s.sigma_max_ = sigma_max;
  s.t_min_ = sigma_min;
  s.t_max_ = sigma_max;
  s.finish_init();
  return s;
}

NoiseSchedule NoiseSchedule::from_kind(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::VpLinear: return vp_linear();
    case ScheduleKind::VpCosine: return vp_cosine();
    case ScheduleKind::Ve: return ve();
    case ScheduleKind::Edm: return edm();
  }
  raise(ErrorCode::InvalidParams, "bad schedule kind");
}

void NoiseSchedule::finish_init() {
  lambda_lo_ = lambda(t_max_);
  lambda_hi_ = lambda(t_min_);
}

void NoiseSchedule::check_domain(double t) const {
  // tolerate endpoint rounding from inverse lookups
  const double slack = 1e-12 * (1.0 + std::abs(t_max_));
  if (!(t >= t_min_ - slack) || !(t <= t_max_ + slack))
    raise(ErrorCode::OutOfDomain, "t=" + std::to_string(t) + " outside schedule domain");
}

double NoiseSchedule::log_alpha(double t) const {
  check_domain(t);
  switch (kind_) {
    case ScheduleKind::VpLinear:
      return -0.25 * t * t * (beta_max_ - beta_min_) - 0.5 * t * beta_min_;
    case ScheduleKind::VpCosine: {
      const double s = cosine_offset_;
      const double a = M_PI_2 * (t + s) / (1.0 + s);
      const double a0 = M_PI_2 * s / (1.0 + s);
      return std::log(std::cos(a)) - std::log(std::cos(a0));
    }
    case ScheduleKind::Ve:
    case ScheduleKind::Edm:
      return 0.0;
  }
  return 0.0;
}

double NoiseSchedule::alpha(double t) const { return std::exp(log_alpha(t)); }

double NoiseSchedule::sigma(double t) const {
  switch (kind_) {
    case ScheduleKind::VpLinear:
    case ScheduleKind::VpCosine:
      // sigma^2 = 1 - alpha^2 = -expm1(2 log alpha), exact VP identity
      return std::sqrt(-std::expm1(2.0 * log_alpha(t)));
    case ScheduleKind::Ve:
      check_domain(t);
      return sigma_min_ * std::pow(sigma_max_ / sigma_min_, t);
    case ScheduleKind::Edm:
      check_domain(t);
      return t;
  }
  return 0.0;
}

double NoiseSchedule::lambda(double t) const {
  switch (kind_) {
    case ScheduleKind::VpLinear:
    case ScheduleKind::VpCosine: {
      const double la = log_alpha(t);
      return la - 0.5 * std::log(-std::expm1(2.0 * la));
    }
    case ScheduleKind::Ve:
      check_domain(t);
      return -(std::log(sigma_min_) + t * std::log(sigma_max_ / sigma_min_));
    case ScheduleKind::Edm:
      check_domain(t);
      return -std::log(t);
  }
  return 0.0;
}

double NoiseSchedule::dlog_alpha_dt(double t) const {
  check_domain(t);
  switch (kind_) {
    case ScheduleKind::VpLinear:
      return -0.5 * (beta_min_ + t * (beta_max_ - beta_min_));
    case ScheduleKind::VpCosine: {
      const double s = cosine_offset_;
      const double a = M_PI_2 * (t + s) / (1.0 + s);
      return -M_PI_2 / (1.0 + s) * std::tan(a);
    }
    case ScheduleKind::Ve:
    case ScheduleKind::Edm:
      return 0.0;
  }
  return 0.0;
}

double NoiseSchedule::dlambda_dt(double t) const {
  switch (kind_) {
    case ScheduleKind::VpLinear:
    case ScheduleKind::VpCosine: {
      // for VP, dlambda/dt = (dlog alpha/dt) / sigma^2
      const double s2 = -std::expm1(2.0 * log_alpha(t));
      return dlog_alpha_dt(t) / s2;
    }
    case ScheduleKind::Ve:
      check_domain(t);
      return -std::log(sigma_max_ / sigma_min_);
    case ScheduleKind::Edm:
      check_domain(t);
      return -1.0 / t;
  }
  return 0.0;
}

double NoiseSchedule::g_squared(double t) const {
  const double sg = sigma(t);
  return -2.0 * sg * sg * dlambda_dt(t);
}

ScheduleEval NoiseSchedule::eval(double t) const { return {alpha(t), sigma(t), lambda(t)}; }

double NoiseSchedule::lambda_inverse(double target) const {
  const double slack = 1e-9 * (1.0 + std::abs(lambda_hi_));
  if (!(target >= lambda_lo_ - slack) || !(target <= lambda_hi_ + slack))
    raise(ErrorCode::OutOfRange, "lambda=" + std::to_string(target) + " not attainable");
  if (target >= lambda_hi_) return t_min_;
  if (target <= lambda_lo_) return t_max_;
  // lambda is strictly decreasing; bisect, then polish with Newton so the
  // residual in lambda (not t) reaches machine precision
  double lo = t_min_, hi = t_max_;
  for (int it = 0; it < 200 && hi - lo > 1e-10 * (1.0 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (lambda(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    const double step = (lambda(t) - target) / dlambda_dt(t);
    const double next = t - step;
    if (!(next > lo) || !(next < hi)) break;
    t = next;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(t))) break;
  }
  return t;
}

double NoiseSchedule::sigma_edm(double t) const { return std::exp(-lambda(t)); }

double NoiseSchedule::sigma_edm_inverse(double sigma_edm) const {
  if (!(sigma_edm > 0)) raise(ErrorCode::OutOfRange, "sigma_edm must be positive");
  return lambda_inverse(-std::log(sigma_edm));
}

std::string to_string(GridKind k) {
  switch (k) {
    case GridKind::UniformT: return "uniform-t";
    case GridKind::UniformLambda: return "uniform-lambda";
    case GridKind::EdmRho: return "edm-rho";
  }
  return "?";
}

GridKind grid_kind_from_string(const std::string& name) {
  if (name == "uniform-t") return GridKind::UniformT;
  if (name == "uniform-lambda") return GridKind::UniformLambda;
  if (name == "edm-rho") return GridKind::EdmRho;
  raise(ErrorCode::InvalidParams, "unknown grid kind '" + name + "'");
}

TimeGrid make_time_grid(const NoiseSchedule& s, GridKind kind, int steps,
                        const GridParams& params) {
  if (steps < 2) raise(ErrorCode::InvalidParams, "grid needs at least 2 steps");
  TimeGrid g;
  g.kind = kind;
  g.times.resize(steps + 1);
  const double T = s.t_max(), te = s.t_min();
  switch (kind) {
    case GridKind::UniformT:
      for (int i = 0; i <= steps; ++i)
        g.times[i] = T + (te - T) * double(i) / double(steps);
      break;
    case GridKind::UniformLambda: {
      const double l0 = s.lambda(T), l1 = s.lambda(te);
      for (int i = 1; i < steps; ++i)
        g.times[i] = s.lambda_inverse(l0 + (l1 - l0) * double(i) / double(steps));
      g.times[0] = T;
      g.times[steps] = te;
      break;
    }
    case GridKind::EdmRho: {
      double smin = params.sigma_min, smax = params.sigma_max;
      if (smin == 0.0) smin = s.sigma_edm(te);
      if (smax == 0.0) smax = s.sigma_edm(T);
      if (!(smin > 0) || !(smin < smax))
        raise(ErrorCode::InvalidParams, "edm-rho grid requires 0 < sigma_min < sigma_max");
      const double rho = params.rho;
      const double a = std::pow(smax, 1.0 / rho), b = std::pow(smin, 1.0 / rho);
      for (int i = 0; i <= steps; ++i) {
        const double se = std::pow(a + (b - a) * double(i) / double(steps), rho);
        g.times[i] = s.sigma_edm_inverse(se);
      }
      break;
    }
  }
  for (int i = 0; i < steps; ++i)
    if (!(g.times[i] > g.times[i + 1]))
      raise(ErrorCode::InvalidParams, "grid times are not strictly decreasing");
  return g;
}

}  // namespace sas
