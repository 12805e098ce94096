#pragma once

#include <string>
#include <vector>

#include "sas/errors.hpp"

namespace sas {

enum class ScheduleKind { VpLinear, VpCosine, Ve, Edm };

std::string to_string(ScheduleKind k);
ScheduleKind schedule_kind_from_string(const std::string& name);

struct ScheduleEval {
  double alpha;
  double sigma;
  double lambda;
};

// Forward noising schedule: alpha_t, sigma_t and the log-SNR
// lambda_t = log(alpha_t / sigma_t), strictly decreasing on [t_min, t_max].
//
//   vp-linear : alpha_t = exp(-t^2 (b1-b0)/4 - t b0/2), sigma^2 = 1 - alpha^2
//   vp-cosine : alpha_t = cos(pi/2 (t+s)/(1+s)) / cos(pi/2 s/(1+s))
//   ve        : alpha = 1, sigma_t = smin (smax/smin)^t
//   edm       : alpha = 1, sigma_t = t, t in [smin, smax]
class NoiseSchedule {
public:
  static NoiseSchedule vp_linear(double beta_min = 0.1, double beta_max = 20.0,
                                 double t_eps = 1e-3, double t_max = 1.0);
  static NoiseSchedule vp_cosine(double offset = 0.008, double t_eps = 1e-3,
                                 double t_max = 1.0 - 1e-3);
  static NoiseSchedule ve(double sigma_min = 0.02, double sigma_max = 80.0);
  static NoiseSchedule edm(double sigma_min = 0.02, double sigma_max = 80.0);
  static NoiseSchedule from_kind(ScheduleKind kind);

  ScheduleKind kind() const { return kind_; }
  bool is_vp() const { return kind_ == ScheduleKind::VpLinear || kind_ == ScheduleKind::VpCosine; }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }

  double log_alpha(double t) const;
  double alpha(double t) const;
  double sigma(double t) const;
  double lambda(double t) const;
  double dlog_alpha_dt(double t) const;
  double dlambda_dt(double t) const;
  double g_squared(double t) const;  // -2 sigma_t^2 dlambda/dt
  ScheduleEval eval(double t) const;

  // lambda is strictly decreasing, so the attainable range is
  // [lambda(t_max), lambda(t_min)]
  double lambda_lo() const { return lambda_lo_; }
  double lambda_hi() const { return lambda_hi_; }
  double lambda_inverse(double lambda) const;

  double sigma_edm(double t) const;  // sigma_t / alpha_t = exp(-lambda_t)
  double sigma_edm_inverse(double sigma_edm) const;

  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }
  double cosine_offset() const { return cosine_offset_; }
  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }

private:
  NoiseSchedule() = default;
  void check_domain(double t) const;
  void finish_init();

  ScheduleKind kind_ = ScheduleKind::VpLinear;
  double t_min_ = 0, t_max_ = 1;
  double beta_min_ = 0.1, beta_max_ = 20.0;
  double cosine_offset_ = 0.008;
  double sigma_min_ = 0.02, sigma_max_ = 80.0;
  double lambda_lo_ = 0, lambda_hi_ = 0;
};

enum class GridKind { UniformT, UniformLambda, EdmRho };

std::string to_string(GridKind k);
GridKind grid_kind_from_string(const std::string& name);

struct GridParams {
  double rho = 7.0;
  // 0 means "use the schedule's attainable sigma_edm range"
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

// Strictly decreasing times t_0 = T > t_1 > ... > t_M = t_eps (M steps,
// M+1 nodes). For EdmRho, node i satisfies
//   sigma_edm(t_i) = (smax^{1/rho} + (i/M)(smin^{1/rho} - smax^{1/rho}))^rho.
struct TimeGrid {
  GridKind kind = GridKind::UniformLambda;
  std::vector<double> times;
  int steps() const { return int(times.size()) - 1; }
};

TimeGrid make_time_grid(const NoiseSchedule& s, GridKind kind, int steps,
                        const GridParams& params = {});

}  // namespace sas
