#include "sas/stats.hpp"

#include <algorithm>
#include <cmath>

#include "sas/errors.hpp"

namespace sas {

double mean(const std::vector<double>& v) {
  double acc = 0;
  for (double x : v) acc += x;
  return acc / double(v.size());
}

double sample_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double acc = 0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / double(v.size() - 1);
}

double ks_statistic_sorted(const std::vector<double>& sorted,
                           const std::function<double(double)>& cdf) {
  const double n = double(sorted.size());
  double stat = 0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    stat = std::max(stat, std::max((double(i) + 1.0) / n - f, f - double(i) / n));
  }
  return stat;
}

double ks_critical(std::size_t n, double c) { return c / std::sqrt(double(n)); }

double w1_sorted_vs_quantiles(const std::vector<double>& sorted,
                              const std::vector<double>& quantiles) {
  const size_t n = sorted.size(), K = quantiles.size();
  if (n == 0 || K == 0) raise(ErrorCode::InvalidParams, "w1 needs nonempty inputs");
  double acc = 0;
  for (size_t k = 0; k < K; ++k) {
    const double p = (double(k) + 0.5) / double(K);
    size_t idx = size_t(p * double(n));
    if (idx >= n) idx = n - 1;
    acc += std::abs(sorted[idx] - quantiles[k]);
  }
  return acc / double(K);
}

double fit_loglog_slope(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size() || h.size() < 2)
    raise(ErrorCode::InvalidParams, "slope fit needs >= 2 matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(h.size());
  for (size_t i = 0; i < h.size(); ++i) {
    if (!(err[i] > 0)) raise(ErrorCode::InvalidParams, "errors must be positive for log fit");
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace sas
