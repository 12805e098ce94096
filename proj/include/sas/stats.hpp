#pragma once

#include <functional>
#include <vector>

namespace sas {

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);

// sup_x |F_n(x) - F(x)| for an ascending sample
double ks_statistic_sorted(const std::vector<double>& sorted,
                           const std::function<double(double)>& cdf);

// c / sqrt(n); c = 1.95 is the asymptotic p ~ 0.001 critical value
double ks_critical(std::size_t n, double c = 1.95);

// 1-Wasserstein distance between an ascending empirical sample and analytic
// quantiles evaluated at probes p_k = (k - 0.5) / K
double w1_sorted_vs_quantiles(const std::vector<double>& sorted,
                              const std::vector<double>& quantiles);

// least-squares slope of log(err) against log(h)
double fit_loglog_slope(const std::vector<double>& h, const std::vector<double>& err);

}  // namespace sas
