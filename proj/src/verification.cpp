#include "sas/verification.hpp"

#include <algorithm>
#include <cmath>

#include "sas/parallel.hpp"

namespace sas {

ConvergenceReport strong_order(const GmmModel& model, const NoiseSchedule& s,
                               const TauSchedule& ts, const StrongOrderConfig& cfg,
                               bool parallel) {
  if (!model.affine())
    raise(ErrorCode::NonAffineModel, "strong_order needs an affine (single-Gaussian) oracle");
  if (cfg.levels < 4) raise(ErrorCode::InsufficientLevels, "need at least 4 grid levels");
  if (cfg.levels - 1 > cfg.ref_level)
    raise(ErrorCode::InsufficientLevels, "ref_level must be >= levels-1 for nesting");

  const int dim = model.dim();
  // grids of all levels (and the fine reference) come from the same node
  // formula, so doubling the step count reproduces the coarser nodes bitwise
  // and every solver node is a fine path node
  auto level_grid = [&](int j) {
    return make_time_grid(s, cfg.grid_kind, cfg.coarsest_steps << j, cfg.grid_params);
  };
  const TimeGrid fine = level_grid(cfg.ref_level);
  const BrownianPath path(s, fine.times, cfg.coarsest_steps, cfg.seed, dim);
  const int n_paths = ts.is_zero() ? 1 : cfg.n_paths;  // zero tau: all paths identical

  auto run_level = [&](const TimeGrid& g, int sp, int sc) {
    SolverConfig sc_cfg;
    sc_cfg.predictor_steps = sp;
    sc_cfg.corrector_steps = sc;
    sc_cfg.seed = cfg.seed;
    PathNoiseSource noise(path, ts, g);
    return sa_solve(model, s, ts, g, sc_cfg, n_paths, parallel, &noise);
  };

  const RunRecord ref = run_level(fine, cfg.reference_predictor_steps, 0);

  ConvergenceReport rep;
  for (int j = 0; j < cfg.levels; ++j) {
    const TimeGrid g = level_grid(j);
    const RunRecord run = run_level(g, cfg.predictor_steps, cfg.corrector_steps);
    double h = 0;
    for (int i = 0; i < g.steps(); ++i) h = std::max(h, g.times[i] - g.times[i + 1]);
    double acc1 = 0, acc2 = 0;
    for (int p = 0; p < n_paths; ++p) {
      double d2 = 0;
      for (int k = 0; k < dim; ++k) {
        const double d = ref.final_state[p * dim + k] - run.final_state[p * dim + k];
        d2 += d * d;
      }
      acc1 += std::sqrt(d2);
      acc2 += d2;
    }
    rep.h.push_back(h);
    rep.err_l1.push_back(acc1 / n_paths);
    rep.err_l2.push_back(std::sqrt(acc2 / n_paths));
  }
  rep.slope_l1 = fit_loglog_slope(rep.h, rep.err_l1);
  rep.slope_l2 = fit_loglog_slope(rep.h, rep.err_l2);
  return rep;
}

std::vector<KsResult> marginal_invariance(const GaussianMixtureData& g, const NoiseSchedule& s,
                                          const std::vector<double>& taus, const TimeGrid& grid,
                                          int n_samples, const SolverConfig& cfg,
                                          bool parallel) {
  if (g.dim() != 1) raise(ErrorCode::DimensionMismatch, "marginal invariance is a 1-D test");
  const GmmModel model(g, s);
  const double t_final = grid.times.back();
  std::vector<KsResult> out;
  for (double tau : taus) {
    const TauSchedule ts = TauSchedule::constant(tau);
    RunRecord rec = sa_solve(model, s, ts, grid, cfg, n_samples, parallel);
    std::sort(rec.final_state.begin(), rec.final_state.end());
    const double stat = ks_statistic_sorted(
        rec.final_state, [&](double x) { return exact_marginal_cdf(g, s, t_final, x); });
    const double crit = ks_critical(size_t(n_samples));
    out.push_back({tau, stat, crit, stat < crit});
  }
  return out;
}

InequalityScanResult variance_inequality_scan(const NoiseSchedule& s,
                                              const std::vector<double>& tau_values,
                                              int n_intervals, uint64_t seed, double slack) {
  if (tau_values.empty()) raise(ErrorCode::InvalidParams, "need at least one tau value");
  InequalityScanResult res;
  res.min_margin = 1e300;
  for (int i = 0; i < n_intervals; ++i) {
    const double u1 = uniform_at(seed, 17, RngPurpose::Generic, 2 * uint64_t(i));
    const double u2 = uniform_at(seed, 17, RngPurpose::Generic, 2 * uint64_t(i) + 1);
    double la = s.lambda_lo() + (s.lambda_hi() - s.lambda_lo()) * std::min(u1, u2);
    double lb = s.lambda_lo() + (s.lambda_hi() - s.lambda_lo()) * std::max(u1, u2);
    if (lb - la < 1e-6) lb = std::min(s.lambda_hi(), la + 1e-6);
    const double t_i = s.lambda_inverse(la);     // smaller lambda = later time
    const double t_next = s.lambda_inverse(lb);  // larger lambda = earlier time
    if (!(t_next < t_i)) continue;
    const TauSchedule ts = TauSchedule::constant(tau_values[i % tau_values.size()]);
    const double data_std = noise_std(s, ts, t_i, t_next);
    const double data_var = data_std * data_std;
    const double noise_var = noise_param_variance(s, ts, t_i, t_next);
    const double margin = noise_var - data_var;
    res.count += 1;
    res.min_margin = std::min(res.min_margin, margin);
    if (margin < -slack) res.violations += 1;
  }
  return res;
}

std::vector<W1Entry> perturbed_score_sweep(const GaussianMixtureData& base,
                                           const NoiseSchedule& s,
                                           const std::vector<double>& eps_list,
                                           const std::vector<double>& tau_list,
                                           const TimeGrid& grid, int n_samples,
                                           const SolverConfig& cfg, uint64_t perturb_seed,
                                           bool parallel, int n_batches) {
  if (base.dim() != 1) raise(ErrorCode::DimensionMismatch, "perturbed sweep is a 1-D test");
  const double t_final = grid.times.back();
  const int n_probes = 4096;
  std::vector<double> quantiles(n_probes);
  for (int k = 0; k < n_probes; ++k)
    quantiles[k] = exact_marginal_quantile(base, s, t_final, (k + 0.5) / n_probes);

  auto base_model = std::make_shared<GmmModel>(base, s);
  std::vector<W1Entry> out;
  for (double eps : eps_list) {
    const auto model = perturb_model(base_model, s, eps, perturb_seed);
    for (double tau : tau_list) {
      const TauSchedule ts = TauSchedule::constant(tau);
      RunRecord rec = sa_solve(*model, s, ts, grid, cfg, n_samples, parallel);
      W1Entry e;
      e.epsilon = eps;
      e.tau = tau;
      const int per = n_samples / n_batches;
      for (int b = 0; b < n_batches; ++b) {
        std::vector<double> batch(rec.final_state.begin() + b * per,
                                  rec.final_state.begin() + (b + 1) * per);
        std::sort(batch.begin(), batch.end());
        e.batch_w1.push_back(w1_sorted_vs_quantiles(batch, quantiles));
      }
      std::sort(rec.final_state.begin(), rec.final_state.end());
      e.w1 = w1_sorted_vs_quantiles(rec.final_state, quantiles);
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::pair<double, double> paired_diff_mean_se(const std::vector<double>& a,
                                              const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    raise(ErrorCode::InvalidParams, "paired diff needs matching vectors");
  std::vector<double> d(a.size());
  for (size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double m = mean(d);
  const double se = std::sqrt(sample_variance(d) / double(d.size()));
  return {m, se};
}

}  // namespace sas
