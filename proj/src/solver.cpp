#include "sas/solver.hpp"

#include <cmath>

#include "sas/parallel.hpp"

namespace sas {

void GaussianNoiseSource::initial_xi(uint64_t sample, double* out, int dim) const {
  for (int j = 0; j < dim; ++j) out[j] = normal_at(seed_, sample, RngPurpose::InitState, j);
}

void GaussianNoiseSource::iteration_xi(uint64_t sample, int iteration, double* out,
                                       int dim) const {
  const uint64_t base = uint64_t(iteration - 1) * uint64_t(dim);
  for (int j = 0; j < dim; ++j)
    out[j] = normal_at(seed_, sample, RngPurpose::IterationXi, base + j);
}

std::vector<StepPlan> build_step_plan(const NoiseSchedule& s, const TauSchedule& ts,
                                      const TimeGrid& grid, const SolverConfig& cfg) {
  if (cfg.predictor_steps < 1) raise(ErrorCode::InvalidParams, "predictor_steps must be >= 1");
  if (cfg.corrector_steps < 0) raise(ErrorCode::InvalidParams, "corrector_steps must be >= 0");
  const int M = grid.steps();
  if (M < 1) raise(ErrorCode::GridTooShort, "grid needs at least one step");
  const QuadratureRule q = QuadratureRule::gauss_legendre(cfg.quadrature_order);
  std::vector<StepPlan> plan(M);
  for (int it = 1; it <= M; ++it) {
    // warm-up truncation: only it past evaluations exist at iteration it
    const int sp = std::min(it, cfg.predictor_steps);
    plan[it - 1].pred = predictor_coefficients(s, ts, grid, it - 1, sp, q, cfg.coeff_mode);
    if (cfg.corrector_steps > 0) {
      const int sc = std::min(it, cfg.corrector_steps);
      plan[it - 1].corr = corrector_coefficients(s, ts, grid, it - 1, sc, q, cfg.coeff_mode);
      plan[it - 1].has_corrector = true;
    }
  }
  return plan;
}

void sa_predictor_step(const double* x_i, const EvalBuffer& buffer, const StepCoefficients& c,
                       const double* xi, int dim, double* out) {
  const int s = int(c.model_weights.size());
  if (buffer.size() < s)
    raise(ErrorCode::InsufficientHistory, "buffer holds fewer evaluations than steps");
  for (int j = 0; j < dim; ++j) out[j] = c.state_decay * x_i[j];
  for (int k = 0; k < s; ++k) {
    const double w = c.model_weights[k];
    const std::vector<double>& ev = buffer.eval_back(k);
    for (int j = 0; j < dim; ++j) out[j] += w * ev[j];
  }
  if (c.noise_std != 0.0)
    for (int j = 0; j < dim; ++j) out[j] += c.noise_std * xi[j];
}

void sa_corrector_step(const double* x_i, const double* x_pred_eval, const EvalBuffer& buffer,
                       const StepCoefficients& c, const double* xi, int dim, double* out) {
  const int s = int(c.model_weights.size()) - 1;
  if (buffer.size() < s)
    raise(ErrorCode::InsufficientHistory, "buffer holds fewer evaluations than steps");
  for (int j = 0; j < dim; ++j)
    out[j] = c.state_decay * x_i[j] + c.model_weights[0] * x_pred_eval[j];
  for (int k = 0; k < s; ++k) {
    const double w = c.model_weights[k + 1];
    const std::vector<double>& ev = buffer.eval_back(k);
    for (int j = 0; j < dim; ++j) out[j] += w * ev[j];
  }
  if (c.noise_std != 0.0)
    for (int j = 0; j < dim; ++j) out[j] += c.noise_std * xi[j];
}

namespace {

double initial_state_std(const NoiseSchedule& s) {
  // VP starts from N(0, I); VE/EDM from N(0, sigma_{t_0}^2 I)
  return s.is_vp() ? 1.0 : s.sigma(s.t_max());
}

struct TrajectorySink {
  std::vector<std::vector<double>>* states = nullptr;
  int dim = 0;
  int64_t sample = 0;
  void record(int iteration, const double* x) const {
    if (!states) return;
    std::copy(x, x + dim, (*states)[iteration].begin() + sample * dim);
  }
};

long solve_one(const DataPredictionModel& model, const NoiseSchedule& s,
               const std::vector<StepPlan>& plan, const TimeGrid& grid, const SolverConfig& cfg,
               const NoiseSource& noise, uint64_t sample, double* x_final,
               const TrajectorySink& sink) {
  const int dim = model.dim();
  const int M = grid.steps();
  std::vector<double> x(dim), x_pred(dim), xi(dim), eval(dim);

  noise.initial_xi(sample, x.data(), dim);
  const double std0 = initial_state_std(s);
  for (int j = 0; j < dim; ++j) x[j] *= std0;
  sink.record(0, x.data());

  EvalBuffer buffer(std::max(cfg.predictor_steps, cfg.corrector_steps) + 1);
  model.evaluate(x.data(), grid.times[0], eval.data());
  buffer.push(grid.times[0], eval);
  long nfe = 1;

  for (int it = 1; it <= M; ++it) {
    const StepPlan& sp = plan[it - 1];
    noise.iteration_xi(sample, it, xi.data(), dim);
    sa_predictor_step(x.data(), buffer, sp.pred, xi.data(), dim, x_pred.data());
    model.evaluate(x_pred.data(), grid.times[it], eval.data());
    ++nfe;
    if (sp.has_corrector) {
      // the same xi drives predictor and corrector this iteration
      sa_corrector_step(x.data(), eval.data(), buffer, sp.corr, xi.data(), dim, x.data());
      model.evaluate(x.data(), grid.times[it], eval.data());
      ++nfe;
      buffer.push(grid.times[it], eval);
    } else {
      x = x_pred;
      buffer.push(grid.times[it], eval);
    }
    sink.record(it, x.data());
  }
  std::copy(x.begin(), x.end(), x_final);
  return nfe;
}

}  // namespace

RunRecord sa_solve(const DataPredictionModel& model, const NoiseSchedule& s,
                   const TauSchedule& ts, const TimeGrid& grid, const SolverConfig& cfg,
                   int n_samples, bool parallel, const NoiseSource* noise) {
  const int dim = model.dim();
  RunRecord rec;
  rec.grid = grid;
  rec.config = cfg;
  rec.n_samples = n_samples;
  rec.dim = dim;
  rec.final_state.resize(size_t(n_samples) * dim);

  const std::vector<StepPlan> plan = build_step_plan(s, ts, grid, cfg);
  rec.step_diagnostics.resize(plan.size());
  for (size_t i = 0; i < plan.size(); ++i) {
    rec.step_diagnostics[i].noise_std = plan[i].pred.noise_std;
    rec.step_diagnostics[i].predictor_weight_sum = plan[i].pred.weight_sum();
    if (plan[i].has_corrector)
      rec.step_diagnostics[i].corrector_weight_sum = plan[i].corr.weight_sum();
  }
  if (cfg.record_trajectory)
    rec.trajectory.assign(grid.steps() + 1, std::vector<double>(size_t(n_samples) * dim));

  GaussianNoiseSource default_noise(cfg.seed);
  const NoiseSource& src = noise ? *noise : default_noise;

  std::vector<long> nfe(n_samples, 0);
  parallel_for(n_samples, parallel, [&](int64_t i) {
    TrajectorySink sink;
    if (cfg.record_trajectory) {
      sink.states = &rec.trajectory;
      sink.dim = dim;
      sink.sample = i;
    }
    nfe[i] = solve_one(model, s, plan, grid, cfg, src, uint64_t(i),
                       rec.final_state.data() + i * dim, sink);
  });
  rec.nfe_count = n_samples > 0 ? nfe[0] : 0;
  return rec;
}

void ddim_step(const double* x_i, const double* model_eval, double eta, const NoiseSchedule& s,
               double t_i, double t_next, const double* xi, int dim, double* out) {
  if (!s.is_vp()) raise(ErrorCode::NonVPSchedule, "ddim_step assumes alpha^2 + sigma^2 = 1");
  const double ai = s.alpha(t_i), an = s.alpha(t_next);
  const double si = s.sigma(t_i), sn = s.sigma(t_next);
  const double sig_hat =
      eta * std::sqrt((sn * sn) / (si * si) * (1.0 - (ai * ai) / (an * an)));
  const double resid = std::sqrt(std::max(0.0, sn * sn - sig_hat * sig_hat));
  for (int j = 0; j < dim; ++j) {
    const double eps = (x_i[j] - ai * model_eval[j]) / si;
    out[j] = an * model_eval[j] + resid * eps + sig_hat * xi[j];
  }
}

RunRecord ddim_solve(const DataPredictionModel& model, const NoiseSchedule& s,
                     const TimeGrid& grid, double eta, uint64_t seed, int n_samples,
                     bool record_trajectory, bool parallel, const NoiseSource* noise) {
  const int dim = model.dim();
  const int M = grid.steps();
  RunRecord rec;
  rec.grid = grid;
  rec.config.seed = seed;
  rec.config.predictor_steps = 1;
  rec.config.record_trajectory = record_trajectory;
  rec.n_samples = n_samples;
  rec.dim = dim;
  rec.final_state.resize(size_t(n_samples) * dim);
  if (record_trajectory)
    rec.trajectory.assign(M + 1, std::vector<double>(size_t(n_samples) * dim));

  GaussianNoiseSource default_noise(seed);
  const NoiseSource& src = noise ? *noise : default_noise;

  parallel_for(n_samples, parallel, [&](int64_t i) {
    std::vector<double> x(dim), xi(dim), eval(dim);
    src.initial_xi(uint64_t(i), x.data(), dim);
    const double std0 = s.is_vp() ? 1.0 : s.sigma(s.t_max());
    for (int j = 0; j < dim; ++j) x[j] *= std0;
    if (record_trajectory) std::copy(x.begin(), x.end(), rec.trajectory[0].begin() + i * dim);
    for (int it = 1; it <= M; ++it) {
      model.evaluate(x.data(), grid.times[it - 1], eval.data());
      src.iteration_xi(uint64_t(i), it, xi.data(), dim);
      ddim_step(x.data(), eval.data(), eta, s, grid.times[it - 1], grid.times[it], xi.data(),
                dim, x.data());
      if (record_trajectory)
        std::copy(x.begin(), x.end(), rec.trajectory[it].begin() + i * dim);
    }
    std::copy(x.begin(), x.end(), rec.final_state.begin() + i * dim);
  });
  rec.nfe_count = M;
  return rec;
}

void euler_maruyama_step(const double* x_i, const double* score_eval, const NoiseSchedule& s,
                         const TauSchedule& ts, double t_i, double t_next, const double* xi,
                         int dim, double* out) {
  if (!(t_next < t_i)) raise(ErrorCode::OutOfDomain, "requires t_next < t_i (reverse time)");
  const double dt = t_next - t_i;  // negative
  const double f = s.dlog_alpha_dt(t_i);
  const double g2 = s.g_squared(t_i);
  const double tau = ts.eval_t(t_i);
  const double noise_scale = tau * std::sqrt(g2) * std::sqrt(-dt);
  for (int j = 0; j < dim; ++j) {
    const double drift = f * x_i[j] - 0.5 * (1.0 + tau * tau) * g2 * score_eval[j];
    out[j] = x_i[j] + drift * dt + noise_scale * xi[j];
  }
}

void noise_param_onestep(const double* x_i, const double* model_eval, const NoiseSchedule& s,
                         const TauSchedule& ts, double t_i, double t_next, const double* xi,
                         int dim, double* out) {
  if (!(t_next < t_i)) raise(ErrorCode::OutOfDomain, "requires t_next < t_i (reverse time)");
  const double lam_a = s.lambda(t_i), lam_b = s.lambda(t_next);
  const double ai = s.alpha(t_i), an = s.alpha(t_next), si = s.sigma(t_i);
  // J = int e^{-lam} (1 + tau^2) dlam, exact per constant piece
  std::vector<double> cuts = ts.lambda_breakpoints(lam_a, lam_b);
  cuts.insert(cuts.begin(), lam_a);
  cuts.push_back(lam_b);
  double J = 0;
  for (size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double tau = ts.eval_lambda(0.5 * (cuts[c] + cuts[c + 1]));
    J += (1.0 + tau * tau) * (std::exp(-cuts[c]) - std::exp(-cuts[c + 1]));
  }
  const double nstd = std::sqrt(noise_param_variance(s, ts, t_i, t_next));
  for (int j = 0; j < dim; ++j) {
    const double eps = (x_i[j] - ai * model_eval[j]) / si;
    out[j] = an / ai * x_i[j] - an * J * eps + nstd * xi[j];
  }
}

}  // namespace sas
