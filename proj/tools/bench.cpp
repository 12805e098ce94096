// Times the OpenMP batch kernels against the serial reference loops.
// Usage: sas_bench [n_samples] [steps]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "sas/brownian.hpp"
#include "sas/solver.hpp"

using h_clock = std::chrono::high_resolution_clock;

namespace {

double seconds_since(h_clock::time_point t0) {
  return std::chrono::duration<double>(h_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 20000;
  const int steps = argc > 2 ? std::atoi(argv[2]) : 128;

  const sas::NoiseSchedule s = sas::NoiseSchedule::vp_cosine();
  const sas::TimeGrid grid = sas::make_time_grid(s, sas::GridKind::UniformLambda, steps);
  const sas::TauSchedule ts = sas::TauSchedule::constant(1.0);
  sas::GaussianMixtureData g;
  g.weights = {0.5, 0.5};
  g.means = {{-2.0}, {2.0}};
  g.variances = {0.25, 0.25};
  const sas::GmmModel model(g, s);
  sas::SolverConfig cfg;
  cfg.predictor_steps = 3;
  cfg.corrector_steps = 1;
  cfg.seed = 7;

  std::printf("batch sampling: n=%d, M=%d, s_p=%d, s_c=%d\n", n, steps, cfg.predictor_steps,
              cfg.corrector_steps);
  auto t0 = h_clock::now();
  const sas::RunRecord serial = sas::sa_solve(model, s, ts, grid, cfg, n, /*parallel=*/false);
  const double t_serial = seconds_since(t0);
  t0 = h_clock::now();
  const sas::RunRecord parallel = sas::sa_solve(model, s, ts, grid, cfg, n, /*parallel=*/true);
  const double t_parallel = seconds_since(t0);

  bool identical = serial.final_state == parallel.final_state;
  std::printf("  serial   %8.3f s  (%8.0f samples/s)\n", t_serial, n / t_serial);
  std::printf("  parallel %8.3f s  (%8.0f samples/s)  speedup %.2fx\n", t_parallel,
              n / t_parallel, t_serial / t_parallel);
  std::printf("  bitwise identical: %s\n", identical ? "yes" : "NO");

  const int paths = 64;
  const sas::TimeGrid coarse = sas::make_time_grid(s, sas::GridKind::UniformLambda, 8);
  const sas::BrownianPath path(s, coarse, 10, 11, 1);
  sas::TimeGrid fine;
  fine.kind = sas::GridKind::UniformLambda;
  for (int k = 0; k <= path.fine_intervals(); ++k) fine.times.push_back(path.fine_time(k));
  sas::SolverConfig rcfg;
  rcfg.predictor_steps = 3;
  rcfg.seed = 11;

  std::printf("coupled fine-path ensemble: paths=%d, fine steps=%d\n", paths,
              fine.steps());
  sas::PathNoiseSource noise(path, ts, fine);
  t0 = h_clock::now();
  const sas::RunRecord r1 = sas::sa_solve(model, s, ts, fine, rcfg, paths, false, &noise);
  const double t1 = seconds_since(t0);
  t0 = h_clock::now();
  const sas::RunRecord r2 = sas::sa_solve(model, s, ts, fine, rcfg, paths, true, &noise);
  const double t2 = seconds_since(t0);
  identical = r1.final_state == r2.final_state;
  std::printf("  serial   %8.3f s\n", t1);
  std::printf("  parallel %8.3f s  speedup %.2fx\n", t2, t1 / t2);
  std::printf("  bitwise identical: %s\n", identical ? "yes" : "NO");
  return 0;
}
