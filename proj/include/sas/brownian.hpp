#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "sas/schedule.hpp"
#include "sas/solver.hpp"
#include "sas/tau.hpp"

namespace sas {

// A Wiener realization on a dyadic refinement of a coarse grid. Increments
// come from a Levy bridge over each coarse interval, keyed by tree node, so a
// path is consistent under refinement: deepening the level subdivides the
// same realization instead of drawing a new one, and coarse increments are
// sums of fine ones by construction.
class BrownianPath {
public:
  // split every coarse interval into 2^level equal log-SNR pieces
  BrownianPath(const NoiseSchedule& s, const TimeGrid& coarse, int level, uint64_t seed,
               int dim);
  // wrap an explicit fine grid of n_roots * 2^level intervals (nested grid
  // families: make_time_grid with steps = n_roots << level)
  BrownianPath(const NoiseSchedule& s, std::vector<double> fine_times, int n_roots,
               uint64_t seed, int dim);

  int fine_intervals() const { return int(times_.size()) - 1; }
  double fine_time(int k) const { return times_[k]; }  // descending in k
  double dt(int k) const { return times_[k] - times_[k + 1]; }
  double mid_time(int k) const { return 0.5 * (times_[k] + times_[k + 1]); }
  int dim() const { return dim_; }
  int level() const { return level_; }
  uint64_t seed() const { return seed_; }
  const NoiseSchedule& schedule() const { return schedule_; }

  // all fine increments of one sample, leaf-major ([k * dim + j])
  std::shared_ptr<const std::vector<double>> realize(uint64_t sample) const;

  void increment(uint64_t sample, int k, double* out) const;

  // nearest fine node to t; PathCoverage if t is not (within tolerance) a node
  int index_of_time(double t) const;
  // fine interval range [first, last) spanning [t_next, t_i]
  std::pair<int, int> cover(double t_i, double t_next) const;

  void sum_increments(uint64_t sample, double t_i, double t_next, double* out) const;

private:
  NoiseSchedule schedule_;
  std::vector<double> times_;
  uint64_t seed_;
  int dim_;
  int level_ = 0;
  int n_roots_ = 0;
  uint64_t instance_id_;  // distinguishes cache entries across path lifetimes
};

// Precomputed integrand values for the Ito noise term of one solver step:
// sigma_{t_next} * sum_k w_k dW_k over the covered fine intervals.
struct ItoWeights {
  int k_lo = 0, k_hi = 0;
  std::vector<double> w;
  double sigma_next = 0;
  double noise_std = 0;  // closed-form sigma_tilde of the step
};

ItoWeights ito_weights(const BrownianPath& path, const TauSchedule& ts, double t_i,
                       double t_next);

void ito_noise_cached(const BrownianPath& path, const ItoWeights& iw, uint64_t sample,
                      double* out);
void ito_noise_cached(const BrownianPath& path, const ItoWeights& iw,
                      const std::vector<double>& realization, double* out);

// sigma_{t_next} * G(t_i, t_next) realized on the fine grid
void ito_noise_from_path(const BrownianPath& path, const TauSchedule& ts, double t_i,
                         double t_next, uint64_t sample, double* out);

// Drives a solver with the coupled Ito noise of a shared path: iteration xi is
// the path realization divided by the step's closed-form noise std, so the
// sigma_tilde * xi product inside the steps reproduces the realization.
class PathNoiseSource : public NoiseSource {
public:
  PathNoiseSource(const BrownianPath& path, const TauSchedule& ts, const TimeGrid& solver_grid);
  void initial_xi(uint64_t sample, double* out, int dim) const override;
  void iteration_xi(uint64_t sample, int iteration, double* out, int dim) const override;

private:
  const BrownianPath& path_;
  std::vector<ItoWeights> step_weights_;
};

}  // namespace sas
