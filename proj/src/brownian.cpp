#include "sas/brownian.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "sas/rng.hpp"

namespace sas {

namespace {

// stable node id across bottom levels: root-major, heap numbering within the
// root's dyadic tree (level l, position m -> 2^l + m)
constexpr uint64_t kRootStride = uint64_t(1) << 26;

uint64_t node_id(int root, int level, int pos) {
  return uint64_t(root) * kRootStride + (uint64_t(1) << level) + uint64_t(pos);
}

// realizations are memoized per thread; a batch loop touches each sample on
// exactly one thread, so one slot per (path instance, sample) suffices
struct RealizationCache {
  uint64_t instance = 0;
  uint64_t sample = ~uint64_t(0);
  std::shared_ptr<const std::vector<double>> data;
};
thread_local RealizationCache tl_cache;

std::atomic<uint64_t> g_instance_counter{1};

}  // namespace

BrownianPath::BrownianPath(const NoiseSchedule& s, const TimeGrid& coarse, int level,
                           uint64_t seed, int dim)
    : schedule_(s), seed_(seed), dim_(dim), level_(level), n_roots_(coarse.steps()),
      instance_id_(g_instance_counter.fetch_add(1)) {
  if (level < 0 || level > 24) raise(ErrorCode::InvalidParams, "refinement level out of range");
  const int split = 1 << level;
  const int M = coarse.steps();
  times_.resize(size_t(M) * split + 1);
  for (int i = 0; i < M; ++i) {
    const double la = s.lambda(coarse.times[i]);
    const double lb = s.lambda(coarse.times[i + 1]);
    times_[size_t(i) * split] = coarse.times[i];
    for (int m = 1; m < split; ++m) {
      const double lam = la + (lb - la) * double(m) / double(split);
      times_[size_t(i) * split + m] = s.lambda_inverse(lam);
    }
  }
  times_.back() = coarse.times[M];
}

BrownianPath::BrownianPath(const NoiseSchedule& s, std::vector<double> fine_times, int n_roots,
                           uint64_t seed, int dim)
    : schedule_(s), times_(std::move(fine_times)), seed_(seed), dim_(dim), n_roots_(n_roots),
      instance_id_(g_instance_counter.fetch_add(1)) {
  if (times_.size() < 2) raise(ErrorCode::InvalidParams, "fine grid needs at least 2 nodes");
  const int intervals = int(times_.size()) - 1;
  if (n_roots < 1 || intervals % n_roots != 0)
    raise(ErrorCode::InvalidParams, "fine intervals must be n_roots * 2^level");
  int per_root = intervals / n_roots;
  level_ = 0;
  while ((1 << level_) < per_root) ++level_;
  if ((1 << level_) != per_root || level_ > 24)
    raise(ErrorCode::InvalidParams, "fine intervals must be n_roots * 2^level");
  for (size_t k = 0; k + 1 < times_.size(); ++k)
    if (!(times_[k] > times_[k + 1]))
      raise(ErrorCode::InvalidParams, "fine grid times must strictly decrease");
}

std::shared_ptr<const std::vector<double>> BrownianPath::realize(uint64_t sample) const {
  if (tl_cache.instance == instance_id_ && tl_cache.sample == sample && tl_cache.data)
    return tl_cache.data;

  const int leaves_per_root = 1 << level_;
  auto out = std::make_shared<std::vector<double>>(size_t(fine_intervals()) * dim_);
  std::vector<double> parent, child;
  for (int root = 0; root < n_roots_; ++root) {
    const int base = root * leaves_per_root;
    // node (l, m) spans fine leaves [m 2^{level-l}, (m+1) 2^{level-l})
    auto node_dt = [&](int l, int m) {
      const int span = 1 << (level_ - l);
      return times_[base + m * span] - times_[base + (m + 1) * span];
    };
    parent.assign(dim_, 0.0);
    const double sd0 = std::sqrt(node_dt(0, 0));
    for (int j = 0; j < dim_; ++j)
      parent[j] = sd0 * normal_at(seed_, sample, RngPurpose::PathIncrement,
                                  node_id(root, 0, 0) * dim_ + j);
    for (int l = 0; l < level_; ++l) {
      const int n_nodes = 1 << l;
      child.assign(size_t(n_nodes) * 2 * dim_, 0.0);
      for (int m = 0; m < n_nodes; ++m) {
        const double dtp = node_dt(l, m);
        const double dtl = node_dt(l + 1, 2 * m);
        const double dtr = dtp - dtl;
        const double frac = dtl / dtp;
        const double bridge_sd = std::sqrt(dtl * dtr / dtp);
        const uint64_t id = node_id(root, l + 1, 2 * m);
        for (int j = 0; j < dim_; ++j) {
          const double w = parent[size_t(m) * dim_ + j];
          const double z =
              normal_at(seed_, sample, RngPurpose::PathIncrement, id * dim_ + j);
          const double left = frac * w + bridge_sd * z;
          child[size_t(2 * m) * dim_ + j] = left;
          child[size_t(2 * m + 1) * dim_ + j] = w - left;
        }
      }
      parent.swap(child);
    }
    std::copy(parent.begin(), parent.end(), out->begin() + size_t(base) * dim_);
  }

  tl_cache.instance = instance_id_;
  tl_cache.sample = sample;
  tl_cache.data = out;
  return out;
}

void BrownianPath::increment(uint64_t sample, int k, double* out) const {
  const auto r = realize(sample);
  for (int j = 0; j < dim_; ++j) out[j] = (*r)[size_t(k) * dim_ + j];
}

int BrownianPath::index_of_time(double t) const {
  // times_ descending; binary search then snap to the nearest node
  const auto it = std::lower_bound(times_.begin(), times_.end(), t, std::greater<double>());
  int k = int(it - times_.begin());
  if (k > 0 &&
      std::abs(times_[k - 1] - t) <
          std::abs(times_[std::min<size_t>(k, times_.size() - 1)] - t))
    --k;
  k = std::min<int>(k, int(times_.size()) - 1);
  const double tol = 1e-9 * (1.0 + std::abs(times_.front()));
  if (std::abs(times_[k] - t) > tol)
    raise(ErrorCode::PathCoverage, "t=" + std::to_string(t) + " is not a fine path node");
  return k;
}

std::pair<int, int> BrownianPath::cover(double t_i, double t_next) const {
  if (!(t_next < t_i)) raise(ErrorCode::PathCoverage, "requires t_next < t_i");
  const int a = index_of_time(t_i);
  const int b = index_of_time(t_next);
  return {a, b};
}

void BrownianPath::sum_increments(uint64_t sample, double t_i, double t_next,
                                  double* out) const {
  const auto [a, b] = cover(t_i, t_next);
  const auto r = realize(sample);
  for (int j = 0; j < dim_; ++j) out[j] = 0;
  for (int k = a; k < b; ++k)
    for (int j = 0; j < dim_; ++j) out[j] += (*r)[size_t(k) * dim_ + j];
}

ItoWeights ito_weights(const BrownianPath& path, const TauSchedule& ts, double t_i,
                       double t_next) {
  const NoiseSchedule& s = path.schedule();
  ItoWeights iw;
  const auto [a, b] = path.cover(t_i, t_next);
  iw.k_lo = a;
  iw.k_hi = b;
  iw.sigma_next = s.sigma(t_next);
  const double lam_end = s.lambda(t_next);
  iw.w.resize(size_t(b - a));
  for (int k = a; k < b; ++k) {
    const double m = path.mid_time(k);
    const double tau = ts.eval_t(m);
    if (tau == 0.0) {
      iw.w[k - a] = 0.0;
      continue;
    }
    const double inner = ts.tau2_integral_lambda(s.lambda(m), lam_end);
    iw.w[k - a] = std::exp(-inner) * tau * std::sqrt(-2.0 * s.dlambda_dt(m));
  }
  iw.noise_std = s.sigma(t_next) *
                 std::sqrt(-std::expm1(-2.0 * ts.tau2_integral_lambda(s.lambda(t_i), lam_end)));
  return iw;
}

void ito_noise_cached(const BrownianPath& path, const ItoWeights& iw,
                      const std::vector<double>& realization, double* out) {
  const int dim = path.dim();
  for (int j = 0; j < dim; ++j) out[j] = 0;
  for (int k = iw.k_lo; k < iw.k_hi; ++k) {
    const double w = iw.w[k - iw.k_lo];
    if (w == 0.0) continue;
    for (int j = 0; j < dim; ++j) out[j] += w * realization[size_t(k) * dim + j];
  }
  for (int j = 0; j < dim; ++j) out[j] *= iw.sigma_next;
}

void ito_noise_cached(const BrownianPath& path, const ItoWeights& iw, uint64_t sample,
                      double* out) {
  ito_noise_cached(path, iw, *path.realize(sample), out);
}

void ito_noise_from_path(const BrownianPath& path, const TauSchedule& ts, double t_i,
                         double t_next, uint64_t sample, double* out) {
  ito_noise_cached(path, ito_weights(path, ts, t_i, t_next), sample, out);
}

PathNoiseSource::PathNoiseSource(const BrownianPath& path, const TauSchedule& ts,
                                 const TimeGrid& solver_grid)
    : path_(path) {
  step_weights_.reserve(solver_grid.steps());
  for (int i = 0; i < solver_grid.steps(); ++i)
    step_weights_.push_back(
        ito_weights(path, ts, solver_grid.times[i], solver_grid.times[i + 1]));
}

void PathNoiseSource::initial_xi(uint64_t sample, double* out, int dim) const {
  for (int j = 0; j < dim; ++j)
    out[j] = normal_at(path_.seed(), sample, RngPurpose::InitState, j);
}

void PathNoiseSource::iteration_xi(uint64_t sample, int iteration, double* out, int dim) const {
  const ItoWeights& iw = step_weights_[iteration - 1];
  if (iw.noise_std == 0.0) {
    for (int j = 0; j < dim; ++j) out[j] = 0;
    return;
  }
  ito_noise_cached(path_, iw, sample, out);
  for (int j = 0; j < dim; ++j) out[j] /= iw.noise_std;
}

}  // namespace sas
