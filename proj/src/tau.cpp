#include "sas/tau.hpp"

#include <algorithm>
#include <cmath>

namespace sas {

std::string to_string(TauKind k) {
  switch (k) {
    case TauKind::Zero: return "zero";
    case TauKind::Constant: return "constant";
    case TauKind::PiecewiseConstant: return "piecewise";
  }
  return "?";
}

TauSchedule TauSchedule::zero() {
  TauSchedule ts;
  ts.kind_ = TauKind::Zero;
  ts.value_ = 0.0;
  return ts;
}

TauSchedule TauSchedule::constant(double value) {
  if (!(value >= 0)) raise(ErrorCode::InvalidParams, "tau must be >= 0");
  TauSchedule ts;
  ts.kind_ = TauKind::Constant;
  ts.value_ = value;
  return ts;
}

TauSchedule TauSchedule::piecewise_t(const NoiseSchedule& s, std::vector<TauPiece> pieces) {
  for (const auto& p : pieces) {
    if (!(p.value >= 0)) raise(ErrorCode::InvalidParams, "tau must be >= 0");
    if (!(p.t_lo < p.t_hi)) raise(ErrorCode::InvalidParams, "empty tau piece");
  }
  std::sort(pieces.begin(), pieces.end(),
            [](const TauPiece& a, const TauPiece& b) { return a.t_lo < b.t_lo; });
  const double eps = 1e-12 * (1.0 + std::abs(s.t_max()));
  for (size_t k = 1; k < pieces.size(); ++k)
    if (pieces[k].t_lo < pieces[k - 1].t_hi - eps)
      raise(ErrorCode::InvalidParams, "overlapping tau pieces");

  // clamp to the domain and fill gaps with tau = 0
  TauSchedule ts;
  ts.kind_ = TauKind::PiecewiseConstant;
  ts.bounded_domain_ = true;
  ts.t_lo_ = s.t_min();
  ts.t_hi_ = s.t_max();
  double cursor = s.t_min();
  for (auto p : pieces) {
    p.t_lo = std::max(p.t_lo, s.t_min());
    p.t_hi = std::min(p.t_hi, s.t_max());
    if (!(p.t_lo < p.t_hi)) continue;
    if (p.t_lo > cursor + eps) ts.pieces_t_.push_back({cursor, p.t_lo, 0.0});
    ts.pieces_t_.push_back({std::min(p.t_lo, cursor), p.t_hi, p.value});
    cursor = p.t_hi;
  }
  if (cursor < s.t_max() - eps) ts.pieces_t_.push_back({cursor, s.t_max(), 0.0});
  if (ts.pieces_t_.empty()) ts.pieces_t_.push_back({s.t_min(), s.t_max(), 0.0});
  ts.pieces_t_.front().t_lo = s.t_min();
  ts.pieces_t_.back().t_hi = s.t_max();

  // lambda view: t ascending maps to lambda descending
  ts.pieces_lambda_.reserve(ts.pieces_t_.size());
  for (auto it = ts.pieces_t_.rbegin(); it != ts.pieces_t_.rend(); ++it)
    ts.pieces_lambda_.push_back({s.lambda(it->t_hi), s.lambda(it->t_lo), it->value});
  ts.lambda_lo_ = s.lambda_lo();
  ts.lambda_hi_ = s.lambda_hi();
  ts.pieces_lambda_.front().lo = ts.lambda_lo_;
  ts.pieces_lambda_.back().hi = ts.lambda_hi_;
  return ts;
}

TauSchedule TauSchedule::piecewise_sigma_edm(const NoiseSchedule& s,
                                             const std::vector<std::array<double, 3>>& pieces) {
  // sigma_edm increases with t, so (smin, smax) maps to (t(smin), t(smax)]
  std::vector<TauPiece> tp;
  tp.reserve(pieces.size());
  for (const auto& p : pieces) {
    const double smin = p[0], smax = p[1], value = p[2];
    if (!(smin > 0) || !(smin < smax))
      raise(ErrorCode::InvalidParams, "tau piece requires 0 < smin < smax");
    const double se_lo = std::max(smin, s.sigma_edm(s.t_min()));
    const double se_hi = std::min(smax, s.sigma_edm(s.t_max()));
    if (!(se_lo < se_hi)) continue;
    tp.push_back({s.sigma_edm_inverse(se_lo), s.sigma_edm_inverse(se_hi), value});
  }
  return piecewise_t(s, std::move(tp));
}

TauSchedule TauSchedule::per_step(const NoiseSchedule& s, const TimeGrid& grid,
                                  const std::vector<double>& values) {
  if (values.size() != size_t(grid.steps()))
    raise(ErrorCode::InvalidParams, "need one tau value per grid step");
  std::vector<TauPiece> tp;
  tp.reserve(values.size());
  for (int i = 0; i < grid.steps(); ++i)
    tp.push_back({grid.times[i + 1], grid.times[i], values[i]});
  return piecewise_t(s, std::move(tp));
}

bool TauSchedule::is_zero() const {
  switch (kind_) {
    case TauKind::Zero: return true;
    case TauKind::Constant: return value_ == 0.0;
    case TauKind::PiecewiseConstant:
      return std::all_of(pieces_t_.begin(), pieces_t_.end(),
                         [](const TauPiece& p) { return p.value == 0.0; });
  }
  return false;
}

double TauSchedule::constant_value() const {
  if (kind_ == TauKind::PiecewiseConstant)
    raise(ErrorCode::NonConstantTau, "tau schedule is piecewise");
  return value_;
}

double TauSchedule::max_value() const {
  if (kind_ != TauKind::PiecewiseConstant) return value_;
  double m = 0;
  for (const auto& p : pieces_t_) m = std::max(m, p.value);
  return m;
}

double TauSchedule::eval_t(double t) const {
  if (kind_ != TauKind::PiecewiseConstant) return value_;
  const double eps = 1e-12 * (1.0 + std::abs(t_hi_));
  if (t < t_lo_ - eps || t > t_hi_ + eps)
    raise(ErrorCode::OutOfDomain, "t outside tau domain");
  if (t <= pieces_t_.front().t_hi) return pieces_t_.front().value;
  // pieces are (t_lo, t_hi]: first piece with t <= t_hi
  for (const auto& p : pieces_t_)
    if (t > p.t_lo && t <= p.t_hi) return p.value;
  return pieces_t_.back().value;
}

double TauSchedule::eval_lambda(double lambda) const {
  if (kind_ != TauKind::PiecewiseConstant) return value_;
  const double eps = 1e-12 * (1.0 + std::abs(lambda_hi_));
  if (lambda < lambda_lo_ - eps || lambda > lambda_hi_ + eps)
    raise(ErrorCode::OutOfRange, "lambda outside tau domain");
  // the t convention (t_lo, t_hi] maps to [lo, hi) in lambda
  if (lambda >= pieces_lambda_.back().lo) return pieces_lambda_.back().value;
  for (const auto& p : pieces_lambda_)
    if (lambda >= p.lo && lambda < p.hi) return p.value;
  return pieces_lambda_.front().value;
}

double TauSchedule::tau2_integral_lambda(double lambda_a, double lambda_b) const {
  if (!(lambda_a <= lambda_b)) raise(ErrorCode::OutOfRange, "requires lambda_a <= lambda_b");
  if (kind_ != TauKind::PiecewiseConstant) return value_ * value_ * (lambda_b - lambda_a);
  const double eps = 1e-9 * (1.0 + std::abs(lambda_hi_));
  if (lambda_a < lambda_lo_ - eps || lambda_b > lambda_hi_ + eps)
    raise(ErrorCode::OutOfRange, "integration bounds outside tau domain");
  double acc = 0;
  for (const auto& p : pieces_lambda_) {
    const double lo = std::max(lambda_a, p.lo);
    const double hi = std::min(lambda_b, p.hi);
    if (hi > lo) acc += p.value * p.value * (hi - lo);
  }
  return acc;
}

std::vector<double> TauSchedule::lambda_breakpoints(double lambda_a, double lambda_b) const {
  std::vector<double> out;
  if (kind_ != TauKind::PiecewiseConstant) return out;
  for (size_t k = 1; k < pieces_lambda_.size(); ++k) {
    const double edge = pieces_lambda_[k].lo;
    if (edge > lambda_a && edge < lambda_b) out.push_back(edge);
  }
  return out;
}

bool TauSchedule::constant_on_lambda(double lambda_a, double lambda_b) const {
  if (kind_ != TauKind::PiecewiseConstant) return true;
  return lambda_breakpoints(lambda_a, lambda_b).empty();
}

double tau_from_eta(double eta, const NoiseSchedule& s, double t_i, double t_next) {
  if (!s.is_vp()) raise(ErrorCode::NonVPSchedule, "tau_from_eta assumes a VP schedule");
  if (!(eta >= 0)) raise(ErrorCode::InvalidEta, "eta must be >= 0");
  if (!(t_next < t_i)) raise(ErrorCode::InvalidParams, "requires t_next < t_i (reverse time)");
  if (eta == 0.0) return 0.0;
  const double ai = s.alpha(t_i), an = s.alpha(t_next), si = s.sigma(t_i);
  const double h = s.lambda(t_next) - s.lambda(t_i);  // > 0
  const double arg = 1.0 - (eta * eta / (si * si)) * (1.0 - (ai * ai) / (an * an));
  if (!(arg > 0)) raise(ErrorCode::InvalidEta, "eta too large for this step");
  return std::sqrt(-std::log(arg) / (2.0 * h));
}

TauSchedule ddim_equivalent_tau(double eta, const NoiseSchedule& s, const TimeGrid& grid) {
  std::vector<double> values(grid.steps());
  for (int i = 0; i < grid.steps(); ++i)
    values[i] = tau_from_eta(eta, s, grid.times[i], grid.times[i + 1]);
  return TauSchedule::per_step(s, grid, values);
}

}  // namespace sas
