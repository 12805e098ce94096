#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sas/models.hpp"
#include "sas/schedule.hpp"
#include "sas/solver.hpp"
#include "sas/tau.hpp"

namespace sas {

// Flat dotted-key store ("schedule.kind" -> "vp-linear"), insertion ordered.
class ConfigMap {
public:
  bool has(const std::string& key) const;
  const std::string* find(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  void set(const std::string& key, const std::string& value);  // overrides in place
  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

private:
  std::vector<std::pair<std::string, std::string>> items_;
};

// INI-like sections: `[schedule]` + `kind = vp-linear` becomes
// "schedule.kind". Duplicate keys and malformed lines raise ParseError with
// the line number; '#' and ';' start comments.
ConfigMap parse_config_text(const std::string& text, const std::string& origin = "<string>");
ConfigMap parse_config_file(const std::string& path);

// Everything a command needs, validated and typed. Unknown keys are a hard
// error; to_map() materializes all keys (defaults included) so a manifest
// replays without the original file.
struct ExperimentConfig {
  // schedule
  ScheduleKind schedule_kind = ScheduleKind::VpLinear;
  std::optional<double> beta_min, beta_max, cosine_s, sigma_min, sigma_max, t_eps, t_max;
  // grid
  GridKind grid_kind = GridKind::UniformLambda;
  int grid_steps = 20;
  double grid_rho = 7.0;
  std::optional<double> grid_sigma_min, grid_sigma_max;
  // tau
  TauKind tau_kind = TauKind::Zero;
  double tau_value = 0.0;
  std::vector<std::array<double, 3>> tau_pieces;  // (sigma_edm lo, hi, value)
  // coefficients / solver
  CoeffModePolicy coeff_mode = CoeffModePolicy::Auto;
  int predictor_steps = 3;
  int corrector_steps = 0;
  int batch = 16;
  uint64_t seed = 0;
  bool record_trajectory = false;
  // model
  int model_dim = 1;
  std::vector<double> model_weights = {1.0};
  std::vector<std::vector<double>> model_means = {{0.0}};
  std::vector<double> model_variances = {1.0};
  double perturb_epsilon = 0.0;
  uint64_t perturb_seed = 0;
  // verification
  int verify_levels = 4;
  int verify_paths = 64;
  int verify_ref_level = 14;
  int verify_coarsest_steps = 32;
  int verify_n = 100000;
  int verify_intervals = 1000;
  std::vector<double> verify_tau_list = {0.0, 0.5, 1.0};
  std::vector<double> verify_eps_list = {0.0, 0.5, 1.0};
  std::optional<double> expect_slope;
  double slope_tol = 0.35;
  // misc
  double eta = 0.0;
  std::string output_dir;

  static ExperimentConfig from_map(const ConfigMap& map);
  ConfigMap to_map() const;

  NoiseSchedule make_schedule() const;
  TimeGrid make_grid(const NoiseSchedule& s) const;
  TauSchedule make_tau(const NoiseSchedule& s) const;
  SolverConfig make_solver_config() const;
  GaussianMixtureData make_gmm() const;
  std::shared_ptr<const DataPredictionModel> make_model(const NoiseSchedule& s) const;
};

std::vector<double> parse_double_list(const std::string& text);
std::vector<std::array<double, 3>> parse_triple_list(const std::string& text);
std::vector<std::vector<double>> parse_vector_list(const std::string& text, int dim);

}  // namespace sas
