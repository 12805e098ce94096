#include "sas/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sas {

bool ConfigMap::has(const std::string& key) const { return find(key) != nullptr; }

const std::string* ConfigMap::find(const std::string& key) const {
  for (const auto& [k, v] : items_)
    if (k == key) return &v;
  return nullptr;
}

std::string ConfigMap::get_or(const std::string& key, const std::string& fallback) const {
  const std::string* v = find(key);
  return v ? *v : fallback;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : items_)
    if (k == key) {
      v = value;
      return;
    }
  items_.emplace_back(key, value);
}

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(uint8_t(s[a]))) ++a;
  while (b > a && std::isspace(uint8_t(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

ConfigMap parse_config_text(const std::string& text, const std::string& origin) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    raise(ErrorCode::ParseError, origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail("empty section name");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (!section.empty()) key = section + "." + key;
    if (map.has(key)) fail("duplicate key '" + key + "'");
    map.set(key, value);
  }
  return map;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::ParseError, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::string cur;
  auto flush = [&] {
    cur = trim(cur);
    if (cur.empty()) return;
    size_t pos = 0;
    const double v = std::stod(cur, &pos);
    if (pos != cur.size()) raise(ErrorCode::ParseError, "bad number '" + cur + "'");
    out.push_back(v);
    cur.clear();
  };
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      flush();
      continue;
    }
    cur.push_back(c);
  }
  flush();
  return out;
}

namespace {

// "(a, b, c) (d, e, f)" -> groups of numbers; enclosing [ ] are tolerated
std::vector<std::vector<double>> parse_groups(const std::string& text) {
  std::vector<std::vector<double>> out;
  size_t i = 0;
  while (i < text.size()) {
    if (std::isspace(uint8_t(text[i])) || text[i] == ',' || text[i] == '[' ||
        text[i] == ']') {
      ++i;
      continue;
    }
    if (text[i] != '(') raise(ErrorCode::ParseError, "expected '(' in '" + text + "'");
    const size_t close = text.find(')', i);
    if (close == std::string::npos) raise(ErrorCode::ParseError, "unterminated '(' group");
    out.push_back(parse_double_list(text.substr(i + 1, close - i - 1)));
    i = close + 1;
  }
  return out;
}

}  // namespace

std::vector<std::array<double, 3>> parse_triple_list(const std::string& text) {
  std::vector<std::array<double, 3>> out;
  for (const auto& g : parse_groups(text)) {
    if (g.size() != 3) raise(ErrorCode::ParseError, "tau piece needs (smin, smax, value)");
    out.push_back({g[0], g[1], g[2]});
  }
  return out;
}

std::vector<std::vector<double>> parse_vector_list(const std::string& text, int dim) {
  if (text.find('(') == std::string::npos) {
    // flat comma list: scalars, one per component (dim must be 1)
    std::vector<std::vector<double>> out;
    for (double v : parse_double_list(text)) out.push_back({v});
    if (dim != 1)
      raise(ErrorCode::ParseError, "dim > 1 means need parenthesized tuples");
    return out;
  }
  auto groups = parse_groups(text);
  for (const auto& g : groups)
    if (int(g.size()) != dim)
      raise(ErrorCode::ParseError, "mean tuple arity does not match model.dim");
  return groups;
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "schedule.kind",     "schedule.beta_min",     "schedule.beta_max",
      "schedule.cosine_s", "schedule.sigma_min",    "schedule.sigma_max",
      "schedule.t_eps",    "schedule.t_max",        "grid.kind",
      "grid.steps",        "grid.rho",              "grid.sigma_min",
      "grid.sigma_max",    "tau.kind",              "tau.value",
      "tau.pieces",        "coeff.mode",            "solver.predictor_steps",
      "solver.corrector_steps", "solver.batch",     "solver.seed",
      "solver.record_trajectory", "model.dim",      "model.weights",
      "model.means",       "model.variances",       "model.perturb_epsilon",
      "model.perturb_seed", "verify.levels",        "verify.paths",
      "verify.ref_level",  "verify.coarsest_steps", "verify.n",
      "verify.intervals",  "verify.tau_list",       "verify.eps_list",
      "verify.expect_slope", "verify.slope_tol",    "run.eta",
      "run.nfe",           "output.dir",
  };
  return keys;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    raise(ErrorCode::ParseError, "key '" + key + "': bad number '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    raise(ErrorCode::ParseError, "key '" + key + "': bad integer '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  raise(ErrorCode::ParseError, "key '" + key + "': bad bool '" + v + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

TauKind tau_kind_from_string(const std::string& v) {
  if (v == "zero") return TauKind::Zero;
  if (v == "constant") return TauKind::Constant;
  if (v == "piecewise") return TauKind::PiecewiseConstant;
  raise(ErrorCode::ParseError, "unknown tau kind '" + v + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& map) {
  for (const auto& [k, v] : map.items())
    if (!known_keys().count(k)) raise(ErrorCode::UnknownKey, "unknown config key '" + k + "'");

  ExperimentConfig c;
  auto opt_double = [&](const char* key, std::optional<double>& slot) {
    if (const std::string* v = map.find(key)) slot = to_double(key, *v);
  };
  if (const std::string* v = map.find("schedule.kind")) c.schedule_kind = schedule_kind_from_string(*v);
  opt_double("schedule.beta_min", c.beta_min);
  opt_double("schedule.beta_max", c.beta_max);
  opt_double("schedule.cosine_s", c.cosine_s);
  opt_double("schedule.sigma_min", c.sigma_min);
  opt_double("schedule.sigma_max", c.sigma_max);
  opt_double("schedule.t_eps", c.t_eps);
  opt_double("schedule.t_max", c.t_max);

  if (const std::string* v = map.find("grid.kind")) c.grid_kind = grid_kind_from_string(*v);
  if (const std::string* v = map.find("grid.steps")) c.grid_steps = int(to_long("grid.steps", *v));
  if (const std::string* v = map.find("grid.rho")) c.grid_rho = to_double("grid.rho", *v);
  opt_double("grid.sigma_min", c.grid_sigma_min);
  opt_double("grid.sigma_max", c.grid_sigma_max);

  if (const std::string* v = map.find("tau.kind")) c.tau_kind = tau_kind_from_string(*v);
  if (const std::string* v = map.find("tau.value")) c.tau_value = to_double("tau.value", *v);
  if (const std::string* v = map.find("tau.pieces")) c.tau_pieces = parse_triple_list(*v);

  if (const std::string* v = map.find("coeff.mode")) c.coeff_mode = coeff_mode_from_string(*v);
  if (const std::string* v = map.find("solver.predictor_steps"))
    c.predictor_steps = int(to_long("solver.predictor_steps", *v));
  if (const std::string* v = map.find("solver.corrector_steps"))
    c.corrector_steps = int(to_long("solver.corrector_steps", *v));
  if (const std::string* v = map.find("solver.batch")) c.batch = int(to_long("solver.batch", *v));
  if (const std::string* v = map.find("solver.seed"))
    c.seed = uint64_t(to_long("solver.seed", *v));
  if (const std::string* v = map.find("solver.record_trajectory"))
    c.record_trajectory = to_bool("solver.record_trajectory", *v);

  if (const std::string* v = map.find("model.dim")) c.model_dim = int(to_long("model.dim", *v));
  if (const std::string* v = map.find("model.weights")) c.model_weights = parse_double_list(*v);
  if (const std::string* v = map.find("model.means"))
    c.model_means = parse_vector_list(*v, c.model_dim);
  if (const std::string* v = map.find("model.variances"))
    c.model_variances = parse_double_list(*v);
  if (const std::string* v = map.find("model.perturb_epsilon"))
    c.perturb_epsilon = to_double("model.perturb_epsilon", *v);
  if (const std::string* v = map.find("model.perturb_seed"))
    c.perturb_seed = uint64_t(to_long("model.perturb_seed", *v));

  if (const std::string* v = map.find("verify.levels")) c.verify_levels = int(to_long("verify.levels", *v));
  if (const std::string* v = map.find("verify.paths")) c.verify_paths = int(to_long("verify.paths", *v));
  if (const std::string* v = map.find("verify.ref_level"))
    c.verify_ref_level = int(to_long("verify.ref_level", *v));
  if (const std::string* v = map.find("verify.coarsest_steps"))
    c.verify_coarsest_steps = int(to_long("verify.coarsest_steps", *v));
  if (const std::string* v = map.find("verify.n")) c.verify_n = int(to_long("verify.n", *v));
  if (const std::string* v = map.find("verify.intervals"))
    c.verify_intervals = int(to_long("verify.intervals", *v));
  if (const std::string* v = map.find("verify.tau_list")) c.verify_tau_list = parse_double_list(*v);
  if (const std::string* v = map.find("verify.eps_list")) c.verify_eps_list = parse_double_list(*v);
  if (const std::string* v = map.find("verify.expect_slope"))
    c.expect_slope = to_double("verify.expect_slope", *v);
  if (const std::string* v = map.find("verify.slope_tol")) c.slope_tol = to_double("verify.slope_tol", *v);

  if (const std::string* v = map.find("run.eta")) c.eta = to_double("run.eta", *v);
  if (const std::string* v = map.find("run.nfe")) {
    // NFE = 1 + M * (1 + [s_c > 0]); solve for the step count
    const long nfe = to_long("run.nfe", *v);
    const long per_step = 1 + (c.corrector_steps > 0 ? 1 : 0);
    if (nfe <= per_step || (nfe - 1) % per_step != 0)
      raise(ErrorCode::InvalidParams, "run.nfe=" + *v + " is not 1 + M*" +
                                          std::to_string(per_step) + " for any M >= 1");
    c.grid_steps = int((nfe - 1) / per_step);
  }
  if (const std::string* v = map.find("output.dir")) c.output_dir = *v;
  return c;
}

ConfigMap ExperimentConfig::to_map() const {
  ConfigMap m;
  m.set("schedule.kind", to_string(schedule_kind));
  const NoiseSchedule s = make_schedule();
  if (schedule_kind == ScheduleKind::VpLinear) {
    m.set("schedule.beta_min", fmt(s.beta_min()));
    m.set("schedule.beta_max", fmt(s.beta_max()));
  }
  if (schedule_kind == ScheduleKind::VpCosine) m.set("schedule.cosine_s", fmt(s.cosine_offset()));
  if (schedule_kind == ScheduleKind::Ve || schedule_kind == ScheduleKind::Edm) {
    m.set("schedule.sigma_min", fmt(s.sigma_min()));
    m.set("schedule.sigma_max", fmt(s.sigma_max()));
  }
  m.set("schedule.t_eps", fmt(s.t_min()));
  m.set("schedule.t_max", fmt(s.t_max()));
  m.set("grid.kind", to_string(grid_kind));
  m.set("grid.steps", std::to_string(grid_steps));
  m.set("grid.rho", fmt(grid_rho));
  if (grid_sigma_min) m.set("grid.sigma_min", fmt(*grid_sigma_min));
  if (grid_sigma_max) m.set("grid.sigma_max", fmt(*grid_sigma_max));
  m.set("tau.kind", to_string(tau_kind));
  m.set("tau.value", fmt(tau_value));
  if (!tau_pieces.empty()) {
    std::string txt;
    for (const auto& p : tau_pieces)
      txt += "(" + fmt(p[0]) + ", " + fmt(p[1]) + ", " + fmt(p[2]) + ") ";
    m.set("tau.pieces", trim(txt));
  }
  m.set("coeff.mode", to_string(coeff_mode));
  m.set("solver.predictor_steps", std::to_string(predictor_steps));
  m.set("solver.corrector_steps", std::to_string(corrector_steps));
  m.set("solver.batch", std::to_string(batch));
  m.set("solver.seed", std::to_string(seed));
  m.set("solver.record_trajectory", record_trajectory ? "true" : "false");
  m.set("model.dim", std::to_string(model_dim));
  {
    std::string w, mu, var;
    for (size_t k = 0; k < model_weights.size(); ++k)
      w += (k ? ", " : "") + fmt(model_weights[k]);
    for (size_t k = 0; k < model_means.size(); ++k) {
      mu += (k ? " (" : "(");
      for (size_t j = 0; j < model_means[k].size(); ++j)
        mu += (j ? ", " : "") + fmt(model_means[k][j]);
      mu += ")";
    }
    for (size_t k = 0; k < model_variances.size(); ++k)
      var += (k ? ", " : "") + fmt(model_variances[k]);
    m.set("model.weights", w);
    m.set("model.means", mu);
    m.set("model.variances", var);
  }
  m.set("model.perturb_epsilon", fmt(perturb_epsilon));
  m.set("model.perturb_seed", std::to_string(perturb_seed));
  m.set("verify.levels", std::to_string(verify_levels));
  m.set("verify.paths", std::to_string(verify_paths));
  m.set("verify.ref_level", std::to_string(verify_ref_level));
  m.set("verify.coarsest_steps", std::to_string(verify_coarsest_steps));
  m.set("verify.n", std::to_string(verify_n));
  m.set("verify.intervals", std::to_string(verify_intervals));
  {
    std::string t, e;
    for (size_t k = 0; k < verify_tau_list.size(); ++k)
      t += (k ? ", " : "") + fmt(verify_tau_list[k]);
    for (size_t k = 0; k < verify_eps_list.size(); ++k)
      e += (k ? ", " : "") + fmt(verify_eps_list[k]);
    m.set("verify.tau_list", t);
    m.set("verify.eps_list", e);
  }
  if (expect_slope) m.set("verify.expect_slope", fmt(*expect_slope));
  m.set("verify.slope_tol", fmt(slope_tol));
  m.set("run.eta", fmt(eta));
  if (!output_dir.empty()) m.set("output.dir", output_dir);
  return m;
}

NoiseSchedule ExperimentConfig::make_schedule() const {
  switch (schedule_kind) {
    case ScheduleKind::VpLinear:
      return NoiseSchedule::vp_linear(beta_min.value_or(0.1), beta_max.value_or(20.0),
                                      t_eps.value_or(1e-3), t_max.value_or(1.0));
    case ScheduleKind::VpCosine:
      return NoiseSchedule::vp_cosine(cosine_s.value_or(0.008), t_eps.value_or(1e-3),
                                      t_max.value_or(1.0 - 1e-3));
    case ScheduleKind::Ve:
      return NoiseSchedule::ve(sigma_min.value_or(0.02), sigma_max.value_or(80.0));
    case ScheduleKind::Edm:
      return NoiseSchedule::edm(sigma_min.value_or(0.02), sigma_max.value_or(80.0));
  }
  raise(ErrorCode::InvalidParams, "bad schedule kind");
}

TimeGrid ExperimentConfig::make_grid(const NoiseSchedule& s) const {
  GridParams p;
  p.rho = grid_rho;
  if (grid_sigma_min) p.sigma_min = *grid_sigma_min;
  if (grid_sigma_max) p.sigma_max = *grid_sigma_max;
  return make_time_grid(s, grid_kind, grid_steps, p);
}

TauSchedule ExperimentConfig::make_tau(const NoiseSchedule& s) const {
  switch (tau_kind) {
    case TauKind::Zero: return TauSchedule::zero();
    case TauKind::Constant: return TauSchedule::constant(tau_value);
    case TauKind::PiecewiseConstant: return TauSchedule::piecewise_sigma_edm(s, tau_pieces);
  }
  raise(ErrorCode::InvalidParams, "bad tau kind");
}

SolverConfig ExperimentConfig::make_solver_config() const {
  SolverConfig cfg;
  cfg.predictor_steps = predictor_steps;
  cfg.corrector_steps = corrector_steps;
  cfg.coeff_mode = coeff_mode;
  cfg.seed = seed;
  cfg.record_trajectory = record_trajectory;
  return cfg;
}

GaussianMixtureData ExperimentConfig::make_gmm() const {
  GaussianMixtureData g;
  g.weights = model_weights;
  g.means = model_means;
  g.variances = model_variances;
  g.validate();
  if (g.dim() != model_dim)
    raise(ErrorCode::DimensionMismatch, "model.means arity disagrees with model.dim");
  return g;
}

std::shared_ptr<const DataPredictionModel> ExperimentConfig::make_model(
    const NoiseSchedule& s) const {
  auto base = std::make_shared<GmmModel>(make_gmm(), s);
  if (perturb_epsilon == 0.0) return base;
  return perturb_model(base, s, perturb_epsilon, perturb_seed);
}

}  // namespace sas
