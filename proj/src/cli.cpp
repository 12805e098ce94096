#include "sas/cli.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "sas/io.hpp"
#include "sas/verification.hpp"

namespace sas {

namespace {

struct FlagStage {
  CLI::App* cmd;
  std::vector<std::pair<CLI::Option*, std::pair<std::string, std::string*>>> bound;
  std::deque<std::string> storage;  // stable addresses for CLI11 bindings

  explicit FlagStage(CLI::App* c) : cmd(c) {}

  CLI::Option* bind(const std::string& flag, const std::string& key, const std::string& help) {
    storage.emplace_back();
    CLI::Option* opt = cmd->add_option(flag, storage.back(), help);
    bound.push_back({opt, {key, &storage.back()}});
    return opt;
  }

  void apply(ConfigMap* map) const {
    for (const auto& [opt, kv] : bound)
      if (opt->count() > 0) map->set(kv.first, *kv.second);
  }
};

void add_schedule_flags(FlagStage& st) {
  st.bind("--schedule", "schedule.kind", "vp-linear|vp-cosine|ve|edm");
  st.bind("--beta-min", "schedule.beta_min", "vp-linear beta at t=0");
  st.bind("--beta-max", "schedule.beta_max", "vp-linear beta at t=1");
  st.bind("--cosine-s", "schedule.cosine_s", "vp-cosine offset");
  st.bind("--sigma-min", "schedule.sigma_min", "ve/edm sigma at the data end");
  st.bind("--sigma-max", "schedule.sigma_max", "ve/edm sigma at the noise end");
  st.bind("--t-eps", "schedule.t_eps", "terminal sampling time");
  st.bind("--t-max", "schedule.t_max", "initial sampling time");
}

void add_grid_flags(FlagStage& st) {
  st.bind("--grid", "grid.kind", "uniform-t|uniform-lambda|edm-rho");
  st.bind("--M", "grid.steps", "number of solver steps");
  st.bind("--rho", "grid.rho", "edm-rho exponent");
  st.bind("--grid-sigma-min", "grid.sigma_min", "edm-rho grid sigma_min");
  st.bind("--grid-sigma-max", "grid.sigma_max", "edm-rho grid sigma_max");
}

void add_tau_flags(FlagStage& st) {
  st.bind("--tau-kind", "tau.kind", "zero|constant|piecewise");
  st.bind("--tau", "tau.value", "constant tau value (implies tau.kind=constant)");
  st.bind("--tau-pieces", "tau.pieces", "(smin, smax, value) ... in sigma_edm units");
}

void add_solver_flags(FlagStage& st) {
  st.bind("--sp", "solver.predictor_steps", "predictor steps s_p");
  st.bind("--sc", "solver.corrector_steps", "corrector steps s_c (0 = none)");
  st.bind("--coeff-mode", "coeff.mode", "auto|quadrature|closed_form");
  st.bind("--batch", "solver.batch", "number of samples");
  st.bind("--seed", "solver.seed", "64-bit seed");
  st.bind("--record-trajectory", "solver.record_trajectory",
          "keep per-iteration states (true|false)");
}

void add_model_flags(FlagStage& st) {
  st.bind("--dim", "model.dim", "state dimension");
  st.bind("--weights", "model.weights", "mixture weights, comma list");
  st.bind("--means", "model.means", "component means; tuples for dim > 1");
  st.bind("--variances", "model.variances", "isotropic component variances");
  st.bind("--perturb-eps", "model.perturb_epsilon", "score perturbation amplitude");
  st.bind("--perturb-seed", "model.perturb_seed", "score perturbation seed");
}

struct Ctx {
  std::string config_path;
  std::string manifest_path;
  std::string command;
  ConfigMap overrides;

  ConfigMap resolve() const {
    ConfigMap map;
    if (!manifest_path.empty()) {
      const Manifest m = read_manifest(manifest_path);
      if (!m.command.empty() && m.command != command)
        raise(ErrorCode::InvalidParams,
              "manifest was written by '" + m.command + "', not '" + command + "'");
      map = m.config;
    }
    if (!config_path.empty()) {
      const ConfigMap file_map = parse_config_file(config_path);
      for (const auto& [k, v] : file_map.items()) map.set(k, v);
    }
    for (const auto& [k, v] : overrides.items()) map.set(k, v);
    return map;
  }
};

std::string summary_json(const std::vector<std::pair<std::string, nlohmann::json>>& fields) {
  nlohmann::json j;
  for (const auto& [k, v] : fields) j[k] = v;
  return j.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

int cmd_sample(const Ctx& ctx) {
  const ConfigMap map = ctx.resolve();
  const ExperimentConfig cfg = ExperimentConfig::from_map(map);
  const NoiseSchedule s = cfg.make_schedule();
  const TimeGrid grid = cfg.make_grid(s);
  const TauSchedule ts = cfg.make_tau(s);
  const auto model = cfg.make_model(s);
  const SolverConfig sc = cfg.make_solver_config();

  const RunRecord rec = sa_solve(*model, s, ts, grid, sc, cfg.batch);
  const auto plan = build_step_plan(s, ts, grid, sc);

  const std::string dir = make_output_dir(cfg.output_dir, "sample");
  std::vector<std::string> header;
  for (int j = 0; j < rec.dim; ++j) header.push_back("x" + std::to_string(j));
  CsvWriter csv(dir + "/samples.csv", header);
  for (int i = 0; i < rec.n_samples; ++i) {
    std::vector<std::string> cells;
    for (int j = 0; j < rec.dim; ++j)
      cells.push_back(CsvWriter::cell(rec.final_state[size_t(i) * rec.dim + j]));
    csv.row(cells);
  }
  write_manifest(dir, "sample", cfg.to_map(), {"samples.csv"},
                 {{"nfe_count", std::to_string(rec.nfe_count)},
                  {"coefficient_checksum", checksum_hex(plan_checksum(plan))}});
  std::cout << "output: " << dir << "\n";
  return 0;
}

int cmd_coeffs(const Ctx& ctx) {
  const ConfigMap map = ctx.resolve();
  const ExperimentConfig cfg = ExperimentConfig::from_map(map);
  const NoiseSchedule s = cfg.make_schedule();
  const TimeGrid grid = cfg.make_grid(s);
  const TauSchedule ts = cfg.make_tau(s);
  const SolverConfig sc = cfg.make_solver_config();
  const auto plan = build_step_plan(s, ts, grid, sc);

  const std::string dir = make_output_dir(cfg.output_dir, "coeffs");
  auto dump = [&](const std::string& name, bool corrector, int max_b) {
    std::vector<std::string> header = {"i", "t_i", "t_next", "lambda_i", "state_decay"};
    for (int k = 0; k < max_b; ++k) header.push_back("b_" + std::to_string(k));
    header.push_back("noise_std");
    header.push_back("mode");
    CsvWriter csv(dir + "/" + name, header);
    for (size_t i = 0; i < plan.size(); ++i) {
      const StepCoefficients& c = corrector ? plan[i].corr : plan[i].pred;
      std::vector<std::string> cells = {
          CsvWriter::cell(int(i)), CsvWriter::cell(grid.times[i]),
          CsvWriter::cell(grid.times[i + 1]), CsvWriter::cell(s.lambda(grid.times[i])),
          CsvWriter::cell(c.state_decay)};
      for (int k = 0; k < max_b; ++k)
        cells.push_back(k < int(c.model_weights.size())
                            ? CsvWriter::cell(c.model_weights[k])
                            : std::string());
      cells.push_back(CsvWriter::cell(c.noise_std));
      cells.push_back(to_string(c.mode));
      csv.row(cells);
    }
  };
  std::vector<std::string> outputs = {"coefficients.csv"};
  dump("coefficients.csv", false, cfg.predictor_steps);
  if (cfg.corrector_steps > 0) {
    dump("corrector_coefficients.csv", true, cfg.corrector_steps + 1);
    outputs.push_back("corrector_coefficients.csv");
  }
  write_manifest(dir, "coeffs", cfg.to_map(), outputs,
                 {{"coefficient_checksum", checksum_hex(plan_checksum(plan))}});
  std::cout << "output: " << dir << "\n";
  return 0;
}

int cmd_convergence(const Ctx& ctx) {
  const ConfigMap map = ctx.resolve();
  const ExperimentConfig cfg = ExperimentConfig::from_map(map);
  const NoiseSchedule s = cfg.make_schedule();
  const TauSchedule ts = cfg.make_tau(s);
  const GmmModel model(cfg.make_gmm(), s);

  StrongOrderConfig so;
  so.coarsest_steps = cfg.verify_coarsest_steps;
  so.levels = cfg.verify_levels;
  so.ref_level = cfg.verify_ref_level;
  so.n_paths = cfg.verify_paths;
  so.seed = cfg.seed;
  so.predictor_steps = cfg.predictor_steps;
  so.corrector_steps = cfg.corrector_steps;
  if (map.has("grid.kind")) so.grid_kind = cfg.grid_kind;
  const ConvergenceReport rep = strong_order(model, s, ts, so);

  const std::string dir = make_output_dir(cfg.output_dir, "convergence");
  CsvWriter csv(dir + "/convergence.csv", {"h", "err_l1", "err_l2"});
  for (size_t i = 0; i < rep.h.size(); ++i)
    csv.row({CsvWriter::cell(rep.h[i]), CsvWriter::cell(rep.err_l1[i]),
             CsvWriter::cell(rep.err_l2[i])});

  bool pass = true;
  std::vector<std::pair<std::string, nlohmann::json>> fields = {
      {"slope_l1", rep.slope_l1}, {"slope_l2", rep.slope_l2}};
  if (cfg.expect_slope) {
    pass = std::abs(rep.slope_l1 - *cfg.expect_slope) <= cfg.slope_tol;
    fields.push_back({"expected_slope", *cfg.expect_slope});
    fields.push_back({"tolerance", cfg.slope_tol});
    fields.push_back({"pass", pass});
  }
  write_text(dir + "/summary.json", summary_json(fields));
  write_manifest(dir, "convergence", cfg.to_map(), {"convergence.csv", "summary.json"});
  std::cout << "output: " << dir << "\n";
  std::cout << "slope_l1: " << rep.slope_l1 << "\n";
  return pass ? 0 : 1;
}

int cmd_marginals(const Ctx& ctx) {
  const ConfigMap map = ctx.resolve();
  const ExperimentConfig cfg = ExperimentConfig::from_map(map);
  const NoiseSchedule s = cfg.make_schedule();
  const TimeGrid grid = cfg.make_grid(s);
  const auto results = marginal_invariance(cfg.make_gmm(), s, cfg.verify_tau_list, grid,
                                           cfg.verify_n, cfg.make_solver_config());

  const std::string dir = make_output_dir(cfg.output_dir, "marginals");
  CsvWriter csv(dir + "/marginals.csv", {"tau", "ks_stat", "threshold", "pass"});
  bool all = true;
  for (const auto& r : results) {
    csv.row({CsvWriter::cell(r.tau), CsvWriter::cell(r.statistic),
             CsvWriter::cell(r.threshold), r.pass ? "1" : "0"});
    all = all && r.pass;
  }
  write_text(dir + "/summary.json", summary_json({{"all_pass", all}}));
  write_manifest(dir, "marginals", cfg.to_map(), {"marginals.csv", "summary.json"});
  std::cout << "output: " << dir << "\n";
  return all ? 0 : 1;
}

int cmd_inequality(const Ctx& ctx) {
  const ConfigMap map = ctx.resolve();
  const ExperimentConfig cfg = ExperimentConfig::from_map(map);
  const NoiseSchedule s = cfg.make_schedule();

  const std::string dir = make_output_dir(cfg.output_dir, "inequality");
  CsvWriter csv(dir + "/inequality.csv", {"tau", "count", "violations", "min_margin"});
  int violations = 0;
  for (size_t k = 0; k < cfg.verify_tau_list.size(); ++k) {
    const auto res = variance_inequality_scan(s, {cfg.verify_tau_list[k]}, cfg.verify_intervals,
                                              cfg.seed + k);
    csv.row({CsvWriter::cell(cfg.verify_tau_list[k]), CsvWriter::cell(res.count),
             CsvWriter::cell(res.violations), CsvWriter::cell(res.min_margin)});
    violations += res.violations;
  }
  write_text(dir + "/summary.json",
             summary_json({{"violations", violations}, {"pass", violations == 0}}));
  write_manifest(dir, "inequality", cfg.to_map(), {"inequality.csv", "summary.json"});
  std::cout << "output: " << dir << "\n";
  return violations == 0 ? 0 : 1;
}

int cmd_perturbed(const Ctx& ctx) {
  const ConfigMap map = ctx.resolve();
  const ExperimentConfig cfg = ExperimentConfig::from_map(map);
  const NoiseSchedule s = cfg.make_schedule();
  const TimeGrid grid = cfg.make_grid(s);
  const auto entries =
      perturbed_score_sweep(cfg.make_gmm(), s, cfg.verify_eps_list, cfg.verify_tau_list, grid,
                            cfg.verify_n, cfg.make_solver_config(), cfg.perturb_seed);

  const std::string dir = make_output_dir(cfg.output_dir, "perturbed");
  CsvWriter csv(dir + "/w1.csv", {"epsilon", "tau", "w1", "w1_se"});
  for (const auto& e : entries) {
    const double se = std::sqrt(sample_variance(e.batch_w1) / double(e.batch_w1.size()));
    csv.row({CsvWriter::cell(e.epsilon), CsvWriter::cell(e.tau), CsvWriter::cell(e.w1),
             CsvWriter::cell(se)});
  }

  // trend assertion when the sweep includes tau = 0 and tau = 1: at the
  // largest epsilon the stochastic sampler must not be worse than the ODE
  // by more than 3 MC standard errors
  bool pass = true;
  bool asserted = false;
  double diff = 0, se = 0;
  const auto has = [&](double v) {
    return std::any_of(cfg.verify_tau_list.begin(), cfg.verify_tau_list.end(),
                       [&](double t) { return t == v; });
  };
  if (!cfg.verify_eps_list.empty() && has(0.0) && has(1.0)) {
    const double eps_max = *std::max_element(cfg.verify_eps_list.begin(),
                                             cfg.verify_eps_list.end());
    const W1Entry *e0 = nullptr, *e1 = nullptr;
    for (const auto& e : entries) {
      if (e.epsilon == eps_max && e.tau == 0.0) e0 = &e;
      if (e.epsilon == eps_max && e.tau == 1.0) e1 = &e;
    }
    if (e0 && e1) {
      std::tie(diff, se) = paired_diff_mean_se(e1->batch_w1, e0->batch_w1);
      pass = diff <= 3.0 * se;
      asserted = true;
    }
  }
  std::vector<std::pair<std::string, nlohmann::json>> fields;
  if (asserted) {
    fields.push_back({"w1_diff_tau1_minus_tau0", diff});
    fields.push_back({"w1_diff_se", se});
    fields.push_back({"pass", pass});
  }
  write_text(dir + "/summary.json", summary_json(fields));
  write_manifest(dir, "perturbed", cfg.to_map(), {"w1.csv", "summary.json"});
  std::cout << "output: " << dir << "\n";
  return pass ? 0 : 1;
}

int cmd_ddim_equiv(const Ctx& ctx) {
  const ConfigMap map = ctx.resolve();
  const ExperimentConfig cfg = ExperimentConfig::from_map(map);
  const NoiseSchedule s = cfg.make_schedule();
  if (!s.is_vp()) raise(ErrorCode::NonVPSchedule, "ddim-equiv needs a VP schedule");
  const TimeGrid grid = cfg.make_grid(s);
  const auto model = cfg.make_model(s);

  const RunRecord ddim = ddim_solve(*model, s, grid, cfg.eta, cfg.seed, cfg.batch, true);
  const TauSchedule tau_eta = ddim_equivalent_tau(cfg.eta, s, grid);
  SolverConfig sc = cfg.make_solver_config();
  sc.predictor_steps = 1;
  sc.corrector_steps = 0;
  sc.record_trajectory = true;
  const RunRecord sa = sa_solve(*model, s, tau_eta, grid, sc, cfg.batch);

  const std::string dir = make_output_dir(cfg.output_dir, "ddim-equiv");
  CsvWriter csv(dir + "/deviation.csv", {"iteration", "max_abs_deviation"});
  double max_dev = 0;
  for (size_t it = 0; it < ddim.trajectory.size(); ++it) {
    double d = 0;
    for (size_t k = 0; k < ddim.trajectory[it].size(); ++k)
      d = std::max(d, std::abs(ddim.trajectory[it][k] - sa.trajectory[it][k]));
    csv.row({CsvWriter::cell(int(it)), CsvWriter::cell(d)});
    max_dev = std::max(max_dev, d);
  }
  const bool pass = max_dev <= 1e-10;
  write_text(dir + "/summary.json",
             summary_json({{"max_deviation", max_dev}, {"pass", pass}}));
  write_manifest(dir, "ddim-equiv", cfg.to_map(), {"deviation.csv", "summary.json"});
  std::cout << "output: " << dir << "\n";
  std::cout << "max_deviation: " << max_dev << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int run_command(int argc, const char* const* argv) {
  CLI::App app{"stochastic Adams predictor-corrector sampler for diffusion SDEs"};
  app.require_subcommand(1);

  struct SubSpec {
    Ctx ctx;
    FlagStage* stage = nullptr;
    int (*run)(const Ctx&) = nullptr;
  };
  std::vector<std::unique_ptr<FlagStage>> stages;
  std::vector<std::unique_ptr<SubSpec>> specs;

  auto add_sub = [&](const std::string& name, const std::string& help, int (*fn)(const Ctx&)) {
    CLI::App* cmd = app.add_subcommand(name, help);
    auto spec = std::make_unique<SubSpec>();
    spec->ctx.command = name;
    spec->run = fn;
    auto stage = std::make_unique<FlagStage>(cmd);
    cmd->add_option("--config", spec->ctx.config_path, "key-value config file");
    cmd->add_option("--manifest", spec->ctx.manifest_path, "replay a previous run's manifest");
    stage->bind("--outdir", "output.dir", "output directory (default $SAS_OUTDIR or ./runs)");
    spec->stage = stage.get();
    stages.push_back(std::move(stage));
    specs.push_back(std::move(spec));
    return std::make_pair(cmd, specs.back().get());
  };

  {
    auto [cmd, spec] = add_sub("sample", "draw samples and write CSV + manifest", cmd_sample);
    add_schedule_flags(*spec->stage);
    add_grid_flags(*spec->stage);
    add_tau_flags(*spec->stage);
    add_solver_flags(*spec->stage);
    add_model_flags(*spec->stage);
    spec->stage->bind("--nfe", "run.nfe", "model evaluations per sample (alternative to --M)");
    (void)cmd;
  }
  {
    auto [cmd, spec] = add_sub("coeffs", "dump per-step solver coefficients", cmd_coeffs);
    (void)cmd;
    add_schedule_flags(*spec->stage);
    add_grid_flags(*spec->stage);
    add_tau_flags(*spec->stage);
    add_solver_flags(*spec->stage);
  }
  {
    auto [cmd, spec] =
        add_sub("convergence", "coupled-path strong-order estimate", cmd_convergence);
    (void)cmd;
    add_schedule_flags(*spec->stage);
    spec->stage->bind("--grid", "grid.kind", "grid family for the level hierarchy");
    add_tau_flags(*spec->stage);
    add_solver_flags(*spec->stage);
    add_model_flags(*spec->stage);
    spec->stage->bind("--levels", "verify.levels", "number of grid levels");
    spec->stage->bind("--paths", "verify.paths", "coupled paths");
    spec->stage->bind("--L", "verify.ref_level", "reference dyadic refinement level");
    spec->stage->bind("--M0", "verify.coarsest_steps", "coarsest grid steps");
    spec->stage->bind("--expect-slope", "verify.expect_slope", "assert fitted slope");
    spec->stage->bind("--slope-tol", "verify.slope_tol", "slope tolerance");
  }
  {
    auto [cmd, spec] =
        add_sub("marginals", "KS test of final samples vs the analytic marginal", cmd_marginals);
    (void)cmd;
    add_schedule_flags(*spec->stage);
    add_grid_flags(*spec->stage);
    add_solver_flags(*spec->stage);
    add_model_flags(*spec->stage);
    spec->stage->bind("--tau-list", "verify.tau_list", "tau values to test");
    spec->stage->bind("--n", "verify.n", "samples per tau");
  }
  {
    auto [cmd, spec] = add_sub(
        "inequality", "data- vs noise-parameterization variance inequality scan", cmd_inequality);
    (void)cmd;
    add_schedule_flags(*spec->stage);
    spec->stage->bind("--tau-list", "verify.tau_list", "tau values to scan");
    spec->stage->bind("--intervals", "verify.intervals", "random intervals per tau");
    spec->stage->bind("--seed", "solver.seed", "scan seed");
  }
  {
    auto [cmd, spec] =
        add_sub("perturbed", "W1 sweep under a perturbed score", cmd_perturbed);
    (void)cmd;
    add_schedule_flags(*spec->stage);
    add_grid_flags(*spec->stage);
    add_solver_flags(*spec->stage);
    add_model_flags(*spec->stage);
    spec->stage->bind("--eps-list", "verify.eps_list", "perturbation amplitudes");
    spec->stage->bind("--tau-list", "verify.tau_list", "tau values");
    spec->stage->bind("--n", "verify.n", "samples per (eps, tau)");
  }
  {
    auto [cmd, spec] = add_sub("ddim-equiv",
                               "DDIM-eta vs 1-step predictor with the matched tau", cmd_ddim_equiv);
    (void)cmd;
    add_schedule_flags(*spec->stage);
    add_grid_flags(*spec->stage);
    add_solver_flags(*spec->stage);
    add_model_flags(*spec->stage);
    spec->stage->bind("--eta", "run.eta", "DDIM stochasticity parameter");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? 0 : 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (auto& spec : specs) {
    CLI::App* cmd = app.get_subcommand(spec->ctx.command);
    if (!cmd->parsed()) continue;
    try {
      spec->stage->apply(&spec->ctx.overrides);
      // --tau implies a constant schedule unless the kind was given explicitly
      if (spec->ctx.overrides.has("tau.value") && !spec->ctx.overrides.has("tau.kind"))
        spec->ctx.overrides.set("tau.kind", "constant");
      if (spec->ctx.overrides.has("tau.pieces") && !spec->ctx.overrides.has("tau.kind"))
        spec->ctx.overrides.set("tau.kind", "piecewise");
      return spec->run(spec->ctx);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  return 2;
}

int run_command(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("sas");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_command(int(argv.size()), argv.data());
}

}  // namespace sas
