// Batch frontend: simulate scenarios, solve mimicking trajectories, run
// g-estimation and the null test, reproduce the G-computation example, and
// drive the discretization and validation studies. All stochastic commands
// require --seed; re-running with identical configuration produces
// byte-identical result files (a run_meta.json sidecar carries the
// timestamp).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctsnm/discrete_mimic.hpp"
#include "ctsnm/errors.hpp"
#include "ctsnm/gcomp.hpp"
#include "ctsnm/inference.hpp"
#include "ctsnm/mimic_ode.hpp"
#include "ctsnm/rng.hpp"
#include "ctsnm/simulate.hpp"
#include "ctsnm/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t threads = 1;
  bool overwrite = false;
};

void require_seed(const GlobalOpts &g) {
  if (!g.seed_set) throw ctsnm::config_error("--seed is required for stochastic commands");
}

fs::path prepare_out(const GlobalOpts &g, const std::vector<std::string> &files) {
  fs::path dir(g.out);
  fs::create_directories(dir);
  if (!g.overwrite) {
    for (const auto &f : files)
      if (!f.empty() && fs::exists(dir / f))
        throw ctsnm::config_error("output file " + (dir / f).string() +
                                  " exists; pass --overwrite to replace it");
  }
  return dir;
}

void write_file(const fs::path &p, const std::string &content) {
  std::ofstream out(p);
  if (!out) throw ctsnm::config_error("cannot write " + p.string());
  out << content;
}

void write_run_meta(const fs::path &dir, const std::string &command, const json &config) {
  const auto now = std::chrono::system_clock::now();
  json meta;
  meta["command"] = command;
  meta["config"] = config;
  meta["timestamp_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  write_file(dir / "run_meta.json", meta.dump(2) + "\n");
}

ctsnm::Scenario load_scenario(const std::string &spec, const std::string &builtin) {
  if (!spec.empty()) return ctsnm::Scenario::load_json_file(spec);
  ctsnm::Scenario sc;
  if (builtin == "gvhd") {
    sc.kind = ctsnm::ScenarioKind::GvHDSurvival;
    sc.true_psi = {std::log(2.0)};
  } else if (builtin == "null") {
    sc.kind = ctsnm::ScenarioKind::NullEffect;
    sc.true_psi = {0.0};
  } else if (builtin == "pcp") {
    sc.kind = ctsnm::ScenarioKind::PCPContinuous;
    sc.true_psi = {0.4, -0.3, 0.2};
    sc.y2 = 10.0;
  } else if (builtin == "tree") {
    sc.kind = ctsnm::ScenarioKind::DiscreteTree;
    sc.true_psi = {};
  } else {
    throw ctsnm::config_error("unknown builtin scenario: " + builtin);
  }
  return sc;
}

ctsnm::Dataset load_dataset(const std::string &data_dir) {
  const fs::path dir(data_dir);
  const fs::path scenario_file = dir / "scenario.json";
  if (!fs::exists(scenario_file))
    throw ctsnm::config_error("data directory " + data_dir + " has no scenario.json");
  const ctsnm::Scenario sc = ctsnm::Scenario::load_json_file(scenario_file.string());
  return ctsnm::read_dataset((dir / "paths.csv").string(), (dir / "outcomes.csv").string(), sc);
}

std::vector<double> parse_times(const std::string &csv, double tau) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const double t = std::stod(item);
    if (t < 0.0 || t > tau)
      throw ctsnm::config_error("time " + item + " outside [0, horizon]");
    out.push_back(t);
  }
  return out;
}

int cmd_simulate(const GlobalOpts &g, const std::string &scenario_spec,
                 const std::string &builtin, std::size_t n, const std::string &cf_times) {
  require_seed(g);
  if (n == 0) throw ctsnm::config_error("--n must be >= 1");
  const ctsnm::Scenario sc = load_scenario(scenario_spec, builtin);
  const fs::path dir = prepare_out(
      g, {"paths.csv", "outcomes.csv", "counterfactuals.csv", "scenario.json"});

  const ctsnm::Dataset data = ctsnm::simulate_observed(sc, n, g.seed);
  ctsnm::write_paths_csv_file((dir / "paths.csv").string(), ctsnm::dataset_paths(data));
  ctsnm::write_outcomes_csv_file((dir / "outcomes.csv").string(), data);
  write_file(dir / "scenario.json", sc.to_json_string() + "\n");
  if (sc.kind != ctsnm::ScenarioKind::DiscreteTree) {
    std::vector<double> times =
        cf_times.empty() ? sc.decision_times() : parse_times(cf_times, sc.horizon);
    ctsnm::write_counterfactuals_csv_file((dir / "counterfactuals.csv").string(), data, times);
  }

  json cfg{{"scenario_fingerprint", data.fingerprint}, {"n", n}, {"seed", g.seed}};
  write_run_meta(dir, "simulate", cfg);
  std::cout << "simulate: wrote " << n << " subjects to " << dir.string() << "\n";
  return 0;
}

int cmd_mimic(const GlobalOpts &g, const std::string &data_dir, const std::string &model_spec) {
  const ctsnm::Dataset data = load_dataset(data_dir);
  const ctsnm::ShiftModel model = ctsnm::ShiftModel::load_json_file(model_spec);
  const fs::path dir = prepare_out(g, {"trajectories.csv", "solver_summary.json"});

  std::ostringstream traj_csv;
  traj_csv << "subject_id,t,x\n";
  char buf[40];
  std::size_t total_steps = 0, survival_failures = 0;
  double max_local_error = 0.0, max_closed_form_dev = 0.0, max_final_dev = 0.0;
  bool closed_form_available = true;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto &s = data.subjects[i];
    const ctsnm::Trajectory traj = ctsnm::solve_backward(model, s.path, s.y);
    for (std::size_t k = 0; k < traj.mesh.size(); ++k) {
      traj_csv << i << ',';
      std::snprintf(buf, sizeof buf, "%.17g", traj.mesh[k]);
      traj_csv << buf << ',';
      std::snprintf(buf, sizeof buf, "%.17g", traj.values[k]);
      traj_csv << buf << '\n';
    }
    total_steps += traj.report.steps_accepted;
    max_local_error = std::max(max_local_error, traj.report.max_local_error);
    max_final_dev = std::max(max_final_dev, std::abs(traj.values.back() - s.y));
    for (std::size_t k = 0; k < traj.mesh.size() && closed_form_available; ++k) {
      const auto cf = ctsnm::closed_form_mimic(model, s.path, s.y, traj.mesh[k]);
      if (!cf) {
        closed_form_available = false;
        break;
      }
      max_closed_form_dev = std::max(max_closed_form_dev, std::abs(traj.values[k] - *cf));
    }
    if (model.outcome_kind == ctsnm::OutcomeKind::Survival &&
        !ctsnm::check_survival_constraints(traj, s.y).pass)
      ++survival_failures;
  }
  write_file(dir / "trajectories.csv", traj_csv.str());

  json summary;
  summary["subjects"] = data.size();
  summary["total_steps_accepted"] = total_steps;
  summary["max_local_error"] = max_local_error;
  summary["max_final_condition_deviation"] = max_final_dev;
  if (closed_form_available) summary["max_closed_form_deviation"] = max_closed_form_dev;
  summary["survival_constraint_failures"] = survival_failures;
  write_file(dir / "solver_summary.json", summary.dump(2) + "\n");
  write_run_meta(dir, "mimic", json{{"data", data_dir}, {"model", model_spec}});
  std::cout << "mimic: solved " << data.size() << " trajectories";
  if (closed_form_available)
    std::cout << ", max closed-form deviation " << max_closed_form_dev;
  std::cout << "\n";
  return survival_failures == 0 ? 0 : 1;
}

int cmd_estimate(const GlobalOpts &g, const std::string &data_dir,
                 const std::string &model_spec, double lo, double hi,
                 std::size_t grid_points, std::size_t component) {
  const ctsnm::Dataset data = load_dataset(data_dir);
  ctsnm::ShiftModel model = ctsnm::ShiftModel::load_json_file(model_spec);
  const fs::path dir = prepare_out(g, {"estimate.json", "score_curve.csv"});

  ctsnm::ScoreSpec spec = ctsnm::ScoreSpec::for_scenario(data.scenario);
  spec.threads = g.threads;
  ctsnm::SearchOptions search;
  search.lo = lo;
  search.hi = hi;
  search.grid_points = grid_points;
  const ctsnm::EstimationResult res =
      ctsnm::estimate_psi(data, model, spec, search, component);
  write_file(dir / "estimate.json", res.to_json_string() + "\n");
  write_file(dir / "score_curve.csv", res.score_curve_csv());
  write_run_meta(dir, "estimate",
                 json{{"data", data_dir}, {"model", model_spec}, {"lo", lo}, {"hi", hi}});
  std::cout << "estimate: psi_hat = " << res.psi_hat[component] << " ci = ["
            << res.ci_lo << ", " << res.ci_hi << "]"
            << (res.identified ? "" : " (not identified)") << "\n";
  return res.identified ? 0 : 1;
}

int cmd_test(const GlobalOpts &g, const std::string &data_dir, double alpha) {
  const ctsnm::Dataset data = load_dataset(data_dir);
  const fs::path dir = prepare_out(g, {"test.json"});
  ctsnm::ScoreSpec spec = ctsnm::ScoreSpec::for_scenario(data.scenario);
  spec.threads = g.threads;
  const ctsnm::NullTestResult res = ctsnm::test_no_effect(data, spec);
  json j{{"z", res.z},
         {"p_value", res.p_value},
         {"alpha", alpha},
         {"reject", res.p_value < alpha},
         {"rows", res.detail.rows},
         {"changes", res.detail.changes}};
  json per_time = json::array();
  for (const auto &[d, s] : res.detail.per_time) per_time.push_back({d, s});
  j["score_per_time"] = per_time;
  write_file(dir / "test.json", j.dump(2) + "\n");
  write_run_meta(dir, "test", json{{"data", data_dir}, {"alpha", alpha}});
  std::cout << "test: p-value = " << res.p_value << "\n";
  return 0;
}

int cmd_gcomp(const GlobalOpts &g, const std::string &builtin, const std::string &tree_file,
              const std::string &regime_arg, const std::string &naive_arg) {
  ctsnm::TreatmentTree tree;
  if (!tree_file.empty())
    tree = ctsnm::TreatmentTree::load_json_file(tree_file);
  else if (builtin == "figure1")
    tree = ctsnm::figure1_tree();
  else
    throw ctsnm::config_error("gcomp needs --tree or --builtin figure1");
  const fs::path dir = prepare_out(g, {"gcomp.json"});

  json out;
  if (!regime_arg.empty()) {
    ctsnm::Regime regime;
    std::stringstream ss(regime_arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw ctsnm::config_error("regime format: azt=<0|1|observed>,proph=<0|1|observed>");
      const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
      if (key == "azt" || key == "a0")
        regime.a0 = ctsnm::action_from_string(value);
      else if (key == "proph" || key == "a1")
        regime.a1 = ctsnm::action_from_string(value);
      else
        throw ctsnm::config_error("unknown regime decision: " + key);
    }
    const ctsnm::GComputeResult res = ctsnm::g_compute(tree, regime);
    out["g_compute"] = json::parse(res.to_json_string(regime));
    std::cout << "gcomp: expected survivors "
              << ctsnm::rational_to_string(res.expected_survivors) << " of "
              << res.population << "\n";
  }
  if (!naive_arg.empty()) {
    ctsnm::NaiveConditioning cond;
    std::string label = naive_arg;
    if (naive_arg == "prophylaxis")
      cond.a1 = 1;
    else if (naive_arg == "pcp")
      cond.l1 = 1;
    else if (naive_arg != "marginal")
      throw ctsnm::config_error("--naive must be marginal, prophylaxis or pcp");
    const auto arms = ctsnm::naive_compare(tree, cond);
    out["naive"] = {{"conditioning", label},
                    {"a0_0", {{"survivors", arms[0].survivors}, {"total", arms[0].total}}},
                    {"a0_1", {{"survivors", arms[1].survivors}, {"total", arms[1].total}}}};
    std::cout << "naive (" << label << "): a0=1 " << arms[1].survivors << "/"
              << arms[1].total << " vs a0=0 " << arms[0].survivors << "/" << arms[0].total
              << "\n";
  }
  if (out.empty()) throw ctsnm::config_error("gcomp: nothing to do (pass --regime or --naive)");
  write_file(dir / "gcomp.json", out.dump(2) + "\n");
  write_run_meta(dir, "gcomp", json{{"regime", regime_arg}, {"naive", naive_arg}});
  return 0;
}

int cmd_converge(const GlobalOpts &g, const std::string &levels_arg, std::size_t n,
                 std::size_t panel) {
  require_seed(g);
  const auto dots = levels_arg.find("..");
  if (dots == std::string::npos)
    throw ctsnm::config_error("--levels format: <lo>..<hi>, e.g. 2..8");
  const int lo = std::stoi(levels_arg.substr(0, dots));
  const int hi = std::stoi(levels_arg.substr(dots + 2));
  if (lo < 1 || hi < lo) throw ctsnm::config_error("--levels: need 1 <= lo <= hi");
  std::vector<int> levels;
  for (int l = lo; l <= hi; ++l) levels.push_back(l);

  const fs::path dir = prepare_out(g, {"convergence.csv", "convergence.json"});
  ctsnm::GaussianConvergenceStudy::Config cfg;
  cfg.n_subjects = n;
  cfg.panel = panel;
  cfg.seed = g.seed;
  const ctsnm::GaussianConvergenceStudy study(cfg);
  const ctsnm::ConvergenceResult res = study.run(levels);

  write_file(dir / "convergence.csv", res.to_csv());
  json j{{"nonincreasing", res.nonincreasing(0.05)},
         {"all_within_bounds", res.all_within_bounds()},
         {"final_gap", res.levels.back().sup_gap}};
  write_file(dir / "convergence.json", j.dump(2) + "\n");
  write_run_meta(dir, "converge",
                 json{{"levels", levels_arg}, {"n", n}, {"seed", g.seed}, {"panel", panel}});
  std::cout << "converge: final sup gap " << res.levels.back().sup_gap
            << (res.nonincreasing(0.05) ? " (nonincreasing)" : " (NOT nonincreasing)") << "\n";
  return 0;
}

int cmd_validate(const GlobalOpts &g, const std::string &suite, const std::string &data_dir,
                 const std::string &model_spec, double alpha, int level, std::size_t n) {
  const fs::path dir = prepare_out(g, {"validate_" + suite + ".json",
                                       suite == "mimicry" ? "mimicry_strata.csv" : ""});
  json j{{"suite", suite}, {"alpha", alpha}};

  if (suite == "mimicry") {
    const ctsnm::Dataset data = load_dataset(data_dir);
    const ctsnm::ShiftModel model = model_spec.empty()
                                        ? data.scenario.shift_model(data.scenario.true_psi)
                                        : ctsnm::ShiftModel::load_json_file(model_spec);
    const double tau = data.scenario.horizon;
    ctsnm::MimicryStrataSpec spec;
    spec.times = {0.25 * tau, 0.5 * tau, 0.75 * tau};
    spec.level = level;

    ctsnm::SolverOptions opts;
    opts.record_times = spec.times;
    std::vector<std::vector<double>> x(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const ctsnm::Trajectory traj =
          ctsnm::solve_backward(model, data.subjects[i].path, data.subjects[i].y, opts);
      for (double t : spec.times) x[i].push_back(traj.value_at(t));
    }
    auto value_a = [&](std::size_t i, double t) {
      for (std::size_t k = 0; k < spec.times.size(); ++k)
        if (spec.times[k] == t) return x[i][k];
      return x[i][0];
    };
    auto value_b = [&](std::size_t i, double t) {
      return ctsnm::simulate_counterfactual(data.scenario, data.subjects[i], t);
    };
    const auto strata = ctsnm::mimicry_strata(data, spec, value_a, value_b);
    const auto reports = ctsnm::conditional_ks(strata, alpha, 500);
    write_file(dir / "mimicry_strata.csv", ctsnm::stratum_reports_csv(reports));
    j["n_strata"] = reports.size();
    j["pass_rate"] = ctsnm::pass_rate(reports);
    j["level"] = level;
    // sensitivity of the conditioning coarseness: sweep levels 1..3
    json sweep = json::array();
    for (int lvl : {1, 2, 3}) {
      ctsnm::MimicryStrataSpec sspec = spec;
      sspec.level = lvl;
      const auto r = ctsnm::conditional_ks(
          ctsnm::mimicry_strata(data, sspec, value_a, value_b), alpha, 500);
      sweep.push_back({{"level", lvl},
                       {"n_strata", r.size()},
                       {"pass_rate", ctsnm::pass_rate(r)}});
    }
    j["level_sweep"] = sweep;
    std::cout << "validate mimicry: pass rate " << ctsnm::pass_rate(reports) << " over "
              << reports.size() << " strata\n";
  } else if (suite == "pit") {
    require_seed(g);
    ctsnm::Rng rng(g.seed);
    std::vector<double> exact(n), wrong(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double rate = 0.5 + (i % 3) * 0.5;
      const double y = rng.exponential(rate);
      exact[i] = -std::expm1(-rate * y);
      wrong[i] = -std::expm1(-1.3 * rate * y);
    }
    const auto ok = ctsnm::pit_uniformity(exact, alpha);
    const auto bad = ctsnm::pit_uniformity(wrong, alpha);
    j["exact"] = {{"ks", ok.ks_stat}, {"critical", ok.critical_value}, {"pass", ok.pass}};
    j["mismatched"] = {{"ks", bad.ks_stat}, {"critical", bad.critical_value}, {"pass", bad.pass}};
    std::cout << "validate pit: exact " << (ok.pass ? "pass" : "FAIL") << ", mismatched "
              << (bad.pass ? "PASS (unexpected)" : "fail as expected") << "\n";
  } else if (suite == "identity") {
    std::vector<std::pair<double, double>> lattice;
    for (int iy = 0; iy < 10; ++iy)
      for (int it = 0; it < 10; ++it) lattice.emplace_back(1.05 + 0.1 * iy, 0.2 + 0.08 * it);
    const ctsnm::GaussianLocation gauss(0.0, 1.0, 1.0);
    const ctsnm::ExponentialHazardSurvival expo(0.0, 2.0, 1.0);
    const ctsnm::UniformInterval unif(0.0, 0.2, 3.0, -0.1);
    j["gaussian_residual"] = ctsnm::quantile_identity_check(gauss, lattice);
    j["exponential_residual"] = ctsnm::quantile_identity_check(expo, lattice);
    j["uniform_residual"] = ctsnm::quantile_identity_check(unif, lattice);
    std::cout << "validate identity: residuals " << j["gaussian_residual"] << ", "
              << j["exponential_residual"] << ", " << j["uniform_residual"] << "\n";
  } else if (suite == "audit") {
    const ctsnm::GaussianLocation gauss(0.0, 0.8, 1.0);
    std::vector<double> ys, ts{0.0, 0.25, 0.5};
    for (int i = 0; i <= 20; ++i) ys.push_back(-1.5 + 0.15 * i);
    ctsnm::RegularityBudget budget{0.02, 0.40, 0.32, 0.25, 0.20, -10.0, 10.0};
    const auto violations = ctsnm::regularity_audit(gauss, budget, ys, ts);
    j["violations"] = violations.size();
    json list = json::array();
    for (const auto &v : violations)
      list.push_back({{"what", v.what}, {"y", v.y}, {"t", v.t}, {"value", v.value}});
    j["detail"] = list;
    std::cout << "validate audit: " << violations.size() << " violations\n";
  } else {
    throw ctsnm::config_error("unknown validate suite: " + suite);
  }
  write_file(dir / ("validate_" + suite + ".json"), j.dump(2) + "\n");
  write_run_meta(dir, "validate", json{{"suite", suite}});
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"counterfactual-mimicking processes for continuous-time structural nested models"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.set_config("--config");

  GlobalOpts g;
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  auto *seed_opt = app.add_option("--seed", g.seed, "random seed (required when stochastic)");
  app.add_option("--threads", g.threads, "worker threads for per-subject solves");
  app.add_flag("--overwrite", g.overwrite, "allow replacing existing output files");

  auto *sim = app.add_subcommand("simulate", "generate a dataset with counterfactual oracles");
  std::string scenario_spec, builtin = "gvhd", cf_times;
  std::size_t n = 1000;
  sim->add_option("--scenario", scenario_spec, "scenario spec JSON");
  sim->add_option("--builtin", builtin, "builtin scenario: gvhd, null, pcp, tree");
  sim->add_option("--n", n, "number of subjects");
  sim->add_option("--cf-times", cf_times, "comma-separated counterfactual export times");

  auto *mim = app.add_subcommand("mimic", "solve backward trajectories for a dataset");
  std::string data_dir, model_spec;
  mim->add_option("--data", data_dir, "dataset directory (from simulate)")->required();
  mim->add_option("--model", model_spec, "shift model JSON")->required();

  auto *est = app.add_subcommand("estimate", "g-estimation of psi by score inversion");
  double lo = -2.0, hi = 2.0;
  std::size_t grid_points = 41, component = 0;
  est->add_option("--data", data_dir, "dataset directory")->required();
  est->add_option("--model", model_spec, "shift model template JSON")->required();
  est->add_option("--lo", lo, "search lower bound");
  est->add_option("--hi", hi, "search upper bound");
  est->add_option("--grid", grid_points, "grid points");
  est->add_option("--component", component, "psi component to scan");

  auto *tst = app.add_subcommand("test", "model-free null test of any treatment effect");
  double alpha = 0.05;
  tst->add_option("--data", data_dir, "dataset directory")->required();
  tst->add_option("--alpha", alpha, "test level");

  auto *gcp = app.add_subcommand("gcomp", "G-computation on a treatment tree");
  std::string gtree, gbuiltin = "figure1", regime_arg, naive_arg;
  gcp->add_option("--tree", gtree, "tree spec JSON");
  gcp->add_option("--builtin", gbuiltin, "builtin tree: figure1");
  gcp->add_option("--regime", regime_arg, "e.g. azt=1,proph=1 (values 0, 1 or observed)");
  gcp->add_option("--naive", naive_arg, "crude comparison: marginal, prophylaxis or pcp");

  auto *cvg = app.add_subcommand("converge", "discretization convergence study");
  std::string levels_arg = "2..8";
  std::size_t cn = 4096, panel = 16;
  cvg->add_option("--levels", levels_arg, "level range lo..hi");
  cvg->add_option("--n", cn, "study population size");
  cvg->add_option("--panel", panel, "subjects in the reported sup norm");

  auto *val = app.add_subcommand("validate", "statistical verification suites");
  std::string suite = "mimicry";
  int level = 2;
  std::size_t vn = 10000;
  double valpha = 0.01;
  val->add_option("--suite", suite, "mimicry, pit, identity or audit");
  val->add_option("--data", data_dir, "dataset directory (mimicry)");
  val->add_option("--model", model_spec, "shift model JSON (mimicry; defaults to the scenario's)");
  val->add_option("--alpha", valpha, "test level");
  val->add_option("--level", level, "discretization level for conditioning strata");
  val->add_option("--n", vn, "sample size (pit)");

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  try {
    if (sim->parsed()) return cmd_simulate(g, scenario_spec, builtin, n, cf_times);
    if (mim->parsed()) return cmd_mimic(g, data_dir, model_spec);
    if (est->parsed()) return cmd_estimate(g, data_dir, model_spec, lo, hi, grid_points, component);
    if (tst->parsed()) return cmd_test(g, data_dir, alpha);
    if (gcp->parsed()) return cmd_gcomp(g, gbuiltin, gtree, regime_arg, naive_arg);
    if (cvg->parsed()) return cmd_converge(g, levels_arg, cn, panel);
    if (val->parsed()) return cmd_validate(g, suite, data_dir, model_spec, valpha, level, vn);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
