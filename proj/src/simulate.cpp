#include "ctsnm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ctsnm/conditional_model.hpp"
#include "ctsnm/errors.hpp"
#include "ctsnm/rng.hpp"
#include "json.hpp"

namespace ctsnm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// quartile thresholds of the standard normal
constexpr double kQ25 = -0.67448975019608171;
constexpr double kQ75 = 0.67448975019608171;

int marker_from_frailty(double g) {
  if (g < kQ25) return 0;
  if (g < 0.0) return 1;
  if (g < kQ75) return 2;
  return 3;
}

// Beta(2,2) quantile by bisection on F(x) = 3x^2 - 2x^3.
double beta22_quantile(double p) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (3.0 * mid * mid - 2.0 * mid * mid * mid >= p)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::GvHDSurvival: return "gvhd_survival";
    case ScenarioKind::PCPContinuous: return "pcp_continuous";
    case ScenarioKind::DiscreteTree: return "discrete_tree";
    case ScenarioKind::NullEffect: return "null_effect";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string &s) {
  if (s == "gvhd_survival") return ScenarioKind::GvHDSurvival;
  if (s == "pcp_continuous") return ScenarioKind::PCPContinuous;
  if (s == "discrete_tree") return ScenarioKind::DiscreteTree;
  if (s == "null_effect") return ScenarioKind::NullEffect;
  throw config_error("unknown scenario kind: " + s);
}

void Scenario::validate() const {
  if (!(horizon > 0.0)) throw config_error("Scenario: horizon must be > 0");
  if (decision_count < 1) throw config_error("Scenario: decision_count must be >= 1");
  switch (kind) {
    case ScenarioKind::GvHDSurvival:
      if (true_psi.size() != 1) throw config_error("gvhd_survival: true_psi must be scalar");
      if (!(y2 >= horizon)) throw config_error("gvhd_survival: y2 must be >= horizon");
      if (!(baseline_rate > 0.0)) throw config_error("baseline_rate must be > 0");
      break;
    case ScenarioKind::NullEffect:
      if (!(y2 >= horizon)) throw config_error("null_effect: y2 must be >= horizon");
      if (!(baseline_rate > 0.0)) throw config_error("baseline_rate must be > 0");
      break;
    case ScenarioKind::PCPContinuous:
      if (true_psi.size() != 3) throw config_error("pcp_continuous: true_psi must have dimension 3");
      if (!(y1 < y2)) throw config_error("pcp_continuous: requires y1 < y2");
      break;
    case ScenarioKind::DiscreteTree:
      break;
  }
  if (std::abs(confounding_rho) >= 1.0)
    throw config_error("Scenario: |confounding_rho| must be < 1");
}

std::vector<double> Scenario::decision_times() const {
  std::vector<double> out(decision_count);
  for (std::size_t j = 0; j < decision_count; ++j)
    out[j] = horizon * static_cast<double>(j) / static_cast<double>(decision_count);
  return out;
}

OutcomeKind Scenario::outcome_kind() const {
  return kind == ScenarioKind::PCPContinuous ? OutcomeKind::Continuous
                                             : OutcomeKind::Survival;
}

ShiftModel Scenario::shift_model(const std::vector<double> &psi) const {
  switch (kind) {
    case ScenarioKind::GvHDSurvival:
    case ScenarioKind::NullEffect: {
      if (psi.size() != 1) throw config_error("gvhd shift model needs scalar psi");
      ShiftModel m = ShiftModel::gvhd(psi[0], OutcomeKind::Survival);
      m.budget.y2 = y2;
      m.budget.y1 = 0.0;
      return m;
    }
    case ScenarioKind::PCPContinuous: {
      if (psi.size() != 3) throw config_error("pcp shift model needs psi of dimension 3");
      ShiftModel m = ShiftModel::pcp(psi[0], psi[1], psi[2], OutcomeKind::Continuous);
      // treatment effects can push the outcome outside the baseline support
      const double slack = horizon * (1.0 + std::exp(std::abs(psi[0]) + std::abs(psi[1]) +
                                                     2.0 * std::abs(psi[2])));
      m.budget.y1 = y1 - slack;
      m.budget.y2 = y2 + slack;
      return m;
    }
    case ScenarioKind::DiscreteTree:
      throw config_error("discrete_tree: no continuous-time shift model");
  }
  throw config_error("unreachable scenario kind");
}

namespace {

// --- GvHD survival (and its psi = 0 null variant) -------------------------
//
// Latents: frailty G drives the observed marker and, through a Gaussian
// copula, the untreated outcome U ~ truncated Exp(rate). Exposure onset at
// decision times with probability expit(a0 + a1 * marker); once on it stays.
// Rank preservation: observed Y solves clock(Y) = U where the clock runs at
// rate e^psi while exposed (exposure counts only up to tau).

struct GvhdClock {
  double onset = kInf;  // exposure onset time (inf = never)
  double tau = 0.0;
  double psi = 0.0;

  // calendar death time given untreated-equivalent budget u
  double death(double u) const {
    if (u <= onset) return u;
    const double ep = std::exp(psi);
    const double clock_tau = onset + (tau - onset) * ep;
    if (u <= clock_tau) return onset + (u - onset) / ep;
    return tau + (u - clock_tau);
  }
};

SubjectRecord generate_gvhd(const Scenario &sc, Rng &rng) {
  const double psi = sc.kind == ScenarioKind::NullEffect ? 0.0 : sc.true_psi[0];
  const double frailty = rng.normal();
  int marker = marker_from_frailty(frailty);
  const double xi = rng.normal();
  const double v =
      normal_cdf(sc.confounding_rho * frailty +
                 std::sqrt(1.0 - sc.confounding_rho * sc.confounding_rho) * xi);
  const double cap = -std::expm1(-sc.baseline_rate * sc.y2);
  const double u = -std::log1p(-v * cap) / sc.baseline_rate;

  GvhdClock clock{kInf, sc.horizon, psi};
  SamplePath path(sc.horizon, {1.0, 0.0, static_cast<double>(marker)});
  bool exposed = false;
  for (double d : sc.decision_times()) {
    if (d >= clock.death(u)) break;  // dead at or before this decision time
    bool changed = false;
    if (d > 0.0 && rng.bernoulli(sc.marker_move_prob)) {
      const double p_up = expit(sc.marker_frailty_pull * frailty +
                                sc.marker_feedback * (exposed ? 1.0 : 0.0) - 0.2);
      const int next = std::clamp(marker + (rng.bernoulli(p_up) ? 1 : -1), 0, 3);
      if (next != marker) {
        marker = next;
        changed = true;
      }
    }
    if (!exposed &&
        rng.bernoulli(expit(sc.policy_intercept + sc.policy_marker * marker))) {
      exposed = true;
      clock.onset = d;
      changed = true;
    }
    if (changed)
      path.set_value(d, {1.0, exposed ? 1.0 : 0.0, static_cast<double>(marker)});
  }

  SubjectRecord rec;
  rec.y = clock.death(u);
  rec.died = rec.y <= sc.horizon;
  if (rec.died)
    path.set_value(rec.y, {0.0, exposed ? 1.0 : 0.0, static_cast<double>(marker)});
  rec.path = std::move(path);
  return rec;
}

double gvhd_onset_time(const SamplePath &path) {
  for (std::size_t i = 0; i < path.record_count(); ++i)
    if (path.record_values(i)[1] != 0.0) return path.record_time(i);
  return kInf;
}

double gvhd_counterfactual(const Scenario &sc, const SubjectRecord &subject, double t) {
  const double psi = sc.kind == ScenarioKind::NullEffect ? 0.0 : sc.true_psi[0];
  const double y = subject.y;
  if (t >= y) return y;
  const double onset = gvhd_onset_time(subject.path);
  // Y^(t) = t + int_t^Y e^{psi Gamma(s)} ds with exposure active on
  // [onset, tau]; every exposed unit of time contributes e^psi instead of 1.
  const double exposed_span =
      std::max(0.0, std::min(y, sc.horizon) - std::max(t, onset));
  return y + exposed_span * (std::exp(psi) - 1.0);
}

// --- PCP prophylaxis with a continuous outcome -----------------------------

double pcp_effect_integral(const Scenario &sc, const SamplePath &path, double lo,
                           double hi) {
  // integral over [lo, hi] of (1 - e^{psi1 + psi2 P(s) + psi3 R}) * treated(s)
  if (hi <= lo) return 0.0;
  std::vector<double> cuts{lo, hi};
  for (double jt : path.jump_times())
    if (jt > lo && jt < hi) cuts.push_back(jt);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto &z = path.value_at(cuts[i]);
    if (z[0] == 0.0) continue;  // untreated segment
    const double expo = sc.true_psi[0] + sc.true_psi[1] * z[1] + sc.true_psi[2] * z[2];
    total += (1.0 - std::exp(expo)) * (cuts[i + 1] - cuts[i]);
  }
  return total;
}

SubjectRecord generate_pcp(const Scenario &sc, Rng &rng) {
  const double arm = rng.bernoulli(0.5) ? 2.0 : 1.0;
  const double frailty = rng.normal();
  const double xi = rng.normal();
  const double v =
      normal_cdf(sc.confounding_rho * frailty +
                 std::sqrt(1.0 - sc.confounding_rho * sc.confounding_rho) * xi);
  const double u = sc.y1 + (sc.y2 - sc.y1) * beta22_quantile(v);

  SamplePath path(sc.horizon, {0.0, 0.0, arm});
  bool treated = false, pcp = false;
  for (double d : sc.decision_times()) {
    if (treated) break;  // prophylaxis never stops; P is frozen after start
    bool changed = false;
    if (!pcp) {
      const double p_event =
          std::clamp(sc.pcp_event_prob * (1.0 + 0.6 * std::tanh(frailty)), 0.0, 1.0);
      if (rng.bernoulli(p_event)) {
        pcp = true;
        changed = true;
      }
    }
    if (rng.bernoulli(expit(sc.policy_intercept + sc.policy_pcp * (pcp ? 1.0 : 0.0) +
                            sc.policy_arm * arm))) {
      treated = true;
      changed = true;
    }
    if (changed) path.set_value(d, {treated ? 1.0 : 0.0, pcp ? 1.0 : 0.0, arm});
  }

  SubjectRecord rec;
  rec.path = std::move(path);
  rec.y = u + pcp_effect_integral(sc, rec.path, 0.0, sc.horizon);
  rec.died = false;
  return rec;
}

double pcp_counterfactual(const Scenario &sc, const SubjectRecord &subject, double t) {
  return subject.y - pcp_effect_integral(sc, subject.path, t, sc.horizon);
}

// --- Discrete AZT/PCP tree -------------------------------------------------

SubjectRecord generate_tree(const Scenario &sc, Rng &rng) {
  const int a0 = rng.bernoulli(0.5) ? 1 : 0;
  const int l1 = a0 == 1 ? (rng.bernoulli(0.5) ? 1 : 0) : 1;
  const int a1 = l1 == 1 ? 1 : (rng.bernoulli(0.5) ? 1 : 0);
  double p_survive = 0.0;
  if (a0 == 1 && l1 == 0 && a1 == 0) p_survive = 0.25;
  if (a0 == 1 && l1 == 0 && a1 == 1) p_survive = 0.75;
  if (a0 == 1 && l1 == 1) p_survive = 0.5;
  if (a0 == 0) p_survive = 0.625;

  SubjectRecord rec;
  SamplePath path(sc.horizon, {static_cast<double>(a0), 0.0, 0.0});
  path.set_value(0.5 * sc.horizon,
                 {static_cast<double>(a0), static_cast<double>(l1), static_cast<double>(a1)});
  rec.path = std::move(path);
  rec.y = rng.bernoulli(p_survive) ? 1.0 : 0.0;
  rec.died = rec.y == 0.0;
  return rec;
}

std::string path_signature(const SamplePath &p) {
  std::ostringstream out;
  char buf[40];
  for (std::size_t i = 0; i < p.record_count(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", p.record_time(i));
    out << buf << ':';
    for (double v : p.record_values(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << ';';
  }
  return out.str();
}

// Experimental: permute outcome bundles among subjects with identical
// observed paths. Law-preserving; breaks within-subject rank pairing only in
// path strata with more than one member.
void shuffle_bundles(Dataset &dataset, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.subjects.size(); ++i)
    groups[path_signature(dataset.subjects[i].path)].push_back(i);
  Rng rng(Rng::splitmix64(seed ^ 0xABCDEF12345ULL));
  for (auto &[sig, idx] : groups) {
    for (std::size_t k = idx.size(); k > 1; --k) {
      const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(k));
      std::swap(dataset.subjects[idx[k - 1]].y, dataset.subjects[idx[j]].y);
      std::swap(dataset.subjects[idx[k - 1]].died, dataset.subjects[idx[j]].died);
    }
  }
}

}  // namespace

Dataset simulate_observed(const Scenario &scenario, std::size_t n, std::uint64_t seed) {
  scenario.validate();
  if (n < 1) throw config_error("simulate_observed: n must be >= 1");
  Dataset dataset;
  dataset.seed = seed;
  dataset.scenario = scenario;
  dataset.fingerprint = scenario.fingerprint();
  dataset.subjects.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::subject_stream(seed, i);
    switch (scenario.kind) {
      case ScenarioKind::GvHDSurvival:
      case ScenarioKind::NullEffect:
        dataset.subjects.push_back(generate_gvhd(scenario, rng));
        break;
      case ScenarioKind::PCPContinuous:
        dataset.subjects.push_back(generate_pcp(scenario, rng));
        break;
      case ScenarioKind::DiscreteTree:
        dataset.subjects.push_back(generate_tree(scenario, rng));
        break;
    }
  }
  if (scenario.quantile_shuffle) shuffle_bundles(dataset, seed);
  return dataset;
}

double simulate_counterfactual(const Scenario &scenario, const SubjectRecord &subject,
                               double t) {
  if (t < 0.0 || t > scenario.horizon)
    throw std::domain_error("simulate_counterfactual: t outside [0, tau]");
  switch (scenario.kind) {
    case ScenarioKind::GvHDSurvival:
    case ScenarioKind::NullEffect:
      return gvhd_counterfactual(scenario, subject, t);
    case ScenarioKind::PCPContinuous:
      return pcp_counterfactual(scenario, subject, t);
    case ScenarioKind::DiscreteTree:
      if (t == scenario.horizon) return subject.y;
      throw config_error("discrete_tree: counterfactuals are regime-based; use g_compute");
  }
  throw config_error("unreachable scenario kind");
}

TreatmentTree build_figure_tree() { return figure1_tree(); }

std::string Scenario::to_json_string() const {
  nlohmann::json j;
  j["kind"] = to_string(kind);
  j["true_psi"] = true_psi;
  j["horizon"] = horizon;
  j["decision_count"] = decision_count;
  j["baseline_rate"] = baseline_rate;
  j["y1"] = y1;
  j["y2"] = y2;
  j["confounding_rho"] = confounding_rho;
  j["policy_intercept"] = policy_intercept;
  j["policy_marker"] = policy_marker;
  j["marker_move_prob"] = marker_move_prob;
  j["marker_frailty_pull"] = marker_frailty_pull;
  j["marker_feedback"] = marker_feedback;
  j["pcp_event_prob"] = pcp_event_prob;
  j["policy_pcp"] = policy_pcp;
  j["policy_arm"] = policy_arm;
  j["quantile_shuffle"] = quantile_shuffle;
  return j.dump(2);
}

Scenario Scenario::from_json_string(const std::string &text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Scenario sc;
  sc.kind = scenario_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("true_psi")) sc.true_psi = j.at("true_psi").get<std::vector<double>>();
  if (sc.kind == ScenarioKind::PCPContinuous && sc.true_psi.size() == 1)
    sc.true_psi = {sc.true_psi[0], 0.0, 0.0};
  sc.horizon = j.value("horizon", sc.horizon);
  sc.decision_count = j.value("decision_count", sc.decision_count);
  sc.baseline_rate = j.value("baseline_rate", sc.baseline_rate);
  sc.y1 = j.value("y1", sc.y1);
  sc.y2 = j.value("y2", sc.y2);
  sc.confounding_rho = j.value("confounding_rho", sc.confounding_rho);
  sc.policy_intercept = j.value("policy_intercept", sc.policy_intercept);
  sc.policy_marker = j.value("policy_marker", sc.policy_marker);
  sc.marker_move_prob = j.value("marker_move_prob", sc.marker_move_prob);
  sc.marker_frailty_pull = j.value("marker_frailty_pull", sc.marker_frailty_pull);
  sc.marker_feedback = j.value("marker_feedback", sc.marker_feedback);
  sc.pcp_event_prob = j.value("pcp_event_prob", sc.pcp_event_prob);
  sc.policy_pcp = j.value("policy_pcp", sc.policy_pcp);
  sc.policy_arm = j.value("policy_arm", sc.policy_arm);
  sc.quantile_shuffle = j.value("quantile_shuffle", sc.quantile_shuffle);
  sc.validate();
  return sc;
}

Scenario Scenario::load_json_file(const std::string &filename) {
  std::ifstream in(filename);
  if (!in) throw config_error("cannot open scenario spec " + filename);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

std::string Scenario::fingerprint() const {
  const std::string text = to_json_string();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<SubjectPath> dataset_paths(const Dataset &dataset) {
  std::vector<SubjectPath> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i)
    out.push_back({static_cast<std::int64_t>(i), dataset.subjects[i].path});
  return out;
}

void write_outcomes_csv_file(const std::string &filename, const Dataset &dataset) {
  std::ofstream out(filename);
  if (!out) throw config_error("cannot open " + filename + " for writing");
  out << "subject_id,y,died\n";
  char buf[40];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", dataset.subjects[i].y);
    out << i << ',' << buf << ',' << (dataset.subjects[i].died ? 1 : 0) << "\n";
  }
}

void write_counterfactuals_csv_file(const std::string &filename, const Dataset &dataset,
                                    const std::vector<double> &times) {
  std::ofstream out(filename);
  if (!out) throw config_error("cannot open " + filename + " for writing");
  out << "subject_id,t,y_cf\n";
  char buf[40];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double t : times) {
      const double cf = simulate_counterfactual(dataset.scenario, dataset.subjects[i], t);
      out << i << ',';
      std::snprintf(buf, sizeof buf, "%.17g", t);
      out << buf << ',';
      std::snprintf(buf, sizeof buf, "%.17g", cf);
      out << buf << "\n";
    }
  }
}

Dataset read_dataset(const std::string &paths_csv, const std::string &outcomes_csv,
                     const Scenario &scenario) {
  Dataset dataset;
  dataset.scenario = scenario;
  dataset.fingerprint = scenario.fingerprint();

  auto subject_paths = read_paths_csv_file(paths_csv, scenario.horizon);
  std::map<std::int64_t, std::size_t> index_of;
  for (std::size_t i = 0; i < subject_paths.size(); ++i)
    index_of[subject_paths[i].subject_id] = i;

  std::ifstream in(outcomes_csv);
  if (!in) throw config_error("cannot open " + outcomes_csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("subject_id,y,died", 0) != 0)
    throw config_error("outcomes csv: expected header subject_id,y,died");
  dataset.subjects.resize(subject_paths.size());
  std::size_t filled = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f0, f1, f2;
    std::getline(ss, f0, ',');
    std::getline(ss, f1, ',');
    std::getline(ss, f2, ',');
    const auto it = index_of.find(std::stoll(f0));
    if (it == index_of.end())
      throw config_error("outcomes csv: subject " + f0 + " has no path");
    SubjectRecord &rec = dataset.subjects[it->second];
    rec.path = subject_paths[it->second].path;
    rec.y = std::stod(f1);
    rec.died = std::stoi(f2) != 0;
    ++filled;
  }
  if (filled != subject_paths.size())
    throw config_error("outcomes csv: outcome count does not match path count");
  return dataset;
}

}  // namespace ctsnm
