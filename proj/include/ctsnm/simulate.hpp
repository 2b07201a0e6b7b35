#ifndef CTSNM_SIMULATE_HPP
#define CTSNM_SIMULATE_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ctsnm/gcomp.hpp"
#include "ctsnm/sample_path.hpp"
#include "ctsnm/shift_model.hpp"

namespace ctsnm {

enum class ScenarioKind { GvHDSurvival, PCPContinuous, DiscreteTree, NullEffect };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string &s);

// Generative specification. Every scenario produces (path, Y) pairs together
// with a counterfactual oracle Y^(t) on the same latent draw; treatment
// decisions depend only on the observed past.
//
// Path coordinate layouts:
//   GvHDSurvival / NullEffect: [alive, gvhd, marker]
//   PCPContinuous:             [treated, pcp_history, arm]
//   DiscreteTree:              [azt, pcp_status, prophylaxis]
struct Scenario {
  ScenarioKind kind = ScenarioKind::GvHDSurvival;
  std::vector<double> true_psi{std::log(2.0)};
  double horizon = 2.0;
  std::size_t decision_count = 8;  // decision grid: j * tau / decision_count

  // survival baseline law: U ~ Exponential(baseline_rate) truncated to [0, y2]
  double baseline_rate = 0.5;
  double y2 = 15.0;

  // continuous baseline law: U ~ y1 + (y2 - y1) * Beta(2,2)
  double y1 = 0.0;

  // confounding: copula correlation between the latent frailty behind the
  // observed marker and the baseline outcome
  double confounding_rho = 0.5;

  // onset / treatment policy: logistic in the current marker value
  double policy_intercept = -1.6;
  double policy_marker = 0.55;

  // marker dynamics
  double marker_move_prob = 0.25;
  double marker_frailty_pull = 0.7;
  double marker_feedback = 0.6;  // active treatment pushes the marker up

  // PCP-scenario extras
  double pcp_event_prob = 0.3;
  double policy_pcp = 1.2;
  double policy_arm = -0.3;

  // experimental non-rank-preserving variant: permute outcome bundles among
  // subjects with identical observed paths
  bool quantile_shuffle = false;

  void validate() const;
  std::string fingerprint() const;

  std::string to_json_string() const;
  static Scenario from_json_string(const std::string &text);
  static Scenario load_json_file(const std::string &filename);

  std::vector<double> decision_times() const;
  OutcomeKind outcome_kind() const;
  // The shift model this scenario's data satisfy, at the given parameter.
  ShiftModel shift_model(const std::vector<double> &psi) const;
};

struct SubjectRecord {
  SamplePath path;
  double y = 0.0;
  bool died = false;  // survival: event observed within [0, tau]
};

struct Dataset {
  std::vector<SubjectRecord> subjects;
  std::uint64_t seed = 0;
  std::string fingerprint;
  Scenario scenario;

  std::size_t size() const { return subjects.size(); }
};

// n independent subjects from per-subject counter-based streams; regeneration
// with the same (scenario, n, seed) is bit-identical, and subject k does not
// depend on n.
Dataset simulate_observed(const Scenario &scenario, std::size_t n, std::uint64_t seed);

// Y^(t): the outcome when the subject's realized treatment is followed up to
// t and baseline treatment is applied from t on, for the same latent draw.
double simulate_counterfactual(const Scenario &scenario, const SubjectRecord &subject,
                               double t);

// The exact Figure-1/Figure-2 tree (deterministic counts, 32,000 patients).
TreatmentTree build_figure_tree();

// Dataset export: outcomes CSV (subject_id,y,died) and counterfactual CSV
// (subject_id,t,y_cf) over the given times.
void write_outcomes_csv_file(const std::string &filename, const Dataset &dataset);
void write_counterfactuals_csv_file(const std::string &filename, const Dataset &dataset,
                                    const std::vector<double> &times);
std::vector<SubjectPath> dataset_paths(const Dataset &dataset);

// Rebuilds a dataset from exported paths/outcomes files (for the CLI).
Dataset read_dataset(const std::string &paths_csv, const std::string &outcomes_csv,
                     const Scenario &scenario);

}  // namespace ctsnm

#endif
