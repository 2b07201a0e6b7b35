#ifndef CTSNM_GCOMP_HPP
#define CTSNM_GCOMP_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include <boost/rational.hpp>

namespace ctsnm {

using Rational = boost::rational<long long>;

// Two-decision treatment tree: baseline treatment a0, intermediate covariate
// l1, second treatment a1, and survivor/death counts per leaf. Cells that
// never occur carry zero counts.
struct TreatmentTree {
  struct LeafCounts {
    long long survivors = 0;
    long long deaths = 0;
    long long total() const { return survivors + deaths; }
  };

  LeafCounts leaves[2][2][2];  // [a0][l1][a1]

  const LeafCounts &leaf(int a0, int l1, int a1) const { return leaves[a0][l1][a1]; }
  LeafCounts &leaf(int a0, int l1, int a1) { return leaves[a0][l1][a1]; }

  long long total() const;
  long long arm_total(int a0) const;            // subjects with first action a0
  long long cell_total(int a0, int l1) const;   // subjects with (a0, l1)

  void validate() const;  // nonnegative counts

  std::string to_json_string() const;
  static TreatmentTree from_json_string(const std::string &text);
  static TreatmentTree load_json_file(const std::string &filename);
};

// The AZT/PCP-prophylaxis example: 32,000 patients with deterministic
// proportions (leaf counts are the figure's numbers times 100).
TreatmentTree figure1_tree();

enum class Action { Fix0, Fix1, AsObserved };

Action action_from_string(const std::string &s);
std::string to_string(Action a);

struct Regime {
  Action a0 = Action::AsObserved;
  Action a1 = Action::AsObserved;
};

struct GComputeResult {
  Rational p_survive;
  Rational expected_survivors;  // scaled to the regime's population
  long long population = 0;

  std::string to_json_string(const Regime &regime) const;
};

// Backward G-computation: at each decision the regime's action is forced and
// the conditional outcome law of the matching observed subtree is reused
// (subjects are comparable within each covariate stratum). The population is
// the set of subjects whose observed first action is consistent with the
// regime. Throws positivity_error when a required cell has no observed
// support.
GComputeResult g_compute(const TreatmentTree &tree, const Regime &regime);

// Optional conditioning for crude comparisons: restrict to a covariate value
// and/or a second-treatment value.
struct NaiveConditioning {
  std::optional<int> l1;
  std::optional<int> a1;
};

struct ArmSurvival {
  long long survivors = 0;
  long long total = 0;
};

// Crude per-arm (a0 = 0 vs a0 = 1) survival without G-computation. Throws
// std::domain_error when the requested stratum is empty in both arms.
std::array<ArmSurvival, 2> naive_compare(const TreatmentTree &tree,
                                         const NaiveConditioning &cond = {});

std::string rational_to_string(const Rational &r);

}  // namespace ctsnm

#endif
