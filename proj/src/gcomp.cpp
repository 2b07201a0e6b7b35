#include "ctsnm/gcomp.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ctsnm/errors.hpp"
#include "json.hpp"

namespace ctsnm {

long long TreatmentTree::total() const {
  long long n = 0;
  for (int a0 = 0; a0 < 2; ++a0)
    for (int l1 = 0; l1 < 2; ++l1)
      for (int a1 = 0; a1 < 2; ++a1) n += leaf(a0, l1, a1).total();
  return n;
}

long long TreatmentTree::arm_total(int a0) const {
  long long n = 0;
  for (int l1 = 0; l1 < 2; ++l1)
    for (int a1 = 0; a1 < 2; ++a1) n += leaf(a0, l1, a1).total();
  return n;
}

long long TreatmentTree::cell_total(int a0, int l1) const {
  return leaf(a0, l1, 0).total() + leaf(a0, l1, 1).total();
}

void TreatmentTree::validate() const {
  for (int a0 = 0; a0 < 2; ++a0)
    for (int l1 = 0; l1 < 2; ++l1)
      for (int a1 = 0; a1 < 2; ++a1) {
        const auto &c = leaf(a0, l1, a1);
        if (c.survivors < 0 || c.deaths < 0)
          throw config_error("TreatmentTree: negative counts");
      }
  if (total() == 0) throw config_error("TreatmentTree: empty tree");
}

TreatmentTree figure1_tree() {
  TreatmentTree t;
  t.leaf(1, 0, 0) = {1000, 3000};    // no prophylaxis after AZT, no PCP
  t.leaf(1, 0, 1) = {3000, 1000};    // prophylaxis after AZT, no PCP
  t.leaf(1, 1, 1) = {4000, 4000};    // prophylaxis after AZT, PCP
  t.leaf(0, 1, 1) = {10000, 6000};   // prophylaxis without AZT, PCP
  return t;
}

Action action_from_string(const std::string &s) {
  if (s == "0") return Action::Fix0;
  if (s == "1") return Action::Fix1;
  if (s == "observed" || s == "as_observed") return Action::AsObserved;
  throw config_error("unknown regime action: " + s + " (use 0, 1 or observed)");
}

std::string to_string(Action a) {
  switch (a) {
    case Action::Fix0: return "0";
    case Action::Fix1: return "1";
    case Action::AsObserved: return "observed";
  }
  return "?";
}

namespace {

std::vector<int> actions_for(Action a) {
  switch (a) {
    case Action::Fix0: return {0};
    case Action::Fix1: return {1};
    case Action::AsObserved: return {0, 1};
  }
  return {};
}

// P(survive | a0, l1, a1) from the observed leaf; zero support is a
// positivity failure when the cell is required.
Rational leaf_survival(const TreatmentTree &tree, int a0, int l1, int a1) {
  const auto &c = tree.leaf(a0, l1, a1);
  if (c.total() == 0)
    throw positivity_error("g_compute: no observed subjects in stratum (a0=" +
                           std::to_string(a0) + ", l1=" + std::to_string(l1) +
                           ", a1=" + std::to_string(a1) + ")");
  return Rational(c.survivors, c.total());
}

}  // namespace

GComputeResult g_compute(const TreatmentTree &tree, const Regime &regime) {
  tree.validate();
  GComputeResult result;
  result.p_survive = Rational(0);

  // Population: observed subjects consistent with the regime's first action.
  long long population = 0;
  for (int a0 : actions_for(regime.a0)) population += tree.arm_total(a0);
  if (population == 0) throw positivity_error("g_compute: no subjects with the required first action");
  result.population = population;

  for (int a0 : actions_for(regime.a0)) {
    const long long n_a0 = tree.arm_total(a0);
    if (n_a0 == 0) {
      if (regime.a0 != Action::AsObserved)
        throw positivity_error("g_compute: first action a0=" + std::to_string(a0) +
                               " has no observed support");
      continue;
    }
    const Rational w_a0(n_a0, population);
    for (int l1 = 0; l1 < 2; ++l1) {
      const long long n_cell = tree.cell_total(a0, l1);
      if (n_cell == 0) continue;  // covariate value never occurs after a0
      const Rational p_l1(n_cell, n_a0);
      Rational p_surv(0);
      if (regime.a1 == Action::AsObserved) {
        for (int a1 = 0; a1 < 2; ++a1) {
          const auto &c = tree.leaf(a0, l1, a1);
          if (c.total() == 0) continue;
          p_surv += Rational(c.total(), n_cell) * Rational(c.survivors, c.total());
        }
      } else {
        const int a1 = regime.a1 == Action::Fix1 ? 1 : 0;
        p_surv = leaf_survival(tree, a0, l1, a1);
      }
      result.p_survive += w_a0 * p_l1 * p_surv;
    }
  }
  result.expected_survivors = result.p_survive * Rational(population);
  return result;
}

std::array<ArmSurvival, 2> naive_compare(const TreatmentTree &tree,
                                         const NaiveConditioning &cond) {
  tree.validate();
  std::array<ArmSurvival, 2> arms{};
  for (int a0 = 0; a0 < 2; ++a0) {
    for (int l1 = 0; l1 < 2; ++l1) {
      if (cond.l1 && *cond.l1 != l1) continue;
      for (int a1 = 0; a1 < 2; ++a1) {
        if (cond.a1 && *cond.a1 != a1) continue;
        const auto &c = tree.leaf(a0, l1, a1);
        arms[a0].survivors += c.survivors;
        arms[a0].total += c.total();
      }
    }
  }
  if (arms[0].total == 0 && arms[1].total == 0)
    throw std::domain_error("naive_compare: conditioning stratum is empty");
  return arms;
}

std::string rational_to_string(const Rational &r) {
  std::ostringstream out;
  out << r.numerator();
  if (r.denominator() != 1) out << '/' << r.denominator();
  return out.str();
}

std::string GComputeResult::to_json_string(const Regime &regime) const {
  nlohmann::json j;
  j["regime"] = {{"a0", to_string(regime.a0)}, {"a1", to_string(regime.a1)}};
  j["p_survive"] = rational_to_string(p_survive);
  j["p_survive_value"] = boost::rational_cast<double>(p_survive);
  j["expected_survivors"] = rational_to_string(expected_survivors);
  j["expected_survivors_value"] = boost::rational_cast<double>(expected_survivors);
  j["population"] = population;
  return j.dump(2);
}

std::string TreatmentTree::to_json_string() const {
  nlohmann::json cells = nlohmann::json::array();
  for (int a0 = 0; a0 < 2; ++a0)
    for (int l1 = 0; l1 < 2; ++l1)
      for (int a1 = 0; a1 < 2; ++a1) {
        const auto &c = leaf(a0, l1, a1);
        if (c.total() == 0) continue;
        cells.push_back({{"a0", a0},
                         {"l1", l1},
                         {"a1", a1},
                         {"survivors", c.survivors},
                         {"deaths", c.deaths}});
      }
  nlohmann::json j;
  j["cells"] = cells;
  return j.dump(2);
}

TreatmentTree TreatmentTree::from_json_string(const std::string &text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TreatmentTree t;
  for (const auto &cell : j.at("cells")) {
    const int a0 = cell.at("a0").get<int>();
    const int l1 = cell.at("l1").get<int>();
    const int a1 = cell.at("a1").get<int>();
    if (a0 < 0 || a0 > 1 || l1 < 0 || l1 > 1 || a1 < 0 || a1 > 1)
      throw config_error("TreatmentTree: cell labels must be 0/1");
    t.leaf(a0, l1, a1).survivors = cell.at("survivors").get<long long>();
    t.leaf(a0, l1, a1).deaths = cell.at("deaths").get<long long>();
  }
  t.validate();
  return t;
}

TreatmentTree TreatmentTree::load_json_file(const std::string &filename) {
  std::ifstream in(filename);
  if (!in) throw config_error("cannot open tree spec " + filename);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

}  // namespace ctsnm
