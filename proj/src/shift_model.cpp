#include "ctsnm/shift_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ctsnm/errors.hpp"
#include "json.hpp"

namespace ctsnm {

std::string to_string(OutcomeKind kind) {
  return kind == OutcomeKind::Continuous ? "continuous" : "survival";
}

std::string to_string(ShiftFamily family) {
  switch (family) {
    case ShiftFamily::GvHDMultiplicative: return "gvhd_multiplicative";
    case ShiftFamily::PCPProphylaxis: return "pcp_prophylaxis";
    case ShiftFamily::DelayedEffect: return "delayed_effect";
    case ShiftFamily::UserTabulated: return "user_tabulated";
  }
  return "unknown";
}

OutcomeKind outcome_kind_from_string(const std::string &s) {
  if (s == "continuous") return OutcomeKind::Continuous;
  if (s == "survival") return OutcomeKind::Survival;
  throw config_error("unknown outcome kind: " + s);
}

ShiftFamily shift_family_from_string(const std::string &s) {
  if (s == "gvhd_multiplicative") return ShiftFamily::GvHDMultiplicative;
  if (s == "pcp_prophylaxis") return ShiftFamily::PCPProphylaxis;
  if (s == "delayed_effect") return ShiftFamily::DelayedEffect;
  if (s == "user_tabulated") return ShiftFamily::UserTabulated;
  throw config_error("unknown shift family: " + s);
}

void RegularityBudget::validate(OutcomeKind kind) const {
  if (!(eps > 0.0 && c1 > 0.0 && c2 > 0.0 && l1 > 0.0 && l2 > 0.0))
    throw config_error("RegularityBudget: eps, c1, c2, l1, l2 must all be positive");
  if (kind == OutcomeKind::Continuous && !(y1 < y2))
    throw config_error("RegularityBudget: requires y1 < y2");
  if (kind == OutcomeKind::Survival && !(y2 > 0.0))
    throw config_error("RegularityBudget: survival kind requires y2 > 0");
}

double gronwall_constant(const RegularityBudget &b) {
  return b.l2 / b.eps + b.c2 * b.l1 / (b.eps * b.eps);
}

namespace {

// Piecewise-linear interpolation index: largest i with grid[i] <= x, clamped
// so that [i, i+1] is a valid cell.
std::size_t cell_index(const std::vector<double> &grid, double x) {
  if (x <= grid.front()) return 0;
  if (x >= grid[grid.size() - 2]) return grid.size() - 2;
  auto it = std::upper_bound(grid.begin(), grid.end(), x);
  return static_cast<std::size_t>(it - grid.begin()) - 1;
}

double clamp01(double w) { return w < 0.0 ? 0.0 : (w > 1.0 ? 1.0 : w); }

}  // namespace

std::int64_t ShiftTable::bin_of(double coord_value) const {
  return static_cast<std::int64_t>(std::floor(coord_value / bin_width));
}

double ShiftTable::evaluate(std::int64_t bin, double y, double t) const {
  auto it = values.find(bin);
  if (it == values.end())
    throw config_error("ShiftTable: no table for covariate bin " + std::to_string(bin));
  const auto &v = it->second;
  const std::size_t nt = t_grid.size();
  const std::size_t iy = cell_index(y_grid, y);
  const std::size_t it_t = cell_index(t_grid, t);
  const double wy = clamp01((y - y_grid[iy]) / (y_grid[iy + 1] - y_grid[iy]));
  const double wt = clamp01((t - t_grid[it_t]) / (t_grid[it_t + 1] - t_grid[it_t]));
  const double v00 = v[iy * nt + it_t];
  const double v01 = v[iy * nt + it_t + 1];
  const double v10 = v[(iy + 1) * nt + it_t];
  const double v11 = v[(iy + 1) * nt + it_t + 1];
  return (1.0 - wy) * ((1.0 - wt) * v00 + wt * v01) + wy * ((1.0 - wt) * v10 + wt * v11);
}

ShiftModel ShiftModel::gvhd(double psi, OutcomeKind kind) {
  ShiftModel m;
  m.family = ShiftFamily::GvHDMultiplicative;
  m.psi = {psi};
  m.outcome_kind = kind;
  if (kind == OutcomeKind::Continuous) m.indicator_coord = 0;
  return m;
}

ShiftModel ShiftModel::pcp(double psi1, double psi2, double psi3, OutcomeKind kind) {
  ShiftModel m;
  m.family = ShiftFamily::PCPProphylaxis;
  m.psi = {psi1, psi2, psi3};
  m.outcome_kind = kind;
  if (kind == OutcomeKind::Continuous) {
    m.indicator_coord = 0;
    m.pcp_coord = 1;
    m.arm_coord = 2;
  }
  return m;
}

ShiftModel ShiftModel::delayed(double psi, OutcomeKind kind, double window) {
  ShiftModel m;
  m.family = ShiftFamily::DelayedEffect;
  m.psi = {psi};
  m.outcome_kind = kind;
  m.delayed_window = window;
  if (kind == OutcomeKind::Continuous) m.indicator_coord = 0;
  return m;
}

ShiftModel ShiftModel::tabulated(ShiftTable table, OutcomeKind kind) {
  ShiftModel m;
  m.family = ShiftFamily::UserTabulated;
  m.outcome_kind = kind;
  m.table = std::move(table);
  return m;
}

void ShiftModel::validate() const {
  budget.validate(outcome_kind);
  switch (family) {
    case ShiftFamily::GvHDMultiplicative:
    case ShiftFamily::DelayedEffect:
      if (psi.size() != 1) throw config_error(to_string(family) + ": psi must have dimension 1");
      break;
    case ShiftFamily::PCPProphylaxis:
      if (psi.size() != 3) throw config_error("pcp_prophylaxis: psi must have dimension 3");
      break;
    case ShiftFamily::UserTabulated:
      if (table.y_grid.size() < 2 || table.t_grid.size() < 2)
        throw config_error("user_tabulated: y and t grids need at least 2 points");
      if (!std::is_sorted(table.y_grid.begin(), table.y_grid.end()) ||
          !std::is_sorted(table.t_grid.begin(), table.t_grid.end()))
        throw config_error("user_tabulated: grids must be increasing");
      for (const auto &[bin, v] : table.values)
        if (v.size() != table.y_grid.size() * table.t_grid.size())
          throw config_error("user_tabulated: table size mismatch for bin " + std::to_string(bin));
      if (!(table.bin_width > 0.0)) throw config_error("user_tabulated: bin_width must be > 0");
      break;
  }
  if (family == ShiftFamily::DelayedEffect && !(delayed_window > 0.0))
    throw config_error("delayed_effect: window must be > 0");
}

namespace {

void check_coord(std::size_t coord, std::size_t dim, const char *what) {
  if (coord >= dim)
    throw config_error(std::string("ShiftModel: ") + what + " coordinate " +
                       std::to_string(coord) + " out of range for path of dimension " +
                       std::to_string(dim));
}

double family_value(const ShiftModel &m, double y, double t,
                    const std::vector<double> &z) {
  switch (m.family) {
    case ShiftFamily::GvHDMultiplicative: {
      check_coord(m.indicator_coord, z.size(), "indicator");
      const bool active = z[m.indicator_coord] != 0.0;
      return active ? 1.0 - std::exp(m.psi[0]) : 0.0;
    }
    case ShiftFamily::PCPProphylaxis: {
      check_coord(m.indicator_coord, z.size(), "indicator");
      check_coord(m.pcp_coord, z.size(), "pcp");
      check_coord(m.arm_coord, z.size(), "arm");
      const bool treated = z[m.indicator_coord] != 0.0;
      if (!treated) return 0.0;
      const double expo = m.psi[0] + m.psi[1] * z[m.pcp_coord] + m.psi[2] * z[m.arm_coord];
      return 1.0 - std::exp(expo);
    }
    case ShiftFamily::DelayedEffect: {
      check_coord(m.indicator_coord, z.size(), "indicator");
      if (y - t > m.delayed_window) return 0.0;
      const bool active = z[m.indicator_coord] != 0.0;
      return active ? 1.0 - std::exp(m.psi[0]) : 0.0;
    }
    case ShiftFamily::UserTabulated: {
      check_coord(m.table.bin_coord, z.size(), "table bin");
      return m.table.evaluate(m.table.bin_of(z[m.table.bin_coord]), y, t);
    }
  }
  return 0.0;
}

}  // namespace

double shift_with_values(const ShiftModel &model, double y, double t,
                         const std::vector<double> &path_values) {
  if (model.outcome_kind == OutcomeKind::Survival) {
    check_coord(model.alive_coord, path_values.size(), "alive");
    if (path_values[model.alive_coord] != 1.0) return 0.0;  // dead at or before t
    if (y < t) return 0.0;
  }
  return family_value(model, y, t, path_values);
}

double shift(const ShiftModel &model, double y, double t, const SamplePath &path) {
  return shift_with_values(model, y, t, path.value_at(t));
}

double survival_limit_at_diagonal(const ShiftModel &model, double t, const SamplePath &path) {
  if (model.outcome_kind != OutcomeKind::Survival)
    throw std::domain_error("survival_limit_at_diagonal: model is not survival kind");
  const std::vector<double> &z = path.value_at(t);
  check_coord(model.alive_coord, z.size(), "alive");
  if (z[model.alive_coord] != 1.0)
    throw std::domain_error("survival_limit_at_diagonal: patient is not alive at t");

  if (model.family != ShiftFamily::UserTabulated) {
    // Built-in families are constant in y on the alive branch.
    return family_value(model, t, t, z);
  }

  // Decreasing offsets y = t + 2^-j with one Richardson step per halving,
  // which removes the first-order term of the y-expansion.
  double prev = 0.0;
  double extrap = 0.0;
  for (int j = 10; j <= 20; ++j) {
    const double h = std::ldexp(1.0, -j);
    const double v = family_value(model, t + h, t, z);
    extrap = (j == 10) ? v : 2.0 * v - prev;
    prev = v;
  }
  return extrap;
}

ShiftModel ShiftModel::from_json_string(const std::string &text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ShiftModel m;
  m.family = shift_family_from_string(j.at("family").get<std::string>());
  m.outcome_kind = outcome_kind_from_string(j.at("outcome_kind").get<std::string>());
  if (j.contains("psi")) m.psi = j.at("psi").get<std::vector<double>>();
  if (j.contains("budget")) {
    const auto &b = j.at("budget");
    m.budget.eps = b.value("eps", m.budget.eps);
    m.budget.c1 = b.value("c1", m.budget.c1);
    m.budget.c2 = b.value("c2", m.budget.c2);
    m.budget.l1 = b.value("l1", m.budget.l1);
    m.budget.l2 = b.value("l2", m.budget.l2);
    m.budget.y1 = b.value("y1", m.budget.y1);
    m.budget.y2 = b.value("y2", m.budget.y2);
  }
  const bool survival = m.outcome_kind == OutcomeKind::Survival;
  m.alive_coord = j.value("alive_coord", std::size_t{0});
  m.indicator_coord = j.value("indicator_coord", std::size_t(survival ? 1 : 0));
  m.pcp_coord = j.value("pcp_coord", std::size_t(survival ? 2 : 1));
  m.arm_coord = j.value("arm_coord", std::size_t(survival ? 3 : 2));
  m.delayed_window = j.value("delayed_window", 5.0);
  if (j.contains("table")) {
    const auto &tj = j.at("table");
    m.table.y_grid = tj.at("y_grid").get<std::vector<double>>();
    m.table.t_grid = tj.at("t_grid").get<std::vector<double>>();
    m.table.bin_coord = tj.value("bin_coord", std::size_t{0});
    m.table.bin_width = tj.value("bin_width", 1.0);
    for (const auto &[key, vals] : tj.at("values").items())
      m.table.values[std::stoll(key)] = vals.get<std::vector<double>>();
  }
  m.validate();
  return m;
}

std::string ShiftModel::to_json_string() const {
  nlohmann::json j;
  j["family"] = to_string(family);
  j["outcome_kind"] = to_string(outcome_kind);
  j["psi"] = psi;
  j["budget"] = {{"eps", budget.eps}, {"c1", budget.c1}, {"c2", budget.c2},
                 {"l1", budget.l1},   {"l2", budget.l2}, {"y1", budget.y1},
                 {"y2", budget.y2}};
  j["alive_coord"] = alive_coord;
  j["indicator_coord"] = indicator_coord;
  j["pcp_coord"] = pcp_coord;
  j["arm_coord"] = arm_coord;
  if (family == ShiftFamily::DelayedEffect) j["delayed_window"] = delayed_window;
  if (family == ShiftFamily::UserTabulated) {
    nlohmann::json tj;
    tj["y_grid"] = table.y_grid;
    tj["t_grid"] = table.t_grid;
    tj["bin_coord"] = table.bin_coord;
    tj["bin_width"] = table.bin_width;
    nlohmann::json vals;
    for (const auto &[bin, v] : table.values) vals[std::to_string(bin)] = v;
    tj["values"] = vals;
    j["table"] = tj;
  }
  return j.dump(2);
}

ShiftModel ShiftModel::load_json_file(const std::string &filename) {
  std::ifstream in(filename);
  if (!in) throw config_error("cannot open model spec " + filename);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

}  // namespace ctsnm
