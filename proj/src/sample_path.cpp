#include "ctsnm/sample_path.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ctsnm/errors.hpp"

namespace ctsnm {

SamplePath::SamplePath(double horizon, std::vector<double> initial_values)
    : horizon_(horizon), dim_(initial_values.size()) {
  if (!(horizon >= 0.0)) throw std::domain_error("SamplePath: horizon must be >= 0");
  if (initial_values.empty()) throw std::domain_error("SamplePath: dim must be >= 1");
  times_.push_back(0.0);
  values_.push_back(std::move(initial_values));
}

void SamplePath::set_value(double time, std::vector<double> values) {
  if (values.size() != dim_)
    throw std::domain_error("SamplePath: value dimension mismatch");
  if (!(time >= 0.0) || time > horizon_)
    throw std::domain_error("SamplePath: jump time outside [0, tau]");
  if (time < times_.back())
    throw std::domain_error("SamplePath: jump times must be non-decreasing at insertion");
  if (time == times_.back()) {
    values_.back() = std::move(values);  // coincident jumps merge
    return;
  }
  times_.push_back(time);
  values_.push_back(std::move(values));
}

std::size_t SamplePath::locate(double t) const {
  if (!(t >= 0.0) || t > horizon_)
    throw std::domain_error("SamplePath: evaluation time outside [0, tau]");
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

const std::vector<double> &SamplePath::value_at(double t) const {
  return values_[locate(t)];
}

double SamplePath::value_at(double t, std::size_t coord) const {
  return values_[locate(t)][coord];
}

const std::vector<double> &SamplePath::left_value_at(double t) const {
  if (!(t >= 0.0) || t > horizon_)
    throw std::domain_error("SamplePath: evaluation time outside [0, tau]");
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  std::size_t idx = static_cast<std::size_t>(it - times_.begin());
  if (idx > 0) --idx;
  return values_[idx];
}

double SamplePath::left_value_at(double t, std::size_t coord) const {
  return left_value_at(t)[coord];
}

std::vector<double> SamplePath::jump_times() const {
  return std::vector<double>(times_.begin() + 1, times_.end());
}

DiscretizationGrid::DiscretizationGrid(int level_n, double tau)
    : level(level_n), horizon(tau) {
  if (level_n < 1) throw std::domain_error("DiscretizationGrid: level must be >= 1");
  if (!(tau > 0.0)) throw std::domain_error("DiscretizationGrid: horizon must be > 0");
}

double DiscretizationGrid::time(std::size_t k) const {
  const double denom = static_cast<double>(std::size_t{1} << level);
  return horizon * (static_cast<double>(k) / denom);
}

std::vector<double> DiscretizationGrid::times() const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = time(k);
  return out;
}

double DiscretizationGrid::bin_width() const {
  return 1.0 / static_cast<double>(std::size_t{1} << level);
}

std::vector<std::int64_t> DiscretizedPath::prefix_key(double t) const {
  std::vector<std::int64_t> key;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid.time(k) > t) break;
    key.insert(key.end(), bins[k].begin(), bins[k].end());
  }
  return key;
}

DiscretizedPath discretize(const SamplePath &path, int level) {
  if (level < 1) throw std::domain_error("discretize: level must be >= 1");
  DiscretizedPath out;
  out.grid = DiscretizationGrid(level, path.horizon());
  const double scale = static_cast<double>(std::size_t{1} << level);
  out.bins.resize(out.grid.size());
  for (std::size_t k = 0; k < out.grid.size(); ++k) {
    const std::vector<double> &v = path.value_at(out.grid.time(k));
    out.bins[k].resize(path.dim());
    for (std::size_t c = 0; c < path.dim(); ++c)
      out.bins[k][c] = static_cast<std::int64_t>(std::floor(v[c] * scale));
  }
  return out;
}

std::int64_t coarsen_bin(std::int64_t fine_bin) {
  return fine_bin >> 1;
}

bool is_alive_indicator(const SamplePath &path, std::size_t coord) {
  if (coord >= path.dim()) return false;
  double prev = 1.0;
  for (std::size_t i = 0; i < path.record_count(); ++i) {
    const double v = path.record_values(i)[coord];
    if (v != 0.0 && v != 1.0) return false;
    if (i > 0 && v > prev) return false;
    prev = v;
  }
  return true;
}

bool alive_at(const SamplePath &path, std::size_t alive_coord, double t) {
  return path.value_at(t, alive_coord) == 1.0;
}

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::vector<SubjectPath> read_paths_csv(std::istream &in, double horizon) {
  std::string line;
  if (!std::getline(in, line)) throw config_error("paths csv: empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "subject_id" || header[1] != "time")
    throw config_error("paths csv: header must be subject_id,time,<coords...>");
  const std::size_t dim = header.size() - 2;

  std::vector<SubjectPath> subjects;
  std::map<std::int64_t, std::size_t> index_of;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw config_error("paths csv: wrong field count at line " + std::to_string(line_no));
    const std::int64_t id = std::stoll(fields[0]);
    const double t = std::stod(fields[1]);
    std::vector<double> vals(dim);
    for (std::size_t c = 0; c < dim; ++c) vals[c] = std::stod(fields[2 + c]);

    auto it = index_of.find(id);
    if (it == index_of.end()) {
      if (t != 0.0)
        throw config_error("paths csv: first row for subject " + std::to_string(id) +
                           " must be at time 0");
      index_of[id] = subjects.size();
      subjects.push_back({id, SamplePath(horizon, std::move(vals))});
    } else {
      subjects[it->second].path.set_value(t, std::move(vals));
    }
  }
  return subjects;
}

std::vector<SubjectPath> read_paths_csv_file(const std::string &filename, double horizon) {
  std::ifstream in(filename);
  if (!in) throw config_error("cannot open " + filename);
  return read_paths_csv(in, horizon);
}

void write_paths_csv(std::ostream &out, const std::vector<SubjectPath> &subjects) {
  const std::size_t dim = subjects.empty() ? 1 : subjects.front().path.dim();
  out << "subject_id,time";
  for (std::size_t c = 0; c < dim; ++c) out << ",z" << c;
  out << "\n";
  char buf[40];
  for (const auto &s : subjects) {
    for (std::size_t i = 0; i < s.path.record_count(); ++i) {
      out << s.subject_id;
      std::snprintf(buf, sizeof buf, "%.17g", s.path.record_time(i));
      out << ',' << buf;
      for (double v : s.path.record_values(i)) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
      }
      out << "\n";
    }
  }
}

void write_paths_csv_file(const std::string &filename, const std::vector<SubjectPath> &subjects) {
  std::ofstream out(filename);
  if (!out) throw config_error("cannot open " + filename + " for writing");
  write_paths_csv(out, subjects);
}

}  // namespace ctsnm
