#ifndef CTSNM_SAMPLE_PATH_HPP
#define CTSNM_SAMPLE_PATH_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ctsnm {

// Cadlag piecewise-constant covariate-and-treatment trajectory on [0, tau].
// Records hold the value from each jump time (inclusive) to the next jump
// time (exclusive); record 0 is the initial value at t = 0. Coincident jumps
// in several coordinates share one record. Immutable once built.
class SamplePath {
 public:
  SamplePath() = default;
  SamplePath(double horizon, std::vector<double> initial_values);

  // Sets the path value from `time` on. `time` must be >= the latest record
  // time; setting at an existing time overwrites that record (merged jump).
  void set_value(double time, std::vector<double> values);

  // Value at t, right-continuous. Throws std::domain_error outside [0, tau].
  const std::vector<double> &value_at(double t) const;
  double value_at(double t, std::size_t coord) const;

  // Left limit at t (value just before t); at t = 0 the initial value.
  const std::vector<double> &left_value_at(double t) const;
  double left_value_at(double t, std::size_t coord) const;

  // Strictly increasing jump times in (0, tau]. The initial record is not a
  // jump.
  std::vector<double> jump_times() const;

  double horizon() const { return horizon_; }
  std::size_t dim() const { return dim_; }
  std::size_t record_count() const { return times_.size(); }
  double record_time(std::size_t i) const { return times_[i]; }
  const std::vector<double> &record_values(std::size_t i) const { return values_[i]; }

  bool operator==(const SamplePath &other) const = default;

 private:
  std::size_t locate(double t) const;  // index of last record with time <= t

  double horizon_ = 0.0;
  std::size_t dim_ = 0;
  std::vector<double> times_;
  std::vector<std::vector<double>> values_;
};

// Dyadic grid at level n on [0, tau]: times tau*k/2^n, k = 0..2^n.
struct DiscretizationGrid {
  int level = 1;
  double horizon = 1.0;

  DiscretizationGrid() = default;
  DiscretizationGrid(int level_n, double tau);

  std::size_t size() const { return (std::size_t{1} << level) + 1; }
  double time(std::size_t k) const;
  std::vector<double> times() const;
  double bin_width() const;  // 1/2^n

  bool operator==(const DiscretizationGrid &other) const = default;
};

// Level-n discretization of a path: at every grid time, the integer bin index
// i with value in [i/2^n, (i+1)/2^n) for each coordinate. Bin indices may be
// negative. Deterministic function of the path.
struct DiscretizedPath {
  DiscretizationGrid grid;
  std::vector<std::vector<std::int64_t>> bins;  // [grid time][coordinate]

  // Bins for grid times <= t, flattened; the conditioning key Z^(n)_t.
  std::vector<std::int64_t> prefix_key(double t) const;

  bool operator==(const DiscretizedPath &other) const = default;
};

DiscretizedPath discretize(const SamplePath &path, int level);

// Level-(n+1) bin -> level-n bin. Arithmetic floor halving, exact for
// negative indices as well.
std::int64_t coarsen_bin(std::int64_t fine_bin);

// Checks that `coord` is a valid alive-indicator: values in {0,1},
// non-increasing in t. Returns false otherwise.
bool is_alive_indicator(const SamplePath &path, std::size_t coord);

// True if the alive coordinate is 1 at time t.
bool alive_at(const SamplePath &path, std::size_t alive_coord, double t);

// CSV long format: header "subject_id,time,z0,z1,...". First row per subject
// must be at time 0. Jump rows must have strictly increasing times.
struct SubjectPath {
  std::int64_t subject_id = 0;
  SamplePath path;
};

std::vector<SubjectPath> read_paths_csv(std::istream &in, double horizon);
std::vector<SubjectPath> read_paths_csv_file(const std::string &filename, double horizon);
void write_paths_csv(std::ostream &out, const std::vector<SubjectPath> &subjects);
void write_paths_csv_file(const std::string &filename, const std::vector<SubjectPath> &subjects);

}  // namespace ctsnm

#endif
