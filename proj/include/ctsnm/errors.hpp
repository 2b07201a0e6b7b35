#ifndef CTSNM_ERRORS_HPP
#define CTSNM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ctsnm {

// Bad user-supplied configuration (model spec, scenario spec, CLI flags).
struct config_error : std::runtime_error {
  explicit config_error(const std::string &msg) : std::runtime_error(msg) {}
};

// The adaptive integrator could not meet its tolerance within the step budget,
// or a computed trajectory violates a structural constraint.
struct solver_error : std::runtime_error {
  explicit solver_error(const std::string &msg) : std::runtime_error(msg) {}
};

// A regularity bound (density floor, derivative bound) was violated where an
// operation requires it to hold.
struct regularity_error : std::runtime_error {
  explicit regularity_error(const std::string &msg) : std::runtime_error(msg) {}
};

// A requested treatment regime has no observed support in a required stratum.
struct positivity_error : std::runtime_error {
  explicit positivity_error(const std::string &msg) : std::runtime_error(msg) {}
};

// The data carry no information about the parameter (e.g. no treatment
// variation, or a degenerate variance estimate).
struct identification_error : std::runtime_error {
  explicit identification_error(const std::string &msg) : std::runtime_error(msg) {}
};

// A nuisance-model fit failed to converge.
struct fit_error : std::runtime_error {
  explicit fit_error(const std::string &msg) : std::runtime_error(msg) {}
};

}  // namespace ctsnm

#endif
