#pragma once

#include <stdexcept>
#include <string>

namespace catsim {

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dimension / mode-count disagreement between two states.
struct DimensionMismatch : std::logic_error {
  using std::logic_error::logic_error;
};

// A preparation or transform left more than the allowed probability mass in
// the top two Fock levels.  Results past this point would silently depend on
// the cutoff, so we refuse instead.
struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Conditioning on an outcome whose probability is numerically zero.
struct ZeroProbability : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Post-selection target not reachable: even the single best outcome misses
// the requested fidelity floor.
struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace catsim
