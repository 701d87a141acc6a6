#pragma once

#include <string>
#include <vector>

#include <qenv/numerics.hpp>

namespace qenv {

// Qubit coherence trace D(t) on a time grid. values[k] is the complex
// visibility at time_grid[k]; D(0) = 1 whenever the trace comes from one of
// the visibility evaluators. warnings carries validity notes (band-continuum
// conditions that failed for the generating environment); they never make a
// trace invalid on their own.
struct VisibilityTrace {
  std::vector<double> time_grid;
  ComplexVector values;
  std::vector<std::string> warnings;
};

}  // namespace qenv
