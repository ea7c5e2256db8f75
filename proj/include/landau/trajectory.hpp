#pragma once

#include <optional>
#include <string>
#include <vector>

#include "landau/grid.hpp"

namespace landau {

struct DiagnosticRecord {
  double time = 0.0;
  double dt = 0.0;
  double mass = 0.0;
  std::vector<double> momentum;
  double energy = 0.0;
  double entropy = 0.0;
  double min_f = 0.0;
  double max_f = 0.0;
  double dissipation = 0.0;
};

struct TimedField {
  double time;
  ScalarField field;
};

/// Snapshots in strictly increasing time plus one record per accepted step.
struct Trajectory {
  GridPtr grid;
  double gamma = 0.0;
  std::vector<TimedField> snapshots;
  std::vector<DiagnosticRecord> records;
  std::optional<std::string> blowup;

  double start_time() const { return snapshots.empty() ? 0.0 : snapshots.front().time; }
  double end_time() const { return snapshots.empty() ? 0.0 : snapshots.back().time; }
};

}  // namespace landau
