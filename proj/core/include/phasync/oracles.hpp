#pragma once

// Independent numerical cross-checks of the receiver components:
// brute-force grid integration, extended-precision series, quadrature,
// and closed-form Kalman references. Shared by the CLI self-check
// command and the acceptance suite.

#include <string>
#include <vector>

namespace phasync {

struct OracleReport {
  std::string name;
  bool passed = false;
  std::vector<std::string> lines;  // tolerances and measured values
};

const std::vector<std::string>& oracle_names();

/// Runs one named check. Throws std::invalid_argument on unknown names.
/// Names: tikhonov-norm, smear-vs-grid, spa-vs-grid, gaussmap-vs-grid,
/// vb-vs-quadrature, eks-vs-kalman, i0-accuracy, utilde-residual.
OracleReport run_oracle(const std::string& name);

}  // namespace phasync
