#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covctl/sim.hpp"

namespace covctl {

struct CheckResult {
  std::string name;
  bool pass = false;
  /// Worst observed discrepancy (or the measured quantity).
  double observed = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct SuiteReport {
  std::vector<CheckResult> checks;
  bool passed() const;
};

/// Analytic dc_i/dp_j, dc_i/dp_i and dc_i/dt against central differences
/// (1e-5 absolute) and adaptive quadrature (1e-8 relative).
SuiteReport verify_derivatives(int instances = 50, std::uint64_t seed = 1);

/// Mass partition (1e-9 relative) and nearest-generator ownership of random probes.
SuiteReport verify_partition(std::vector<std::size_t> sizes = {10, 100, 500},
                             std::size_t probes = 100'000, std::uint64_t seed = 1);

/// Exponential decay of e_a at rate kappa under TVD-C and the split-square
/// hand-derived blocks.
SuiteReport verify_convergence(std::uint64_t seed = 0);

/// nullopt for an unknown suite name; "all" concatenates every suite.
std::optional<SuiteReport> run_suite(std::string_view name);

/// Least-squares slope of log e_a(t) over records with e_a in [floor, e_a(0)/2].
/// NaN when fewer than two records fall in that window.
double fitted_log_slope(const TrajectoryLog& log, double floor = 1e-5);

}  // namespace covctl
