#pragma once

#include <span>

#include <Eigen/Core>

#include "covctl/kernels.hpp"

namespace covctl {

enum class ControlLaw {
  /// Exact solve of (I - dc/dp) pdot = kappa (c - p) + dc/dt.
  TvdC,
  /// Truncated Neumann series of the same inverse; needs only neighbor blocks.
  TvdD1,
};

struct ControlConfig {
  double kappa = 1.0;
  ControlLaw law = ControlLaw::TvdC;
  bool feedforward = true;
  /// Terms of the Neumann series beyond the identity (TvdD1 only).
  int neumann_order = 1;

  /// Throws InvalidConfig.
  void validate() const;
};

struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

struct ControlOutput {
  /// Stacked [pdot_1; ...; pdot_n].
  Eigen::VectorXd velocities;
  /// ||A pdot - b||.
  double residual = 0.0;
  /// 1-norm condition estimate of A (TvdC only; NaN otherwise).
  double condition_estimate = 0.0;
  /// Set when a singular TvdC system fell back to TvdD1.
  bool fell_back = false;
};

/// b = kappa (c - p) + dc/dt, with dc/dt dropped when feedforward is off.
Eigen::VectorXd control_rhs(const FeedforwardVector& ff, const CellMoments& moments,
                            std::span<const Point2> positions, double kappa, bool feedforward);

/// A = I - dc/dp and b as in control_rhs.
LinearSystem assemble_system(const JacobianBlocks& jac, const FeedforwardVector& ff,
                             const CellMoments& moments, std::span<const Point2> positions,
                             double kappa, bool feedforward = true);

/// Throws SingularSystem. Warns on stderr when the condition estimate exceeds 1e6.
ControlOutput tvd_c(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// pdot = sum_{m=0..order} (dc/dp)^m b.
ControlOutput tvd_d1(const JacobianBlocks& jac, const Eigen::VectorXd& b, int neumann_order);

/// Full evaluation for one configuration. A singular TvdC system degrades to
/// TvdD1 of order 1 with a warning instead of failing.
ControlOutput evaluate_control(const ControlConfig& config, const JacobianBlocks& jac,
                               const FeedforwardVector& ff, const CellMoments& moments,
                               std::span<const Point2> positions);

}  // namespace covctl
