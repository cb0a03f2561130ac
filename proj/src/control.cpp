#include "covctl/control.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include <Eigen/LU>

namespace covctl {

namespace {

constexpr double kWarnCondition = 1e6;
constexpr double kSingularRcond = 1e-14;

}  // namespace

void ControlConfig::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw Error(ErrorKind::InvalidConfig, "kappa must be a positive finite gain");
  }
  if (neumann_order < 0) throw Error(ErrorKind::InvalidConfig, "neumann_order must be >= 0");
}

Eigen::VectorXd control_rhs(const FeedforwardVector& ff, const CellMoments& moments,
                            std::span<const Point2> positions, double kappa, bool feedforward) {
  const auto n = static_cast<Eigen::Index>(positions.size());
  Eigen::VectorXd b(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    Vec2 v = kappa * (moments[k].centroid - positions[k]);
    if (feedforward) v += ff[k];
    b(2 * i) = v.x;
    b(2 * i + 1) = v.y;
  }
  return b;
}

LinearSystem assemble_system(const JacobianBlocks& jac, const FeedforwardVector& ff,
                             const CellMoments& moments, std::span<const Point2> positions,
                             double kappa, bool feedforward) {
  const auto dim = static_cast<Eigen::Index>(2 * positions.size());
  LinearSystem sys;
  sys.A = Eigen::MatrixXd::Identity(dim, dim) - jac.dense();
  sys.b = control_rhs(ff, moments, positions, kappa, feedforward);
  return sys;
}

ControlOutput tvd_c(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  ControlOutput out;
  if (A.rows() == 0) {
    out.velocities = Eigen::VectorXd(0);
    out.condition_estimate = 1.0;
    return out;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const double rcond = lu.rcond();
  if (!(rcond > kSingularRcond)) {
    throw Error(ErrorKind::SingularSystem, "I - dc/dp is numerically singular");
  }
  out.condition_estimate = 1.0 / rcond;
  if (out.condition_estimate > kWarnCondition) {
    std::clog << "warning: ill-conditioned control system, condition estimate "
              << out.condition_estimate << '\n';
  }
  out.velocities = lu.solve(b);
  // One step of iterative refinement.
  out.velocities += lu.solve(b - A * out.velocities);
  if (!out.velocities.allFinite()) {
    throw Error(ErrorKind::SingularSystem, "control solve produced non-finite velocities");
  }
  out.residual = (A * out.velocities - b).norm();
  return out;
}

ControlOutput tvd_d1(const JacobianBlocks& jac, const Eigen::VectorXd& b, int neumann_order) {
  ControlOutput out;
  Eigen::VectorXd term = b;
  out.velocities = b;
  for (int m = 0; m < neumann_order; ++m) {
    term = jac.apply(term);
    out.velocities += term;
  }
  out.residual = (out.velocities - jac.apply(out.velocities) - b).norm();
  out.condition_estimate = std::numeric_limits<double>::quiet_NaN();
  return out;
}

ControlOutput evaluate_control(const ControlConfig& config, const JacobianBlocks& jac,
                               const FeedforwardVector& ff, const CellMoments& moments,
                               std::span<const Point2> positions) {
  const Eigen::VectorXd b =
      control_rhs(ff, moments, positions, config.kappa, config.feedforward);
  if (config.law == ControlLaw::TvdD1) return tvd_d1(jac, b, config.neumann_order);

  const auto dim = static_cast<Eigen::Index>(b.size());
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(dim, dim) - jac.dense();
  try {
    return tvd_c(A, b);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SingularSystem) throw;
    std::clog << "warning: " << e.what() << "; falling back to TVD-D1 (order 1)\n";
    ControlOutput out = tvd_d1(jac, b, 1);
    out.fell_back = true;
    return out;
  }
}

}  // namespace covctl
