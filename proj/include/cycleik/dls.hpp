#pragma once

#include <cstdint>
#include <optional>

#include "cycleik/chain.hpp"

namespace cycleik {

struct DlsParams {
  double damping = 0.05;
  int max_iterations = 200;              // per attempt
  std::optional<double> time_budget_ms;  // total, including restarts
  double position_tolerance = 1e-4;      // m
  double rotation_tolerance = 1e-3;      // rad
  int restarts = 4;
};

/// Outcome of a DLS solve. On failure `joints` holds the best configuration
/// found and the residuals describe it.
struct DlsResult {
  bool success = false;
  JointVector joints;
  double position_residual = 0.0;  // m
  double rotation_residual = 0.0;  // rad
  int iterations = 0;              // accepted correction steps, all attempts
  int attempts = 0;
};

/// Rotation vector of target * current^-1, taking the shorter arc.
Eigen::Vector3d rotation_error_vector(const Eigen::Quaterniond& target, const Eigen::Quaterniond& current);

/// 6 x dof geometric Jacobian (linear; angular) from the 7 x dof pose Jacobian.
Eigen::Matrix<double, 6, Eigen::Dynamic> geometric_jacobian(const PoseJacobian& pose_jacobian,
                                                            const Eigen::Quaterniond& orientation);

/**
 * Damped least squares: dtheta = J^T (J J^T + damping^2 I)^-1 e, clamped to
 * the joint limits, halving the step (up to 8 times) whenever the residual
 * would grow. The first attempt starts from `seed_joints`, restarts from
 * uniform samples drawn from `rng_seed`.
 */
DlsResult solve_dls(const KinematicChain& chain, const Pose& target, const JointVector& seed_joints,
                    const DlsParams& params = {}, std::uint64_t rng_seed = 0);

}  // namespace cycleik
