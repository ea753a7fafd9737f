#pragma once

#include <vector>

#include "cycleik/types.hpp"

namespace cycleik {

class KinematicChain;

/**
 * Affine maps between physical units and the network's [-1, 1] domain.
 *
 * Positions use the observed training bounds, joints use the chain limits.
 * Quaternion components pass through unchanged.
 */
struct NormStats {
  Eigen::Vector3d position_min = Eigen::Vector3d::Constant(-1.0);
  Eigen::Vector3d position_max = Eigen::Vector3d::Constant(1.0);
  Eigen::VectorXd joint_lower;
  Eigen::VectorXd joint_upper;

  int dof() const { return static_cast<int>(joint_lower.size()); }

  /// Network input rows for a pose batch. Positions outside the bounds map
  /// outside [-1, 1] and are reported through `flagged` (never clamped).
  RowMatrix<float> normalize_poses(const PoseBatch& poses, std::vector<bool>* flagged = nullptr) const;
  PoseBatch denormalize_poses(const RowMatrix<float>& normalized) const;

  /// theta = lower + (t + 1) / 2 * (upper - lower).
  JointBatch denormalize_joints(const RowMatrix<float>& normalized) const;
  JointBatch normalize_joints(const JointBatch& joints) const;

  /// d(theta)/d(t) per joint.
  Eigen::VectorXd joint_scale() const { return 0.5 * (joint_upper - joint_lower); }
};

/// Joint bounds taken from the chain, position bounds from `poses`.
/// Degenerate position axes (min == max) are widened by 1e-6 with a warning.
NormStats compute_normalization(const PoseBatch& poses, const KinematicChain& chain);

}  // namespace cycleik
