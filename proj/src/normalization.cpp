#include "cycleik/normalization.hpp"

#include <string>

#include "cycleik/chain.hpp"
#include "cycleik/log.hpp"

namespace cycleik {

RowMatrix<float> NormStats::normalize_poses(const PoseBatch& poses, std::vector<bool>* flagged) const {
  RowMatrix<float> out(poses.rows(), kPoseWidth);
  if (flagged != nullptr) flagged->assign(static_cast<std::size_t>(poses.rows()), false);
  const Eigen::Array3d span = (position_max - position_min).array();
  for (Eigen::Index i = 0; i < poses.rows(); ++i) {
    const Eigen::Array3d p = poses.row(i).head<3>().transpose().array();
    const Eigen::Array3d n = 2.0 * (p - position_min.array()) / span - 1.0;
    if (flagged != nullptr && ((n < -1.0) || (n > 1.0)).any()) (*flagged)[i] = true;
    for (int c = 0; c < 3; ++c) out(i, c) = static_cast<float>(n[c]);
    for (int c = 3; c < kPoseWidth; ++c) out(i, c) = static_cast<float>(poses(i, c));
  }
  return out;
}

PoseBatch NormStats::denormalize_poses(const RowMatrix<float>& normalized) const {
  if (normalized.cols() != kPoseWidth) throw DimensionError("denormalize_poses: expected 7 columns");
  PoseBatch out(normalized.rows(), kPoseWidth);
  const Eigen::Array3d span = (position_max - position_min).array();
  for (Eigen::Index i = 0; i < normalized.rows(); ++i) {
    for (int c = 0; c < 3; ++c) {
      out(i, c) = position_min[c] + (static_cast<double>(normalized(i, c)) + 1.0) * 0.5 * span[c];
    }
    for (int c = 3; c < kPoseWidth; ++c) out(i, c) = normalized(i, c);
  }
  return out;
}

JointBatch NormStats::denormalize_joints(const RowMatrix<float>& normalized) const {
  if (normalized.cols() != dof()) {
    throw DimensionError("denormalize_joints: expected " + std::to_string(dof()) + " columns, got " +
                         std::to_string(normalized.cols()));
  }
  JointBatch out(normalized.rows(), dof());
  const Eigen::ArrayXd range = (joint_upper - joint_lower).array();
  for (Eigen::Index i = 0; i < normalized.rows(); ++i) {
    const Eigen::ArrayXd t = normalized.row(i).cast<double>().transpose().array();
    out.row(i) = (joint_lower.array() + (t + 1.0) * 0.5 * range).transpose();
  }
  return out;
}

JointBatch NormStats::normalize_joints(const JointBatch& joints) const {
  if (joints.cols() != dof()) throw DimensionError("normalize_joints: dof mismatch");
  JointBatch out(joints.rows(), dof());
  const Eigen::ArrayXd range = (joint_upper - joint_lower).array();
  for (Eigen::Index i = 0; i < joints.rows(); ++i) {
    for (int j = 0; j < dof(); ++j) {
      out(i, j) = range[j] > 0.0 ? 2.0 * (joints(i, j) - joint_lower[j]) / range[j] - 1.0 : 0.0;
    }
  }
  return out;
}

NormStats compute_normalization(const PoseBatch& poses, const KinematicChain& chain) {
  if (poses.rows() == 0) throw ValueError("compute_normalization: empty dataset");
  NormStats stats;
  stats.position_min = poses.leftCols<3>().colwise().minCoeff().transpose();
  stats.position_max = poses.leftCols<3>().colwise().maxCoeff().transpose();
  for (int c = 0; c < 3; ++c) {
    if (stats.position_min[c] == stats.position_max[c]) {
      warn("position axis " + std::to_string(c) + " is degenerate; widening bounds by 1e-6");
      stats.position_min[c] -= 1e-6;
      stats.position_max[c] += 1e-6;
    }
  }
  stats.joint_lower = chain.lower_limits();
  stats.joint_upper = chain.upper_limits();
  return stats;
}

}  // namespace cycleik
