#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cycleik/types.hpp"

namespace cycleik {

enum class JointKind { kRevolute, kPrismatic, kFixed };

std::string_view to_string(JointKind kind);

struct JointSpec {
  std::string name;
  JointKind kind = JointKind::kFixed;
  Eigen::Vector3d origin_translation = Eigen::Vector3d::Zero();  // m
  Eigen::Vector3d origin_rpy = Eigen::Vector3d::Zero();          // rad, extrinsic X-Y-Z
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
  double limit_lower = 0.0;  // rad or m
  double limit_upper = 0.0;
};

using PoseJacobian = Eigen::Matrix<double, kPoseWidth, Eigen::Dynamic>;

/**
 * Serial chain of joints from a base link to a tip link.
 *
 * Immutable after construction. Each joint contributes the transform
 * Origin(xyz, rpy) * Motion(axis, value), where Motion is a rotation about the
 * axis for revolute joints, a translation along it for prismatic joints and
 * the identity for fixed joints.
 */
class KinematicChain {
 public:
  KinematicChain() = default;

  /// Validates joint invariants; throws ValueError on a zero axis or inverted limits.
  KinematicChain(std::string base_name, std::string tip_name, std::vector<JointSpec> joints);

  const std::vector<JointSpec>& joints() const { return joints_; }
  int dof() const { return static_cast<int>(active_.size()); }
  const std::string& base_name() const { return base_name_; }
  const std::string& tip_name() const { return tip_name_; }

  /// Limits of the non-fixed joints, in chain order.
  const Eigen::VectorXd& lower_limits() const { return lower_; }
  const Eigen::VectorXd& upper_limits() const { return upper_; }

  /// Indices into joints() of the non-fixed joints.
  const std::vector<int>& active_joints() const { return active_; }

  /// Constant origin transform of joint i.
  const Eigen::Isometry3d& origin(int i) const { return origins_[i]; }
  const Eigen::Quaterniond& origin_rotation(int i) const { return origin_rotations_[i]; }

  /// FNV-1a hash of the chain description; equal chains hash equal.
  std::uint64_t fingerprint() const { return fingerprint_; }

  bool within_limits(const JointVector& joints, double slack = 0.0) const;

 private:
  std::string base_name_;
  std::string tip_name_;
  std::vector<JointSpec> joints_;
  std::vector<Eigen::Isometry3d> origins_;
  std::vector<Eigen::Quaterniond> origin_rotations_;
  std::vector<int> active_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  std::uint64_t fingerprint_ = 0;
};

/// Parses the URDF subset (robot/link/joint with parent, child, origin, axis,
/// limit) and extracts the unique serial path from `base` to `tip`.
KinematicChain parse_chain(std::string_view urdf_text, std::string_view base, std::string_view tip);

KinematicChain load_chain(const std::filesystem::path& path, std::string_view base,
                          std::string_view tip);

/// Rotation matrix for URDF roll-pitch-yaw (Rz(yaw) * Ry(pitch) * Rx(roll)).
Eigen::Matrix3d rpy_to_matrix(const Eigen::Vector3d& rpy);

/// Tip pose in the base frame. The quaternion is unit and sign-canonical.
Pose forward_kinematics(const KinematicChain& chain, const JointVector& joints);

/// Row-wise forward_kinematics. Throws on an empty batch.
PoseBatch fk_batch(const KinematicChain& chain, const JointBatch& joints);

/// d(px, py, pz, qw, qx, qy, qz)/d(joints), 7 x dof, for the canonical
/// quaternion returned by forward_kinematics.
PoseJacobian pose_jacobian(const KinematicChain& chain, const JointVector& joints);

/// Pose and its Jacobian in one pass.
Pose forward_kinematics(const KinematicChain& chain, const JointVector& joints,
                        PoseJacobian& jacobian);

}  // namespace cycleik
