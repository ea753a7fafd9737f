#include "cycleik/chain.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace cycleik {
namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 1469598103934665603ull) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string describe(const Eigen::Vector3d& v) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", v.x(), v.y(), v.z());
  return buf;
}

void check_joints(const KinematicChain& chain, const JointVector& joints) {
  if (joints.size() != chain.dof()) {
    throw DimensionError("joint vector has " + std::to_string(joints.size()) +
                         " entries, chain dof is " + std::to_string(chain.dof()));
  }
  if (!joints.allFinite()) {
    throw ValueError("joint vector contains non-finite values");
  }
}

}  // namespace

std::string_view to_string(JointKind kind) {
  switch (kind) {
    case JointKind::kRevolute:
      return "revolute";
    case JointKind::kPrismatic:
      return "prismatic";
    case JointKind::kFixed:
      return "fixed";
  }
  return "unknown";
}

Eigen::Matrix3d rpy_to_matrix(const Eigen::Vector3d& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

KinematicChain::KinematicChain(std::string base_name, std::string tip_name,
                               std::vector<JointSpec> joints)
    : base_name_(std::move(base_name)), tip_name_(std::move(tip_name)), joints_(std::move(joints)) {
  std::ostringstream desc;
  desc << base_name_ << '\n' << tip_name_ << '\n';
  std::vector<double> lower;
  std::vector<double> upper;
  for (int i = 0; i < static_cast<int>(joints_.size()); ++i) {
    JointSpec& joint = joints_[i];
    if (joint.kind != JointKind::kFixed) {
      const double norm = joint.axis.norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw ValueError("joint '" + joint.name + "' has a zero or non-finite axis");
      }
      joint.axis /= norm;
      if (!(joint.limit_lower <= joint.limit_upper)) {
        throw ValueError("joint '" + joint.name + "' has lower limit above upper limit");
      }
      active_.push_back(i);
      lower.push_back(joint.limit_lower);
      upper.push_back(joint.limit_upper);
    }
    const Eigen::Matrix3d rotation = rpy_to_matrix(joint.origin_rpy);
    Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();
    origin.linear() = rotation;
    origin.translation() = joint.origin_translation;
    origins_.push_back(origin);
    origin_rotations_.push_back(Eigen::Quaterniond(rotation).normalized());

    char limits[64];
    std::snprintf(limits, sizeof(limits), "%.17g %.17g", joint.limit_lower, joint.limit_upper);
    desc << joint.name << ' ' << to_string(joint.kind) << ' ' << describe(joint.origin_translation)
         << ' ' << describe(joint.origin_rpy) << ' ' << describe(joint.axis) << ' ' << limits
         << '\n';
  }
  lower_ = Eigen::Map<Eigen::VectorXd>(lower.data(), static_cast<Eigen::Index>(lower.size()));
  upper_ = Eigen::Map<Eigen::VectorXd>(upper.data(), static_cast<Eigen::Index>(upper.size()));
  fingerprint_ = fnv1a(desc.str());
}

bool KinematicChain::within_limits(const JointVector& joints, double slack) const {
  if (joints.size() != dof()) return false;
  return ((joints.array() >= lower_.array() - slack) && (joints.array() <= upper_.array() + slack))
      .all();
}

namespace {

// Shared pass for FK with an optional Jacobian. Rotation is accumulated as a
// quaternion so the derivative of joint i is 0.5 * (0, axis_world) * q.
Pose fk_pass(const KinematicChain& chain, const JointVector& joints, PoseJacobian* jacobian) {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  const int dof = chain.dof();
  Eigen::Matrix3Xd axes(3, dof);
  Eigen::Matrix3Xd anchors(3, dof);
  std::vector<bool> revolute(dof);

  const auto& specs = chain.joints();
  int active = 0;
  for (int i = 0; i < static_cast<int>(specs.size()); ++i) {
    const JointSpec& joint = specs[i];
    position += rotation * joint.origin_translation;
    rotation = rotation * chain.origin_rotation(i);
    if (joint.kind == JointKind::kFixed) continue;

    const double value = joints[active];
    axes.col(active) = rotation * joint.axis;
    anchors.col(active) = position;
    if (joint.kind == JointKind::kRevolute) {
      revolute[active] = true;
      rotation = rotation * Eigen::Quaterniond(Eigen::AngleAxisd(value, joint.axis));
    } else {
      revolute[active] = false;
      position += axes.col(active) * value;
    }
    ++active;
  }

  Pose pose;
  pose.position = position;
  pose.orientation = canonical(rotation.normalized());

  if (jacobian != nullptr) {
    jacobian->setZero(kPoseWidth, dof);
    const Eigen::Quaterniond& q = pose.orientation;
    for (int j = 0; j < dof; ++j) {
      if (revolute[j]) {
        const Eigen::Vector3d a = axes.col(j);
        jacobian->block<3, 1>(0, j) = a.cross(position - anchors.col(j));
        const Eigen::Quaterniond dq = Eigen::Quaterniond(0.0, a.x(), a.y(), a.z()) * q;
        (*jacobian)(3, j) = 0.5 * dq.w();
        (*jacobian)(4, j) = 0.5 * dq.x();
        (*jacobian)(5, j) = 0.5 * dq.y();
        (*jacobian)(6, j) = 0.5 * dq.z();
      } else {
        jacobian->block<3, 1>(0, j) = axes.col(j);
      }
    }
  }
  return pose;
}

}  // namespace

Pose forward_kinematics(const KinematicChain& chain, const JointVector& joints) {
  check_joints(chain, joints);
  return fk_pass(chain, joints, nullptr);
}

Pose forward_kinematics(const KinematicChain& chain, const JointVector& joints,
                        PoseJacobian& jacobian) {
  check_joints(chain, joints);
  return fk_pass(chain, joints, &jacobian);
}

PoseBatch fk_batch(const KinematicChain& chain, const JointBatch& joints) {
  if (joints.rows() == 0) throw DimensionError("fk_batch: empty batch");
  if (joints.cols() != chain.dof()) {
    throw DimensionError("fk_batch: batch has " + std::to_string(joints.cols()) +
                         " columns, chain dof is " + std::to_string(chain.dof()));
  }
  PoseBatch poses(joints.rows(), kPoseWidth);
  JointVector row(chain.dof());
  for (Eigen::Index i = 0; i < joints.rows(); ++i) {
    row = joints.row(i).transpose();
    poses.row(i) = forward_kinematics(chain, row).packed().transpose();
  }
  return poses;
}

PoseJacobian pose_jacobian(const KinematicChain& chain, const JointVector& joints) {
  PoseJacobian jacobian;
  forward_kinematics(chain, joints, jacobian);
  return jacobian;
}

}  // namespace cycleik
