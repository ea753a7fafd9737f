#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace cycleik {

// Column layout of a pose row: px py pz qw qx qy qz.
inline constexpr int kPoseWidth = 7;

using JointVector = Eigen::VectorXd;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using JointBatch = RowMatrix<double>;
using PoseBatch = Eigen::Matrix<double, Eigen::Dynamic, kPoseWidth, Eigen::RowMajor>;
using PositionBatch = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using QuaternionBatch = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;  // w x y z

/// End-effector pose in the chain base frame.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  /// Packs into a 7-vector (px, py, pz, qw, qx, qy, qz).
  Eigen::Matrix<double, kPoseWidth, 1> packed() const {
    Eigen::Matrix<double, kPoseWidth, 1> row;
    row << position, orientation.w(), orientation.x(), orientation.y(), orientation.z();
    return row;
  }

  template <typename Derived>
  static Pose from_packed(const Eigen::MatrixBase<Derived>& row) {
    Pose pose;
    pose.position = Eigen::Vector3d(row(0), row(1), row(2));
    pose.orientation = Eigen::Quaterniond(row(3), row(4), row(5), row(6));
    return pose;
  }
};

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument shapes disagree (batch widths, dof, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument value outside its domain (non-finite, out of range, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Robot description could not be turned into a serial chain.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Binary or text file failed validation.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Returns the sign-canonical representative: w > 0, or w == 0 with the first
/// nonzero of (x, y, z) positive.
inline Eigen::Quaterniond canonical(const Eigen::Quaterniond& q) {
  const double c[4] = {q.w(), q.x(), q.y(), q.z()};
  for (double v : c) {
    if (v > 0.0) return q;
    if (v < 0.0) return Eigen::Quaterniond(-q.w(), -q.x(), -q.y(), -q.z());
  }
  return q;
}

}  // namespace cycleik
