#pragma once

#include <vector>

#include "cycleik/types.hpp"

namespace cycleik {

/// Geodesic angle 2 acos(min(1, |<q1, q2>|)) in degrees; sign-invariant.
/// Throws ValueError when either input deviates from unit norm by more than 1e-3.
double rotation_error_deg(const Eigen::Quaterniond& q1, const Eigen::Quaterniond& q2);

/// Same metric on packed (w, x, y, z) rows, without the unit-norm check.
double rotation_error_deg_unchecked(const Eigen::Vector4d& q1, const Eigen::Vector4d& q2);

/// Per-row Euclidean position error (mm) and geodesic rotation error (deg).
struct PoseErrors {
  std::vector<double> position_mm;
  std::vector<double> rotation_deg;
};

PoseErrors pose_errors(const PoseBatch& reached, const PoseBatch& targets);

struct SummaryStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

/// Two-pass mean and standard deviation with compensated summation.
SummaryStats summarize(const std::vector<double>& values);

}  // namespace cycleik
