#include "cycleik/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cycleik {
namespace {

// Neumaier summation.
class Accumulator {
 public:
  void add(double x) {
    const double t = sum_ + x;
    compensation_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace

double rotation_error_deg_unchecked(const Eigen::Vector4d& q1, const Eigen::Vector4d& q2) {
  const double dot = std::min(1.0, std::abs(q1.dot(q2)));
  return 2.0 * std::acos(dot) * 180.0 / std::numbers::pi;
}

double rotation_error_deg(const Eigen::Quaterniond& q1, const Eigen::Quaterniond& q2) {
  if (std::abs(q1.norm() - 1.0) > 1e-3 || std::abs(q2.norm() - 1.0) > 1e-3) {
    throw ValueError("rotation_error_deg: quaternions must be unit norm");
  }
  return rotation_error_deg_unchecked(q1.coeffs(), q2.coeffs());
}

PoseErrors pose_errors(const PoseBatch& reached, const PoseBatch& targets) {
  if (reached.rows() != targets.rows()) throw DimensionError("pose_errors: batch sizes differ");
  PoseErrors errors;
  errors.position_mm.reserve(static_cast<std::size_t>(reached.rows()));
  errors.rotation_deg.reserve(static_cast<std::size_t>(reached.rows()));
  for (Eigen::Index i = 0; i < reached.rows(); ++i) {
    errors.position_mm.push_back(
        1000.0 * (reached.row(i).head<3>() - targets.row(i).head<3>()).norm());
    errors.rotation_deg.push_back(rotation_error_deg_unchecked(
        reached.row(i).tail<4>().transpose(), targets.row(i).tail<4>().transpose()));
  }
  return errors;
}

SummaryStats summarize(const std::vector<double>& values) {
  SummaryStats stats;
  if (values.empty()) return stats;
  const double n = static_cast<double>(values.size());
  Accumulator sum;
  for (double v : values) sum.add(v);
  stats.mean = sum.value() / n;
  Accumulator squares;
  for (double v : values) squares.add((v - stats.mean) * (v - stats.mean));
  stats.stddev = std::sqrt(squares.value() / n);
  return stats;
}

}  // namespace cycleik
