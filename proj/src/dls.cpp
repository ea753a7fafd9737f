#include "cycleik/dls.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/Cholesky>

#include "cycleik/random.hpp"

namespace cycleik {
namespace {

using Clock = std::chrono::steady_clock;

struct Residual {
  Eigen::Matrix<double, 6, 1> error;
  double position = 0.0;
  double rotation = 0.0;
  double norm = 0.0;
};

Residual residual_of(const Pose& target, const Pose& current) {
  Residual r;
  r.error.head<3>() = target.position - current.position;
  r.error.tail<3>() = rotation_error_vector(target.orientation, current.orientation);
  r.position = r.error.head<3>().norm();
  r.rotation = r.error.tail<3>().norm();
  r.norm = r.error.norm();
  return r;
}

JointVector clamp(const KinematicChain& chain, const JointVector& joints) {
  return joints.cwiseMax(chain.lower_limits()).cwiseMin(chain.upper_limits());
}

// DLS step with joints that sit on a limit and would be pushed past it removed
// from the Jacobian, repeated until no further joint gets locked.
JointVector damped_step(const KinematicChain& chain, const JointVector& theta,
                        Eigen::Matrix<double, 6, Eigen::Dynamic> j6, const Eigen::Matrix<double, 6, 1>& error,
                        double lambda2) {
  const Eigen::Index dof = theta.size();
  std::vector<bool> locked(static_cast<std::size_t>(dof), false);
  JointVector step(dof);
  for (;;) {
    const Eigen::Matrix<double, 6, 6> system =
        j6 * j6.transpose() + lambda2 * Eigen::Matrix<double, 6, 6>::Identity();
    step = j6.transpose() * system.ldlt().solve(error);
    bool changed = false;
    for (Eigen::Index c = 0; c < dof; ++c) {
      if (locked[static_cast<std::size_t>(c)]) continue;
      const bool at_lower = theta[c] <= chain.lower_limits()[c] && step[c] < 0.0;
      const bool at_upper = theta[c] >= chain.upper_limits()[c] && step[c] > 0.0;
      if (at_lower || at_upper) {
        locked[static_cast<std::size_t>(c)] = true;
        j6.col(c).setZero();
        changed = true;
      }
    }
    if (!changed) return step;
  }
}

}  // namespace

Eigen::Vector3d rotation_error_vector(const Eigen::Quaterniond& target, const Eigen::Quaterniond& current) {
  Eigen::Quaterniond delta = target * current.conjugate();
  if (delta.w() < 0.0) delta.coeffs() *= -1.0;
  const Eigen::Vector3d v = delta.vec();
  const double s = v.norm();
  if (s < 1e-12) return 2.0 * v;
  return (2.0 * std::atan2(s, delta.w()) / s) * v;
}

Eigen::Matrix<double, 6, Eigen::Dynamic> geometric_jacobian(const PoseJacobian& pose_jacobian,
                                                            const Eigen::Quaterniond& orientation) {
  const Eigen::Index dof = pose_jacobian.cols();
  Eigen::Matrix<double, 6, Eigen::Dynamic> j(6, dof);
  j.topRows<3>() = pose_jacobian.topRows<3>();
  const Eigen::Quaterniond inverse = orientation.conjugate();
  for (Eigen::Index c = 0; c < dof; ++c) {
    // omega = 2 dq * q^-1 (vector part).
    const Eigen::Quaterniond dq(pose_jacobian(3, c), pose_jacobian(4, c), pose_jacobian(5, c),
                                pose_jacobian(6, c));
    j.block<3, 1>(3, c) = 2.0 * (dq * inverse).vec();
  }
  return j;
}

DlsResult solve_dls(const KinematicChain& chain, const Pose& target, const JointVector& seed_joints,
                    const DlsParams& params, std::uint64_t rng_seed) {
  if (!(params.damping > 0.0)) throw ValueError("solve_dls: damping must be positive");
  if (!(params.position_tolerance > 0.0) || !(params.rotation_tolerance > 0.0)) {
    throw ValueError("solve_dls: tolerances must be positive");
  }
  if (std::abs(target.orientation.norm() - 1.0) > 1e-6) {
    throw ValueError("solve_dls: target quaternion must be unit norm");
  }
  if (seed_joints.size() != chain.dof()) throw DimensionError("solve_dls: seed has wrong dof");
  if (!chain.within_limits(seed_joints)) throw ValueError("solve_dls: seed outside joint limits");

  const auto start = Clock::now();
  auto out_of_time = [&] {
    if (!params.time_budget_ms) return false;
    const std::chrono::duration<double, std::milli> elapsed = Clock::now() - start;
    return elapsed.count() >= *params.time_budget_ms;
  };

  Rng rng(rng_seed);
  const double lambda2 = params.damping * params.damping;
  DlsResult best;
  best.joints = seed_joints;
  double best_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  PoseJacobian jacobian;

  for (int attempt = 0; attempt <= params.restarts; ++attempt) {
    JointVector theta(chain.dof());
    if (attempt == 0) {
      theta = seed_joints;
    } else {
      for (int j = 0; j < chain.dof(); ++j) {
        theta[j] = rng.uniform(chain.lower_limits()[j], chain.upper_limits()[j]);
      }
    }
    best.attempts = attempt + 1;
    Pose pose = forward_kinematics(chain, theta, jacobian);
    Residual r = residual_of(target, pose);

    for (int it = 0;; ++it) {
      if (r.norm < best_norm) {
        best_norm = r.norm;
        best.joints = theta;
        best.position_residual = r.position;
        best.rotation_residual = r.rotation;
      }
      if (r.position < params.position_tolerance && r.rotation < params.rotation_tolerance) {
        best.success = true;
        best.joints = theta;
        best.position_residual = r.position;
        best.rotation_residual = r.rotation;
        best.iterations = iterations;
        return best;
      }
      if (it >= params.max_iterations || out_of_time()) break;

      JointVector step =
          damped_step(chain, theta, geometric_jacobian(jacobian, pose.orientation), r.error, lambda2);

      bool accepted = false;
      for (int halving = 0; halving <= 8; ++halving) {
        const JointVector candidate = clamp(chain, theta + step);
        PoseJacobian candidate_jacobian;
        const Pose candidate_pose = forward_kinematics(chain, candidate, candidate_jacobian);
        const Residual candidate_residual = residual_of(target, candidate_pose);
        if (candidate_residual.norm < r.norm) {
          theta = candidate;
          pose = candidate_pose;
          jacobian = std::move(candidate_jacobian);
          r = candidate_residual;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;  // stalled; restart
      ++iterations;
    }
    if (out_of_time()) break;
  }
  best.iterations = iterations;
  return best;
}

}  // namespace cycleik
