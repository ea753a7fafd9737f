#include "cycleik/losses.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace cycleik {
namespace {

void check_beta(double beta) {
  if (!(beta > 0.0)) throw ValueError("smooth_l1: beta must be positive");
}

template <typename Batch>
void check_shapes(const Batch& a, const Batch& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": batch shapes differ (" + std::to_string(a.rows()) +
                         " vs " + std::to_string(b.rows()) + " rows)");
  }
  if (a.rows() == 0) throw DimensionError(std::string(what) + ": empty batch");
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

template <typename Batch>
double mean_smooth_l1(const Batch& predicted, const Batch& target, double beta, Batch* grad) {
  const double n = static_cast<double>(predicted.rows());
  const double cols = static_cast<double>(predicted.cols());
  if (grad != nullptr) grad->resize(predicted.rows(), predicted.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < predicted.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < predicted.cols(); ++j) {
      row += smooth_l1(predicted(i, j), target(i, j), beta);
      if (grad != nullptr) {
        (*grad)(i, j) = smooth_l1_grad(predicted(i, j), target(i, j), beta) / (cols * n);
      }
    }
    total += row / cols;
  }
  return total / n;
}

template <typename Batch>
double mean_abs(const Batch& predicted, const Batch& target, Batch* grad) {
  const double n = static_cast<double>(predicted.rows());
  const double cols = static_cast<double>(predicted.cols());
  if (grad != nullptr) grad->resize(predicted.rows(), predicted.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < predicted.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < predicted.cols(); ++j) {
      const double d = predicted(i, j) - target(i, j);
      row += std::abs(d);
      if (grad != nullptr) (*grad)(i, j) = sign(d) / (cols * n);
    }
    total += row / cols;
  }
  return total / n;
}

struct Registry {
  Registry() {
    constraints["joint-centering"] = [](const JointBatch& joints, JointBatch* grad) {
      return joint_centering(joints, kCenteringBeta, grad);
    };
  }
  std::mutex mutex;
  std::map<std::string, SecondaryConstraint> constraints;
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

double smooth_l1(double a, double b, double beta) {
  check_beta(beta);
  const double d = std::abs(a - b);
  return d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
}

double smooth_l1_grad(double a, double b, double beta) {
  check_beta(beta);
  const double d = a - b;
  return std::abs(d) < beta ? d / beta : sign(d);
}

double positional_loss(const PositionBatch& predicted, const PositionBatch& target, double beta,
                       PositionBatch* grad) {
  check_shapes(predicted, target, "positional_loss");
  return mean_smooth_l1(predicted, target, beta, grad);
}

double smql(const QuaternionBatch& predicted, const QuaternionBatch& target, double beta,
            QuaternionBatch* grad) {
  check_shapes(predicted, target, "smql");
  check_beta(beta);
  const double n = static_cast<double>(predicted.rows());
  if (grad != nullptr) grad->resize(predicted.rows(), 4);
  double total = 0.0;
  for (Eigen::Index i = 0; i < predicted.rows(); ++i) {
    double plus = 0.0;
    double minus = 0.0;
    for (int j = 0; j < 4; ++j) {
      plus += smooth_l1(predicted(i, j), target(i, j), beta);
      minus += smooth_l1(predicted(i, j), -target(i, j), beta);
    }
    const bool take_plus = plus <= minus;
    total += take_plus ? plus : minus;
    if (grad != nullptr) {
      const double s = take_plus ? 1.0 : -1.0;
      for (int j = 0; j < 4; ++j) {
        (*grad)(i, j) = smooth_l1_grad(predicted(i, j), s * target(i, j), beta) / n;
      }
    }
  }
  return total / n;
}

double legacy_mae_position(const PositionBatch& predicted, const PositionBatch& target,
                           PositionBatch* grad) {
  check_shapes(predicted, target, "legacy_mae_position");
  return mean_abs(predicted, target, grad);
}

double legacy_mae_rotation(const QuaternionBatch& predicted, const QuaternionBatch& target,
                           QuaternionBatch* grad) {
  check_shapes(predicted, target, "legacy_mae_rotation");
  return mean_abs(predicted, target, grad);
}

double joint_centering(const JointBatch& normalized_joints, double beta, JointBatch* grad) {
  if (normalized_joints.size() == 0) {
    if (grad != nullptr) grad->setZero(normalized_joints.rows(), normalized_joints.cols());
    return 0.0;
  }
  const JointBatch zeros = JointBatch::Zero(normalized_joints.rows(), normalized_joints.cols());
  return mean_smooth_l1(normalized_joints, zeros, beta, grad);
}

void register_secondary_constraint(const std::string& name, SecondaryConstraint constraint) {
  Registry& r = registry();
  std::lock_guard lock(r.mutex);
  r.constraints[name] = std::move(constraint);
}

bool has_secondary_constraint(const std::string& name) {
  Registry& r = registry();
  std::lock_guard lock(r.mutex);
  return r.constraints.contains(name);
}

LossBreakdown total_loss(const PositionBatch& predicted_positions, const PositionBatch& positions,
                         const QuaternionBatch& predicted_orientations,
                         const QuaternionBatch& orientations, const JointBatch& normalized_joints,
                         const LossWeights& weights, LossVariant variant, LossGradients* grads) {
  if (predicted_positions.rows() != predicted_orientations.rows() ||
      (normalized_joints.size() > 0 && normalized_joints.rows() != predicted_positions.rows())) {
    throw DimensionError("total_loss: inconsistent batch sizes");
  }
  if (weights.w_pos < 0.0 || weights.w_rot < 0.0) throw ValueError("loss weights must be >= 0");

  // Resolve constraints before doing any work so unknown names fail fast.
  std::vector<SecondaryConstraint> constraints;
  {
    Registry& r = registry();
    std::lock_guard lock(r.mutex);
    for (const auto& [name, weight] : weights.secondary) {
      if (weight < 0.0) throw ValueError("secondary weight for '" + name + "' must be >= 0");
      auto it = r.constraints.find(name);
      if (it == r.constraints.end()) throw ValueError("unknown secondary constraint '" + name + "'");
      constraints.push_back(it->second);
    }
  }

  LossBreakdown out;
  PositionBatch* pos_grad = grads != nullptr ? &grads->position : nullptr;
  QuaternionBatch* rot_grad = grads != nullptr ? &grads->orientation : nullptr;
  if (variant == LossVariant::kSmooth) {
    out.pos_loss = positional_loss(predicted_positions, positions, kPositionBeta, pos_grad);
    out.rot_loss = smql(predicted_orientations, orientations, kRotationBeta, rot_grad);
  } else {
    out.pos_loss = legacy_mae_position(predicted_positions, positions, pos_grad);
    out.rot_loss = legacy_mae_rotation(predicted_orientations, orientations, rot_grad);
  }
  out.total = weights.w_pos * out.pos_loss + weights.w_rot * out.rot_loss;
  if (grads != nullptr) {
    grads->position *= weights.w_pos;
    grads->orientation *= weights.w_rot;
    grads->joints.setZero(normalized_joints.rows(), normalized_joints.cols());
  }

  JointBatch constraint_grad;
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    const auto& [name, weight] = weights.secondary[k];
    const double value = constraints[k](normalized_joints, grads != nullptr ? &constraint_grad : nullptr);
    out.secondary.emplace_back(name, value);
    out.total += weight * value;
    if (grads != nullptr) grads->joints += weight * constraint_grad;
  }
  return out;
}

}  // namespace cycleik
