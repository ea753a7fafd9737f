#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cycleik/types.hpp"

namespace cycleik {

inline constexpr double kPositionBeta = 0.001;  // m; errors below 1 mm are smoothed
inline constexpr double kRotationBeta = 0.01;   // quaternion units, about 1 degree
inline constexpr double kCenteringBeta = 0.01;

/// 0.5 (a - b)^2 / beta when |a - b| < beta, |a - b| - beta / 2 otherwise.
double smooth_l1(double a, double b, double beta);

/// d smooth_l1 / d a.
double smooth_l1_grad(double a, double b, double beta);

// Every batch loss below returns the scalar value and, when `grad` is
// non-null, writes d(loss)/d(first argument) into it.

/// Batch mean of the per-row mean over x, y, z of smooth_l1.
double positional_loss(const PositionBatch& predicted, const PositionBatch& target,
                       double beta = kPositionBeta, PositionBatch* grad = nullptr);

/// Smooth minimum quaternion loss: per row, the smaller of the summed
/// smooth_l1 distances to +q and -q (ties take +q), averaged over the batch.
double smql(const QuaternionBatch& predicted, const QuaternionBatch& target,
            double beta = kRotationBeta, QuaternionBatch* grad = nullptr);

/// Plain mean absolute error over positions; the legacy positional loss.
double legacy_mae_position(const PositionBatch& predicted, const PositionBatch& target,
                           PositionBatch* grad = nullptr);

/// Plain mean absolute error over quaternion components, with no sign handling.
double legacy_mae_rotation(const QuaternionBatch& predicted, const QuaternionBatch& target,
                           QuaternionBatch* grad = nullptr);

/// Built-in secondary constraint: mean smooth_l1(t, 0) over normalized joints.
double joint_centering(const JointBatch& normalized_joints, double beta = kCenteringBeta,
                       JointBatch* grad = nullptr);

/// A secondary constraint over normalized joints: value, and gradient when requested.
using SecondaryConstraint = std::function<double(const JointBatch&, JointBatch*)>;

/// Adds a named constraint to the registry. "joint-centering" is pre-registered.
void register_secondary_constraint(const std::string& name, SecondaryConstraint constraint);
bool has_secondary_constraint(const std::string& name);

struct LossWeights {
  double w_pos = 1.0;
  double w_rot = 1.0;
  std::vector<std::pair<std::string, double>> secondary;
};

enum class LossVariant { kSmooth, kLegacy };

struct LossBreakdown {
  double pos_loss = 0.0;
  double rot_loss = 0.0;
  std::vector<std::pair<std::string, double>> secondary;
  double total = 0.0;
};

struct LossGradients {
  PositionBatch position;
  QuaternionBatch orientation;
  JointBatch joints;  // with respect to normalized joints
};

/// w_pos * pos + w_rot * rot + sum_k w_k * L_k. The smooth variant uses
/// positional_loss + smql, the legacy variant the two MAE losses.
LossBreakdown total_loss(const PositionBatch& predicted_positions, const PositionBatch& positions,
                         const QuaternionBatch& predicted_orientations,
                         const QuaternionBatch& orientations, const JointBatch& normalized_joints,
                         const LossWeights& weights, LossVariant variant = LossVariant::kSmooth,
                         LossGradients* grads = nullptr);

}  // namespace cycleik
