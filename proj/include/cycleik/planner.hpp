#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cycleik/chain.hpp"
#include "cycleik/mlp.hpp"

namespace cycleik {

inline constexpr int kDefaultPlanSteps = 49;  // 50 waypoints

/// Bezier control points c_0 ... c_n (n >= 1), in metres.
struct ControlPolygon {
  std::vector<Eigen::Vector3d> points;
};

/// Bernstein weights of degree `degree` at k.
std::vector<double> bernstein_weights(int degree, double k);

/// Bernstein evaluation of degree |points| - 1; B(0) = c_0, B(1) = c_n.
Eigen::Vector3d bezier_point(const ControlPolygon& polygon, double k);

/// k_n = n / steps for n = 0 ... steps.
std::vector<double> step_grid(int steps);

struct WaypointSamples {
  std::vector<Eigen::Vector3d> positions;
  std::vector<double> k;
};

/// steps + 1 points on the curve, endpoints included.
WaypointSamples sample_waypoints(const ControlPolygon& polygon, int steps);

/// Shortest-arc spherical interpolation between two unit quaternions.
Eigen::Quaterniond slerp(const Eigen::Quaterniond& from, const Eigen::Quaterniond& to, double u);

/**
 * Piecewise Slerp through the key rotations, keys spaced evenly in k. Signs
 * are aligned backwards from the last key so the path ends exactly on it.
 * Throws ValueError for zero-norm keys and for neighbouring keys a half turn
 * apart (the arc is ambiguous; add an intermediate key).
 */
std::vector<Eigen::Quaterniond> slerp_path(std::span<const Eigen::Quaterniond> keys, int steps);

/// Interior shape of a Cartesian plan: Bezier control points between the
/// endpoints and key rotations between the endpoint orientations.
struct PlanShape {
  std::vector<Eigen::Vector3d> interior_points;
  std::vector<Eigen::Quaterniond> interior_rotations;
};

struct CartesianPlan {
  std::vector<double> k;
  PoseBatch poses;
};

CartesianPlan plan_cartesian(const Pose& start, const Pose& target, const PlanShape& shape = {},
                             int steps = kDefaultPlanSteps);

/// Rectangular table area (x depth by y width) with a height band.
struct Workspace {
  Eigen::Vector2d center = Eigen::Vector2d(0.4, 0.0);
  double depth = 0.10;  // along x
  double width = 0.40;  // along y
  double z_min = -0.05;
  double z_max = 0.30;

  bool contains(const Eigen::Vector3d& p) const;
};

struct GraspConfig {
  Workspace workspace;
  Eigen::Quaterniond top_grasp = Eigen::Quaterniond(0.0, 1.0, 0.0, 0.0);  // gripper pointing down
  double clearance = 0.15;  // m above the object, at 2/3 of the reach polygon
  double lift = 0.15;       // m lifted straight up before moving to the bin
  Eigen::Vector3d bin_position = Eigen::Vector3d(0.4, 0.35, 0.0);
  double drop_height = 0.10;  // deposit ends this far above the bin
  int steps = kDefaultPlanSteps;
};

/// Workspace presets: "nico" (0.40 m x 0.10 m) and "nicol" (0.80 m x 0.30 m).
GraspConfig grasp_preset(const std::string& name);

struct GraspPlan {
  CartesianPlan reach;
  CartesianPlan deposit;
};

/// Reach: current -> clearance point above the object -> object, ending in the
/// top-grasp orientation. Deposit: object -> lift -> above the bin.
GraspPlan plan_grasp(const Pose& current, const Eigen::Vector3d& object_position,
                     const GraspConfig& config = {});

struct JointTrajectory {
  JointBatch joints;
  Eigen::VectorXd position_residual_mm;
  Eigen::VectorXd rotation_residual_deg;
  double max_joint_step = 0.0;  // largest |delta| between adjacent waypoints
};

/// One batched network call for every waypoint, residuals from fk_batch.
JointTrajectory to_joint_trajectory(const MlpModel& model, const KinematicChain& chain,
                                    const PoseBatch& plan);

struct TrajectoryPlan {
  std::string name;
  CartesianPlan cartesian;
  JointTrajectory trajectory;
  double planning_ms = 0.0;
};

/// Times the joint conversion of a Cartesian plan.
TrajectoryPlan make_trajectory_plan(const MlpModel& model, const KinematicChain& chain,
                                    CartesianPlan cartesian, std::string name = {});

/// Rows of `k px py pz qw qx qy qz j1 ... jdof` with 9 significant digits.
/// Each plan is preceded by a "# phase <name>" line when it has a name.
void write_plan(std::ostream& out, std::span<const TrajectoryPlan> plans);
void write_plan(const std::filesystem::path& path, std::span<const TrajectoryPlan> plans);

/// Reads a plan export back (k, poses, joints; residuals are not stored).
std::vector<TrajectoryPlan> read_plan(std::istream& in);
std::vector<TrajectoryPlan> read_plan(const std::filesystem::path& path);

}  // namespace cycleik
