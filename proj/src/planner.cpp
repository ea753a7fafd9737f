#include "cycleik/planner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cycleik/metrics.hpp"
#include "cycleik/trainer.hpp"

namespace cycleik {

std::vector<double> bernstein_weights(int degree, double k) {
  if (degree < 0) throw ValueError("bernstein_weights: negative degree");
  std::vector<double> weights(static_cast<std::size_t>(degree) + 1);
  double binomial = 1.0;
  for (int i = 0; i <= degree; ++i) {
    weights[static_cast<std::size_t>(i)] = binomial * std::pow(1.0 - k, degree - i) * std::pow(k, i);
    binomial = binomial * (degree - i) / (i + 1);
  }
  return weights;
}

Eigen::Vector3d bezier_point(const ControlPolygon& polygon, double k) {
  if (polygon.points.size() < 2) throw ValueError("bezier_point: need at least two control points");
  if (!(k >= 0.0 && k <= 1.0)) throw ValueError("bezier_point: k must lie in [0, 1]");
  const int degree = static_cast<int>(polygon.points.size()) - 1;
  const std::vector<double> weights = bernstein_weights(degree, k);
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < weights.size(); ++i) point += weights[i] * polygon.points[i];
  return point;
}

std::vector<double> step_grid(int steps) {
  if (steps < 1) throw ValueError("step count must be >= 1");
  std::vector<double> k(static_cast<std::size_t>(steps) + 1);
  for (int n = 0; n <= steps; ++n) k[static_cast<std::size_t>(n)] = static_cast<double>(n) / steps;
  return k;
}

WaypointSamples sample_waypoints(const ControlPolygon& polygon, int steps) {
  WaypointSamples samples;
  samples.k = step_grid(steps);
  samples.positions.reserve(samples.k.size());
  for (double k : samples.k) samples.positions.push_back(bezier_point(polygon, k));
  return samples;
}

Eigen::Quaterniond slerp(const Eigen::Quaterniond& from, const Eigen::Quaterniond& to, double u) {
  Eigen::Vector4d a = from.coeffs();
  Eigen::Vector4d b = to.coeffs();
  if (a.dot(b) < 0.0) b = -b;
  const double angle = 2.0 * std::atan2((b - a).norm(), (b + a).norm());
  Eigen::Vector4d out;
  if (angle < 1e-12) {
    out = ((1.0 - u) * a + u * b).normalized();
  } else {
    const double s = std::sin(angle);
    out = (std::sin((1.0 - u) * angle) / s) * a + (std::sin(u * angle) / s) * b;
  }
  return Eigen::Quaterniond(out[3], out[0], out[1], out[2]);
}

std::vector<Eigen::Quaterniond> slerp_path(std::span<const Eigen::Quaterniond> keys, int steps) {
  if (keys.size() < 2) throw ValueError("slerp_path: need at least two key rotations");
  std::vector<Eigen::Quaterniond> aligned;
  for (const auto& key : keys) {
    const double norm = key.norm();
    if (!(norm > 1e-12) || !std::isfinite(norm)) throw ValueError("slerp_path: zero-norm key rotation");
    aligned.push_back(norm == 1.0 ? key : key.normalized());
  }
  for (std::size_t i = aligned.size() - 1; i-- > 0;) {
    double dot = aligned[i].coeffs().dot(aligned[i + 1].coeffs());
    if (dot < 0.0) {
      aligned[i].coeffs() *= -1.0;
      dot = -dot;
    }
    if (dot < 1e-9) {
      throw ValueError("slerp_path: key rotations " + std::to_string(i) + " and " +
                       std::to_string(i + 1) + " are a half turn apart; add an intermediate key");
    }
  }

  const int segments = static_cast<int>(aligned.size()) - 1;
  std::vector<Eigen::Quaterniond> path;
  for (double k : step_grid(steps)) {
    int segment = segments - 1;
    double u = 1.0;
    if (k < 1.0) {
      const double position = k * segments;
      segment = std::min(segments - 1, static_cast<int>(std::floor(position)));
      u = position - segment;
    }
    const auto& a = aligned[static_cast<std::size_t>(segment)];
    const auto& b = aligned[static_cast<std::size_t>(segment) + 1];
    path.push_back(slerp(a, b, u));
  }
  return path;
}

CartesianPlan plan_cartesian(const Pose& start, const Pose& target, const PlanShape& shape, int steps) {
  ControlPolygon polygon;
  polygon.points.push_back(start.position);
  for (const auto& p : shape.interior_points) {
    if (!p.allFinite()) throw ValueError("plan_cartesian: non-finite control point");
    polygon.points.push_back(p);
  }
  polygon.points.push_back(target.position);

  std::vector<Eigen::Quaterniond> keys;
  keys.push_back(start.orientation);
  keys.insert(keys.end(), shape.interior_rotations.begin(), shape.interior_rotations.end());
  keys.push_back(target.orientation);

  const WaypointSamples samples = sample_waypoints(polygon, steps);
  const std::vector<Eigen::Quaterniond> rotations = slerp_path(keys, steps);

  CartesianPlan plan;
  plan.k = samples.k;
  plan.poses.resize(static_cast<Eigen::Index>(plan.k.size()), kPoseWidth);
  for (std::size_t i = 0; i < plan.k.size(); ++i) {
    Pose pose{samples.positions[i], rotations[i]};
    plan.poses.row(static_cast<Eigen::Index>(i)) = pose.packed().transpose();
  }
  return plan;
}

bool Workspace::contains(const Eigen::Vector3d& p) const {
  return std::abs(p.x() - center.x()) <= 0.5 * depth && std::abs(p.y() - center.y()) <= 0.5 * width &&
         p.z() >= z_min && p.z() <= z_max;
}

GraspConfig grasp_preset(const std::string& name) {
  GraspConfig config;
  if (name == "nico") {
    config.workspace.center = Eigen::Vector2d(0.35, 0.0);
    config.workspace.depth = 0.10;
    config.workspace.width = 0.40;
    config.bin_position = Eigen::Vector3d(0.35, 0.30, 0.0);
  } else if (name == "nicol") {
    config.workspace.center = Eigen::Vector2d(0.55, 0.0);
    config.workspace.depth = 0.30;
    config.workspace.width = 0.80;
    config.bin_position = Eigen::Vector3d(0.55, 0.55, 0.0);
  } else {
    throw ValueError("unknown workspace preset '" + name + "'");
  }
  return config;
}

GraspPlan plan_grasp(const Pose& current, const Eigen::Vector3d& object_position,
                     const GraspConfig& config) {
  if (!config.workspace.contains(object_position)) {
    throw ValueError("object position is outside the grasp workspace");
  }
  const Eigen::Vector3d above_object = object_position + Eigen::Vector3d(0, 0, config.clearance);
  const Eigen::Vector3d rise(current.position.x(), current.position.y(),
                             std::max(current.position.z(), above_object.z()));

  GraspPlan plan;
  PlanShape reach;
  reach.interior_points = {rise, above_object};
  reach.interior_rotations = {config.top_grasp};
  plan.reach = plan_cartesian(current, Pose{object_position, config.top_grasp}, reach, config.steps);

  const Eigen::Vector3d lifted = object_position + Eigen::Vector3d(0, 0, config.lift);
  const Eigen::Vector3d drop = config.bin_position + Eigen::Vector3d(0, 0, config.drop_height);
  PlanShape deposit;
  deposit.interior_points = {lifted, Eigen::Vector3d(drop.x(), drop.y(), std::max(lifted.z(), drop.z()))};
  plan.deposit = plan_cartesian(Pose{object_position, config.top_grasp}, Pose{drop, config.top_grasp},
                                deposit, config.steps);
  return plan;
}

JointTrajectory to_joint_trajectory(const MlpModel& model, const KinematicChain& chain,
                                    const PoseBatch& plan) {
  check_model_chain(model, chain);
  if (plan.rows() == 0) throw DimensionError("to_joint_trajectory: empty plan");
  JointTrajectory out;
  out.joints = solve(model, plan);
  const PoseErrors errors = pose_errors(fk_batch(chain, out.joints), plan);
  out.position_residual_mm =
      Eigen::Map<const Eigen::VectorXd>(errors.position_mm.data(), plan.rows());
  out.rotation_residual_deg =
      Eigen::Map<const Eigen::VectorXd>(errors.rotation_deg.data(), plan.rows());
  for (Eigen::Index i = 1; i < out.joints.rows(); ++i) {
    out.max_joint_step =
        std::max(out.max_joint_step, (out.joints.row(i) - out.joints.row(i - 1)).cwiseAbs().maxCoeff());
  }
  return out;
}

TrajectoryPlan make_trajectory_plan(const MlpModel& model, const KinematicChain& chain,
                                    CartesianPlan cartesian, std::string name) {
  TrajectoryPlan plan;
  plan.name = std::move(name);
  const auto start = std::chrono::steady_clock::now();
  plan.trajectory = to_joint_trajectory(model, chain, cartesian.poses);
  plan.planning_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  plan.cartesian = std::move(cartesian);
  return plan;
}

void write_plan(std::ostream& out, std::span<const TrajectoryPlan> plans) {
  char buf[32];
  auto put = [&](double v, bool first) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    if (!first) out << ' ';
    out << buf;
  };
  for (const TrajectoryPlan& plan : plans) {
    const auto rows = static_cast<Eigen::Index>(plan.cartesian.k.size());
    if (plan.cartesian.poses.rows() != rows || plan.trajectory.joints.rows() != rows) {
      throw DimensionError("write_plan: k, pose and joint tables disagree");
    }
    if (!plan.name.empty()) out << "# phase " << plan.name << '\n';
    for (Eigen::Index i = 0; i < rows; ++i) {
      put(plan.cartesian.k[static_cast<std::size_t>(i)], true);
      for (int c = 0; c < kPoseWidth; ++c) put(plan.cartesian.poses(i, c), false);
      for (Eigen::Index j = 0; j < plan.trajectory.joints.cols(); ++j) put(plan.trajectory.joints(i, j), false);
      out << '\n';
    }
  }
}

void write_plan(const std::filesystem::path& path, std::span<const TrajectoryPlan> plans) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  write_plan(out, plans);
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

std::vector<TrajectoryPlan> read_plan(std::istream& in) {
  std::vector<TrajectoryPlan> plans;
  std::vector<std::vector<double>> rows;
  std::string name;
  bool open = false;

  auto flush = [&] {
    if (!open) return;
    TrajectoryPlan plan;
    plan.name = name;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index dof = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()) - 8;
    plan.cartesian.poses.resize(n, kPoseWidth);
    plan.trajectory.joints.resize(n, dof);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      plan.cartesian.k.push_back(row[0]);
      for (int c = 0; c < kPoseWidth; ++c) plan.cartesian.poses(i, c) = row[1 + c];
      for (Eigen::Index j = 0; j < dof; ++j) plan.trajectory.joints(i, j) = row[8 + j];
    }
    plans.push_back(std::move(plan));
    rows.clear();
  };

  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view kPhase = "# phase ";
      if (line.starts_with(kPhase)) {
        flush();
        name = line.substr(kPhase.size());
        open = true;
      }
      continue;
    }
    open = true;
    std::vector<double> values;
    const char* cursor = line.c_str();
    while (true) {
      while (*cursor == ' ' || *cursor == '\t' || *cursor == '\r') ++cursor;
      if (*cursor == '\0') break;
      char* end = nullptr;
      const double v = std::strtod(cursor, &end);
      if (end == cursor) throw FormatError("plan line " + std::to_string(line_number) + ": not a number");
      values.push_back(v);
      cursor = end;
    }
    if (values.size() < 8) {
      throw FormatError("plan line " + std::to_string(line_number) + ": expected at least 8 columns");
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw FormatError("plan line " + std::to_string(line_number) + ": column count changed");
    }
    rows.push_back(std::move(values));
  }
  flush();
  return plans;
}

std::vector<TrajectoryPlan> read_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open plan '" + path.string() + "'");
  return read_plan(in);
}

}  // namespace cycleik
