#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "cycleik/planner.hpp"
#include "cycleik/random.hpp"
#include "cycleik/trainer.hpp"
#include "support.hpp"

using namespace cycleik;

namespace {

Eigen::Vector3d de_casteljau(std::vector<Eigen::Vector3d> points, double k) {
  for (std::size_t level = points.size() - 1; level > 0; --level) {
    for (std::size_t i = 0; i < level; ++i) points[i] = (1.0 - k) * points[i] + k * points[i + 1];
  }
  return points.front();
}

Eigen::Quaterniond yaw(double angle) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()));
}

double angle_between(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  return 2.0 * std::acos(std::min(1.0, std::abs(a.coeffs().dot(b.coeffs()))));
}

Eigen::Quaterniond random_rotation(Rng& rng) {
  Eigen::Vector4d v;
  do {
    v = Eigen::Vector4d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  } while (v.norm() > 1.0 || v.norm() < 1e-3);
  v.normalize();
  return Eigen::Quaterniond(v[0], v[1], v[2], v[3]);
}

}  // namespace

TEST_CASE("bezier evaluation") {
  ControlPolygon line{{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(2, 4, -2)}};
  CHECK((bezier_point(line, 0.5) - Eigen::Vector3d(1, 2, -1)).norm() < 1e-15);

  ControlPolygon cubic{{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(1, 0, 1),
                        Eigen::Vector3d(1, 0, 0)}};
  CHECK((bezier_point(cubic, 0.5) - Eigen::Vector3d(0.5, 0.0, 0.75)).norm() < 1e-12);
  CHECK(bezier_point(cubic, 0.0) == cubic.points.front());
  CHECK(bezier_point(cubic, 1.0) == cubic.points.back());

  CHECK_THROWS_AS(bezier_point(ControlPolygon{{Eigen::Vector3d::Zero()}}, 0.5), ValueError);
  CHECK_THROWS_AS(bezier_point(cubic, 1.5), ValueError);
  CHECK_THROWS_AS(step_grid(0), ValueError);
}

TEST_CASE("bernstein weights form a partition of unity and match de Casteljau") {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int degree = 1 + static_cast<int>(rng.uniform(0.0, 8.0));
    const double k = rng.uniform(0.0, 1.0);
    const std::vector<double> w = bernstein_weights(degree, k);
    double sum = 0.0;
    for (double v : w) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    ControlPolygon polygon;
    for (int i = 0; i <= degree; ++i) {
      polygon.points.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    }
    const Eigen::Vector3d p = bezier_point(polygon, k);
    CHECK((p - de_casteljau(polygon.points, k)).norm() < 1e-12);
    Eigen::Vector3d lo = polygon.points.front(), hi = polygon.points.front();
    for (const auto& c : polygon.points) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
    CHECK((p.array() >= lo.array() - 1e-12).all());
    CHECK((p.array() <= hi.array() + 1e-12).all());
  }
}

TEST_CASE("waypoint counts") {
  ControlPolygon line{{Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitX()}};
  CHECK(sample_waypoints(line, 1).positions.size() == 2);
  const WaypointSamples samples = sample_waypoints(line, kDefaultPlanSteps);
  REQUIRE(samples.positions.size() == 50);
  CHECK(samples.k.front() == 0.0);
  CHECK(samples.k.back() == 1.0);
  CHECK(samples.k[10] == doctest::Approx(10.0 / 49.0));
}

TEST_CASE("slerp") {
  const Eigen::Quaterniond mid = slerp(Eigen::Quaterniond::Identity(), yaw(std::numbers::pi / 2), 0.5);
  CHECK(angle_between(mid, yaw(std::numbers::pi / 4)) < 1e-12);

  Eigen::Quaterniond flipped = yaw(std::numbers::pi / 2);
  flipped.coeffs() *= -1.0;
  CHECK(angle_between(slerp(Eigen::Quaterniond::Identity(), flipped, 0.5), yaw(std::numbers::pi / 4)) < 1e-12);

  const std::vector<Eigen::Quaterniond> keys{Eigen::Quaterniond::Identity(), yaw(2.0 * std::numbers::pi / 3)};
  const auto path = slerp_path(keys, 12);
  REQUIRE(path.size() == 13);
  for (std::size_t i = 1; i < path.size(); ++i) {
    CHECK(angle_between(path[i - 1], path[i]) == doctest::Approx(2.0 * std::numbers::pi / 3 / 12).epsilon(1e-9));
  }

  const std::vector<Eigen::Quaterniond> same{yaw(0.3), yaw(0.3)};
  for (const auto& q : slerp_path(same, 5)) CHECK(angle_between(q, yaw(0.3)) < 1e-12);

  const std::vector<Eigen::Quaterniond> half_turn{Eigen::Quaterniond::Identity(), yaw(std::numbers::pi)};
  CHECK_THROWS_AS(slerp_path(half_turn, 10), ValueError);
  const std::vector<Eigen::Quaterniond> zero{Eigen::Quaterniond::Identity(), Eigen::Quaterniond(0, 0, 0, 0)};
  CHECK_THROWS_AS(slerp_path(zero, 10), ValueError);
}

TEST_CASE("cartesian plans hit both endpoints") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    Pose start{Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)), random_rotation(rng)};
    Pose target{Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)), random_rotation(rng)};
    PlanShape shape;
    shape.interior_points.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    shape.interior_rotations.push_back(random_rotation(rng));
    CartesianPlan plan;
    try {
      plan = plan_cartesian(start, target, shape);
    } catch (const ValueError&) {
      continue;  // half-turn key pair
    }
    REQUIRE(plan.poses.rows() == 50);
    const Pose first = Pose::from_packed(plan.poses.row(0).transpose());
    const Pose last = Pose::from_packed(plan.poses.row(49).transpose());
    CHECK((first.position - start.position).norm() < 1e-9);
    CHECK((last.position - target.position).norm() < 1e-9);
    CHECK(angle_between(first.orientation, start.orientation) < 1e-6);
    CHECK(angle_between(last.orientation, target.orientation) < 1e-6);
    for (Eigen::Index i = 0; i < plan.poses.rows(); ++i) {
      CHECK(plan.poses.row(i).tail<4>().norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("grasp plans end on the object from above") {
  for (const std::string name : {"nico", "nicol"}) {
    const GraspConfig config = grasp_preset(name);
    Rng rng(name == "nico" ? 1 : 2);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Vector3d object(
          config.workspace.center.x() + rng.uniform(-0.5, 0.5) * config.workspace.depth,
          config.workspace.center.y() + rng.uniform(-0.5, 0.5) * config.workspace.width, 0.0);
      Pose current{Eigen::Vector3d(rng.uniform(0.2, 0.6), rng.uniform(-0.3, 0.3), rng.uniform(0.0, 0.4)),
                   random_rotation(rng)};
      GraspPlan plan;
      try {
        plan = plan_grasp(current, object, config);
      } catch (const ValueError&) {
        continue;
      }
      const auto& reach = plan.reach.poses;
      const Pose last = Pose::from_packed(reach.row(reach.rows() - 1).transpose());
      CHECK((last.position - object).norm() < 1e-9);
      CHECK(angle_between(last.orientation, config.top_grasp) < 1e-6);
      const Eigen::Index third = 2 * (reach.rows() - 1) / 3 + 1;
      for (Eigen::Index i = third; i < reach.rows(); ++i) CHECK(reach(i, 2) <= reach(i - 1, 2) + 1e-12);
      CHECK((plan.deposit.poses.row(0) - reach.row(reach.rows() - 1)).norm() < 1e-9);
    }
  }
  CHECK(grasp_preset("nico").workspace.width == 0.40);
  CHECK(grasp_preset("nico").workspace.depth == 0.10);
  CHECK(grasp_preset("nicol").workspace.width == 0.80);
  CHECK(grasp_preset("nicol").workspace.depth == 0.30);
  CHECK_THROWS_AS(grasp_preset("atlas"), ValueError);
  CHECK_THROWS_AS(plan_grasp(Pose{}, Eigen::Vector3d(5, 5, 0), grasp_preset("nico")), ValueError);
}

TEST_CASE("straight radial line through a trained model") {
  const auto chain = testing::polar2();
  const Dataset train_set = generate_dataset(chain, 10000, 1);
  const Dataset val_set = generate_dataset(chain, 1000, 2);
  TrainingConfig config = preset("desk");
  config.hidden_sizes = {64, 64, 64, 64};
  config.learning_rate = 1e-2;
  config.epochs = 10;
  config.seed = 3;
  const TrainResult result = train(config, chain, train_set, val_set);
  const double val_mm = result.history.validation.back().position_mm;

  const double phi = 0.4;
  const Pose start{Eigen::Vector3d(0.4 * std::cos(phi), 0.4 * std::sin(phi), 0.0), yaw(phi)};
  const Pose target{Eigen::Vector3d(0.9 * std::cos(phi), 0.9 * std::sin(phi), 0.0), yaw(phi)};
  const TrajectoryPlan plan = make_trajectory_plan(result.model, chain, plan_cartesian(start, target));
  const auto& residual = plan.trajectory.position_residual_mm;
  CHECK(residual.size() == 50);
  CHECK(residual.mean() < val_mm);
  CHECK(residual.maxCoeff() < 5.0 * val_mm);
  CHECK(plan.trajectory.max_joint_step < 0.05);

  PoseBatch one = plan.cartesian.poses.topRows(1);
  const JointTrajectory single = to_joint_trajectory(result.model, chain, one);
  CHECK(single.joints == solve(result.model, one));
  CHECK(single.joints.row(0) == plan.trajectory.joints.row(0));
  CHECK_THROWS_AS(to_joint_trajectory(result.model, testing::ur5(), one), DimensionError);
}

TEST_CASE("plan export round trip") {
  TrajectoryPlan a;
  a.name = "reach";
  a.cartesian = plan_cartesian(Pose{Eigen::Vector3d(0.1, 0.2, 0.3), yaw(0.1)},
                               Pose{Eigen::Vector3d(0.4, 0.0, 0.1), yaw(-0.2)}, {}, 4);
  a.trajectory.joints = JointBatch::Constant(5, 3, 0.125);
  TrajectoryPlan b = a;
  b.name = "deposit";
  b.trajectory.joints.array() += 0.5;
  const std::vector<TrajectoryPlan> plans{a, b};
  std::stringstream buffer;
  write_plan(buffer, plans);
  const auto back = read_plan(buffer);
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "reach");
  CHECK(back[1].name == "deposit");
  CHECK((back[1].cartesian.poses - b.cartesian.poses).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(back[1].trajectory.joints == b.trajectory.joints);
  CHECK(back[0].cartesian.k == a.cartesian.k);

  std::stringstream bad("0 1 2 3\n");
  CHECK_THROWS_AS(read_plan(bad), FormatError);
  std::stringstream ragged("0 1 2 3 1 0 0 0 5\n0 1 2 3 1 0 0 0\n");
  CHECK_THROWS_AS(read_plan(ragged), FormatError);
  std::stringstream text("0 1 2 x 1 0 0 0\n");
  CHECK_THROWS_AS(read_plan(text), FormatError);
  CHECK_THROWS_AS(read_plan(std::filesystem::path("/nonexistent/plan.txt")), FormatError);
  TrajectoryPlan broken = a;
  broken.trajectory.joints.resize(2, 3);
  std::stringstream sink;
  CHECK_THROWS_AS(write_plan(sink, std::vector<TrajectoryPlan>{broken}), DimensionError);
}
