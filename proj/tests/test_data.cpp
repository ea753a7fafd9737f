#include <doctest.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "cycleik/dataset.hpp"
#include "cycleik/log.hpp"
#include "support.hpp"

using namespace cycleik;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

struct QuietWarnings {
  std::vector<std::string> seen;
  WarningHandler previous = set_warning_handler([this](std::string_view m) { seen.emplace_back(m); });
  ~QuietWarnings() { set_warning_handler(previous); }
};

}  // namespace

TEST_CASE("generated datasets are deterministic and FK-consistent") {
  const auto chain = testing::panda();
  const Dataset a = generate_dataset(chain, 1000, 7);
  const Dataset b = generate_dataset(chain, 1000, 7);
  const Dataset c = generate_dataset(chain, 1000, 8);
  CHECK(a.poses == b.poses);
  CHECK(a.joints == b.joints);
  CHECK_FALSE(a.joints == c.joints);
  CHECK(a.size() == 1000);
  CHECK(a.dof() == 7);
  CHECK(a.chain_fingerprint == chain.fingerprint());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const JointVector q = a.joints.row(row).transpose().cast<double>();
    CHECK(chain.within_limits(q));
    const Pose pose = forward_kinematics(chain, q);
    worst = std::max(worst, (pose.packed().transpose() - a.poses.row(row).cast<double>()).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("sample filter and acceptance floor") {
  const auto chain = testing::planar2();
  GenerateOptions options;
  options.filter = [](const JointVector& q, const Pose&) { return q[0] > 0.0; };
  const Dataset half = generate_dataset(chain, 200, 3, options);
  CHECK(half.joints.col(0).minCoeff() > 0.0f);

  options.filter = [](const JointVector&, const Pose&) { return false; };
  options.rejection_window = 1000;
  CHECK_THROWS_AS(generate_dataset(chain, 10, 3, options), ValueError);
}

TEST_CASE("normalization round trip and out-of-bounds flagging") {
  const auto chain = testing::planar2();
  GenerateOptions options;
  options.filter = [](const JointVector& q, const Pose&) { return q[0] < 0.5; };
  const Dataset data = generate_dataset(chain, 2000, 5, options);
  const NormStats norm = compute_normalization(data, chain);
  CHECK(norm.joint_lower == chain.lower_limits());
  CHECK(norm.joint_upper == chain.upper_limits());

  std::vector<bool> flagged;
  const RowMatrix<float> x = norm.normalize_poses(data.pose_batch(), &flagged);
  CHECK(std::none_of(flagged.begin(), flagged.end(), [](bool f) { return f; }));
  CHECK(x.leftCols<3>().cwiseAbs().maxCoeff() <= 1.0f + 1e-6f);
  CHECK((norm.denormalize_poses(x) - data.pose_batch()).cwiseAbs().maxCoeff() < 1e-6);

  const JointBatch joints = data.joint_batch();
  const JointBatch t = norm.normalize_joints(joints);
  CHECK(t.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  CHECK((norm.denormalize_joints(t.cast<float>()) - joints).cwiseAbs().maxCoeff() < 1e-6);

  // A configuration the filter excluded lands outside the fitted bounds.
  JointVector excluded(2);
  excluded << 1.5, 0.0;
  PoseBatch outside(1, 7);
  outside.row(0) = forward_kinematics(chain, excluded).packed().transpose();
  const RowMatrix<float> y = norm.normalize_poses(outside, &flagged);
  REQUIRE(flagged.size() == 1);
  CHECK(flagged[0]);
  CHECK(y.leftCols<3>().cwiseAbs().maxCoeff() > 1.0f);
}

TEST_CASE("degenerate position axes are widened") {
  QuietWarnings quiet;
  const auto chain = testing::planar2();
  const Dataset one = generate_dataset(chain, 1, 2);
  const NormStats norm = compute_normalization(one, chain);
  CHECK((norm.position_max - norm.position_min).minCoeff() > 0.0);
  CHECK(!quiet.seen.empty());
  const RowMatrix<float> x = norm.normalize_poses(one.pose_batch());
  CHECK(x.allFinite());
  CHECK(x.leftCols<3>().cwiseAbs().maxCoeff() < 1e-3f);
}

TEST_CASE("dataset files round trip bit-exactly") {
  const auto chain = testing::ur5();
  const Dataset data = generate_dataset(chain, 321, 12);
  const auto path = testing::temp_path("roundtrip.cikd");
  write_dataset(data, path);
  const Dataset back = read_dataset(path, 6);
  CHECK(std::memcmp(back.poses.data(), data.poses.data(), sizeof(float) * data.poses.size()) == 0);
  CHECK(std::memcmp(back.joints.data(), data.joints.data(), sizeof(float) * data.joints.size()) == 0);
  CHECK(std::filesystem::file_size(path) == 4 + 4 + 4 + 8 + 321 * (7 + 6) * 4);
  const std::string bytes = slurp(path);
  CHECK(bytes.substr(0, 4) == "CIKD");

  write_dataset(back, testing::temp_path("roundtrip2.cikd"));
  CHECK(slurp(testing::temp_path("roundtrip2.cikd")) == bytes);
}

TEST_CASE("corrupt dataset files are rejected") {
  const Dataset data = generate_dataset(testing::panda(), 10, 1);
  const auto path = testing::temp_path("corrupt.cikd");
  write_dataset(data, path);
  const std::string good = slurp(path);
  const auto bad = testing::temp_path("bad.cikd");

  std::string bytes = good;
  bytes[0] = 'X';
  dump(bad, bytes);
  CHECK_THROWS_AS(read_dataset(bad), FormatError);

  bytes = good;
  bytes[4] = 2;
  dump(bad, bytes);
  CHECK_THROWS_AS(read_dataset(bad), FormatError);

  dump(bad, good.substr(0, good.size() - 3));
  CHECK_THROWS_AS(read_dataset(bad), FormatError);
  dump(bad, good.substr(0, 10));
  CHECK_THROWS_AS(read_dataset(bad), FormatError);
  dump(bad, good + "x");
  CHECK_THROWS_AS(read_dataset(bad), FormatError);

  CHECK_THROWS_AS(read_dataset(path, 6), DimensionError);
  CHECK_THROWS_AS(read_dataset(testing::temp_path("missing.cikd")), FormatError);
}
