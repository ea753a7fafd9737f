#include "cycleik/dataset.hpp"

#include <array>
#include <fstream>

#include "binary_io.hpp"
#include "cycleik/random.hpp"

namespace cycleik {
namespace {

constexpr std::array<char, 4> kMagic = {'C', 'I', 'K', 'D'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

Dataset generate_dataset(const KinematicChain& chain, std::size_t count, std::uint64_t seed,
                         const GenerateOptions& options) {
  if (count < 1) throw ValueError("generate_dataset: count must be >= 1");
  const int dof = chain.dof();
  if (dof < 1) throw ValueError("generate_dataset: chain has no movable joints");

  Dataset data;
  data.poses.resize(static_cast<Eigen::Index>(count), kPoseWidth);
  data.joints.resize(static_cast<Eigen::Index>(count), dof);
  data.chain_fingerprint = chain.fingerprint();

  Rng rng(seed);
  const Eigen::VectorXd& lower = chain.lower_limits();
  const Eigen::VectorXd& upper = chain.upper_limits();
  JointVector joints(dof);
  std::uint64_t window_proposals = 0;
  std::uint64_t window_accepted = 0;
  std::size_t filled = 0;
  while (filled < count) {
    for (int j = 0; j < dof; ++j) {
      // Round through float first so the stored joints reproduce the stored pose.
      const float sample = static_cast<float>(rng.uniform(lower[j], upper[j]));
      joints[j] = std::clamp(static_cast<double>(sample), lower[j], upper[j]);
    }
    const Pose pose = forward_kinematics(chain, joints);
    ++window_proposals;
    if (!options.filter || options.filter(joints, pose)) {
      ++window_accepted;
      const auto row = static_cast<Eigen::Index>(filled++);
      data.poses.row(row) = pose.packed().transpose().cast<float>();
      data.joints.row(row) = joints.transpose().cast<float>();
    }
    if (window_proposals == options.rejection_window) {
      const double rate = static_cast<double>(window_accepted) / static_cast<double>(window_proposals);
      if (rate < options.min_acceptance) {
        throw ValueError("generate_dataset: sample filter accepted " + std::to_string(window_accepted) +
                         " of " + std::to_string(window_proposals) +
                         " consecutive proposals; aborting after " + std::to_string(filled) +
                         " samples");
      }
      window_proposals = 0;
      window_accepted = 0;
    }
  }
  return data;
}

NormStats compute_normalization(const Dataset& dataset, const KinematicChain& chain) {
  if (dataset.dof() != chain.dof()) throw DimensionError("compute_normalization: dof mismatch");
  return compute_normalization(dataset.pose_batch(), chain);
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  if (dataset.poses.cols() != kPoseWidth || dataset.poses.rows() != dataset.joints.rows()) {
    throw DimensionError("write_dataset: pose and joint tables disagree");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(kMagic.data(), kMagic.size());
  binary::put<std::uint32_t>(out, kVersion);
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.dof()));
  binary::put<std::uint64_t>(out, dataset.size());
  RowMatrix<float> record(1, kPoseWidth + dataset.dof());
  for (Eigen::Index i = 0; i < dataset.poses.rows(); ++i) {
    record << dataset.poses.row(i), dataset.joints.row(i);
    binary::put_floats(out, record.data(), static_cast<std::size_t>(record.size()));
  }
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

Dataset read_dataset(const std::filesystem::path& path, std::optional<int> expected_dof) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset '" + path.string() + "'");
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size())) throw FormatError("truncated dataset header");
  if (magic != kMagic) throw FormatError("'" + path.string() + "' is not a dataset (bad magic)");
  const auto version = binary::get<std::uint32_t>(in, "version");
  if (version != kVersion) throw FormatError("unsupported dataset version " + std::to_string(version));
  const auto dof = binary::get<std::uint32_t>(in, "dof");
  const auto count = binary::get<std::uint64_t>(in, "count");
  if (expected_dof && static_cast<int>(dof) != *expected_dof) {
    throw DimensionError("dataset has dof " + std::to_string(dof) + ", expected " +
                         std::to_string(*expected_dof));
  }
  const std::uint64_t width = kPoseWidth + dof;
  const std::uint64_t payload = binary::remaining(in);
  if (count > payload / (width * sizeof(float)) || payload != count * width * sizeof(float)) {
    throw FormatError("dataset payload is " + std::to_string(payload) + " bytes, header implies " +
                      std::to_string(count) + " records of " + std::to_string(width) + " floats");
  }
  RowMatrix<float> records(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(width));
  binary::get_floats(in, records.data(), static_cast<std::size_t>(records.size()), "records");
  Dataset data;
  data.poses = records.leftCols(kPoseWidth);
  data.joints = records.rightCols(dof);
  return data;
}

}  // namespace cycleik
