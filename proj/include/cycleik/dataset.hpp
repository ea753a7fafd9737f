#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>

#include "cycleik/chain.hpp"
#include "cycleik/normalization.hpp"

namespace cycleik {

/// Poses (N x 7: position in m, quaternion w x y z) with the joint rows that
/// produced them (N x dof). Stored in 32-bit floats, as on disk.
struct Dataset {
  RowMatrix<float> poses;
  RowMatrix<float> joints;
  std::uint64_t chain_fingerprint = 0;  // 0 when unknown (e.g. read from file)

  std::size_t size() const { return static_cast<std::size_t>(poses.rows()); }
  int dof() const { return static_cast<int>(joints.cols()); }

  PoseBatch pose_batch() const { return poses.cast<double>(); }
  JointBatch joint_batch() const { return joints.cast<double>(); }
};

/// Accept/reject hook for sampled configurations (e.g. a collision check).
using SampleFilter = std::function<bool(const JointVector& joints, const Pose& pose)>;

struct GenerateOptions {
  SampleFilter filter;  // empty accepts everything
  std::uint64_t rejection_window = 1'000'000;
  double min_acceptance = 0.001;
};

/// Uniform joint-space samples within the chain limits, labelled by FK.
/// Throws ValueError when the filter accepts less than `min_acceptance` of
/// `rejection_window` consecutive proposals.
Dataset generate_dataset(const KinematicChain& chain, std::size_t count, std::uint64_t seed,
                         const GenerateOptions& options = {});

NormStats compute_normalization(const Dataset& dataset, const KinematicChain& chain);

/// Little-endian: "CIKD", u32 version = 1, u32 dof, u64 count, then count
/// records of (7 + dof) float32 values (pose followed by joints).
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Throws FormatError on bad magic, version, truncation or trailing bytes and
/// DimensionError when `expected_dof` is given and differs.
Dataset read_dataset(const std::filesystem::path& path, std::optional<int> expected_dof = std::nullopt);

}  // namespace cycleik
