#include <array>
#include <fstream>

#include "binary_io.hpp"
#include "cycleik/trainer.hpp"

namespace cycleik {
namespace {

constexpr std::array<char, 4> kMagic = {'C', 'I', 'K', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) binary::put<float>(out, static_cast<float>(v[i]));
}

Eigen::VectorXd get_vector(std::istream& in, Eigen::Index size, const char* what) {
  Eigen::VectorXf v(size);
  binary::get_floats(in, v.data(), static_cast<std::size_t>(size), what);
  return v.cast<double>();
}

}  // namespace

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path) {
  const auto& sizes = model.layer_sizes();
  if (sizes.size() < 2) throw ValueError("save_checkpoint: model has no layers");
  const int dof = model.output_width();
  if (model.norm().dof() != dof) throw DimensionError("save_checkpoint: normalization dof mismatch");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(kMagic.data(), kMagic.size());
  binary::put<std::uint32_t>(out, kVersion);
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(dof));
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(sizes.size()));
  for (int size : sizes) binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(size));
  const NormStats& norm = model.norm();
  put_vector(out, norm.position_min);
  put_vector(out, norm.position_max);
  put_vector(out, norm.joint_lower);
  put_vector(out, norm.joint_upper);
  for (const auto& layer : model.layers()) {
    binary::put_floats(out, layer.kernel.data(), static_cast<std::size_t>(layer.kernel.size()));
    binary::put_floats(out, layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

MlpModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path.string() + "'");
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size())) throw FormatError("truncated checkpoint header");
  if (magic != kMagic) throw FormatError("'" + path.string() + "' is not a checkpoint (bad magic)");
  const auto version = binary::get<std::uint32_t>(in, "version");
  if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto dof = binary::get<std::uint32_t>(in, "dof");
  const auto count = binary::get<std::uint32_t>(in, "layer count");
  if (count < 2 || count > 1024) throw FormatError("implausible layer count " + std::to_string(count));

  std::vector<int> sizes;
  std::uint64_t parameters = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto size = binary::get<std::uint32_t>(in, "layer sizes");
    if (size == 0 || size > (1u << 24)) throw FormatError("implausible layer size " + std::to_string(size));
    if (i > 0) parameters += static_cast<std::uint64_t>(sizes.back()) * size + size;
    sizes.push_back(static_cast<int>(size));
  }
  if (sizes.front() != kPoseWidth) throw FormatError("checkpoint input width is not 7");
  if (static_cast<std::uint32_t>(sizes.back()) != dof) {
    throw FormatError("checkpoint output width disagrees with its dof field");
  }
  const std::uint64_t expected = (6 + 2 * static_cast<std::uint64_t>(dof) + parameters) * sizeof(float);
  const std::uint64_t payload = binary::remaining(in);
  if (payload != expected) {
    throw FormatError("checkpoint payload is " + std::to_string(payload) +
                      " bytes, size table implies " + std::to_string(expected));
  }

  MlpModel model(sizes);
  NormStats& norm = model.norm();
  norm.position_min = get_vector(in, 3, "normalization");
  norm.position_max = get_vector(in, 3, "normalization");
  norm.joint_lower = get_vector(in, dof, "normalization");
  norm.joint_upper = get_vector(in, dof, "normalization");
  for (auto& layer : model.layers()) {
    binary::get_floats(in, layer.kernel.data(), static_cast<std::size_t>(layer.kernel.size()), "weights");
    binary::get_floats(in, layer.bias.data(), static_cast<std::size_t>(layer.bias.size()), "biases");
  }
  return model;
}

}  // namespace cycleik
