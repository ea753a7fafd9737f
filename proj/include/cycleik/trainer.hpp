#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "cycleik/chain.hpp"
#include "cycleik/dataset.hpp"
#include "cycleik/losses.hpp"
#include "cycleik/mlp.hpp"

namespace cycleik {

struct TrainingConfig {
  std::vector<int> hidden_sizes;
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  int epochs = 10;
  LossWeights weights;
  LossVariant variant = LossVariant::kSmooth;
  std::uint64_t seed = 0;
  int tanh_layers = 1;
  bool desk_scale = false;          // permits batch sizes below 100
  double sign_flip_fraction = 0.5;  // share of training targets stored as -q
  std::size_t eval_batch_size = 1000;
};

/// Reference configurations: "nicol", "nico", "valkyrie", "panda", "fetch",
/// plus "desk", a small network for laptop-scale chains.
TrainingConfig preset(std::string_view name);
std::vector<std::string> preset_names();

/// Throws ValueError describing the first invalid field.
void validate(const TrainingConfig& config);

struct ValidationMetrics {
  double position_mm = 0.0;
  double rotation_deg = 0.0;
};

struct EpochReport {
  int epoch = 0;
  LossBreakdown train_loss;
  ValidationMetrics validation;
};

struct TrainingHistory {
  std::vector<LossBreakdown> train_loss;        // per-epoch mean
  std::vector<ValidationMetrics> validation;    // per epoch
};

struct TrainResult {
  MlpModel model;
  TrainingHistory history;
};

using EpochCallback = std::function<void(const EpochReport&)>;

/// Cycle training: pose -> network -> joints -> FK -> loss against the input
/// pose, with gradients through the pose Jacobian. Learning rate decays
/// linearly to zero per optimizer step; the last partial batch of each epoch
/// is dropped. The returned model carries its normalization statistics.
TrainResult train(const TrainingConfig& config, const KinematicChain& chain, const Dataset& train_set,
                  const Dataset& val_set, const EpochCallback& on_epoch = {});

/**
 * Loss of one batch and, optionally, its gradient with respect to every
 * network parameter. `inputs` are the poses fed to the network and `targets`
 * the poses the FK of the prediction is compared against (identical up to
 * quaternion sign).
 */
template <typename Scalar>
LossBreakdown cycle_loss(const MlpT<Scalar>& model, const KinematicChain& chain,
                         const PoseBatch& inputs, const PoseBatch& targets,
                         const LossWeights& weights, LossVariant variant,
                         GradientsT<Scalar>* grads = nullptr);

/// Mean FK(IK(x)) position (mm) and rotation (deg) error over a dataset.
ValidationMetrics validate_model(const MlpModel& model, const KinematicChain& chain,
                                 const Dataset& data, std::size_t batch_size = 1000);

/// Throws DimensionError when the model output width differs from the chain dof.
void check_model_chain(const MlpModel& model, const KinematicChain& chain);

/// Little-endian: "CIKM", u32 version = 1, u32 dof, u32 number of layer
/// sizes, the sizes (u32), normalization (float32: position min[3], max[3],
/// joint lower[dof], upper[dof]), then per layer the row-major in x out kernel
/// and the bias as float32.
void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_checkpoint(const std::filesystem::path& path);

}  // namespace cycleik
