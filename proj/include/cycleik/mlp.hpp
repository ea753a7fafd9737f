#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cycleik/normalization.hpp"
#include "cycleik/types.hpp"

namespace cycleik {

template <typename Scalar>
struct DenseLayerT {
  RowMatrix<Scalar> kernel;                    // in x out; z = a * kernel + bias
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> bias;
};

/**
 * Fully connected IK network: GELU after every layer but the last, tanh on
 * the last. Input width is the 7-wide normalized pose, output width the
 * chain dof.
 */
template <typename Scalar>
class MlpT {
 public:
  using Layer = DenseLayerT<Scalar>;

  MlpT() = default;

  /// Zero-initialized parameters. `layer_sizes` runs input -> hidden... -> output.
  explicit MlpT(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int input_width() const { return layer_sizes_.front(); }
  int output_width() const { return layer_sizes_.back(); }

  /// Parameter shapes must not be changed through this accessor.
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  NormStats& norm() { return norm_; }
  const NormStats& norm() const { return norm_; }

  std::size_t parameter_count() const;

  template <typename Other>
  MlpT<Other> cast() const {
    MlpT<Other> out(layer_sizes_);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      out.layers()[l].kernel = layers_[l].kernel.template cast<Other>();
      out.layers()[l].bias = layers_[l].bias.template cast<Other>();
    }
    out.norm() = norm_;
    return out;
  }

  bool operator==(const MlpT& other) const;

 private:
  std::vector<int> layer_sizes_;
  std::vector<Layer> layers_;
  NormStats norm_;
};

using MlpModel = MlpT<float>;

template <typename Scalar>
using GradientsT = std::vector<DenseLayerT<Scalar>>;
using Gradients = GradientsT<float>;

/// Activations kept by forward() for backward().
template <typename Scalar>
struct ForwardCacheT {
  std::vector<RowMatrix<Scalar>> inputs;           // input to each layer
  std::vector<RowMatrix<Scalar>> pre_activations;  // a * kernel + bias per layer
  RowMatrix<Scalar> output;
};

/// Checks the layer layout: input width 7, at least one hidden layer, all
/// widths positive. Warns when the hidden-layer count is outside 6..8.
void validate_layer_sizes(const std::vector<int>& layer_sizes);

/// Kaiming-uniform kernels (bound sqrt(6 / fan_in)), zero biases. Deterministic in `seed`.
MlpModel init_model(const std::vector<int>& layer_sizes, std::uint64_t seed);

template <typename Scalar>
Scalar gelu(Scalar x);
template <typename Scalar>
Scalar gelu_derivative(Scalar x);

/// Rows are processed independently and always in the same arithmetic order,
/// so a row's output does not depend on the batch it sits in.
template <typename Scalar>
RowMatrix<Scalar> forward(const MlpT<Scalar>& model, const RowMatrix<Scalar>& input,
                          ForwardCacheT<Scalar>* cache = nullptr);

/// Gradients of sum(output .* upstream) with respect to every kernel and bias.
template <typename Scalar>
GradientsT<Scalar> backward(const MlpT<Scalar>& model, const ForwardCacheT<Scalar>& cache,
                            const RowMatrix<Scalar>& upstream);

struct AdamHyper {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  std::int64_t step = 0;

  static AdamState zeros_like(const MlpModel& model);
};

/// One bias-corrected Adam update. Throws ValueError naming the layer when a
/// gradient is non-finite; the model is untouched in that case.
void adam_step(MlpModel& model, const Gradients& grads, AdamState& state, float learning_rate,
               const AdamHyper& hyper = {});

/// Normalize, forward, denormalize: joint solutions for a batch of target poses.
JointBatch solve(const MlpModel& model, const PoseBatch& poses);

}  // namespace cycleik
