#include "cycleik/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "cycleik/log.hpp"
#include "cycleik/random.hpp"

namespace cycleik {
namespace {

// out = in * kernel + bias, one row at a time. Each output element is
// accumulated over k in ascending order regardless of batch size.
template <typename Scalar>
void affine_rows(const RowMatrix<Scalar>& in, const DenseLayerT<Scalar>& layer, RowMatrix<Scalar>& out) {
  const Eigen::Index rows = in.rows();
  const Eigen::Index n_in = layer.kernel.rows();
  const Eigen::Index n_out = layer.kernel.cols();
  out.resize(rows, n_out);
  constexpr Eigen::Index kTile = 8;
  for (Eigen::Index r0 = 0; r0 < rows; r0 += kTile) {
    const Eigen::Index r1 = std::min(rows, r0 + kTile);
    for (Eigen::Index r = r0; r < r1; ++r) out.row(r) = layer.bias;
    for (Eigen::Index k = 0; k < n_in; ++k) {
      const Scalar* w = layer.kernel.data() + k * n_out;
      for (Eigen::Index r = r0; r < r1; ++r) {
        const Scalar a = in(r, k);
        Scalar* z = out.data() + r * n_out;
        for (Eigen::Index j = 0; j < n_out; ++j) z[j] += a * w[j];
      }
    }
  }
}

}  // namespace

template <typename Scalar>
Scalar gelu(Scalar x) {
  return Scalar(0.5) * x * (Scalar(1) + std::erf(x * Scalar(M_SQRT1_2)));
}

template <typename Scalar>
Scalar gelu_derivative(Scalar x) {
  const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(x * Scalar(M_SQRT1_2)));
  const Scalar pdf = std::exp(Scalar(-0.5) * x * x) * Scalar(0.3989422804014327);
  return cdf + x * pdf;
}

void validate_layer_sizes(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 3) {
    throw ValueError("network needs at least one hidden layer (got " +
                     std::to_string(layer_sizes.size()) + " sizes)");
  }
  if (layer_sizes.front() != kPoseWidth) {
    throw DimensionError("network input width must be 7, got " + std::to_string(layer_sizes.front()));
  }
  for (int size : layer_sizes) {
    if (size < 1) throw ValueError("layer widths must be positive");
  }
  const std::size_t hidden = layer_sizes.size() - 2;
  if (hidden < 6 || hidden > 8) {
    warn("network has " + std::to_string(hidden) +
         " hidden layers; reference configurations use 6 to 8");
  }
}

template <typename Scalar>
MlpT<Scalar>::MlpT(std::vector<int> layer_sizes) : layer_sizes_(std::move(layer_sizes)) {
  if (layer_sizes_.size() < 2) throw ValueError("network needs at least two layer sizes");
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    Layer layer;
    layer.kernel = RowMatrix<Scalar>::Zero(layer_sizes_[l], layer_sizes_[l + 1]);
    layer.bias = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(layer_sizes_[l + 1]);
    layers_.push_back(std::move(layer));
  }
}

template <typename Scalar>
std::size_t MlpT<Scalar>::parameter_count() const {
  std::size_t count = 0;
  for (const Layer& layer : layers_) {
    count += static_cast<std::size_t>(layer.kernel.size() + layer.bias.size());
  }
  return count;
}

template <typename Scalar>
bool MlpT<Scalar>::operator==(const MlpT& other) const {
  if (layer_sizes_ != other.layer_sizes_) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].kernel != other.layers_[l].kernel || layers_[l].bias != other.layers_[l].bias) {
      return false;
    }
  }
  return norm_.position_min == other.norm_.position_min &&
         norm_.position_max == other.norm_.position_max &&
         norm_.joint_lower == other.norm_.joint_lower && norm_.joint_upper == other.norm_.joint_upper;
}

MlpModel init_model(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  validate_layer_sizes(layer_sizes);
  MlpModel model(layer_sizes);
  Rng rng(seed);
  for (auto& layer : model.layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.kernel.rows()));
    for (Eigen::Index i = 0; i < layer.kernel.size(); ++i) {
      layer.kernel.data()[i] = static_cast<float>(rng.uniform(-bound, bound));
    }
  }
  return model;
}

template <typename Scalar>
RowMatrix<Scalar> forward(const MlpT<Scalar>& model, const RowMatrix<Scalar>& input,
                          ForwardCacheT<Scalar>* cache) {
  if (input.cols() != model.input_width()) {
    throw DimensionError("network expects input width " + std::to_string(model.input_width()) +
                         ", got " + std::to_string(input.cols()));
  }
  const auto& layers = model.layers();
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  RowMatrix<Scalar> activation = input;
  RowMatrix<Scalar> z;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    affine_rows(activation, layers[l], z);
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(activation));
      cache->pre_activations.push_back(z);
    }
    const bool last = l + 1 == layers.size();
    activation = last ? RowMatrix<Scalar>(z.array().tanh())
                      : RowMatrix<Scalar>(z.unaryExpr([](Scalar x) { return gelu(x); }));
  }
  if (cache != nullptr) cache->output = activation;
  return activation;
}

template <typename Scalar>
GradientsT<Scalar> backward(const MlpT<Scalar>& model, const ForwardCacheT<Scalar>& cache,
                            const RowMatrix<Scalar>& upstream) {
  const auto& layers = model.layers();
  if (cache.inputs.size() != layers.size() || cache.pre_activations.size() != layers.size()) {
    throw DimensionError("forward cache does not match the model");
  }
  if (upstream.rows() != cache.output.rows() || upstream.cols() != cache.output.cols()) {
    throw DimensionError("upstream gradient shape does not match the cached output");
  }
  GradientsT<Scalar> grads(layers.size());
  RowMatrix<Scalar> dz = upstream.array() * (Scalar(1) - cache.output.array().square());
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads[l].kernel = cache.inputs[l].transpose() * dz;
    grads[l].bias = dz.colwise().sum();
    if (l > 0) {
      RowMatrix<Scalar> da = dz * layers[l].kernel.transpose();
      dz = da.array() *
           cache.pre_activations[l - 1].unaryExpr([](Scalar x) { return gelu_derivative(x); }).array();
    }
  }
  return grads;
}

AdamState AdamState::zeros_like(const MlpModel& model) {
  AdamState state;
  for (const auto& layer : model.layers()) {
    DenseLayerT<float> zero{RowMatrix<float>::Zero(layer.kernel.rows(), layer.kernel.cols()),
                            Eigen::RowVectorXf::Zero(layer.bias.size())};
    state.first_moment.push_back(zero);
    state.second_moment.push_back(std::move(zero));
  }
  return state;
}

void adam_step(MlpModel& model, const Gradients& grads, AdamState& state, float learning_rate,
               const AdamHyper& hyper) {
  auto& layers = model.layers();
  if (grads.size() != layers.size() || state.first_moment.size() != layers.size()) {
    throw DimensionError("adam_step: gradient/state layer count does not match the model");
  }
  if (!(learning_rate >= 0.0f)) throw ValueError("adam_step: learning rate must be >= 0");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (grads[l].kernel.rows() != layers[l].kernel.rows() ||
        grads[l].kernel.cols() != layers[l].kernel.cols() ||
        grads[l].bias.size() != layers[l].bias.size()) {
      throw DimensionError("adam_step: gradient shape mismatch in layer " + std::to_string(l));
    }
    if (!grads[l].kernel.allFinite() || !grads[l].bias.allFinite()) {
      throw ValueError("adam_step: non-finite gradient in layer " + std::to_string(l));
    }
  }

  ++state.step;
  const float t = static_cast<float>(state.step);
  const float correction1 = 1.0f - std::pow(hyper.beta1, t);
  const float correction2 = 1.0f - std::pow(hyper.beta2, t);
  const float step_size = learning_rate / correction1;

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = hyper.beta1 * m + (1.0f - hyper.beta1) * grad;
    v = hyper.beta2 * v + (1.0f - hyper.beta2) * grad.cwiseProduct(grad);
    if (learning_rate == 0.0f) return;
    param.array() -= step_size * m.array() / ((v.array() / correction2).sqrt() + hyper.epsilon);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].kernel, grads[l].kernel, state.first_moment[l].kernel,
           state.second_moment[l].kernel);
    update(layers[l].bias, grads[l].bias, state.first_moment[l].bias, state.second_moment[l].bias);
  }
}

JointBatch solve(const MlpModel& model, const PoseBatch& poses) {
  if (model.output_width() != model.norm().dof()) {
    throw DimensionError("model output width does not match its joint normalization");
  }
  return model.norm().denormalize_joints(forward(model, model.norm().normalize_poses(poses)));
}

template class MlpT<float>;
template class MlpT<double>;
template float gelu<float>(float);
template double gelu<double>(double);
template float gelu_derivative<float>(float);
template double gelu_derivative<double>(double);
template RowMatrix<float> forward(const MlpT<float>&, const RowMatrix<float>&, ForwardCacheT<float>*);
template RowMatrix<double> forward(const MlpT<double>&, const RowMatrix<double>&,
                                   ForwardCacheT<double>*);
template GradientsT<float> backward(const MlpT<float>&, const ForwardCacheT<float>&,
                                    const RowMatrix<float>&);
template GradientsT<double> backward(const MlpT<double>&, const ForwardCacheT<double>&,
                                     const RowMatrix<double>&);

}  // namespace cycleik
