#include "cycleik/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "cycleik/metrics.hpp"
#include "cycleik/random.hpp"

namespace cycleik {
namespace {

struct PresetRow {
  const char* name;
  std::size_t batch_size;
  double learning_rate;
  double w_pos;
  double w_rot;
  std::vector<int> hidden;
};

const std::vector<PresetRow>& preset_table() {
  static const std::vector<PresetRow> table = {
      {"nicol", 100, 1.8e-4, 9, 2, {2780, 3480, 1710, 2880, 1750, 1090, 1470}},
      {"nico", 300, 3.7e-4, 7, 1, {2270, 560, 1100, 1990, 2590, 870}},
      {"valkyrie", 100, 4.4e-4, 9, 1, {2930, 1130, 1520, 570, 670, 770, 2250}},
      {"panda", 100, 2.4e-4, 16, 2, {1370, 880, 2980, 1000, 2710, 2290, 880}},
      {"fetch", 100, 3.2e-4, 19, 3, {850, 620, 3210, 2680, 680, 3030, 2670}},
      {"desk", 100, 3e-3, 10, 1, {96, 96, 96, 96, 96, 96}},
  };
  return table;
}

void add_into(LossBreakdown& sum, const LossBreakdown& x) {
  sum.pos_loss += x.pos_loss;
  sum.rot_loss += x.rot_loss;
  sum.total += x.total;
  if (sum.secondary.empty()) {
    sum.secondary = x.secondary;
  } else {
    for (std::size_t k = 0; k < x.secondary.size(); ++k) sum.secondary[k].second += x.secondary[k].second;
  }
}

void scale(LossBreakdown& b, double factor) {
  b.pos_loss *= factor;
  b.rot_loss *= factor;
  b.total *= factor;
  for (auto& entry : b.secondary) entry.second *= factor;
}

}  // namespace

TrainingConfig preset(std::string_view name) {
  for (const PresetRow& row : preset_table()) {
    if (name == row.name) {
      TrainingConfig config;
      config.hidden_sizes = row.hidden;
      config.batch_size = row.batch_size;
      config.learning_rate = row.learning_rate;
      config.weights.w_pos = row.w_pos;
      config.weights.w_rot = row.w_rot;
      return config;
    }
  }
  throw ValueError("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const PresetRow& row : preset_table()) names.emplace_back(row.name);
  return names;
}

void validate(const TrainingConfig& config) {
  if (config.epochs < 1) throw ValueError("epochs must be >= 1");
  if (config.batch_size < 1) throw ValueError("batch size must be >= 1");
  if (config.batch_size < 100 && !config.desk_scale) {
    throw ValueError("batch size below 100 requires the desk-scale flag");
  }
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw ValueError("learning rate must be finite and >= 0");
  }
  if (config.tanh_layers != 1) throw ValueError("exactly one terminal tanh layer is supported");
  if (config.hidden_sizes.empty()) throw ValueError("at least one hidden layer is required");
  if (config.sign_flip_fraction < 0.0 || config.sign_flip_fraction > 1.0) {
    throw ValueError("sign flip fraction must lie in [0, 1]");
  }
  if (config.eval_batch_size < 1) throw ValueError("evaluation batch size must be >= 1");
}

void check_model_chain(const MlpModel& model, const KinematicChain& chain) {
  if (model.output_width() != chain.dof() || model.norm().dof() != chain.dof()) {
    throw DimensionError("model solves for " + std::to_string(model.output_width()) +
                         " joints but the chain has dof " + std::to_string(chain.dof()));
  }
}

template <typename Scalar>
LossBreakdown cycle_loss(const MlpT<Scalar>& model, const KinematicChain& chain,
                         const PoseBatch& inputs, const PoseBatch& targets,
                         const LossWeights& weights, LossVariant variant,
                         GradientsT<Scalar>* grads) {
  const Eigen::Index rows = inputs.rows();
  const int dof = chain.dof();
  if (targets.rows() != rows) throw DimensionError("cycle_loss: input/target batch sizes differ");
  if (model.output_width() != dof) throw DimensionError("cycle_loss: model/chain dof mismatch");

  const NormStats& norm = model.norm();
  const RowMatrix<Scalar> x = norm.normalize_poses(inputs).template cast<Scalar>();
  ForwardCacheT<Scalar> cache;
  const RowMatrix<Scalar> t = forward(model, x, grads != nullptr ? &cache : nullptr);
  const JointBatch t_double = t.template cast<double>();
  const Eigen::VectorXd joint_scale = norm.joint_scale();

  PositionBatch reached_positions(rows, 3);
  QuaternionBatch reached_orientations(rows, 4);
  std::vector<PoseJacobian> jacobians(static_cast<std::size_t>(rows));
  JointVector theta(dof);
  for (Eigen::Index i = 0; i < rows; ++i) {
    theta = norm.joint_lower + ((t_double.row(i).transpose().array() + 1.0) * joint_scale.array()).matrix();
    const Pose pose = forward_kinematics(chain, theta, jacobians[static_cast<std::size_t>(i)]);
    reached_positions.row(i) = pose.position.transpose();
    reached_orientations.row(i) << pose.orientation.w(), pose.orientation.x(), pose.orientation.y(),
        pose.orientation.z();
  }

  LossGradients loss_grads;
  const LossBreakdown breakdown =
      total_loss(reached_positions, targets.leftCols<3>(), reached_orientations, targets.rightCols<4>(),
                 t_double, weights, variant, grads != nullptr ? &loss_grads : nullptr);

  if (grads != nullptr) {
    RowMatrix<Scalar> upstream(rows, dof);
    Eigen::Matrix<double, kPoseWidth, 1> pose_grad;
    for (Eigen::Index i = 0; i < rows; ++i) {
      pose_grad << loss_grads.position.row(i).transpose(), loss_grads.orientation.row(i).transpose();
      const Eigen::VectorXd d_theta = jacobians[static_cast<std::size_t>(i)].transpose() * pose_grad;
      const Eigen::VectorXd d_t =
          d_theta.cwiseProduct(joint_scale) + loss_grads.joints.row(i).transpose();
      upstream.row(i) = d_t.transpose().cast<Scalar>();
    }
    *grads = backward(model, cache, upstream);
  }
  return breakdown;
}

template LossBreakdown cycle_loss(const MlpT<float>&, const KinematicChain&, const PoseBatch&,
                                  const PoseBatch&, const LossWeights&, LossVariant, GradientsT<float>*);
template LossBreakdown cycle_loss(const MlpT<double>&, const KinematicChain&, const PoseBatch&,
                                  const PoseBatch&, const LossWeights&, LossVariant,
                                  GradientsT<double>*);

ValidationMetrics validate_model(const MlpModel& model, const KinematicChain& chain,
                                 const Dataset& data, std::size_t batch_size) {
  check_model_chain(model, chain);
  if (data.size() == 0) return {};
  if (batch_size < 1) throw ValueError("validate_model: batch size must be >= 1");
  const PoseBatch targets = data.pose_batch();
  std::vector<double> position;
  std::vector<double> rotation;
  for (Eigen::Index start = 0; start < targets.rows(); start += static_cast<Eigen::Index>(batch_size)) {
    const Eigen::Index count = std::min<Eigen::Index>(static_cast<Eigen::Index>(batch_size), targets.rows() - start);
    const PoseBatch batch = targets.middleRows(start, count);
    const PoseBatch reached = fk_batch(chain, solve(model, batch));
    PoseErrors errors = pose_errors(reached, batch);
    position.insert(position.end(), errors.position_mm.begin(), errors.position_mm.end());
    rotation.insert(rotation.end(), errors.rotation_deg.begin(), errors.rotation_deg.end());
  }
  return {summarize(position).mean, summarize(rotation).mean};
}

TrainResult train(const TrainingConfig& config, const KinematicChain& chain, const Dataset& train_set,
                  const Dataset& val_set, const EpochCallback& on_epoch) {
  validate(config);
  const int dof = chain.dof();
  if (train_set.dof() != dof || (val_set.size() > 0 && val_set.dof() != dof)) {
    throw DimensionError("dataset dof does not match chain dof " + std::to_string(dof));
  }
  const std::size_t steps_per_epoch = train_set.size() / config.batch_size;
  if (steps_per_epoch == 0) throw ValueError("training set is smaller than one batch");
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(config.epochs);

  std::vector<int> sizes{kPoseWidth};
  sizes.insert(sizes.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
  sizes.push_back(dof);

  TrainResult result;
  MlpModel& model = result.model;
  model = init_model(sizes, config.seed);
  // Rounded to checkpoint precision. volatile: GCC 11 -O3 miscompiles the plain cast.
  NormStats norm = compute_normalization(train_set, chain);
  auto to_float = [](auto& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      volatile float narrow = static_cast<float>(v[i]);
      v[i] = narrow;
    }
  };
  to_float(norm.position_min);
  to_float(norm.position_max);
  to_float(norm.joint_lower);
  to_float(norm.joint_upper);
  model.norm() = norm;

  AdamState adam = AdamState::zeros_like(model);
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ull);

  const PoseBatch all_inputs = train_set.pose_batch();
  std::vector<bool> flipped(train_set.size());
  for (std::size_t i = 0; i < flipped.size(); ++i) flipped[i] = rng.uniform() < config.sign_flip_fraction;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const auto batch_rows = static_cast<Eigen::Index>(config.batch_size);
  PoseBatch inputs(batch_rows, kPoseWidth);
  PoseBatch targets(batch_rows, kPoseWidth);
  Gradients grads;
  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    LossBreakdown epoch_sum;
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      for (Eigen::Index r = 0; r < batch_rows; ++r) {
        const std::size_t index = order[s * config.batch_size + static_cast<std::size_t>(r)];
        inputs.row(r) = all_inputs.row(static_cast<Eigen::Index>(index));
        targets.row(r) = inputs.row(r);
        if (flipped[index]) targets.row(r).tail<4>() *= -1.0;
      }
      const LossBreakdown loss =
          cycle_loss(model, chain, inputs, targets, config.weights, config.variant, &grads);
      if (!std::isfinite(loss.total)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch + 1 << ", step " << step << " (pos "
            << loss.pos_loss << ", rot " << loss.rot_loss << ")";
        throw ValueError(msg.str());
      }
      add_into(epoch_sum, loss);
      const double lr = config.learning_rate *
                        (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
      adam_step(model, grads, adam, static_cast<float>(lr));
    }
    scale(epoch_sum, 1.0 / static_cast<double>(steps_per_epoch));

    EpochReport report;
    report.epoch = epoch + 1;
    report.train_loss = epoch_sum;
    report.validation = validate_model(model, chain, val_set, config.eval_batch_size);
    result.history.train_loss.push_back(report.train_loss);
    result.history.validation.push_back(report.validation);
    if (on_epoch) on_epoch(report);
  }
  return result;
}

}  // namespace cycleik
