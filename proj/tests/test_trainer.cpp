#include <doctest.h>

#include <fstream>
#include <iterator>

#include "cycleik/dataset.hpp"
#include "cycleik/log.hpp"
#include "cycleik/trainer.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace cycleik;

namespace {

struct QuietWarnings {
  WarningHandler previous = set_warning_handler([](std::string_view) {});
  ~QuietWarnings() { set_warning_handler(previous); }
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TrainingConfig tiny_config() {
  TrainingConfig config = preset("desk");
  config.hidden_sizes = {32, 32, 32};
  config.epochs = 2;
  config.seed = 4;
  return config;
}

}  // namespace

TEST_CASE("presets reproduce the reference hyperparameters") {
  struct Row {
    const char* name;
    std::size_t batch;
    double lr;
    double w_pos;
    double w_rot;
    int dof;
    std::size_t parameters;
  };
  const Row rows[] = {{"nicol", 100, 1.8e-4, 9, 2, 8, 29'146'188},  {"nico", 300, 3.7e-4, 7, 1, 6, 11'514'096},
                      {"valkyrie", 100, 4.4e-4, 9, 1, 10, 8'578'060}, {"panda", 100, 2.4e-4, 16, 2, 7, 17'766'967},
                      {"fetch", 100, 3.2e-4, 19, 3, 8, 23'133'958}};
  for (const Row& row : rows) {
    CAPTURE(row.name);
    const TrainingConfig c = preset(row.name);
    CHECK(c.batch_size == row.batch);
    CHECK(c.learning_rate == doctest::Approx(row.lr).epsilon(1e-12));
    CHECK(c.weights.w_pos == row.w_pos);
    CHECK(c.weights.w_rot == row.w_rot);
    CHECK(c.tanh_layers == 1);
    CHECK(c.hidden_sizes.size() >= 6);
    std::vector<int> sizes{7};
    sizes.insert(sizes.end(), c.hidden_sizes.begin(), c.hidden_sizes.end());
    sizes.push_back(row.dof);
    CHECK(MlpModel(sizes).parameter_count() == row.parameters);
  }
  CHECK(preset_names().size() == 6);
  CHECK_THROWS_AS(preset("unknown"), ValueError);
}

TEST_CASE("configuration validation") {
  TrainingConfig c = preset("desk");
  CHECK_NOTHROW(validate(c));
  c.batch_size = 32;
  CHECK_THROWS_AS(validate(c), ValueError);
  c.desk_scale = true;
  CHECK_NOTHROW(validate(c));
  c.batch_size = 0;
  CHECK_THROWS_AS(validate(c), ValueError);
  c = preset("desk");
  c.epochs = 0;
  CHECK_THROWS_AS(validate(c), ValueError);
  c = preset("desk");
  c.tanh_layers = 2;
  CHECK_THROWS_AS(validate(c), ValueError);
  c = preset("desk");
  c.sign_flip_fraction = 1.5;
  CHECK_THROWS_AS(validate(c), ValueError);
  c = preset("desk");
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(validate(c), ValueError);
}

TEST_CASE("cycle loss gradient matches finite differences through FK") {
  QuietWarnings quiet;
  const KinematicChain chain = testing::planar2();
  const Dataset data = generate_dataset(chain, 8, 11);
  MlpT<double> model = init_model({7, 16, 2}, 5).cast<double>();
  model.norm() = compute_normalization(data, chain);
  const PoseBatch inputs = data.pose_batch();
  PoseBatch targets = inputs;
  targets.row(1).tail<4>() *= -1.0;
  targets.row(4).tail<4>() *= -1.0;
  LossWeights weights;
  weights.w_pos = 10.0;
  weights.w_rot = 1.0;
  weights.secondary.emplace_back("joint-centering", 0.3);
  for (LossVariant variant : {LossVariant::kSmooth, LossVariant::kLegacy}) {
    GradientsT<double> grads;
    cycle_loss(model, chain, inputs, targets, weights, variant, &grads);
    const double err = testing::max_parameter_gradient_error(
        model, grads, [&] { return cycle_loss(model, chain, inputs, targets, weights, variant).total; }, 1e-6);
    CHECK(err < 1e-3);
  }
}

TEST_CASE("training reduces validation error tenfold") {
  QuietWarnings quiet;
  const KinematicChain chain = testing::planar2();
  const Dataset train_set = generate_dataset(chain, 20000, 1);
  const Dataset val_set = generate_dataset(chain, 1000, 2);
  TrainingConfig config = tiny_config();
  config.hidden_sizes = {64, 64, 64, 64};
  config.learning_rate = 1e-2;
  config.epochs = 10;
  std::vector<int> epochs_seen;
  const TrainResult result =
      train(config, chain, train_set, val_set, [&](const EpochReport& r) { epochs_seen.push_back(r.epoch); });
  REQUIRE(result.history.validation.size() == 10);
  CHECK(epochs_seen == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  CHECK(result.history.validation.back().position_mm < result.history.validation.front().position_mm / 10.0);
  CHECK(result.history.train_loss.back().total < result.history.train_loss.front().total);
}

TEST_CASE("zero learning rate leaves the initial network in place") {
  QuietWarnings quiet;
  const KinematicChain chain = testing::planar2();
  const Dataset data = generate_dataset(chain, 500, 1);
  TrainingConfig config = tiny_config();
  config.learning_rate = 0.0;
  const TrainResult result = train(config, chain, data, data);
  MlpModel init = init_model(result.model.layer_sizes(), config.seed);
  init.norm() = result.model.norm();
  CHECK(result.model == init);
  const auto& v = result.history.validation;
  CHECK(v.front().position_mm == v.back().position_mm);
  CHECK(v.front().rotation_deg == v.back().rotation_deg);
}

TEST_CASE("training and checkpoints are reproducible") {
  QuietWarnings quiet;
  const KinematicChain chain = testing::planar2();
  const Dataset data = generate_dataset(chain, 2000, 1);
  const Dataset val = generate_dataset(chain, 200, 2);
  const TrainingConfig config = tiny_config();
  const TrainResult a = train(config, chain, data, val);
  const TrainResult b = train(config, chain, data, val);
  CHECK(a.model == b.model);
  const auto pa = testing::temp_path("a.cikm");
  const auto pb = testing::temp_path("b.cikm");
  save_checkpoint(a.model, pa);
  save_checkpoint(b.model, pb);
  CHECK(slurp(pa) == slurp(pb));

  const MlpModel loaded = load_checkpoint(pa);
  CHECK(loaded == a.model);
  const PoseBatch probe = val.pose_batch().topRows(50);
  CHECK(solve(loaded, probe) == solve(a.model, probe));
  save_checkpoint(loaded, pb);
  CHECK(slurp(pa) == slurp(pb));
}

TEST_CASE("checkpoint validation") {
  QuietWarnings quiet;
  const KinematicChain chain = testing::planar2();
  const Dataset data = generate_dataset(chain, 300, 1);
  TrainingConfig config = tiny_config();
  config.epochs = 1;
  const TrainResult trained = train(config, chain, data, data);
  const auto path = testing::temp_path("v.cikm");
  save_checkpoint(trained.model, path);
  const std::string good = slurp(path);
  const auto bad = testing::temp_path("bad.cikm");
  auto dump = [&](const std::string& bytes) {
    std::ofstream out(bad, std::ios::binary | std::ios::trunc);
    out << bytes;
  };
  dump(good.substr(0, good.size() - 5));
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  dump(good.substr(0, 6));
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  std::string bytes = good;
  bytes[1] = 'X';
  dump(bytes);
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  bytes = good;
  bytes[4] = 9;
  dump(bytes);
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  dump(good + "extra");
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);

  const MlpModel loaded = load_checkpoint(path);
  CHECK_NOTHROW(check_model_chain(loaded, chain));
  CHECK_THROWS_AS(check_model_chain(loaded, testing::ur5()), DimensionError);
  CHECK_THROWS_AS(validate_model(loaded, testing::ur5(), generate_dataset(testing::ur5(), 10, 1)), DimensionError);
  CHECK_THROWS_AS(train(config, testing::ur5(), data, data), DimensionError);
}
