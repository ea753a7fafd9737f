#include "cycleik/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "cycleik/dataset.hpp"
#include "cycleik/dls.hpp"
#include "cycleik/eval.hpp"
#include "cycleik/planner.hpp"
#include "cycleik/trainer.hpp"

namespace cycleik {
namespace {

struct ChainArgs {
  std::string path;
  std::string base;
  std::string tip;

  void add_to(CLI::App* app) {
    app->add_option("--chain", path, "URDF robot description")->required()->check(CLI::ExistingFile);
    app->add_option("--base", base, "base link name")->required();
    app->add_option("--tip", tip, "tip link name")->required();
  }
  KinematicChain load() const { return load_chain(path, base, tip); }
};

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> values;
  std::stringstream in(text);
  in.imbue(std::locale::classic());
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValueError(std::string("cannot parse ") + what + " '" + text + "'");
    }
  }
  if (expected != 0 && values.size() != expected) {
    throw ValueError(std::string(what) + " needs " + std::to_string(expected) + " comma-separated values");
  }
  return values;
}

Pose pose_from(const std::vector<double>& v) {
  Pose pose = Pose::from_packed(Eigen::Map<const Eigen::Matrix<double, 7, 1>>(v.data()));
  const double norm = pose.orientation.norm();
  if (!(norm > 0.0)) throw ValueError("pose quaternion has zero norm");
  pose.orientation.normalize();
  return pose;
}

JointVector joints_from(const std::vector<double>& v, const KinematicChain& chain, const char* what) {
  if (static_cast<int>(v.size()) != chain.dof()) {
    throw DimensionError(std::string(what) + " needs " + std::to_string(chain.dof()) + " values");
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void print_joints(std::ostream& out, const JointVector& joints) {
  char buf[32];
  out << "joints:";
  for (Eigen::Index i = 0; i < joints.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %.9g", joints[i]);
    out << buf;
  }
  out << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw FormatError("cannot open '" + path + "' for writing");
  file << text;
  if (!file) throw FormatError("write failed for '" + path + "'");
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural inverse kinematics: data generation, training, evaluation and planning", "cycleik"};
  app.require_subcommand(1);

  // gen-data
  ChainArgs gen_chain;
  std::size_t gen_count = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "sample joint configurations and write a pose dataset");
  gen_chain.add_to(gen);
  gen->add_option("--count", gen_count, "number of samples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--out", gen_out, "output dataset (.cikd)")->required();

  // train
  ChainArgs train_chain;
  std::string train_data, train_val, train_out, train_history, train_preset = "desk", train_loss = "smooth";
  std::size_t val_count = 2000;
  std::optional<std::uint64_t> val_seed;
  std::uint64_t train_seed = 0;
  std::optional<int> train_epochs;
  std::optional<std::size_t> train_batch;
  std::optional<double> train_lr, train_wpos, train_wrot, train_flip, train_centering;
  std::vector<int> train_hidden;
  bool desk_scale = false;
  auto* tr = app.add_subcommand("train", "train a network on a pose dataset");
  train_chain.add_to(tr);
  tr->add_option("--data", train_data, "training dataset (.cikd)")->required()->check(CLI::ExistingFile);
  tr->add_option("--val", train_val, "validation dataset (.cikd); generated when omitted")->check(CLI::ExistingFile);
  tr->add_option("--val-count", val_count, "size of the generated validation set");
  tr->add_option("--val-seed", val_seed, "seed of the generated validation set (default: seed + 1)");
  tr->add_option("--preset", train_preset, "hyperparameter preset")
      ->check(CLI::IsMember(preset_names()));
  tr->add_option("--epochs", train_epochs, "epochs (default 10)");
  tr->add_option("--batch-size", train_batch, "batch size");
  tr->add_option("--lr", train_lr, "initial learning rate");
  tr->add_option("--hidden", train_hidden, "hidden layer widths");
  tr->add_option("--w-pos", train_wpos, "position loss weight");
  tr->add_option("--w-rot", train_wrot, "rotation loss weight");
  tr->add_option("--loss", train_loss, "loss variant")->check(CLI::IsMember({"smooth", "legacy"}));
  tr->add_option("--sign-flip", train_flip, "share of targets with negated quaternions");
  tr->add_option("--centering", train_centering, "weight of the joint-centering constraint");
  tr->add_flag("--desk-scale", desk_scale, "allow batch sizes below 100");
  tr->add_option("--seed", train_seed, "random seed");
  tr->add_option("--out", train_out, "output checkpoint (.cikm)")->required();
  tr->add_option("--history", train_history, "history text file (default: <out>.history)");

  // eval
  ChainArgs eval_chain;
  std::string eval_model, eval_data, eval_report, eval_method = "mlp";
  std::size_t eval_batch = 100;
  std::vector<double> eval_idle;
  double pos_threshold = 0.010, rot_threshold = 20.0;
  bool no_timing = false;
  std::uint64_t eval_seed = 0;
  auto* ev = app.add_subcommand("eval", "evaluate one solver on a test dataset");
  eval_chain.add_to(ev);
  ev->add_option("--model", eval_model, "checkpoint (.cikm), required for mlp")->check(CLI::ExistingFile);
  ev->add_option("--data", eval_data, "test dataset (.cikd)")->required()->check(CLI::ExistingFile);
  ev->add_option("--method", eval_method, "solver")->check(CLI::IsMember({"mlp", "dls"}));
  ev->add_option("--batch-size", eval_batch, "poses per network call")->check(CLI::PositiveNumber);
  ev->add_option("--idle", eval_idle, "idle joint configuration (default: limit midpoints)");
  ev->add_option("--pos-threshold", pos_threshold, "success threshold (m)");
  ev->add_option("--rot-threshold", rot_threshold, "success threshold (deg)");
  ev->add_option("--seed", eval_seed, "DLS restart seed");
  ev->add_option("--report", eval_report, "report file (default: stdout)");
  ev->add_flag("--no-timing", no_timing, "omit runtime columns (reproducible report)");

  // bench
  ChainArgs bench_chain;
  std::string bench_model, bench_data, bench_report;
  std::vector<std::string> bench_solvers{"mlp", "dls"};
  std::size_t bench_batch = 100;
  bool bench_no_timing = false;
  std::uint64_t bench_seed = 0;
  auto* be = app.add_subcommand("bench", "evaluate several solvers side by side");
  bench_chain.add_to(be);
  be->add_option("--model", bench_model, "checkpoint (.cikm)")->check(CLI::ExistingFile);
  be->add_option("--data", bench_data, "test dataset (.cikd)")->required()->check(CLI::ExistingFile);
  be->add_option("--solvers", bench_solvers, "solvers to compare")
      ->delimiter(',')
      ->check(CLI::IsMember({"mlp", "dls"}));
  be->add_option("--batch-size", bench_batch, "poses per network call")->check(CLI::PositiveNumber);
  be->add_option("--seed", bench_seed, "DLS restart seed");
  be->add_option("--report", bench_report, "report file (default: stdout)");
  be->add_flag("--no-timing", bench_no_timing, "omit runtime columns");

  // solve
  ChainArgs solve_chain;
  std::string solve_method = "mlp", solve_model;
  std::vector<double> solve_pose, solve_seed_joints;
  std::uint64_t solve_seed = 0;
  auto* so = app.add_subcommand("solve", "solve IK for a single pose");
  solve_chain.add_to(so);
  so->add_option("--method", solve_method, "solver")->check(CLI::IsMember({"mlp", "dls"}));
  so->add_option("--model", solve_model, "checkpoint (.cikm), required for mlp")->check(CLI::ExistingFile);
  so->add_option("--pose", solve_pose, "px py pz qw qx qy qz")->required()->expected(7);
  so->add_option("--seed-joints", solve_seed_joints, "DLS start configuration");
  so->add_option("--seed", solve_seed, "DLS restart seed");

  // plan
  ChainArgs plan_chain;
  std::string plan_model, plan_out, plan_workspace = "nico";
  std::vector<double> plan_start, plan_start_joints, plan_target, plan_object;
  std::vector<std::string> plan_via, plan_keys;
  int plan_steps = kDefaultPlanSteps;
  auto* pl = app.add_subcommand("plan", "plan a Cartesian trajectory and convert it to joints");
  plan_chain.add_to(pl);
  pl->add_option("--model", plan_model, "checkpoint (.cikm)")->required()->check(CLI::ExistingFile);
  auto* start_pose_opt = pl->add_option("--start", plan_start, "start pose px py pz qw qx qy qz")->expected(7);
  pl->add_option("--start-joints", plan_start_joints, "start configuration (pose from FK)")
      ->excludes(start_pose_opt);
  auto* target_opt = pl->add_option("--target", plan_target, "target pose px py pz qw qx qy qz")->expected(7);
  pl->add_option("--via", plan_via, "interior control point x,y,z (repeatable)");
  pl->add_option("--key", plan_keys, "interior key rotation w,x,y,z (repeatable)");
  pl->add_option("--grasp-object", plan_object, "object position; plans reach and deposit phases")
      ->expected(3)
      ->excludes(target_opt);
  pl->add_option("--workspace", plan_workspace, "grasp workspace preset")->check(CLI::IsMember({"nico", "nicol"}));
  pl->add_option("--steps", plan_steps, "steps N (N + 1 waypoints)")->check(CLI::PositiveNumber);
  pl->add_option("--out", plan_out, "plan export file")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      const KinematicChain chain = gen_chain.load();
      const Dataset data = generate_dataset(chain, gen_count, gen_seed);
      write_dataset(data, gen_out);
      out << "wrote " << data.size() << " samples (dof " << data.dof() << ") to " << gen_out << '\n';
    } else if (tr->parsed()) {
      const KinematicChain chain = train_chain.load();
      TrainingConfig config = preset(train_preset);
      config.seed = train_seed;
      config.epochs = train_epochs.value_or(10);
      if (train_batch) config.batch_size = *train_batch;
      if (train_lr) config.learning_rate = *train_lr;
      if (!train_hidden.empty()) config.hidden_sizes = train_hidden;
      if (train_wpos) config.weights.w_pos = *train_wpos;
      if (train_wrot) config.weights.w_rot = *train_wrot;
      if (train_flip) config.sign_flip_fraction = *train_flip;
      if (train_centering) config.weights.secondary.emplace_back("joint-centering", *train_centering);
      config.variant = train_loss == "legacy" ? LossVariant::kLegacy : LossVariant::kSmooth;
      config.desk_scale = desk_scale;

      const Dataset train_set = read_dataset(train_data, chain.dof());
      const Dataset val_set = train_val.empty()
                                  ? generate_dataset(chain, val_count, val_seed.value_or(train_seed + 1))
                                  : read_dataset(train_val, chain.dof());
      std::ostringstream history;
      history << "# epoch total pos_loss rot_loss val_pos_mm val_rot_deg\n";
      const TrainResult result = train(config, chain, train_set, val_set, [&](const EpochReport& r) {
        char line[256];
        std::snprintf(line, sizeof(line), "%d %.9g %.9g %.9g %.9g %.9g\n", r.epoch, r.train_loss.total,
                      r.train_loss.pos_loss, r.train_loss.rot_loss, r.validation.position_mm,
                      r.validation.rotation_deg);
        history << line;
        out << "epoch " << r.epoch << ": loss " << r.train_loss.total << ", validation "
            << r.validation.position_mm << " mm / " << r.validation.rotation_deg << " deg\n";
      });
      save_checkpoint(result.model, train_out);
      write_text(train_history.empty() ? train_out + ".history" : train_history, history.str());
      out << "wrote " << train_out << '\n';
    } else if (ev->parsed() || be->parsed()) {
      const bool is_bench = be->parsed();
      const KinematicChain chain = (is_bench ? bench_chain : eval_chain).load();
      const Dataset test_set = read_dataset(is_bench ? bench_data : eval_data, chain.dof());
      const std::vector<std::string> methods = is_bench ? bench_solvers : std::vector<std::string>{eval_method};
      const std::string& model_path = is_bench ? bench_model : eval_model;
      const std::size_t batch = is_bench ? bench_batch : eval_batch;
      const std::uint64_t seed = is_bench ? bench_seed : eval_seed;

      std::optional<MlpModel> model;
      SuccessCriterion criterion;
      if (!is_bench) {
        criterion.position_threshold = pos_threshold;
        criterion.rotation_threshold = rot_threshold;
        if (!eval_idle.empty()) criterion.idle = joints_from(eval_idle, chain, "--idle");
      }
      EvalReport report;
      for (const std::string& method : methods) {
        if (method == "mlp") {
          if (model_path.empty()) throw ValueError("--model is required for the mlp solver");
          if (!model) model = load_checkpoint(model_path);
          check_model_chain(*model, chain);
          report.solvers.push_back(evaluate(mlp_solver(*model, batch), chain, test_set, criterion));
        } else {
          report.solvers.push_back(
              evaluate(dls_solver(chain, {}, criterion.idle, seed), chain, test_set, criterion));
        }
      }
      std::ostringstream text;
      write_report(text, report, !(is_bench ? bench_no_timing : no_timing));
      const std::string& report_path = is_bench ? bench_report : eval_report;
      if (report_path.empty()) {
        out << text.str();
      } else {
        write_text(report_path, text.str());
        out << "wrote " << report_path << '\n';
      }
    } else if (so->parsed()) {
      const KinematicChain chain = solve_chain.load();
      const Pose target = pose_from(solve_pose);
      JointVector joints;
      bool solved = true;
      if (solve_method == "mlp") {
        if (solve_model.empty()) throw ValueError("--model is required for the mlp solver");
        const MlpModel model = load_checkpoint(solve_model);
        check_model_chain(model, chain);
        PoseBatch batch(1, kPoseWidth);
        batch.row(0) = target.packed().transpose();
        joints = solve(model, batch).row(0).transpose();
      } else {
        const JointVector seed = solve_seed_joints.empty() ? default_idle(chain)
                                                           : joints_from(solve_seed_joints, chain, "--seed-joints");
        const DlsResult result = solve_dls(chain, target, seed, {}, solve_seed);
        joints = result.joints;
        solved = result.success;
      }
      const Pose reached = forward_kinematics(chain, joints);
      print_joints(out, joints);
      out << "status: " << (solved ? "solved" : "failed") << '\n';
      out << "residual_mm: " << 1000.0 * (reached.position - target.position).norm() << '\n';
      out << "residual_deg: " << rotation_error_deg(reached.orientation, target.orientation) << '\n';
      return solved ? 0 : 2;
    } else if (pl->parsed()) {
      const auto start_time = std::chrono::steady_clock::now();
      const KinematicChain chain = plan_chain.load();
      const MlpModel model = load_checkpoint(plan_model);
      check_model_chain(model, chain);
      Pose start;
      if (!plan_start.empty()) {
        start = pose_from(plan_start);
      } else if (!plan_start_joints.empty()) {
        start = forward_kinematics(chain, joints_from(plan_start_joints, chain, "--start-joints"));
      } else {
        throw ValueError("plan needs --start or --start-joints");
      }

      std::vector<TrajectoryPlan> plans;
      if (!plan_object.empty()) {
        GraspConfig config = grasp_preset(plan_workspace);
        config.steps = plan_steps;
        const GraspPlan grasp = plan_grasp(start, Eigen::Vector3d(plan_object[0], plan_object[1], plan_object[2]), config);
        plans.push_back(make_trajectory_plan(model, chain, grasp.reach, "reach"));
        plans.push_back(make_trajectory_plan(model, chain, grasp.deposit, "deposit"));
      } else if (!plan_target.empty()) {
        PlanShape shape;
        for (const auto& via : plan_via) {
          const auto v = parse_list(via, 3, "--via");
          shape.interior_points.emplace_back(v[0], v[1], v[2]);
        }
        for (const auto& key : plan_keys) {
          const auto v = parse_list(key, 4, "--key");
          shape.interior_rotations.emplace_back(v[0], v[1], v[2], v[3]);
        }
        plans.push_back(make_trajectory_plan(model, chain,
                                             plan_cartesian(start, pose_from(plan_target), shape, plan_steps), "plan"));
      } else {
        throw ValueError("plan needs --target or --grasp-object");
      }
      write_plan(std::filesystem::path(plan_out), plans);
      const double total_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_time).count();
      for (const auto& p : plans) {
        out << p.name << ": " << p.cartesian.k.size() << " waypoints, mean residual "
            << p.trajectory.position_residual_mm.mean() << " mm / " << p.trajectory.rotation_residual_deg.mean()
            << " deg, max joint step " << p.trajectory.max_joint_step << ", conversion " << p.planning_ms
            << " ms\n";
      }
      out << "planning latency " << total_ms << " ms (including model load); wrote " << plan_out << '\n';
    }
  } catch (const std::exception& e) {
    err << "cycleik: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace cycleik
