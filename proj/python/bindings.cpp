#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cycleik/dataset.hpp"
#include "cycleik/dls.hpp"
#include "cycleik/eval.hpp"
#include "cycleik/planner.hpp"
#include "cycleik/trainer.hpp"

namespace py = pybind11;
using namespace cycleik;

namespace {

Pose to_pose(const Eigen::Matrix<double, kPoseWidth, 1>& v) {
  Pose pose = Pose::from_packed(v);
  if (!(pose.orientation.norm() > 0.0)) throw ValueError("pose quaternion has zero norm");
  pose.orientation.normalize();
  return pose;
}

}  // namespace

PYBIND11_MODULE(_cycleik, m) {
  m.doc() = "Neural inverse kinematics for serial chains";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<ValueError>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());

  py::class_<KinematicChain>(m, "KinematicChain")
      .def_property_readonly("dof", &KinematicChain::dof)
      .def_property_readonly("base", &KinematicChain::base_name)
      .def_property_readonly("tip", &KinematicChain::tip_name)
      .def_property_readonly("lower_limits", &KinematicChain::lower_limits)
      .def_property_readonly("upper_limits", &KinematicChain::upper_limits)
      .def_property_readonly("joint_names",
                             [](const KinematicChain& c) {
                               std::vector<std::string> names;
                               for (int i : c.active_joints()) names.push_back(c.joints()[i].name);
                               return names;
                             })
      .def_property_readonly("fingerprint", &KinematicChain::fingerprint)
      .def("fk", [](const KinematicChain& c, const JointVector& q) { return forward_kinematics(c, q).packed(); },
           py::arg("joints"), "Tip pose (px, py, pz, qw, qx, qy, qz).")
      .def("fk_batch", &fk_batch, py::arg("joints"))
      .def("jacobian", &pose_jacobian, py::arg("joints"));

  m.def("load_chain", &load_chain, py::arg("path"), py::arg("base"), py::arg("tip"));
  m.def("parse_chain", &parse_chain, py::arg("urdf"), py::arg("base"), py::arg("tip"));

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("poses", &Dataset::poses)
      .def_readonly("joints", &Dataset::joints)
      .def("__len__", &Dataset::size)
      .def_property_readonly("dof", &Dataset::dof);
  m.def(
      "generate_dataset",
      [](const KinematicChain& chain, std::size_t count, std::uint64_t seed) {
        return generate_dataset(chain, count, seed);
      },
      py::arg("chain"), py::arg("count"), py::arg("seed") = 0);
  m.def("write_dataset", &write_dataset, py::arg("dataset"), py::arg("path"));
  m.def("read_dataset", &read_dataset, py::arg("path"), py::arg("expected_dof") = std::nullopt);

  py::class_<MlpModel>(m, "Model")
      .def_property_readonly("layer_sizes", &MlpModel::layer_sizes)
      .def_property_readonly("parameter_count", &MlpModel::parameter_count)
      .def("solve", [](const MlpModel& model, const PoseBatch& poses) { return solve(model, poses); },
           py::arg("poses"), "Joint solutions, one row per target pose.");
  m.def("save_checkpoint", &save_checkpoint, py::arg("model"), py::arg("path"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  py::enum_<LossVariant>(m, "LossVariant")
      .value("SMOOTH", LossVariant::kSmooth)
      .value("LEGACY", LossVariant::kLegacy);

  py::class_<TrainingConfig>(m, "TrainingConfig")
      .def(py::init<>())
      .def_readwrite("hidden_sizes", &TrainingConfig::hidden_sizes)
      .def_readwrite("batch_size", &TrainingConfig::batch_size)
      .def_readwrite("learning_rate", &TrainingConfig::learning_rate)
      .def_readwrite("epochs", &TrainingConfig::epochs)
      .def_readwrite("variant", &TrainingConfig::variant)
      .def_readwrite("seed", &TrainingConfig::seed)
      .def_readwrite("desk_scale", &TrainingConfig::desk_scale)
      .def_readwrite("sign_flip_fraction", &TrainingConfig::sign_flip_fraction)
      .def_property(
          "w_pos", [](const TrainingConfig& c) { return c.weights.w_pos; },
          [](TrainingConfig& c, double w) { c.weights.w_pos = w; })
      .def_property(
          "w_rot", [](const TrainingConfig& c) { return c.weights.w_rot; },
          [](TrainingConfig& c, double w) { c.weights.w_rot = w; })
      .def_property(
          "secondary", [](const TrainingConfig& c) { return c.weights.secondary; },
          [](TrainingConfig& c, std::vector<std::pair<std::string, double>> s) { c.weights.secondary = std::move(s); });
  m.def("preset", &preset, py::arg("name"));
  m.def("preset_names", &preset_names);

  m.def(
      "train",
      [](const TrainingConfig& config, const KinematicChain& chain, const Dataset& train_set,
         const Dataset& val_set) {
        TrainResult result;
        {
          py::gil_scoped_release release;
          result = train(config, chain, train_set, val_set);
        }
        py::list history;
        for (std::size_t e = 0; e < result.history.validation.size(); ++e) {
          py::dict row;
          row["epoch"] = e + 1;
          row["loss"] = result.history.train_loss[e].total;
          row["pos_loss"] = result.history.train_loss[e].pos_loss;
          row["rot_loss"] = result.history.train_loss[e].rot_loss;
          row["val_position_mm"] = result.history.validation[e].position_mm;
          row["val_rotation_deg"] = result.history.validation[e].rotation_deg;
          history.append(row);
        }
        return py::make_tuple(std::move(result.model), history);
      },
      py::arg("config"), py::arg("chain"), py::arg("train_set"), py::arg("val_set"),
      "Returns (model, per-epoch history).");

  m.def(
      "solve_dls",
      [](const KinematicChain& chain, const Eigen::Matrix<double, kPoseWidth, 1>& target, const JointVector& seed,
         int restarts, int max_iterations, std::uint64_t rng_seed) {
        DlsParams params;
        params.restarts = restarts;
        params.max_iterations = max_iterations;
        const DlsResult r = solve_dls(chain, to_pose(target), seed, params, rng_seed);
        py::dict out;
        out["success"] = r.success;
        out["joints"] = r.joints;
        out["position_residual"] = r.position_residual;
        out["rotation_residual"] = r.rotation_residual;
        out["iterations"] = r.iterations;
        out["attempts"] = r.attempts;
        return out;
      },
      py::arg("chain"), py::arg("target"), py::arg("seed"), py::arg("restarts") = DlsParams{}.restarts,
      py::arg("max_iterations") = DlsParams{}.max_iterations, py::arg("rng_seed") = 0);

  m.def(
      "evaluate",
      [](const MlpModel& model, const KinematicChain& chain, const Dataset& test_set, double position_threshold,
         double rotation_threshold) {
        SuccessCriterion criterion;
        criterion.position_threshold = position_threshold;
        criterion.rotation_threshold = rotation_threshold;
        const SolverReport r = evaluate(mlp_solver(model), chain, test_set, criterion);
        py::dict out;
        out["position_mm"] = r.position_mm;
        out["position_sigma_mm"] = r.position_sigma_mm;
        out["rotation_deg"] = r.rotation_deg;
        out["rotation_sigma_deg"] = r.rotation_sigma_deg;
        out["success_rate"] = r.success_rate;
        out["runtime_ms"] = r.runtime_ms;
        return out;
      },
      py::arg("model"), py::arg("chain"), py::arg("test_set"), py::arg("position_threshold") = 0.010,
      py::arg("rotation_threshold") = 20.0);

  m.def(
      "plan_cartesian",
      [](const Eigen::Matrix<double, kPoseWidth, 1>& start, const Eigen::Matrix<double, kPoseWidth, 1>& target,
         const std::vector<Eigen::Vector3d>& via, const std::vector<Eigen::Vector4d>& keys, int steps) {
        PlanShape shape;
        shape.interior_points = via;
        for (const auto& k : keys) shape.interior_rotations.emplace_back(k[0], k[1], k[2], k[3]);
        const CartesianPlan plan = plan_cartesian(to_pose(start), to_pose(target), shape, steps);
        return py::make_tuple(plan.k, plan.poses);
      },
      py::arg("start"), py::arg("target"), py::arg("via") = std::vector<Eigen::Vector3d>{},
      py::arg("keys") = std::vector<Eigen::Vector4d>{}, py::arg("steps") = kDefaultPlanSteps,
      "Returns (k, poses) with steps + 1 rows.");
  m.def("bezier_point",
        [](const std::vector<Eigen::Vector3d>& points, double k) { return bezier_point(ControlPolygon{points}, k); },
        py::arg("points"), py::arg("k"));
}
