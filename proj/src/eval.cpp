#include "cycleik/eval.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "cycleik/trainer.hpp"

namespace cycleik {

unsigned thread_limit() {
  if (const char* env = std::getenv("CIK_THREADS")) {
    const long value = std::strtol(env, nullptr, 10);
    if (value >= 1) return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(thread_limit(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

JointVector default_idle(const KinematicChain& chain) {
  return 0.5 * (chain.lower_limits() + chain.upper_limits());
}

Solver mlp_solver(const MlpModel& model, std::size_t batch_size) {
  Solver solver;
  solver.name = "mlp";
  solver.batch_size = batch_size;
  solver.solve = [&model](const PoseBatch& targets, std::size_t) {
    BatchSolution out;
    out.joints = solve(model, targets);
    out.solved.assign(static_cast<std::size_t>(targets.rows()), true);
    return out;
  };
  return solver;
}

Solver dls_solver(const KinematicChain& chain, const DlsParams& params, JointVector seed_joints,
                  std::uint64_t rng_seed) {
  if (seed_joints.size() == 0) seed_joints = default_idle(chain);
  Solver solver;
  solver.name = "dls";
  solver.batch_size = 64;
  solver.solve = [&chain, params, seed_joints, rng_seed](const PoseBatch& targets, std::size_t first_row) {
    BatchSolution out;
    out.joints.resize(targets.rows(), chain.dof());
    out.solved.assign(static_cast<std::size_t>(targets.rows()), false);
    std::vector<char> solved(static_cast<std::size_t>(targets.rows()), 0);
    parallel_for(static_cast<std::size_t>(targets.rows()), [&](std::size_t i) {
      const auto row = static_cast<Eigen::Index>(i);
      const Pose target = Pose::from_packed(targets.row(row).transpose());
      const DlsResult result = solve_dls(chain, target, seed_joints, params, rng_seed + first_row + i);
      out.joints.row(row) = result.joints.transpose();
      solved[i] = result.success ? 1 : 0;
    });
    for (std::size_t i = 0; i < solved.size(); ++i) out.solved[i] = solved[i] != 0;
    return out;
  };
  return solver;
}

Solver oracle_solver(const Dataset& data) {
  Solver solver;
  solver.name = "oracle";
  solver.batch_size = 100;
  solver.solve = [&data](const PoseBatch& targets, std::size_t first_row) {
    BatchSolution out;
    out.joints = data.joints.middleRows(static_cast<Eigen::Index>(first_row), targets.rows()).cast<double>();
    out.solved.assign(static_cast<std::size_t>(targets.rows()), true);
    return out;
  };
  return solver;
}

SolverReport evaluate(const Solver& solver, const KinematicChain& chain, const Dataset& test_set,
                      const SuccessCriterion& criterion) {
  if (test_set.dof() != chain.dof()) throw DimensionError("evaluate: test set does not match the chain");
  if (!(criterion.position_threshold > 0.0) || !(criterion.rotation_threshold > 0.0)) {
    throw ValueError("evaluate: success thresholds must be positive");
  }
  if (solver.batch_size < 1 || !solver.solve) throw ValueError("evaluate: invalid solver");
  const JointVector idle = criterion.idle.size() > 0 ? criterion.idle : default_idle(chain);
  if (idle.size() != chain.dof()) throw DimensionError("evaluate: idle configuration has wrong dof");
  const Pose idle_pose = forward_kinematics(chain, idle);

  const PoseBatch targets = test_set.pose_batch();
  const Eigen::Index n = targets.rows();
  PoseBatch reached(n, kPoseWidth);
  double solve_ms = 0.0;
  for (Eigen::Index start = 0; start < n; start += static_cast<Eigen::Index>(solver.batch_size)) {
    const Eigen::Index count = std::min<Eigen::Index>(static_cast<Eigen::Index>(solver.batch_size), n - start);
    const PoseBatch block = targets.middleRows(start, count);
    const auto t0 = std::chrono::steady_clock::now();
    const BatchSolution solution = solver.solve(block, static_cast<std::size_t>(start));
    solve_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (solution.joints.rows() != count || solution.joints.cols() != chain.dof() ||
        solution.solved.size() != static_cast<std::size_t>(count)) {
      throw DimensionError("evaluate: solver '" + solver.name + "' returned a mis-shaped batch");
    }
    for (Eigen::Index i = 0; i < count; ++i) {
      const Pose pose = solution.solved[static_cast<std::size_t>(i)]
                            ? forward_kinematics(chain, solution.joints.row(i).transpose())
                            : idle_pose;
      reached.row(start + i) = pose.packed().transpose();
    }
  }

  const PoseErrors errors = pose_errors(reached, targets);
  std::size_t successes = 0;
  for (std::size_t i = 0; i < errors.position_mm.size(); ++i) {
    if (errors.position_mm[i] <= criterion.position_threshold * 1000.0 &&
        errors.rotation_deg[i] <= criterion.rotation_threshold) {
      ++successes;
    }
  }
  const SummaryStats position = summarize(errors.position_mm);
  const SummaryStats rotation = summarize(errors.rotation_deg);

  SolverReport report;
  report.solver = solver.name;
  report.samples = static_cast<std::size_t>(n);
  report.position_mm = position.mean;
  report.position_sigma_mm = position.stddev;
  report.rotation_deg = rotation.mean;
  report.rotation_sigma_deg = rotation.stddev;
  report.success_rate = n > 0 ? 100.0 * static_cast<double>(successes) / static_cast<double>(n) : 0.0;
  report.runtime_ms = n > 0 ? solve_ms / static_cast<double>(n) : 0.0;
  report.batch_size = solver.batch_size;
  return report;
}

void write_report(std::ostream& out, const EvalReport& report, bool include_timing) {
  char line[256];
  std::snprintf(line, sizeof(line), "%-8s %8s %10s %10s %10s %10s %9s", "solver", "samples", "pos_mm",
                "sigma_pos", "rot_deg", "sigma_rot", "success%");
  out << line;
  if (include_timing) {
    std::snprintf(line, sizeof(line), " %10s %6s", "time_ms", "batch");
    out << line;
  }
  out << '\n';
  for (const SolverReport& r : report.solvers) {
    std::snprintf(line, sizeof(line), "%-8s %8zu %10.4f %10.4f %10.4f %10.4f %9.2f", r.solver.c_str(),
                  r.samples, r.position_mm, r.position_sigma_mm, r.rotation_deg, r.rotation_sigma_deg,
                  r.success_rate);
    out << line;
    if (include_timing) {
      std::snprintf(line, sizeof(line), " %10.5f %6zu", r.runtime_ms, r.batch_size);
      out << line;
    }
    out << '\n';
  }
  for (const SolverReport& r : report.solvers) {
    std::snprintf(line, sizeof(line),
                  "solver=%s samples=%zu pos_mm=%.9g sigma_pos_mm=%.9g rot_deg=%.9g sigma_rot_deg=%.9g "
                  "success_pct=%.9g",
                  r.solver.c_str(), r.samples, r.position_mm, r.position_sigma_mm, r.rotation_deg,
                  r.rotation_sigma_deg, r.success_rate);
    out << line;
    if (include_timing) {
      std::snprintf(line, sizeof(line), " time_ms=%.9g batch=%zu", r.runtime_ms, r.batch_size);
      out << line;
    }
    out << '\n';
  }
}

}  // namespace cycleik
