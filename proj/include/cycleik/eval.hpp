#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cycleik/chain.hpp"
#include "cycleik/dataset.hpp"
#include "cycleik/dls.hpp"
#include "cycleik/metrics.hpp"
#include "cycleik/mlp.hpp"

namespace cycleik {

struct SuccessCriterion {
  double position_threshold = 0.010;  // m
  double rotation_threshold = 20.0;   // deg
  JointVector idle;                   // empty: midpoint of the joint limits
};

/// Joint solutions for a batch of targets. Rows with solved[i] == false are
/// scored against the idle configuration instead.
struct BatchSolution {
  JointBatch joints;
  std::vector<bool> solved;
};

/// A solver under evaluation. `solve` receives a block of targets and the
/// index of its first row within the test set.
struct Solver {
  std::string name;
  std::size_t batch_size = 1;
  std::function<BatchSolution(const PoseBatch& targets, std::size_t first_row)> solve;
};

/// Neural solver; batches of `batch_size` poses per network call.
Solver mlp_solver(const MlpModel& model, std::size_t batch_size = 100);

/// DLS seeded from `seed_joints` (empty: limit midpoint); row i restarts from
/// rng stream `rng_seed + i`. Rows are solved in parallel, capped by CIK_THREADS.
Solver dls_solver(const KinematicChain& chain, const DlsParams& params = {},
                  JointVector seed_joints = {}, std::uint64_t rng_seed = 0);

/// Returns the dataset's own joint rows.
Solver oracle_solver(const Dataset& data);

struct SolverReport {
  std::string solver;
  std::size_t samples = 0;
  double position_mm = 0.0;
  double position_sigma_mm = 0.0;
  double rotation_deg = 0.0;
  double rotation_sigma_deg = 0.0;
  double success_rate = 0.0;  // percent
  double runtime_ms = 0.0;    // wall clock per sample
  std::size_t batch_size = 0;
};

struct EvalReport {
  std::vector<SolverReport> solvers;
};

/// Midpoint of the joint limits.
JointVector default_idle(const KinematicChain& chain);

/// Scores `solver` on every pose of `test_set`. Failed solves contribute the
/// error of FK(idle). Runtime covers the solve calls only.
SolverReport evaluate(const Solver& solver, const KinematicChain& chain, const Dataset& test_set,
                      const SuccessCriterion& criterion = {});

/// Aligned table followed by one `key=value` line per solver. With
/// `include_timing` false the runtime fields are omitted, which makes the
/// report reproducible byte for byte.
void write_report(std::ostream& out, const EvalReport& report, bool include_timing = true);

/// Worker count from CIK_THREADS (default: hardware concurrency, at least 1).
unsigned thread_limit();

/// Runs fn(i) for i in [0, n) on up to thread_limit() threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace cycleik
