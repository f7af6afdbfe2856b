#pragma once

#include <cstdint>
#include <vector>

#include "hesskit/dataset.hpp"
#include "hesskit/lanczos.hpp"
#include "hesskit/mlp.hpp"

namespace hesskit {

struct BulkWalkConfig {
  // Defaults are the calibrated desk-scale preset: many small steps with a
  // wide projection window keep the carried direction aligned with the
  // rotating curvature complement, and the train split gives the largest
  // per-class sample counts for the invariance check.
  int steps = 100;
  double epsilon = 0.0;   // 0 -> auto-tuned for cumulative relative displacement `target_displacement`
  double target_displacement = 2.0;
  double wall_tol = 0.5;  // tau: renormalized-projection norm below it means absorbed
  int basis_m = 400;      // Lanczos order for the projection basis refresh
  int basis_k = 0;        // directions projected out; 0 -> all positive Ritz pairs
  int hvp_batch = 256;
  int history_cap = 64;
  int max_consecutive_absorbed = 3;
  Split eval_split = Split::train;
  std::uint64_t seed = 11;
  /// Non-empty: walk against this fixed basis instead of refreshing one by
  /// Lanczos each step (orthonormalized once at the start).
  std::vector<ParamVector> fixed_basis;
};

struct BulkWalkStep {
  int step = 0;
  double loss = 0.0;
  double global_acc = 0.0;
  std::vector<double> per_class_acc;
  double lambda_max = 0.0;
  bool wall = false;
  bool absorbed = false;          // no usable direction this step
  double max_spike_overlap = 0.0; // max |q_i . d| at projection time
};

struct BulkWalkLog {
  std::vector<BulkWalkStep> steps;
  double epsilon = 0.0;
  double relative_displacement = 0.0;  // ||theta_f - theta_0|| / ||theta_0||
  double start_loss = 0.0;
  double end_loss = 0.0;
  std::vector<double> start_per_class;
  std::vector<double> end_per_class;
  int archived_directions = 0;
  bool terminated_early = false;  // every candidate direction absorbed
};

/// Directed walk constrained orthogonal to the spike subspace: refresh the
/// basis each step, carry the direction (re-projected) until a wall, archive
/// walls and sample fresh directions orthogonal to spikes and history.
BulkWalkLog bulk_walk(const MlpSpec& spec, const ParamVector& theta0, const Dataset& data,
                      const BulkWalkConfig& config);

}  // namespace hesskit
