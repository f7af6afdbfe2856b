#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hesskit/amplitude.hpp"
#include "hesskit/dataset.hpp"
#include "hesskit/mlp.hpp"
#include "hesskit/sensitivity.hpp"
#include "hesskit/solver.hpp"
#include "hesskit/weights.hpp"

namespace hesskit {

struct SurgeryConfig {
  int iterations = 10;  // T
  int k_spikes = 3;     // K directions kept per iteration
  int lanczos_m = 10;
  double lanczos_tol = 1e-10;
  int hvp_batch = 256;
  bool hvp_stratified = false;
  int hvp_per_class = 32;
  BudgetMode budget_mode = BudgetMode::global_l2;
  double alpha_max0 = 0.06;
  double alpha_min = 0.006;
  double p_exponent = -1.0;  // negative -> auto via recommend_p
  WeightTarget target = WeightTarget::min_sigma;
  double protect_threshold = 0.85;
  double protect_floor = -0.01;
  double sigma_guard = 0.005;
  double class_drop_guard = 0.07;
  std::uint64_t seed = 1;
};

struct IterationRecord {
  int t = 0;
  bool accepted = false;
  bool rolled_back = false;
  bool skipped = false;  // solver infeasible
  std::vector<double> per_class_acc;  // state after the iteration, sensitivity split
  double sigma = 0.0;
  double alpha_used = 0.0;  // alpha_max^(t) in effect during the iteration
  std::vector<double> alpha_star;
  std::vector<double> eigenvalues;
  double g = 0.0;
  double snr = 0.0;
  std::uint64_t hvp_seed = 0;
};

struct SurgeryState {
  ParamVector theta;
  ClassAccuracy accuracy;  // sensitivity split, current parameters
  double sigma0 = 0.0;
  std::vector<IterationRecord> log;
  // Amplitude controller snapshot (enough to resume bit-exactly).
  double controller_m = 0.0;
  double controller_v = 0.0;
  int controller_t = 0;
  double controller_alpha = 0.0;

  int next_iteration() const { return static_cast<int>(log.size()) + 1; }
};

SurgeryState init_surgery_state(const MlpSpec& spec, const ParamVector& theta0,
                                const Dataset& data, const SurgeryConfig& config);

/// One iteration of the loop: recompute the spike basis on a fresh seeded HVP
/// batch, rebuild S at eps = current amplitude, solve, apply, accept or roll
/// back against the sigma/per-class guards, then feed the improvement signal
/// into the amplitude controller.
IterationRecord surgery_step(SurgeryState& state, const MlpSpec& spec, const Dataset& data,
                             const SurgeryConfig& config);

struct SurgeryRun {
  SurgeryState state;
  ClassAccuracy heldout_before;
  ClassAccuracy heldout_after;
};

/// Full loop; the heldout split is only touched for the before/after report,
/// never inside the loop (audited).
SurgeryRun run_surgery(const MlpSpec& spec, const ParamVector& theta0, const Dataset& data,
                       const SurgeryConfig& config);

struct DeflatedSurgeryConfig {
  int phases = 2;
  int spikes_per_phase = 6;
  int iters_per_phase = 3;
  int lanczos_m = 12;
  double lanczos_tol = 1e-10;
  int hvp_batch = 256;
  double alpha_max1 = 0.06;
  int max_stored_vectors = 256;  // memory guard
  double protect_threshold = 0.85;
  double protect_floor = -0.01;
  double p_exponent = -1.0;
  WeightTarget target = WeightTarget::min_sigma;
  double sigma_guard = 0.005;
  double class_drop_guard = 0.07;
  std::uint64_t seed = 1;
};

struct DeflatedPhaseRecord {
  int phase = 0;
  int first_spike = 0;
  int last_spike = 0;
  double lambda_max = 0.0;
  double alpha_max = 0.0;
  double cross_corr_max = 0.0;  // max |q_new . q_prev| against all earlier phases
  double sigma = 0.0;
  double global = 0.0;
  bool stopped_by_memory_guard = false;
};

struct DeflatedSurgeryRun {
  ParamVector theta;
  std::vector<DeflatedPhaseRecord> phases;
  ClassAccuracy heldout_before;
  ClassAccuracy heldout_after;
};

/// Sequential deflated surgery: each phase runs Lanczos on the operator
/// deflated by the QR-reorthogonalized accumulated basis, targets the next
/// slice of spikes, and scales the amplitude by sqrt(lambda_max^1/lambda_max^l).
DeflatedSurgeryRun run_deflated_surgery(const MlpSpec& spec, const ParamVector& theta0,
                                        const Dataset& data,
                                        const DeflatedSurgeryConfig& config);

struct DecileRow {
  double baseline_mean = 0.0;
  double delta_mean = 0.0;
  int count = 0;
};

struct DecileReport {
  std::vector<DecileRow> rows;  // weakest group first
  bool collapsed = false;       // fewer classes than requested groups
};

/// Buckets classes by baseline accuracy into equal-count groups and reports
/// the mean accuracy change per group.
DecileReport decile_report(const ClassAccuracy& before, const ClassAccuracy& after,
                           int groups);

}  // namespace hesskit
