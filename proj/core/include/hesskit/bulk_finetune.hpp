#pragma once

#include <vector>

#include "hesskit/dataset.hpp"
#include "hesskit/lanczos.hpp"
#include "hesskit/train.hpp"

namespace hesskit {

struct BulkFinetuneConfig {
  TrainConfig train;
  int refresh_every_epochs = 1;  // 0 disables refresh (keep the initial basis)
  int lanczos_m = 10;
  double lanczos_tol = 1e-10;
  int hvp_batch = 256;
  int k_spikes = 3;
  std::uint64_t refresh_seed = 7;
};

struct BulkFinetuneResult {
  ParamVector theta;
  std::vector<double> epoch_loss;
  double worst_projection = 0.0;  // max |q_i . g| / ||g|| over all applied steps
};

/// Fine-tunes with every gradient projected orthogonally to the current spike
/// basis; the basis is recomputed on a configurable epoch cadence. An empty
/// initial basis with refresh disabled reproduces plain training exactly.
BulkFinetuneResult bulk_projected_finetune(const MlpSpec& spec, const ParamVector& theta0,
                                           const Dataset& data,
                                           const std::vector<ParamVector>& initial_basis,
                                           const BulkFinetuneConfig& config);

}  // namespace hesskit
