#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hesskit/dataset.hpp"
#include "hesskit/mlp.hpp"
#include "hesskit/param_vector.hpp"

namespace hesskit {

enum class Optimizer { sgd, adam };

struct TrainConfig {
  int epochs = 50;
  double lr = 0.05;
  int batch_size = 64;
  std::uint64_t seed = 1;
  Optimizer optimizer = Optimizer::adam;
};

struct TrainResult {
  ParamVector theta;
  std::vector<double> epoch_loss;
};

struct TrainingDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Hook applied to every gradient before the optimizer step (bulk-projected
/// fine-tuning installs a projector here). Called with the raw batch gradient.
using GradientHook = std::function<void(ParamVector&)>;
/// Called at the start of every epoch with (epoch, current theta).
using EpochHook = std::function<void(int, const ParamVector&)>;

/// Deterministic mini-batch trainer. With warm_start null, parameters are
/// initialized from the seed; otherwise training continues from *warm_start
/// and the seed only drives the batch shuffle. Aborts with
/// TrainingDivergence when the loss stops being finite.
TrainResult train(const MlpSpec& spec, const Dataset& data, const TrainConfig& config,
                  const ParamVector* warm_start = nullptr,
                  const GradientHook& gradient_hook = nullptr,
                  const EpochHook& epoch_hook = nullptr);

}  // namespace hesskit
