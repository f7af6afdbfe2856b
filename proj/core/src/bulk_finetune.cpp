#include "hesskit/bulk_finetune.hpp"

#include <cmath>

#include "hesskit/oracle.hpp"
#include "hesskit/orthogonal.hpp"
#include "hesskit/rng.hpp"

namespace hesskit {

BulkFinetuneResult bulk_projected_finetune(const MlpSpec& spec, const ParamVector& theta0,
                                           const Dataset& data,
                                           const std::vector<ParamVector>& initial_basis,
                                           const BulkFinetuneConfig& config) {
  std::vector<ParamVector> basis = qr_orthonormalize(initial_basis);
  BulkFinetuneResult result;

  GradientHook projector = [&](ParamVector& grad) {
    if (basis.empty()) return;
    const double gnorm_before = norm(grad);
    grad = gram_schmidt_residual(grad, basis);
    if (gnorm_before > 0.0) {
      double worst = 0.0;
      for (const auto& q : basis) worst = std::max(worst, std::abs(dot(q, grad)));
      const double gnorm = norm(grad);
      if (gnorm > 0.0) result.worst_projection = std::max(result.worst_projection, worst / gnorm);
    }
  };

  EpochHook refresher = nullptr;
  if (config.refresh_every_epochs > 0) {
    refresher = [&, refresh_count = 0](int epoch, const ParamVector& theta) mutable {
      if (epoch % config.refresh_every_epochs != 0) return;
      const auto indices = uniform_batch_indices(
          data, Split::train, config.hvp_batch,
          derive_seed(config.refresh_seed, 0xbf, static_cast<std::uint64_t>(refresh_count)));
      const HvpOracle oracle = model_oracle(spec, theta, Batch::gather(data, indices));
      const ParamVector q1 = lanczos_start_vector(
          theta.size(),
          derive_seed(config.refresh_seed, 0xc0, static_cast<std::uint64_t>(refresh_count)));
      ++refresh_count;
      const LanczosResult lz = lanczos(oracle, q1, config.lanczos_m, config.lanczos_tol);
      const int take = std::min<int>(config.k_spikes, static_cast<int>(lz.t.order()));
      const SpikeBasis sb = ritz(lz, take);
      basis.clear();
      for (std::size_t i = 0; i < sb.size(); ++i) {
        if (sb.eigenvalues[i] > 0.0) basis.push_back(sb.vectors[i]);
      }
    };
  }

  TrainResult trained = train(spec, data, config.train, &theta0, projector, refresher);
  result.theta = std::move(trained.theta);
  result.epoch_loss = std::move(trained.epoch_loss);
  return result;
}

}  // namespace hesskit
