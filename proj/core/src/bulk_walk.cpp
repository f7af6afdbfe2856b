#include "hesskit/bulk_walk.hpp"

#include <cmath>
#include <stdexcept>

#include "hesskit/oracle.hpp"
#include "hesskit/orthogonal.hpp"
#include "hesskit/rng.hpp"

namespace hesskit {

namespace {

std::vector<ParamVector> projection_basis(const MlpSpec& spec, const ParamVector& theta,
                                          const Dataset& data, const BulkWalkConfig& config,
                                          int step, double* lambda_max) {
  const auto indices = uniform_batch_indices(
      data, Split::train, config.hvp_batch,
      derive_seed(config.seed, 0xa1, static_cast<std::uint64_t>(step)));
  const HvpOracle oracle = model_oracle(spec, theta, Batch::gather(data, indices));
  const ParamVector q1 = lanczos_start_vector(
      theta.size(), derive_seed(config.seed, 0xa2, static_cast<std::uint64_t>(step)));
  const LanczosResult lz = lanczos(oracle, q1, config.basis_m, 1e-10);
  const int order = static_cast<int>(lz.t.order());
  const int want = config.basis_k > 0 ? std::min(config.basis_k, order) : order;
  const SpikeBasis sb = ritz(lz, want);
  if (lambda_max != nullptr) *lambda_max = sb.eigenvalues.empty() ? 0.0 : sb.eigenvalues.front();
  std::vector<ParamVector> basis;
  for (std::size_t i = 0; i < sb.size(); ++i) {
    if (sb.eigenvalues[i] > 0.0) basis.push_back(sb.vectors[i]);
  }
  return basis;
}

double max_overlap(const ParamVector& d, const std::vector<ParamVector>& basis) {
  double worst = 0.0;
  for (const auto& q : basis) worst = std::max(worst, std::abs(dot(q, d)));
  return worst;
}

}  // namespace

BulkWalkLog bulk_walk(const MlpSpec& spec, const ParamVector& theta0, const Dataset& data,
                      const BulkWalkConfig& config) {
  if (config.steps < 1) throw std::invalid_argument("bulk_walk: steps must be >= 1");

  BulkWalkLog log;
  const double theta0_norm = norm(theta0);
  log.epsilon = config.epsilon > 0.0
                    ? config.epsilon
                    : config.target_displacement * theta0_norm / config.steps;

  ParamVector theta = theta0;
  {
    const Batch eval = Batch::gather(data, data.split(config.eval_split));
    log.start_loss = forward(spec, theta, eval).loss;
    log.start_per_class = accuracy_on_batch(spec, theta, eval, data.classes).per_class;
  }
  const std::vector<ParamVector> pinned_basis = qr_orthonormalize(config.fixed_basis);

  Rng direction_rng(derive_seed(config.seed, 0xd1));
  std::vector<ParamVector> history;
  ParamVector direction;  // empty until first sample
  bool have_direction = false;
  int consecutive_absorbed = 0;

  for (int step = 1; step <= config.steps; ++step) {
    BulkWalkStep rec;
    rec.step = step;

    double lmax = 0.0;
    const std::vector<ParamVector> spikes =
        pinned_basis.empty() ? projection_basis(spec, theta, data, config, step, &lmax)
                             : pinned_basis;
    rec.lambda_max = lmax;

    // Carry the direction through the rotated spike complement; a collapsed
    // norm means the spike subspace absorbed it (wall).
    if (have_direction) {
      ParamVector reproj = gram_schmidt_residual(direction, spikes);
      const double rn = norm(reproj);
      if (rn < config.wall_tol) {
        rec.wall = true;
        history.push_back(direction);
        if (static_cast<int>(history.size()) > config.history_cap) {
          history.erase(history.begin());
        }
        ++log.archived_directions;
        have_direction = false;
      } else {
        scale(reproj, 1.0 / rn);
        direction = std::move(reproj);
      }
    }

    if (!have_direction) {
      // Fresh Gaussian direction, projected against spikes and history.
      for (int attempt = 0; attempt < 3 && !have_direction; ++attempt) {
        ParamVector z = normalized(direction_rng.gaussian_vector(theta.size()));
        ParamVector proj = gram_schmidt_residual(z, spikes);
        proj = gram_schmidt_residual(proj, history);
        const double pn = norm(proj);
        if (pn >= config.wall_tol) {
          scale(proj, 1.0 / pn);
          direction = std::move(proj);
          have_direction = true;
        }
      }
    }

    if (!have_direction) {
      rec.absorbed = true;
      log.steps.push_back(rec);
      if (++consecutive_absorbed >= config.max_consecutive_absorbed) {
        log.terminated_early = true;
        break;
      }
      continue;
    }
    consecutive_absorbed = 0;

    rec.max_spike_overlap = max_overlap(direction, spikes);
    axpy(log.epsilon, direction, theta);

    const Batch eval = Batch::gather(data, data.split(config.eval_split));
    rec.loss = forward(spec, theta, eval).loss;
    const ClassAccuracy acc = accuracy_on_batch(spec, theta, eval, data.classes);
    rec.global_acc = acc.global;
    rec.per_class_acc = acc.per_class;
    log.steps.push_back(rec);
  }

  {
    const Batch eval = Batch::gather(data, data.split(config.eval_split));
    log.end_loss = forward(spec, theta, eval).loss;
    log.end_per_class = accuracy_on_batch(spec, theta, eval, data.classes).per_class;
  }
  log.relative_displacement = norm(sub(theta, theta0)) / theta0_norm;
  return log;
}

}  // namespace hesskit
