#include "hesskit/train.hpp"

#include <cmath>

#include "hesskit/rng.hpp"

namespace hesskit {

TrainResult train(const MlpSpec& spec, const Dataset& data, const TrainConfig& config,
                  const ParamVector* warm_start, const GradientHook& gradient_hook,
                  const EpochHook& epoch_hook) {
  spec.validate();
  if (data.train_idx.empty()) throw std::invalid_argument("train: empty train split");
  if (config.batch_size <= 0) throw std::invalid_argument("train: batch_size must be positive");

  ParamVector theta = warm_start != nullptr ? *warm_start : init_params(spec, config.seed);
  Rng shuffle_rng(derive_seed(config.seed, 0xb417c5));

  const std::size_t p = theta.size();
  ParamVector m(p), v(p);  // Adam moments
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int step = 0;

  std::vector<int> order = data.train_idx;
  std::vector<int> batch_idx;
  TrainResult result;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (epoch_hook) epoch_hook(epoch, theta);
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                       order.begin() + static_cast<std::ptrdiff_t>(stop));
      const Batch batch = Batch::gather(data, batch_idx);
      const auto fwd = forward(spec, theta, batch);
      if (!std::isfinite(fwd.loss)) {
        throw TrainingDivergence("train: non-finite loss at epoch " + std::to_string(epoch));
      }
      loss_sum += fwd.loss;
      ++n_batches;

      ParamVector grad = gradient(spec, theta, batch);
      if (gradient_hook) gradient_hook(grad);

      if (config.optimizer == Optimizer::sgd) {
        axpy(-config.lr, grad, theta);
      } else {
        ++step;
        const double bc1 = 1.0 - std::pow(beta1, step);
        const double bc2 = 1.0 - std::pow(beta2, step);
        for (std::size_t i = 0; i < p; ++i) {
          m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
          v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
          theta[i] -= config.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
      }
    }
    result.epoch_loss.push_back(loss_sum / n_batches);
  }

  result.theta = std::move(theta);
  return result;
}

}  // namespace hesskit
