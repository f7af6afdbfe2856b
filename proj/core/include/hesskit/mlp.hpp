#pragma once
#include <cmath>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hesskit/dataset.hpp"
#include "hesskit/dual.hpp"
#include "hesskit/param_vector.hpp"

namespace hesskit {

enum class Activation { tanh, relu };
enum class LossKind { cross_entropy, focal, weighted_ce };

/// Fully-connected softmax classifier specification. layer_widths runs
/// [input dim, hidden widths..., class count]; at least one hidden layer.
struct MlpSpec {
  std::vector<int> layer_widths;
  Activation activation = Activation::tanh;
  LossKind loss = LossKind::cross_entropy;
  double focal_gamma = 0.0;
  std::vector<double> class_weights;  // weighted_ce only, size = classes

  int layers() const { return static_cast<int>(layer_widths.size()) - 1; }
  int input_dim() const { return layer_widths.front(); }
  int classes() const { return layer_widths.back(); }
  int param_count() const;
  /// Offset of layer l's weight block; biases follow the weights.
  int weight_offset(int layer) const;
  void validate() const;

  std::string to_json() const;
  static MlpSpec from_json(const std::string& text);
};

struct ForwardResult {
  double loss = 0.0;
  std::vector<double> probs;  // n x classes, rows sum to 1
};

struct ClassAccuracy {
  std::vector<double> per_class;
  std::vector<int> counts;
  std::vector<bool> defined;  // false for classes absent from the split
  double global = 0.0;
  double sigma = 0.0;  // population std over defined classes

  int total() const;
  static ClassAccuracy from_values(std::vector<double> per_class, std::vector<int> counts);
};

ForwardResult forward(const MlpSpec& spec, const ParamVector& theta, const Batch& batch);

/// Exact reverse-mode gradient of the mean batch loss.
ParamVector gradient(const MlpSpec& spec, const ParamVector& theta, const Batch& batch);

/// Exact Hessian-vector product via forward-over-reverse: the gradient pass
/// runs on dual numbers seeded with (theta, v). Exactness holds for tanh;
/// relu uses the a.e. derivative.
ParamVector hvp(const MlpSpec& spec, const ParamVector& theta, const Batch& batch,
                const ParamVector& v);

/// Raw logits, n x classes row-major.
std::vector<double> logits(const MlpSpec& spec, const ParamVector& theta, const Batch& batch);

/// Argmax predictions; ties break toward the lowest class index.
std::vector<int> predict(const MlpSpec& spec, const ParamVector& theta, const Batch& batch);

ClassAccuracy per_class_accuracy(const MlpSpec& spec, const ParamVector& theta,
                                 const Dataset& ds, Split split);
ClassAccuracy accuracy_on_batch(const MlpSpec& spec, const ParamVector& theta,
                                const Batch& batch, int classes);

/// Seeded Gaussian init, std 1/sqrt(fan_in) per weight, zero biases.
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

namespace detail {

/// Loss (and optionally gradient / probabilities) of the mean batch loss,
/// templated on the scalar so the same code path serves values, gradients and
/// dual-number HVPs. grad may be null; probs may be null.
template <class T>
T loss_grad_engine(const MlpSpec& spec, const T* params, const Batch& batch, T* grad,
                   T* probs) {
  using std::exp;
  using std::log;
  using std::pow;
  using std::tanh;
  const int n_layers = spec.layers();
  const int classes = spec.classes();
  const auto& w = spec.layer_widths;

  std::vector<std::vector<T>> acts(static_cast<std::size_t>(n_layers) + 1);
  for (int l = 0; l <= n_layers; ++l) acts[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(w[static_cast<std::size_t>(l)]));
  std::vector<T> dz(static_cast<std::size_t>(classes));
  std::vector<T> dh;

  T loss_sum = T(0.0);
  for (int s = 0; s < batch.n; ++s) {
    const double* x = batch.x.data() + static_cast<std::size_t>(s) * batch.dim;
    const int y = batch.y[static_cast<std::size_t>(s)];
    for (int i = 0; i < w[0]; ++i) acts[0][static_cast<std::size_t>(i)] = T(x[i]);

    // Forward
    for (int l = 0; l < n_layers; ++l) {
      const int in = w[static_cast<std::size_t>(l)];
      const int out = w[static_cast<std::size_t>(l) + 1];
      const T* wl = params + spec.weight_offset(l);
      const T* bl = wl + static_cast<std::ptrdiff_t>(in) * out;
      auto& hin = acts[static_cast<std::size_t>(l)];
      auto& hout = acts[static_cast<std::size_t>(l) + 1];
      for (int j = 0; j < out; ++j) {
        T z = bl[j];
        for (int i = 0; i < in; ++i) z += wl[static_cast<std::ptrdiff_t>(i) * out + j] * hin[static_cast<std::size_t>(i)];
        if (l + 1 < n_layers) {
          hout[static_cast<std::size_t>(j)] =
              spec.activation == Activation::tanh ? tanh(z) : relu(z);
        } else {
          hout[static_cast<std::size_t>(j)] = z;  // logits
        }
      }
    }

    // Log-softmax
    auto& logit = acts[static_cast<std::size_t>(n_layers)];
    T zmax = logit[0];
    for (int c = 1; c < classes; ++c) {
      if (logit[static_cast<std::size_t>(c)] > zmax) zmax = logit[static_cast<std::size_t>(c)];
    }
    T expsum = T(0.0);
    for (int c = 0; c < classes; ++c) expsum += exp(logit[static_cast<std::size_t>(c)] - zmax);
    const T lse = zmax + log(expsum);
    const T logp_y = logit[static_cast<std::size_t>(y)] - lse;

    if (probs != nullptr) {
      for (int c = 0; c < classes; ++c) {
        probs[static_cast<std::ptrdiff_t>(s) * classes + c] =
            exp(logit[static_cast<std::size_t>(c)] - lse);
      }
    }

    switch (spec.loss) {
      case LossKind::cross_entropy:
        loss_sum += -logp_y;
        break;
      case LossKind::focal: {
        const T u = exp(logp_y);
        loss_sum += pow(T(1.0) - u, spec.focal_gamma) * (-logp_y);
        break;
      }
      case LossKind::weighted_ce:
        loss_sum += T(spec.class_weights[static_cast<std::size_t>(y)]) * (-logp_y);
        break;
    }

    if (grad == nullptr) continue;

    // dL/dz at the logits
    for (int c = 0; c < classes; ++c) {
      const T p_c = exp(logit[static_cast<std::size_t>(c)] - lse);
      const T delta = T(c == y ? 1.0 : 0.0);
      switch (spec.loss) {
        case LossKind::cross_entropy:
          dz[static_cast<std::size_t>(c)] = p_c - delta;
          break;
        case LossKind::weighted_ce:
          dz[static_cast<std::size_t>(c)] =
              T(spec.class_weights[static_cast<std::size_t>(y)]) * (p_c - delta);
          break;
        case LossKind::focal: {
          const T u = exp(logp_y);
          const T one_m_u = T(1.0) - u;
          const T dLdu = pow(one_m_u, spec.focal_gamma - 1.0) * T(spec.focal_gamma) * logp_y -
                         pow(one_m_u, spec.focal_gamma) / u;
          dz[static_cast<std::size_t>(c)] = dLdu * u * (delta - p_c);
          break;
        }
      }
    }

    // Backward
    for (int l = n_layers - 1; l >= 0; --l) {
      const int in = w[static_cast<std::size_t>(l)];
      const int out = w[static_cast<std::size_t>(l) + 1];
      T* gw = grad + spec.weight_offset(l);
      T* gb = gw + static_cast<std::ptrdiff_t>(in) * out;
      const T* wl = params + spec.weight_offset(l);
      const auto& hin = acts[static_cast<std::size_t>(l)];
      for (int i = 0; i < in; ++i) {
        const T hi = hin[static_cast<std::size_t>(i)];
        for (int j = 0; j < out; ++j) gw[static_cast<std::ptrdiff_t>(i) * out + j] += hi * dz[static_cast<std::size_t>(j)];
      }
      for (int j = 0; j < out; ++j) gb[j] += dz[static_cast<std::size_t>(j)];
      if (l == 0) break;
      dh.assign(static_cast<std::size_t>(in), T(0.0));
      for (int i = 0; i < in; ++i) {
        T acc = T(0.0);
        for (int j = 0; j < out; ++j) acc += wl[static_cast<std::ptrdiff_t>(i) * out + j] * dz[static_cast<std::size_t>(j)];
        dh[static_cast<std::size_t>(i)] = acc;
      }
      dz.assign(static_cast<std::size_t>(in), T(0.0));
      for (int i = 0; i < in; ++i) {
        const T a = hin[static_cast<std::size_t>(i)];
        if (spec.activation == Activation::tanh) {
          dz[static_cast<std::size_t>(i)] = dh[static_cast<std::size_t>(i)] * (T(1.0) - a * a);
        } else {
          dz[static_cast<std::size_t>(i)] =
              value_of(a) > 0.0 ? dh[static_cast<std::size_t>(i)] : T(0.0);
        }
      }
    }
  }

  const T inv_n = T(1.0 / batch.n);
  if (grad != nullptr) {
    for (int i = 0; i < spec.param_count(); ++i) grad[i] *= inv_n;
  }
  return loss_sum * inv_n;
}

}  // namespace detail

}  // namespace hesskit
