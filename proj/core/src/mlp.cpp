#include "hesskit/mlp.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "hesskit/rng.hpp"

namespace hesskit {

int MlpSpec::param_count() const {
  int p = 0;
  for (int l = 0; l < layers(); ++l) {
    p += (layer_widths[static_cast<std::size_t>(l)] + 1) * layer_widths[static_cast<std::size_t>(l) + 1];
  }
  return p;
}

int MlpSpec::weight_offset(int layer) const {
  int off = 0;
  for (int l = 0; l < layer; ++l) {
    off += (layer_widths[static_cast<std::size_t>(l)] + 1) * layer_widths[static_cast<std::size_t>(l) + 1];
  }
  return off;
}

void MlpSpec::validate() const {
  if (layer_widths.size() < 3) throw std::invalid_argument("MlpSpec: need at least one hidden layer");
  for (int width : layer_widths) {
    if (width <= 0) throw std::invalid_argument("MlpSpec: non-positive layer width");
  }
  if (classes() < 2) throw std::invalid_argument("MlpSpec: need >= 2 classes");
  if (loss == LossKind::focal && focal_gamma < 0.0) {
    throw std::invalid_argument("MlpSpec: focal_gamma must be >= 0");
  }
  if (loss == LossKind::weighted_ce) {
    if (static_cast<int>(class_weights.size()) != classes()) {
      throw std::invalid_argument("MlpSpec: class_weights size must equal classes");
    }
    for (double w : class_weights) {
      if (!(w > 0.0)) throw std::invalid_argument("MlpSpec: class_weights must be positive");
    }
  }
}

std::string MlpSpec::to_json() const {
  nlohmann::json j;
  j["layers"] = layer_widths;
  j["activation"] = activation == Activation::tanh ? "tanh" : "relu";
  switch (loss) {
    case LossKind::cross_entropy: j["loss"] = "cross_entropy"; break;
    case LossKind::focal:
      j["loss"] = "focal";
      j["focal_gamma"] = focal_gamma;
      break;
    case LossKind::weighted_ce:
      j["loss"] = "weighted_ce";
      j["class_weights"] = class_weights;
      break;
  }
  return j.dump();
}

MlpSpec MlpSpec::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MlpSpec spec;
  spec.layer_widths = j.at("layers").get<std::vector<int>>();
  spec.activation = j.at("activation") == "tanh" ? Activation::tanh : Activation::relu;
  const std::string loss = j.at("loss");
  if (loss == "cross_entropy") {
    spec.loss = LossKind::cross_entropy;
  } else if (loss == "focal") {
    spec.loss = LossKind::focal;
    spec.focal_gamma = j.at("focal_gamma");
  } else if (loss == "weighted_ce") {
    spec.loss = LossKind::weighted_ce;
    spec.class_weights = j.at("class_weights").get<std::vector<double>>();
  } else {
    throw std::invalid_argument("MlpSpec: unknown loss " + loss);
  }
  spec.validate();
  return spec;
}

namespace {

void check_theta(const MlpSpec& spec, const ParamVector& theta) {
  if (static_cast<int>(theta.size()) != spec.param_count()) {
    throw std::invalid_argument("theta dimension does not match model parameter count");
  }
}

void check_batch(const MlpSpec& spec, const Batch& batch) {
  if (batch.n <= 0) throw std::invalid_argument("empty batch");
  if (batch.dim != spec.input_dim()) throw std::invalid_argument("batch dim mismatch");
}

}  // namespace

ForwardResult forward(const MlpSpec& spec, const ParamVector& theta, const Batch& batch) {
  spec.validate();
  check_theta(spec, theta);
  check_batch(spec, batch);
  ForwardResult out;
  out.probs.resize(static_cast<std::size_t>(batch.n) * spec.classes());
  out.loss = detail::loss_grad_engine<double>(spec, theta.data(), batch, nullptr,
                                              out.probs.data());
  return out;
}

ParamVector gradient(const MlpSpec& spec, const ParamVector& theta, const Batch& batch) {
  spec.validate();
  check_theta(spec, theta);
  check_batch(spec, batch);
  ParamVector grad(theta.size());
  detail::loss_grad_engine<double>(spec, theta.data(), batch, grad.data(), nullptr);
  return grad;
}

ParamVector hvp(const MlpSpec& spec, const ParamVector& theta, const Batch& batch,
                const ParamVector& v) {
  spec.validate();
  check_theta(spec, theta);
  check_theta(spec, v);
  check_batch(spec, batch);
  std::vector<Dual> params(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) params[i] = Dual(theta[i], v[i]);
  std::vector<Dual> grad(theta.size());
  detail::loss_grad_engine<Dual>(spec, params.data(), batch, grad.data(), nullptr);
  ParamVector out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = grad[i].b;
  return out;
}

std::vector<double> logits(const MlpSpec& spec, const ParamVector& theta, const Batch& batch) {
  check_theta(spec, theta);
  check_batch(spec, batch);
  const int n_layers = spec.layers();
  const auto& w = spec.layer_widths;
  std::vector<double> hin, hout;
  std::vector<double> out(static_cast<std::size_t>(batch.n) * spec.classes());
  for (int s = 0; s < batch.n; ++s) {
    const double* x = batch.x.data() + static_cast<std::size_t>(s) * batch.dim;
    hin.assign(x, x + batch.dim);
    for (int l = 0; l < n_layers; ++l) {
      const int in = w[static_cast<std::size_t>(l)];
      const int nout = w[static_cast<std::size_t>(l) + 1];
      const double* wl = theta.data() + spec.weight_offset(l);
      const double* bl = wl + static_cast<std::ptrdiff_t>(in) * nout;
      hout.assign(static_cast<std::size_t>(nout), 0.0);
      for (int j = 0; j < nout; ++j) {
        double z = bl[j];
        for (int i = 0; i < in; ++i) z += wl[static_cast<std::ptrdiff_t>(i) * nout + j] * hin[static_cast<std::size_t>(i)];
        if (l + 1 < n_layers) {
          hout[static_cast<std::size_t>(j)] =
              spec.activation == Activation::tanh ? std::tanh(z) : relu(z);
        } else {
          hout[static_cast<std::size_t>(j)] = z;
        }
      }
      hin.swap(hout);
    }
    std::copy(hin.begin(), hin.end(), out.begin() + static_cast<std::ptrdiff_t>(s) * spec.classes());
  }
  return out;
}

std::vector<int> predict(const MlpSpec& spec, const ParamVector& theta, const Batch& batch) {
  const auto z = logits(spec, theta, batch);
  const int classes = spec.classes();
  std::vector<int> labels(static_cast<std::size_t>(batch.n));
  for (int s = 0; s < batch.n; ++s) {
    const double* row = z.data() + static_cast<std::size_t>(s) * classes;
    int best = 0;
    for (int c = 1; c < classes; ++c) {
      if (row[c] > row[best]) best = c;  // ties keep the lowest index
    }
    labels[static_cast<std::size_t>(s)] = best;
  }
  return labels;
}

int ClassAccuracy::total() const {
  int t = 0;
  for (int c : counts) t += c;
  return t;
}

ClassAccuracy ClassAccuracy::from_values(std::vector<double> per_class,
                                         std::vector<int> counts) {
  ClassAccuracy acc;
  acc.per_class = std::move(per_class);
  acc.counts = std::move(counts);
  acc.defined.resize(acc.per_class.size());
  double correct = 0.0;
  int total = 0;
  int n_defined = 0;
  double mean = 0.0;
  for (std::size_t c = 0; c < acc.per_class.size(); ++c) {
    acc.defined[c] = acc.counts[c] > 0;
    if (acc.defined[c]) {
      correct += acc.per_class[c] * acc.counts[c];
      total += acc.counts[c];
      mean += acc.per_class[c];
      ++n_defined;
    }
  }
  acc.global = total > 0 ? correct / total : 0.0;
  if (n_defined > 0) {
    mean /= n_defined;
    double var = 0.0;
    for (std::size_t c = 0; c < acc.per_class.size(); ++c) {
      if (acc.defined[c]) {
        const double d = acc.per_class[c] - mean;
        var += d * d;
      }
    }
    acc.sigma = std::sqrt(var / n_defined);
  }
  return acc;
}

ClassAccuracy accuracy_on_batch(const MlpSpec& spec, const ParamVector& theta,
                                const Batch& batch, int classes) {
  const auto pred = predict(spec, theta, batch);
  std::vector<int> counts(static_cast<std::size_t>(classes), 0);
  std::vector<int> correct(static_cast<std::size_t>(classes), 0);
  for (int s = 0; s < batch.n; ++s) {
    const int y = batch.y[static_cast<std::size_t>(s)];
    counts[static_cast<std::size_t>(y)]++;
    if (pred[static_cast<std::size_t>(s)] == y) correct[static_cast<std::size_t>(y)]++;
  }
  std::vector<double> per_class(static_cast<std::size_t>(classes), 0.0);
  for (int c = 0; c < classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) {
      per_class[static_cast<std::size_t>(c)] =
          static_cast<double>(correct[static_cast<std::size_t>(c)]) / counts[static_cast<std::size_t>(c)];
    }
  }
  return ClassAccuracy::from_values(std::move(per_class), std::move(counts));
}

ClassAccuracy per_class_accuracy(const MlpSpec& spec, const ParamVector& theta,
                                 const Dataset& ds, Split split) {
  const auto& idx = ds.split(split);
  if (idx.empty()) throw std::invalid_argument("per_class_accuracy: empty split");
  split_audit::record_accuracy_eval(split);
  return accuracy_on_batch(spec, theta, Batch::gather(ds, idx), ds.classes);
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ParamVector theta(static_cast<std::size_t>(spec.param_count()));
  for (int l = 0; l < spec.layers(); ++l) {
    const int in = spec.layer_widths[static_cast<std::size_t>(l)];
    const int out = spec.layer_widths[static_cast<std::size_t>(l) + 1];
    const double std_dev = 1.0 / std::sqrt(static_cast<double>(in));
    const int off = spec.weight_offset(l);
    for (int k = 0; k < in * out; ++k) theta[static_cast<std::size_t>(off + k)] = std_dev * rng.gaussian();
    // biases stay zero
  }
  return theta;
}

}  // namespace hesskit
