#include "hesskit/oracle.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>

#include "hesskit/orthogonal.hpp"
#include "hesskit/rng.hpp"

namespace hesskit {

HvpOracle dense_oracle(const Eigen::MatrixXd& m, double sym_tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("dense_oracle: not square");
  if (m.rows() > 4096) throw std::invalid_argument("dense_oracle: dimension exceeds oracle scale");
  const double scale = std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > sym_tol * scale) {
    throw std::invalid_argument("dense_oracle: asymmetric beyond tolerance");
  }
  const auto n = static_cast<std::size_t>(m.rows());
  auto mat = std::make_shared<Eigen::MatrixXd>(m);
  HvpOracle oracle;
  oracle.dim = n;
  oracle.provenance = "dense(" + std::to_string(n) + ")";
  oracle.apply = [mat, n](const ParamVector& v) {
    if (v.size() != n) throw std::invalid_argument("dense oracle: dimension mismatch");
    ParamVector out(n);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        sum += (*mat)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * v[j];
      }
      out[i] = sum;
    }
    return out;
  };
  return oracle;
}

SpikedOperator spiked_oracle(const SpikedOperatorSpec& spec) {
  const std::size_t p = spec.dim;
  const std::size_t k = spec.spike_values.size();
  if (k >= p) throw std::invalid_argument("spiked_oracle: spike count must be < dim");
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (spec.spike_values[i] < spec.spike_values[i + 1]) {
      throw std::invalid_argument("spiked_oracle: spike_values must be descending");
    }
  }
  if (!(spec.bulk_scale > 0.0)) throw std::invalid_argument("spiked_oracle: bulk_scale must be > 0");

  Rng rng(spec.seed);

  // Seeded random orthonormal frame for the full space: QR of a Gaussian
  // matrix, built column by column. Stored densely; oracle scale only.
  auto frame = std::make_shared<std::vector<ParamVector>>();
  frame->reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    ParamVector g = rng.gaussian_vector(p);
    ParamVector r = gram_schmidt_residual(g, *frame);
    frame->push_back(normalized(r));
  }

  auto eigenvalues = std::make_shared<std::vector<double>>(p, 0.0);
  for (std::size_t i = 0; i < k; ++i) (*eigenvalues)[i] = spec.spike_values[i];
  std::vector<double> bulk(p - k);
  for (auto& b : bulk) b = rng.uniform(0.0, spec.bulk_scale);
  for (std::size_t i = k; i < p; ++i) (*eigenvalues)[i] = bulk[i - k];

  SpikedOperator out;
  out.spectrum = *eigenvalues;
  std::sort(out.spectrum.begin(), out.spectrum.end(), std::greater<>());
  for (std::size_t i = 0; i < k; ++i) out.spike_vectors.push_back((*frame)[i]);
  std::vector<double> sorted_bulk = bulk;
  std::sort(sorted_bulk.begin(), sorted_bulk.end());
  out.bulk_median = sorted_bulk.empty()
                        ? 0.0
                        : (sorted_bulk.size() % 2 == 1
                               ? sorted_bulk[sorted_bulk.size() / 2]
                               : 0.5 * (sorted_bulk[sorted_bulk.size() / 2 - 1] +
                                         sorted_bulk[sorted_bulk.size() / 2]));

  out.oracle.dim = p;
  out.oracle.provenance = "spiked(p=" + std::to_string(p) + ",k=" + std::to_string(k) + ")";
  out.oracle.apply = [frame, eigenvalues, p](const ParamVector& v) {
    if (v.size() != p) throw std::invalid_argument("spiked oracle: dimension mismatch");
    ParamVector result(p);
    for (std::size_t i = 0; i < p; ++i) {
      const double lambda = (*eigenvalues)[i];
      if (lambda == 0.0) continue;
      const double coeff = lambda * dot((*frame)[i], v);
      axpy(coeff, (*frame)[i], result);
    }
    return result;
  };
  return out;
}

Eigen::MatrixXd densify(const HvpOracle& oracle) {
  if (oracle.dim > 4096) throw std::invalid_argument("densify: dimension exceeds oracle scale");
  const auto n = static_cast<Eigen::Index>(oracle.dim);
  Eigen::MatrixXd m(n, n);
  ParamVector e(oracle.dim);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[static_cast<std::size_t>(j)] = 1.0;
    const ParamVector col = oracle.apply(e);
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = col[static_cast<std::size_t>(i)];
    e[static_cast<std::size_t>(j)] = 0.0;
  }
  return m;
}

HvpOracle model_oracle(const MlpSpec& spec, const ParamVector& theta, Batch hvp_batch) {
  spec.validate();
  if (hvp_batch.n < 1) throw std::invalid_argument("model_oracle: batch must be non-empty");
  auto shared_spec = std::make_shared<MlpSpec>(spec);
  auto shared_theta = std::make_shared<ParamVector>(theta);
  auto shared_batch = std::make_shared<Batch>(std::move(hvp_batch));
  HvpOracle oracle;
  oracle.dim = theta.size();
  oracle.cost_hint = 1e-8 * static_cast<double>(theta.size()) * shared_batch->n;
  oracle.provenance = "model(n=" + std::to_string(shared_batch->n) + ")";
  oracle.apply = [shared_spec, shared_theta, shared_batch](const ParamVector& v) {
    return hvp(*shared_spec, *shared_theta, *shared_batch, v);
  };
  return oracle;
}

HvpOracle deflate(const HvpOracle& oracle, const std::vector<ParamVector>& q_prev,
                  double orth_tol) {
  if (q_prev.empty()) return oracle;
  for (const auto& q : q_prev) {
    if (q.size() != oracle.dim) throw std::invalid_argument("deflate: basis dimension mismatch");
  }

  auto basis = std::make_shared<std::vector<ParamVector>>(qr_orthonormalize(q_prev));
  if (basis->size() != q_prev.size()) {
    throw std::invalid_argument("deflate: basis is rank deficient after QR");
  }
  if (orthonormality_error(*basis) > orth_tol) {
    throw std::invalid_argument("deflate: basis not orthonormal after QR");
  }

  auto base_apply = oracle.apply;
  const std::size_t dim = oracle.dim;
  HvpOracle deflated;
  deflated.dim = dim;
  deflated.cost_hint = oracle.cost_hint;
  deflated.provenance = oracle.provenance + "+deflated(" + std::to_string(basis->size()) + ")";
  deflated.apply = [base_apply, basis](const ParamVector& v) {
    ParamVector inner = v;
    for (const auto& q : *basis) axpy(-dot(q, inner), q, inner);
    ParamVector hv = base_apply(inner);
    for (const auto& q : *basis) axpy(-dot(q, hv), q, hv);
    return hv;
  };
  return deflated;
}

std::vector<int> uniform_batch_indices(const Dataset& ds, Split split, int n,
                                       std::uint64_t seed) {
  std::vector<int> pool = ds.split(split);
  if (pool.empty()) throw std::invalid_argument("uniform_batch_indices: empty split");
  Rng rng(seed);
  rng.shuffle(pool);
  if (n < static_cast<int>(pool.size())) pool.resize(static_cast<std::size_t>(n));
  return pool;
}

std::vector<int> stratified_batch_indices(const Dataset& ds, Split split, int per_class,
                                          std::uint64_t seed) {
  if (per_class < 1) throw std::invalid_argument("stratified_batch_indices: per_class must be >= 1");
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.classes));
  for (int i : ds.split(split)) {
    by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
  }
  Rng rng(seed);
  std::vector<int> out;
  for (auto& idx : by_class) {
    rng.shuffle(idx);
    const int take = std::min<int>(per_class, static_cast<int>(idx.size()));
    out.insert(out.end(), idx.begin(), idx.begin() + take);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hesskit
