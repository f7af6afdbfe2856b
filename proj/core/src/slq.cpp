#include "hesskit/slq.hpp"

#include <cmath>
#include <stdexcept>

#include "hesskit/lanczos.hpp"
#include "hesskit/rng.hpp"

namespace hesskit {

namespace {

double gauss_kernel(double x, double sigma2) {
  return std::exp(-0.5 * x * x / sigma2) / std::sqrt(2.0 * 3.14159265358979323846 * sigma2);
}

ParamVector draw_probe(std::size_t dim, std::uint64_t seed) {
  // v ~ N(0, I/p)
  Rng rng(seed);
  ParamVector v = rng.gaussian_vector(dim);
  scale(v, 1.0 / std::sqrt(static_cast<double>(dim)));
  return v;
}

}  // namespace

double DensityEstimate::integral() const {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    acc += 0.5 * (density[i] + density[i + 1]) * (grid[i + 1] - grid[i]);
  }
  return acc;
}

ProbeQuadrature slq_probe_quadrature(const HvpOracle& oracle, const ParamVector& probe,
                                     int m, double tol) {
  const double n2 = dot(probe, probe);
  if (n2 == 0.0) throw std::invalid_argument("slq_probe_quadrature: zero probe");
  ParamVector q1 = probe;
  scale(q1, 1.0 / std::sqrt(n2));
  const LanczosResult lz = lanczos(oracle, q1, m, tol);
  const TridiagEigh eigh = tridiag_eigh(lz.t);

  ProbeQuadrature quad;
  quad.probe_norm2 = n2;
  const int order = static_cast<int>(lz.t.order());
  for (int i = 0; i < order; ++i) {
    quad.nodes.push_back(eigh.eigenvalues[static_cast<std::size_t>(i)]);
    const double u1 = eigh.eigenvectors(0, i);
    quad.weights.push_back(n2 * u1 * u1);
  }
  return quad;
}

DensityEstimate slq_density(const HvpOracle& oracle, int m, int k, double sigma2,
                            const std::vector<double>& grid, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("slq_density: need k >= 1 probes");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("slq_density: sigma2 must be > 0");
  if (grid.size() < 2) throw std::invalid_argument("slq_density: degenerate grid");

  DensityEstimate est;
  est.grid = grid;
  est.density.assign(grid.size(), 0.0);
  est.sigma2 = sigma2;
  est.probes = k;
  est.order = m;

  for (int probe = 0; probe < k; ++probe) {
    const ParamVector v = draw_probe(oracle.dim, derive_seed(seed, 0x510, static_cast<std::uint64_t>(probe)));
    const ProbeQuadrature quad = slq_probe_quadrature(oracle, v, m);
    // Normalized weights (sum 1 per probe) keep the density mass exactly 1.
    for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
      const double w = quad.weights[i] / quad.probe_norm2;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        est.density[g] += w * gauss_kernel(grid[g] - quad.nodes[i], sigma2);
      }
    }
  }
  for (auto& d : est.density) d /= k;
  return est;
}

std::vector<double> slq_auto_grid(double lo, double hi, double sigma2, int points) {
  const double sigma = std::sqrt(sigma2);
  const double a = lo - 5.0 * sigma;
  const double b = hi + 5.0 * sigma;
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    grid[static_cast<std::size_t>(i)] = a + (b - a) * i / (points - 1);
  }
  return grid;
}

namespace {

double l1_distance(const std::vector<double>& grid, const std::vector<double>& a,
                   const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double da = std::abs(a[i] - b[i]);
    const double db = std::abs(a[i + 1] - b[i + 1]);
    acc += 0.5 * (da + db) * (grid[i + 1] - grid[i]);
  }
  return acc;
}

}  // namespace

ProbeConvergence probe_convergence(const HvpOracle& oracle, int m, double sigma2,
                                   const std::vector<double>& grid,
                                   const std::vector<int>& k_values, std::uint64_t seed,
                                   int k_ref) {
  if (k_values.empty()) throw std::invalid_argument("probe_convergence: no k values");
  for (std::size_t i = 0; i + 1 < k_values.size(); ++i) {
    if (k_values[i] >= k_values[i + 1]) {
      throw std::invalid_argument("probe_convergence: k_values must be increasing");
    }
  }
  if (k_ref <= 0) k_ref = 10 * k_values.back();
  if (k_ref < k_values.back()) throw std::invalid_argument("probe_convergence: k_ref too small");

  // One prefix-nested probe stream: estimate at k is the mean of the first k
  // per-probe densities, the reference is the mean of all k_ref.
  std::vector<double> running(grid.size(), 0.0);
  std::vector<std::vector<double>> prefix_estimates;
  std::size_t next_k = 0;
  for (int probe = 0; probe < k_ref; ++probe) {
    const ParamVector v = draw_probe(oracle.dim, derive_seed(seed, 0x510, static_cast<std::uint64_t>(probe)));
    const ProbeQuadrature quad = slq_probe_quadrature(oracle, v, m);
    for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
      const double w = quad.weights[i] / quad.probe_norm2;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        running[g] += w * gauss_kernel(grid[g] - quad.nodes[i], sigma2);
      }
    }
    if (next_k < k_values.size() && probe + 1 == k_values[next_k]) {
      std::vector<double> est = running;
      for (auto& d : est) d /= (probe + 1);
      prefix_estimates.push_back(std::move(est));
      ++next_k;
    }
  }
  std::vector<double> reference = running;
  for (auto& d : reference) d /= k_ref;

  ProbeConvergence out;
  out.k_values = k_values;
  out.k_ref = k_ref;
  for (const auto& est : prefix_estimates) {
    out.l1_distance.push_back(l1_distance(grid, est, reference));
  }

  // Log-log least-squares slope over the strictly positive distances.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < out.l1_distance.size(); ++i) {
    if (out.l1_distance[i] <= 0.0) continue;
    const double x = std::log(static_cast<double>(k_values[i]));
    const double y = std::log(out.l1_distance[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n >= 2) out.fitted_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return out;
}

}  // namespace hesskit
