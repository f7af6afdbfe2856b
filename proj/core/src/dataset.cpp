#include "hesskit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hesskit/orthogonal.hpp"
#include "hesskit/rng.hpp"

namespace hesskit {

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::sensitivity: return "sensitivity";
    case Split::heldout: return "heldout";
  }
  return "?";
}

const std::vector<int>& Dataset::split(Split s) const {
  split_audit::record_access(s);
  switch (s) {
    case Split::train: return train_idx;
    case Split::sensitivity: return sensitivity_idx;
    case Split::heldout: return heldout_idx;
  }
  throw std::logic_error("Dataset::split: bad tag");
}

void Dataset::validate() const {
  if (dim <= 0 || classes < 2) throw std::invalid_argument("Dataset: bad shape");
  if (inputs.size() != static_cast<std::size_t>(size()) * dim) {
    throw std::invalid_argument("Dataset: inputs/labels size mismatch");
  }
  for (int label : labels) {
    if (label < 0 || label >= classes) throw std::invalid_argument("Dataset: label out of range");
  }
  std::set<int> seen;
  for (const auto* idx : {&train_idx, &sensitivity_idx, &heldout_idx}) {
    for (int i : *idx) {
      if (i < 0 || i >= size()) throw std::invalid_argument("Dataset: split index out of range");
      if (!seen.insert(i).second) throw std::invalid_argument("Dataset: splits overlap");
    }
  }
}

std::vector<int> Dataset::class_counts(Split s) const {
  std::vector<int> counts(static_cast<std::size_t>(classes), 0);
  for (int i : split(s)) counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]++;
  return counts;
}

Batch Batch::gather(const Dataset& ds, const std::vector<int>& indices) {
  Batch b;
  b.n = static_cast<int>(indices.size());
  b.dim = ds.dim;
  b.x.resize(static_cast<std::size_t>(b.n) * b.dim);
  b.y.resize(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const double* src = ds.sample(indices[k]);
    std::copy(src, src + ds.dim, b.x.begin() + static_cast<std::ptrdiff_t>(k) * b.dim);
    b.y[k] = ds.labels[static_cast<std::size_t>(indices[k])];
  }
  return b;
}

Dataset make_blob_fixture(const BlobFixtureSpec& spec) {
  if (spec.classes < 2) throw std::invalid_argument("fixture: need >= 2 classes");
  if (static_cast<int>(spec.frequencies.size()) != spec.classes) {
    throw std::invalid_argument("fixture: frequencies size must match classes");
  }
  Rng rng(spec.seed);

  // Class means: separated seeded directions, except the entangled pair which
  // shares a center shifted by entangled_separation along a random direction.
  std::vector<ParamVector> dirs;
  for (int c = 0; c < spec.classes; ++c) {
    ParamVector g = rng.gaussian_vector(static_cast<std::size_t>(spec.dim));
    ParamVector r = gram_schmidt_residual(g, dirs);
    dirs.push_back(normalized(r));
  }
  std::vector<std::vector<double>> means(static_cast<std::size_t>(spec.classes));
  const double radius = spec.separation / std::sqrt(2.0);  // pairwise distance ~= separation
  for (int c = 0; c < spec.classes; ++c) {
    means[static_cast<std::size_t>(c)].assign(static_cast<std::size_t>(spec.dim), 0.0);
    for (int d = 0; d < spec.dim; ++d) {
      means[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] =
          radius * dirs[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)];
    }
  }
  const auto [ea, eb] = spec.entangled_pair;
  if (ea >= 0 && eb >= 0 && ea < spec.classes && eb < spec.classes && ea != eb) {
    ParamVector shift = normalized(rng.gaussian_vector(static_cast<std::size_t>(spec.dim)));
    for (int d = 0; d < spec.dim; ++d) {
      const auto du = static_cast<std::size_t>(d);
      means[static_cast<std::size_t>(eb)][du] =
          means[static_cast<std::size_t>(ea)][du] + spec.entangled_separation * shift[du];
    }
  }

  std::vector<int> per_class(static_cast<std::size_t>(spec.classes));
  int assigned = 0;
  for (int c = 0; c < spec.classes; ++c) {
    per_class[static_cast<std::size_t>(c)] =
        std::max(3, static_cast<int>(std::lround(spec.frequencies[static_cast<std::size_t>(c)] *
                                                 spec.total_samples)));
    assigned += per_class[static_cast<std::size_t>(c)];
  }
  per_class[0] += spec.total_samples - assigned;  // absorb rounding in the largest class

  Dataset ds;
  ds.dim = spec.dim;
  ds.classes = spec.classes;
  for (int c = 0; c < spec.classes; ++c) {
    for (int k = 0; k < per_class[static_cast<std::size_t>(c)]; ++k) {
      for (int d = 0; d < spec.dim; ++d) {
        ds.inputs.push_back(means[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] +
                            rng.gaussian());
      }
      ds.labels.push_back(c);
    }
  }

  // Per-class proportional split so every split sees every class.
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(spec.classes));
  for (int i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
  }
  for (auto& idx : by_class) {
    rng.shuffle(idx);
    const int n = static_cast<int>(idx.size());
    int n_train = std::max(1, static_cast<int>(std::lround(spec.train_fraction * n)));
    int n_sens = std::max(1, static_cast<int>(std::lround(spec.sensitivity_fraction * n)));
    if (n_train + n_sens >= n) {
      n_train = std::max(1, n - 2);
      n_sens = 1;
    }
    for (int k = 0; k < n; ++k) {
      if (k < n_train) ds.train_idx.push_back(idx[static_cast<std::size_t>(k)]);
      else if (k < n_train + n_sens) ds.sensitivity_idx.push_back(idx[static_cast<std::size_t>(k)]);
      else ds.heldout_idx.push_back(idx[static_cast<std::size_t>(k)]);
    }
  }
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  std::sort(ds.sensitivity_idx.begin(), ds.sensitivity_idx.end());
  std::sort(ds.heldout_idx.begin(), ds.heldout_idx.end());
  ds.validate();
  return ds;
}

BlobFixtureSpec fixture_preset(const std::string& name, std::uint64_t seed) {
  BlobFixtureSpec spec;
  spec.seed = seed;
  if (name == "imbalanced-4") {
    spec.frequencies = {0.55, 0.25, 0.15, 0.05};
    spec.total_samples = 14000;
    spec.entangled_separation = 2.2;
  } else if (name == "balanced-4") {
    spec.frequencies = {0.25, 0.25, 0.25, 0.25};
    spec.total_samples = 6000;
  } else if (name == "blobs-2") {
    spec.classes = 2;
    spec.frequencies = {0.5, 0.5};
    spec.entangled_pair = {-1, -1};
    spec.separation = 10.0;
    spec.total_samples = 1200;
  } else if (name == "deflate-12") {
    spec.classes = 12;
    spec.frequencies.assign(12, 1.0 / 12.0);
    spec.entangled_pair = {-1, -1};
    spec.separation = 7.0;
    spec.total_samples = 4800;
  } else {
    throw std::invalid_argument("unknown fixture preset: " + name);
  }
  return spec;
}

std::string dataset_manifest(const Dataset& ds, const BlobFixtureSpec& spec) {
  nlohmann::json j;
  j["fixture"] = {
      {"classes", spec.classes},
      {"dim", spec.dim},
      {"frequencies", spec.frequencies},
      {"separation", spec.separation},
      {"entangled_pair", {spec.entangled_pair.first, spec.entangled_pair.second}},
      {"entangled_separation", spec.entangled_separation},
      {"total_samples", spec.total_samples},
      {"seed", spec.seed},
  };
  j["splits"] = {
      {"train", ds.train_idx},
      {"sensitivity", ds.sensitivity_idx},
      {"heldout", ds.heldout_idx},
  };
  return j.dump(2);
}

namespace split_audit {
namespace {

struct AuditState {
  std::vector<std::pair<bool, std::string>> scopes;  // (allow_heldout, label)
  int counts[3] = {0, 0, 0};
  int eval_counts[3] = {0, 0, 0};
  std::vector<std::string> violation_log;
};

AuditState& state() {
  thread_local AuditState s;
  return s;
}

}  // namespace

ScopeGuard::ScopeGuard(bool allow_heldout, std::string label) {
  state().scopes.emplace_back(allow_heldout, std::move(label));
}

ScopeGuard::~ScopeGuard() { state().scopes.pop_back(); }

void record_access(Split s) {
  auto& st = state();
  st.counts[static_cast<int>(s)]++;
  if (s == Split::heldout && !st.scopes.empty() && !st.scopes.back().first) {
    st.violation_log.push_back("heldout access inside scope '" + st.scopes.back().second + "'");
  }
}

void record_accuracy_eval(Split s) { state().eval_counts[static_cast<int>(s)]++; }

void reset() {
  auto& st = state();
  st.counts[0] = st.counts[1] = st.counts[2] = 0;
  st.eval_counts[0] = st.eval_counts[1] = st.eval_counts[2] = 0;
  st.violation_log.clear();
}

int access_count(Split s) { return state().counts[static_cast<int>(s)]; }

int accuracy_eval_count(Split s) { return state().eval_counts[static_cast<int>(s)]; }

const std::vector<std::string>& violations() { return state().violation_log; }

}  // namespace split_audit

}  // namespace hesskit
