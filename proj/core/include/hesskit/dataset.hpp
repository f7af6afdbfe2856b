#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hesskit {

enum class Split { train, sensitivity, heldout };

const char* split_name(Split s);

/// Labeled samples plus disjoint split index lists. Inputs are row-major
/// (sample i occupies [i*dim, (i+1)*dim)).
struct Dataset {
  std::vector<double> inputs;
  std::vector<int> labels;
  int dim = 0;
  int classes = 0;
  std::vector<int> train_idx;
  std::vector<int> sensitivity_idx;
  std::vector<int> heldout_idx;

  int size() const { return static_cast<int>(labels.size()); }
  const std::vector<int>& split(Split s) const;
  const double* sample(int i) const { return inputs.data() + static_cast<std::size_t>(i) * dim; }
  void validate() const;
  std::vector<int> class_counts(Split s) const;
};

/// Materialized batch view for the model engine.
struct Batch {
  std::vector<double> x;  // n x dim, row-major
  std::vector<int> y;
  int n = 0;
  int dim = 0;

  static Batch gather(const Dataset& ds, const std::vector<int>& indices);
};

/// Gaussian-blob mixture fixture. Class c is an isotropic unit-variance blob
/// around a seeded mean direction; `entangled_pair` places two class means at
/// distance `entangled_separation` of each other so their samples overlap,
/// while every other pair of means sits `separation` apart.
struct BlobFixtureSpec {
  int classes = 4;
  int dim = 20;
  std::vector<double> frequencies;        // per-class sample fractions, sums to 1
  double separation = 8.0;
  std::pair<int, int> entangled_pair{2, 3};
  double entangled_separation = 2.4;
  int total_samples = 7000;
  double train_fraction = 4.0 / 7.0;
  double sensitivity_fraction = 1.5 / 7.0;
  std::uint64_t seed = 1;
};

Dataset make_blob_fixture(const BlobFixtureSpec& spec);

/// Named presets used across the command-line surface and the tests.
/// "imbalanced-4": 4 classes, frequencies 0.55/0.25/0.15/0.05, entangled pair.
/// "balanced-4":   4 equal-frequency classes, same geometry.
/// "blobs-2":      2 linearly separable balanced classes (margin >= 4 sigma).
/// "deflate-12":   12 equal-frequency classes for deflation runs.
BlobFixtureSpec fixture_preset(const std::string& name, std::uint64_t seed);

/// JSON manifest carrying the fixture spec and the exact split indices.
std::string dataset_manifest(const Dataset& ds, const BlobFixtureSpec& spec);

/// Split-access audit. Scopes that forbid the heldout split are pushed while
/// code that must not see evaluation data runs (e.g. the surgery loop); any
/// heldout access inside such a scope is recorded as a violation.
namespace split_audit {

struct ScopeGuard {
  explicit ScopeGuard(bool allow_heldout, std::string label);
  ~ScopeGuard();
  ScopeGuard(const ScopeGuard&) = delete;
  ScopeGuard& operator=(const ScopeGuard&) = delete;
};

void record_access(Split s);
void record_accuracy_eval(Split s);
void reset();
int access_count(Split s);
int accuracy_eval_count(Split s);
const std::vector<std::string>& violations();

}  // namespace split_audit

}  // namespace hesskit
