#include <doctest.h>

#include <bit>
#include <cmath>

#include "hesskit/baselines.hpp"
#include "hesskit/bulk_finetune.hpp"
#include "hesskit/bulk_walk.hpp"
#include "hesskit/linearization.hpp"
#include "hesskit/oracle.hpp"
#include "hesskit/posthoc.hpp"
#include "hesskit/rng.hpp"
#include "hesskit/sensitivity.hpp"
#include "hesskit/stability_study.hpp"
#include "hesskit/surgery.hpp"
#include "test_util.hpp"

using namespace hesskit;

TEST_CASE("bulk_walk: a full-space basis walls immediately and never moves") {
  // 2-input, 1-hidden-unit toy: p = 5 parameters; basis_m = 5 recovers the
  // whole space, so every sampled direction is absorbed.
  Dataset ds;
  ds.dim = 2;
  ds.classes = 2;
  Rng rng(3);
  for (int i = 0; i < 40; ++i) {
    const int y = i % 2;
    ds.inputs.push_back(rng.gaussian() + (y == 0 ? -2.0 : 2.0));
    ds.inputs.push_back(rng.gaussian());
    ds.labels.push_back(y);
    if (i < 30) ds.train_idx.push_back(i);
    else if (i < 35) ds.sensitivity_idx.push_back(i);
    else ds.heldout_idx.push_back(i);
  }
  MlpSpec spec;
  spec.layer_widths = {2, 1, 2};  // p = 3 + 4 = 7
  TrainConfig tc = testutil::fixture_train_config(3);
  tc.epochs = 30;
  tc.batch_size = 8;
  const ParamVector theta = train(spec, ds, tc).theta;

  BulkWalkConfig config;
  config.steps = 6;
  config.hvp_batch = 30;
  config.eval_split = Split::train;
  config.seed = 5;
  // Fixed basis spanning the whole parameter space: every direction is
  // absorbed immediately.
  for (int i = 0; i < spec.param_count(); ++i) {
    ParamVector e(static_cast<std::size_t>(spec.param_count()));
    e[static_cast<std::size_t>(i)] = 1.0;
    config.fixed_basis.push_back(std::move(e));
  }
  const BulkWalkLog log = bulk_walk(spec, theta, ds, config);
  CHECK(log.terminated_early);
  CHECK(log.relative_displacement == 0.0);
  for (const auto& step : log.steps) {
    CHECK(step.absorbed);
  }
}

TEST_CASE("bulk_walk: empty basis gives a pure seeded random walk") {
  const auto f = testutil::trained_fixture(1);
  BulkWalkConfig config;
  config.steps = 10;
  config.basis_m = 1;   // single Ritz pair
  config.basis_k = 1;
  config.wall_tol = 1e-12;  // never wall
  config.hvp_batch = 64;
  config.seed = 9;
  // Degenerate projection: force an empty basis by walking a model whose
  // Hessian window we ignore; instead check displacement accounting on the
  // standard fixture with a 1-vector basis and no walls.
  const BulkWalkLog log = bulk_walk(f.spec, f.theta, f.data, config);
  CHECK(log.steps.size() == 10);
  CHECK(log.relative_displacement > 0.0);
  CHECK(log.epsilon == doctest::Approx(2.0 * norm(f.theta) / 10.0));
  for (const auto& step : log.steps) {
    CHECK_FALSE(step.absorbed);
    CHECK(step.max_spike_overlap <= 1e-6);
  }
}

TEST_CASE("bulk_walk: calibrated fixture walk is class-level inert") {
  const auto f = testutil::trained_fixture(3);
  BulkWalkConfig config;  // calibrated defaults: 100 steps, basis_m 400
  config.seed = 3 * 7 + 1;
  const BulkWalkLog log = bulk_walk(f.spec, f.theta, f.data, config);

  CHECK(log.relative_displacement >= 1.5);
  CHECK(log.relative_displacement <= 2.5);
  CHECK(std::abs(log.end_loss - log.start_loss) <= 0.01);
  for (std::size_t c = 0; c < log.end_per_class.size(); ++c) {
    CHECK(std::abs(log.end_per_class[c] - log.start_per_class[c]) <= 0.01);
  }
  for (const auto& step : log.steps) {
    if (!step.absorbed && !step.wall) {
      CHECK(step.max_spike_overlap <= 1e-6);
    }
  }
}

TEST_CASE("linearization_sweep: zero point and definitional identity") {
  const auto f = testutil::trained_fixture(3);
  const auto idx = uniform_batch_indices(f.data, Split::train, 256, 6);
  const HvpOracle oracle = model_oracle(f.spec, f.theta, Batch::gather(f.data, idx));
  const SpikeBasis basis = ritz(lanczos(oracle, lanczos_start_vector(f.theta.size(), 8), 10), 3);
  const SensitivityMatrix s =
      sensitivity_matrix(f.spec, f.theta, basis, 0.02, f.data, Split::sensitivity);
  WeightConfig protect;
  protect.p_exponent = 2.0;

  const std::vector<double> grid = {0.0, 0.01, 0.05};
  const LinearizationSweepLog log =
      linearization_sweep(f.spec, f.theta, f.data, basis, s, grid, protect,
                          Split::sensitivity);
  REQUIRE(log.points.size() == 3);
  CHECK(log.points[0].alpha_norm == 0.0);
  CHECK(log.points[0].predicted_norm == 0.0);
  CHECK(log.points[0].measured_norm == 0.0);
  CHECK(log.points[0].error_norm == 0.0);
  for (const auto& p : log.points) {
    // Predicted norm is ||S^t alpha|| by definition.
    CHECK(p.predicted_norm >= 0.0);
    CHECK(p.alpha_norm <= p.alpha_max + 1e-12);
  }
}

TEST_CASE("linearization_sweep: synthetic linear responder recovers d ~ 1") {
  // Ground truth: measured response is exactly damping * S^t alpha plus a
  // fixed quantization floor, so the error is floor + (1-damping)|S^t alpha|.
  SensitivityMatrix s;
  s.s = {{1.2, -0.4, 0.1}, {-0.3, 0.8, -0.5}};
  const std::vector<double> baseline_acc = {0.7, 0.6, 0.9};
  WeightConfig protect;
  protect.p_exponent = 1.0;
  const double damping = 0.6;
  Rng rng(17);
  auto measure = [&](const std::vector<double>& alpha) {
    std::vector<double> out = s.predict_delta(alpha);
    for (auto& v : out) {
      v *= damping;
      v += 2e-4 * (rng.uniform() - 0.5);  // tiny measurement floor
    }
    return out;
  };
  auto grid = log_grid(1e-3, 1.0, 38);
  const LinearizationSweepLog log =
      linearization_sweep_core(s, baseline_acc, grid, protect, measure);
  CHECK(log.additive.converged);
  CHECK(log.additive.d == doctest::Approx(1.0).epsilon(0.08));
  CHECK(log.additive.c <= 5e-4);  // the injected floor
  CHECK(log.norm_correlation >= 0.999);
  // The linear-term coefficient reflects the slope mismatch (1 - damping).
  CHECK(log.additive.b > 0.0);
}

TEST_CASE("linearization_sweep: fixture sweep brackets the reference exponent") {
  int pass = 0;
  for (std::uint64_t seed : {3ULL, 4ULL, 5ULL}) {
    const auto f = testutil::trained_fixture(seed);
    const auto idx = uniform_batch_indices(f.data, Split::train, 256, 3 + seed);
    const HvpOracle oracle = model_oracle(f.spec, f.theta, Batch::gather(f.data, idx));
    const SpikeBasis basis =
        ritz(lanczos(oracle, lanczos_start_vector(f.theta.size(), 5 + seed), 10), 3);
    const SensitivityMatrix s =
        sensitivity_matrix(f.spec, f.theta, basis, 0.02, f.data, Split::sensitivity);
    WeightConfig protect;
    protect.p_exponent = 2.0;
    auto grid = log_grid(5e-4, 0.6, 38);
    grid.insert(grid.begin(), 0.0);
    const LinearizationSweepLog log = linearization_sweep(
        f.spec, f.theta, f.data, basis, s, grid, protect, Split::sensitivity);
    INFO("seed ", seed, " corr ", log.norm_correlation, " d ", log.additive.d);
    if (log.norm_correlation >= 0.9 && log.additive.d >= 0.7 && log.additive.d <= 1.4) {
      ++pass;
    }
  }
  CHECK(pass == 3);
}

TEST_CASE("stability_study: reference row has zero angles and unit cosines") {
  const auto f = testutil::trained_fixture(2);
  StabilityStudyConfig config;
  config.batch_sizes = {64, 128, 256};
  config.ks = {3};
  config.top_k = 4;
  const StabilityStudy study = stability_study(f.spec, f.theta, f.data, config);
  REQUIRE(study.rows.size() == 3);
  CHECK(study.reference_n == 256);
  const StabilityRow& ref = study.rows.back();
  CHECK(ref.vs_reference.matched_cosine_mean == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(ref.vs_reference.angles[0].max_degrees <= 1e-5);

  // Angle sanity: bounded, mean <= max, matched >= diagonal.
  for (const auto& row : study.rows) {
    for (const auto& pa : row.vs_reference.angles) {
      CHECK(pa.max_degrees >= 0.0);
      CHECK(pa.max_degrees <= 90.0 + 1e-9);
      CHECK(pa.mean_degrees <= pa.max_degrees + 1e-12);
    }
    CHECK(row.vs_reference.matched_cosine_mean >=
          row.vs_reference.diagonal_cosine_mean - 1e-12);
  }

  // Timing monotone non-decreasing in n (more samples, more work per HVP).
  for (std::size_t i = 0; i + 1 < study.rows.size(); ++i) {
    CHECK(study.rows[i].hvp_seconds <= study.rows[i + 1].hvp_seconds * 1.05);
  }
}

TEST_CASE("stability_study: shuffled labels separate from nested-batch noise") {
  const auto f = testutil::trained_fixture(2);

  // Nested-batch angle at n=128 vs n=512.
  StabilityStudyConfig config;
  config.batch_sizes = {128, 512};
  config.ks = {3};
  config.top_k = 3;
  const StabilityStudy study = stability_study(f.spec, f.theta, f.data, config);
  const double nested_mean = study.rows.front().vs_reference.angles[0].mean_degrees;

  // Oracle with shuffled labels on the same samples: the class structure is
  // destroyed, so its spike subspace should sit materially farther away.
  const auto master = uniform_batch_indices(f.data, Split::train, 512, config.batch_seed);
  Batch b512 = Batch::gather(f.data, master);
  Batch shuffled = b512;
  Rng rng(99);
  rng.shuffle(shuffled.y);
  const ParamVector q1 = lanczos_start_vector(f.theta.size(), config.lanczos_seed);
  const SpikeBasis true_basis =
      ritz(lanczos(model_oracle(f.spec, f.theta, b512), q1, config.lanczos_m), 3);
  const SpikeBasis shuffled_basis =
      ritz(lanczos(model_oracle(f.spec, f.theta, shuffled), q1, config.lanczos_m), 3);
  const StabilityReport cross = subspace_stability(shuffled_basis, true_basis, {3});
  INFO("nested ", nested_mean, " shuffled ", cross.angles[0].mean_degrees);
  CHECK(cross.angles[0].mean_degrees > nested_mean);
}

TEST_CASE("compare_baselines: table structure, tau-0 row equality, orderings") {
  const auto f = testutil::trained_fixture(3);
  BaselineComparisonConfig config;
  config.finetune.epochs = 15;
  config.finetune.lr = 1e-3;
  config.finetune.batch_size = 64;
  config.finetune.seed = 103;
  config.finetune.optimizer = Optimizer::adam;
  config.surgery.iterations = 10;
  config.surgery.k_spikes = 3;
  config.surgery.alpha_max0 = 0.06;
  config.surgery.alpha_min = 0.006;
  config.surgery.p_exponent = 2.0;
  config.surgery.seed = 3 * 31 + 7;
  const BaselineComparison cmp = compare_baselines(f.spec, f.theta, f.data, config);

  CHECK(cmp.rows.size() == 7);
  const BaselineRow& base = cmp.row("baseline");
  CHECK(base.delta_sigma == 0.0);
  CHECK(base.weakest_classes.size() == 2);

  // tau = 0 equals the baseline row (identity rescale).
  const TauNormalizeResult tn = tau_normalize(f.spec, f.theta, 0.0);
  const ClassAccuracy tau0 = per_class_accuracy(f.spec, tn.theta, f.data, Split::heldout);
  CHECK(tau0.sigma == base.sigma);
  CHECK(tau0.global == base.global);

  CHECK(cmp.row("surgery").sigma <= cmp.row("focal_finetune").sigma);
}

TEST_CASE("compare_baselines: logit adjustment is a no-op on the balanced fixture") {
  const Dataset ds = make_blob_fixture(fixture_preset("balanced-4", 3));
  MlpSpec spec = testutil::fixture_model(ds, 48);
  TrainConfig tc = testutil::fixture_train_config(3);
  tc.epochs = 15;
  const ParamVector theta = train(spec, ds, tc).theta;
  const auto priors = class_priors(ds);
  for (double p : priors) REQUIRE(p == 0.25);  // exactly balanced counts

  const ClassAccuracy base = per_class_accuracy(spec, theta, ds, Split::heldout);
  const ClassAccuracy adj =
      logit_adjust_accuracy(spec, theta, ds, Split::heldout, priors, 1.0);
  CHECK(adj.sigma - base.sigma == 0.0);
  CHECK(adj.global == base.global);
}

TEST_CASE("bulk_projected_finetune: full coordinate basis freezes the toy model") {
  // 1-in, 1-hidden, 2-class toy: p = 1*1+1 + 1*2+2 = 6; span the whole space.
  Dataset ds;
  ds.dim = 1;
  ds.classes = 2;
  Rng rng(7);
  for (int i = 0; i < 24; ++i) {
    const int y = i % 2;
    ds.inputs.push_back((y == 0 ? -1.5 : 1.5) + 0.1 * rng.gaussian());
    ds.labels.push_back(y);
    if (i < 16) ds.train_idx.push_back(i);
    else if (i < 20) ds.sensitivity_idx.push_back(i);
    else ds.heldout_idx.push_back(i);
  }
  MlpSpec spec;
  spec.layer_widths = {1, 1, 2};
  const ParamVector theta0 = init_params(spec, 5);

  std::vector<ParamVector> basis;
  for (int i = 0; i < spec.param_count(); ++i) {
    ParamVector e(static_cast<std::size_t>(spec.param_count()));
    e[static_cast<std::size_t>(i)] = 1.0;
    basis.push_back(std::move(e));
  }
  BulkFinetuneConfig config;
  config.train.epochs = 4;
  config.train.batch_size = 8;
  config.train.seed = 11;
  config.refresh_every_epochs = 0;  // keep the full basis
  const BulkFinetuneResult out = bulk_projected_finetune(spec, theta0, ds, basis, config);
  for (std::size_t i = 0; i < theta0.size(); ++i) {
    CHECK(std::bit_cast<std::uint64_t>(out.theta[i]) ==
          std::bit_cast<std::uint64_t>(theta0[i]));
  }
}

TEST_CASE("bulk_projected_finetune: empty basis reproduces plain training exactly") {
  const Dataset ds = make_blob_fixture(fixture_preset("balanced-4", 5));
  MlpSpec spec = testutil::fixture_model(ds, 24);
  const ParamVector theta0 = init_params(spec, 9);

  BulkFinetuneConfig config;
  config.train.epochs = 5;
  config.train.lr = 1e-3;
  config.train.batch_size = 64;
  config.train.seed = 77;
  config.train.optimizer = Optimizer::adam;
  config.refresh_every_epochs = 0;
  const BulkFinetuneResult projected = bulk_projected_finetune(spec, theta0, ds, {}, config);
  const TrainResult plain = train(spec, ds, config.train, &theta0);
  REQUIRE(projected.theta.size() == plain.theta.size());
  for (std::size_t i = 0; i < plain.theta.size(); ++i) {
    CHECK(std::bit_cast<std::uint64_t>(projected.theta[i]) ==
          std::bit_cast<std::uint64_t>(plain.theta[i]));
  }
}

TEST_CASE("bulk_projected_finetune: erodes the surgery gains on the fixture") {
  int erosion = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto f = testutil::trained_fixture(seed);
    SurgeryConfig sc;
    sc.iterations = 10;
    sc.k_spikes = 3;
    sc.alpha_max0 = 0.06;
    sc.alpha_min = 0.006;
    sc.p_exponent = 2.0;
    sc.seed = seed * 31 + 7;
    const SurgeryRun run = run_surgery(f.spec, f.theta, f.data, sc);

    BulkFinetuneConfig bc;
    bc.train.epochs = 15;
    bc.train.lr = 1e-3;
    bc.train.batch_size = 64;
    bc.train.seed = seed + 50;
    bc.train.optimizer = Optimizer::adam;
    bc.k_spikes = 3;
    bc.refresh_seed = seed + 60;
    const BulkFinetuneResult ft =
        bulk_projected_finetune(f.spec, run.state.theta, f.data, {}, bc);
    CHECK(ft.worst_projection <= 1e-8);

    const double post_surgery =
        per_class_accuracy(f.spec, run.state.theta, f.data, Split::heldout).sigma;
    const double post_ft =
        per_class_accuracy(f.spec, ft.theta, f.data, Split::heldout).sigma;
    INFO("seed ", seed, " surgery ", post_surgery, " after FT ", post_ft);
    if (post_ft >= post_surgery) ++erosion;
  }
  CHECK(erosion >= 2);  // direction of change over 3 seeds
}
