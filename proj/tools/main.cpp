// hesskit command-line surface: reproducible runs of the spectral toolkit.
// Every subcommand resolves its configuration into a manifest; a run repeated
// from its manifest is bit-identical (wall-clock timings live in separate
// timing files, excluded from that contract).

#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hesskit/baselines.hpp"
#include "hesskit/bulk_walk.hpp"
#include "hesskit/checkpoint.hpp"
#include "hesskit/config.hpp"
#include "hesskit/dense.hpp"
#include "hesskit/lanczos.hpp"
#include "hesskit/linearization.hpp"
#include "hesskit/oracle.hpp"
#include "hesskit/posthoc.hpp"
#include "hesskit/report.hpp"
#include "hesskit/rng.hpp"
#include "hesskit/sensitivity.hpp"
#include "hesskit/slq.hpp"
#include "hesskit/spikes.hpp"
#include "hesskit/stability_study.hpp"
#include "hesskit/surgery.hpp"
#include "hesskit/train.hpp"

namespace {

using namespace hesskit;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitInterrupted = 4;

volatile std::sig_atomic_t g_interrupted = 0;
void handle_signal(int) { g_interrupted = 1; }

struct CommonArgs {
  std::string config_path;
  std::string checkpoint_path;
  std::string out_dir = "run";
  std::vector<std::string> overrides;
  std::uint64_t seed_override = 0;
  bool seed_set = false;
};

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig config =
      args.config_path.empty() ? RunConfig() : RunConfig::from_file(args.config_path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key.path=value, got '" + kv + "'");
    }
    config.set_override(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed_set) config.set_override("seed", std::to_string(args.seed_override));
  return config;
}

BlobFixtureSpec fixture_from_config(const RunConfig& config) {
  BlobFixtureSpec spec = fixture_preset(config.text("fixture.preset", "imbalanced-4"),
                                        config.integer("fixture.seed", static_cast<int>(config.seed())));
  spec.classes = config.integer("fixture.classes", spec.classes);
  spec.dim = config.integer("fixture.dim", spec.dim);
  spec.frequencies = config.numbers("fixture.frequencies", spec.frequencies);
  spec.separation = config.number("fixture.separation", spec.separation);
  const auto pair = config.integers(
      "fixture.entangled_pair", {spec.entangled_pair.first, spec.entangled_pair.second});
  if (pair.size() == 2) spec.entangled_pair = {pair[0], pair[1]};
  spec.entangled_separation =
      config.number("fixture.entangled_separation", spec.entangled_separation);
  spec.total_samples = config.integer("fixture.total_samples", spec.total_samples);
  spec.train_fraction = config.number("fixture.train_fraction", spec.train_fraction);
  spec.sensitivity_fraction =
      config.number("fixture.sensitivity_fraction", spec.sensitivity_fraction);
  return spec;
}

MlpSpec model_from_config(const RunConfig& config, const Dataset& ds) {
  MlpSpec spec;
  spec.layer_widths.push_back(ds.dim);
  for (int h : config.integers("model.hidden", {48})) spec.layer_widths.push_back(h);
  spec.layer_widths.push_back(ds.classes);
  spec.activation =
      config.text("model.activation", "tanh") == "relu" ? Activation::relu : Activation::tanh;
  const std::string loss = config.text("model.loss", "cross_entropy");
  if (loss == "cross_entropy") {
    spec.loss = LossKind::cross_entropy;
  } else if (loss == "focal") {
    spec.loss = LossKind::focal;
    spec.focal_gamma = config.number("model.focal_gamma", 2.0);
  } else if (loss == "weighted_ce") {
    spec.loss = LossKind::weighted_ce;
    spec.class_weights = config.numbers("model.class_weights", {});
  } else {
    throw ConfigError("config: unknown model.loss '" + loss + "'");
  }
  spec.validate();
  return spec;
}

TrainConfig train_from_config(const RunConfig& config) {
  TrainConfig tc;
  tc.epochs = config.integer("train.epochs", 30);
  tc.lr = config.number("train.lr", 0.1);
  tc.batch_size = config.integer("train.batch_size", 64);
  tc.seed = static_cast<std::uint64_t>(config.integer("train.seed", static_cast<int>(config.seed())));
  const std::string opt = config.text("train.optimizer", "sgd");
  if (opt == "sgd") tc.optimizer = Optimizer::sgd;
  else if (opt == "adam") tc.optimizer = Optimizer::adam;
  else throw ConfigError("config: unknown train.optimizer '" + opt + "'");
  return tc;
}

SurgeryConfig surgery_from_config(const RunConfig& config) {
  SurgeryConfig sc;
  sc.iterations = config.integer("surgery.iterations", 10);
  sc.k_spikes = config.integer("surgery.k_spikes", 3);
  sc.lanczos_m = config.integer("lanczos.m", 10);
  sc.lanczos_tol = config.number("lanczos.tol", 1e-10);
  sc.hvp_batch = config.integer("hvp.batch", 256);
  sc.hvp_stratified = config.boolean("hvp.stratified", false);
  sc.hvp_per_class = config.integer("hvp.per_class", 32);
  const std::string budget = config.text("surgery.budget", "l2");
  if (budget == "l2") sc.budget_mode = BudgetMode::global_l2;
  else if (budget == "box") sc.budget_mode = BudgetMode::per_spike_box;
  else throw ConfigError("config: unknown surgery.budget '" + budget + "'");
  sc.alpha_max0 = config.number("surgery.alpha_max0", 0.06);
  sc.alpha_min = config.number("surgery.alpha_min", 0.006);
  sc.p_exponent = config.text("surgery.p_exponent", "") == "auto"
                      ? -1.0
                      : config.number("surgery.p_exponent", 2.0);
  sc.target = config.text("surgery.target", "min_sigma") == "max_worst"
                  ? WeightTarget::max_worst
                  : WeightTarget::min_sigma;
  sc.protect_threshold = config.number("surgery.protect_threshold", 0.85);
  sc.protect_floor = config.number("surgery.protect_floor", -0.01);
  sc.sigma_guard = config.number("surgery.sigma_guard", 0.005);
  sc.class_drop_guard = config.number("surgery.class_drop_guard", 0.07);
  sc.seed = derive_seed(config.seed(), 0x5e);
  return sc;
}

void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    const RunConfig& config, const nlohmann::json& extra = {}) {
  nlohmann::json manifest;
  manifest["subcommand"] = subcommand;
  manifest["config"] = config.raw();
  manifest["config_hash"] = config_hash(config.canonical());
  if (!extra.is_null() && !extra.empty()) manifest["state"] = extra;
  report::write_text(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

std::string accuracy_table(const ClassAccuracy& acc) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t c = 0; c < acc.per_class.size(); ++c) {
    rows.push_back({std::to_string(c), report::format_double(acc.per_class[c]),
                    std::to_string(acc.counts[c]), acc.defined[c] ? "yes" : "no"});
  }
  rows.push_back({"global", report::format_double(acc.global), std::to_string(acc.total()), ""});
  rows.push_back({"sigma", report::format_double(acc.sigma), "", ""});
  return report::format_table({"class", "accuracy", "count", "defined"}, rows);
}

Dataset dataset_for(const RunConfig& config, const std::string& out_dir,
                    bool write_fixture_manifest) {
  const BlobFixtureSpec fx = fixture_from_config(config);
  Dataset ds = make_blob_fixture(fx);
  if (write_fixture_manifest) {
    report::write_text(out_dir + "/fixture_manifest.json", dataset_manifest(ds, fx) + "\n");
  }
  return ds;
}

// ---------------------------------------------------------------------------

int cmd_train(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  report::ensure_dir(args.out_dir);
  const Dataset ds = dataset_for(config, args.out_dir, true);
  const MlpSpec spec = model_from_config(config, ds);
  const TrainConfig tc = train_from_config(config);
  const TrainResult result = train(spec, ds, tc);

  Checkpoint ckpt;
  ckpt.spec = spec;
  ckpt.theta = result.theta;
  ckpt.seed = tc.seed;
  ckpt.config_hash = config_hash(config.canonical());
  save_checkpoint(args.out_dir + "/checkpoint.pv", ckpt);

  std::ostringstream log;
  log << "# epoch mean_loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    log << e << " " << report::format_double(result.epoch_loss[e]) << "\n";
  }
  report::write_text(args.out_dir + "/training_log.txt", log.str());

  const ClassAccuracy heldout = per_class_accuracy(spec, result.theta, ds, Split::heldout);
  report::write_text(args.out_dir + "/heldout_accuracy.txt", accuracy_table(heldout));
  write_manifest(args.out_dir, "train", config);
  std::cout << "train: heldout global " << heldout.global << " sigma " << heldout.sigma
            << "\n";
  return kExitOk;
}

HvpOracle oracle_for_checkpoint(const RunConfig& config, const Checkpoint& ckpt,
                                const Dataset& ds, std::uint64_t stream) {
  const int batch = config.integer("hvp.batch", 256);
  const auto indices =
      config.boolean("hvp.stratified", false)
          ? stratified_batch_indices(ds, Split::train, config.integer("hvp.per_class", 32),
                                      derive_seed(config.seed(), stream))
          : uniform_batch_indices(ds, Split::train, batch, derive_seed(config.seed(), stream));
  return model_oracle(ckpt.spec, ckpt.theta, Batch::gather(ds, indices));
}

int cmd_spectrum(const CommonArgs& args, bool synthetic) {
  const RunConfig config = resolve_config(args);
  report::ensure_dir(args.out_dir);
  const int m = config.integer("lanczos.m", 10);
  const double tol = config.number("lanczos.tol", 1e-10);
  // Synthetic operators carry a true bulk median (three-decades rule); model
  // checkpoints only have the Lanczos-window median, a biased-high proxy, so
  // the default separation factor drops to one decade there.
  const double gap_factor = config.number("lanczos.gap_factor", synthetic ? 1e3 : 10.0);

  HvpOracle oracle;
  double bulk_median = 0.0;
  if (synthetic) {
    SpikedOperatorSpec spec;
    spec.dim = static_cast<std::size_t>(config.integer("spiked.dim", 500));
    spec.spike_values = config.numbers(
        "spiked.spikes", {828.6, 577.8, 310.7, 243.5, 153.2, 112.5, 58.9, 20.5});
    spec.bulk_scale = config.number("spiked.bulk_scale", 0.03);
    spec.seed = static_cast<std::uint64_t>(config.integer("spiked.seed", static_cast<int>(config.seed())));
    SpikedOperator op = spiked_oracle(spec);
    oracle = op.oracle;
    bulk_median = op.bulk_median;
  } else {
    const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
    const Dataset ds = dataset_for(config, args.out_dir, false);
    oracle = oracle_for_checkpoint(config, ckpt, ds, 0x10);
  }

  const auto start = std::chrono::steady_clock::now();
  const ParamVector q1 = lanczos_start_vector(
      oracle.dim, static_cast<std::uint64_t>(config.integer("lanczos.seed", 7)));
  const LanczosResult lz = lanczos(oracle, q1, m, tol);
  const SpikeBasis basis = ritz(lz, static_cast<int>(lz.t.order()));
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!synthetic) {
    // Bulk median proxy: median of the non-top Ritz window (absolute values).
    std::vector<double> rest(basis.eigenvalues.begin() +
                                 std::min<std::size_t>(basis.size(), 3),
                             basis.eigenvalues.end());
    for (auto& v : rest) v = std::abs(v);
    std::sort(rest.begin(), rest.end());
    bulk_median = rest.empty() ? 0.0 : rest[rest.size() / 2];
  }

  SpectrumReport rep = make_spectrum_report(basis, bulk_median, gap_factor, m,
                                            oracle.provenance, 0.0);
  report::write_text(args.out_dir + "/spectrum.json", rep.to_json() + "\n");
  report::write_text(args.out_dir + "/timing.txt",
                     "lanczos_seconds " + report::format_double(elapsed) + "\n");

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
    rows.push_back({std::to_string(i + 1), report::format_double(rep.eigenvalues[i]),
                    spike_label_name(rep.labels[i]),
                    i < rep.ratios_to_top.size()
                        ? report::format_double(rep.ratios_to_top[i])
                        : ""});
  }
  report::write_text(args.out_dir + "/spectrum_table.txt",
                     report::format_table({"rank", "eigenvalue", "label", "ratio_to_top"}, rows));
  write_manifest(args.out_dir, synthetic ? "spectrum-synthetic" : "spectrum", config);
  std::cout << "spectrum: " << rep.eigenvalues.size() << " Ritz values, orth_error "
            << rep.orth_error << "\n";
  return kExitOk;
}

int cmd_slq(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  report::ensure_dir(args.out_dir);
  const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
  const Dataset ds = dataset_for(config, args.out_dir, false);
  const HvpOracle oracle = oracle_for_checkpoint(config, ckpt, ds, 0x11);

  const int m = config.integer("slq.m", 90);
  const int k = config.integer("slq.k", 10);
  const double sigma2 = config.number("slq.sigma2", 1e-5);

  // Auto-range from a short Lanczos pass unless the grid was pinned.
  const SpikeBasis probe = ritz(
      lanczos(oracle, lanczos_start_vector(oracle.dim, derive_seed(config.seed(), 0x12)),
              std::min<int>(m, 20), 1e-10),
      1);
  const double hi = config.number("slq.grid_hi", probe.eigenvalues.front());
  const double lo = config.number("slq.grid_lo", 0.0);
  const auto grid = slq_auto_grid(lo, hi, sigma2, config.integer("slq.grid_points", 600));

  const DensityEstimate est =
      slq_density(oracle, m, k, sigma2, grid, derive_seed(config.seed(), 0x13));
  report::write_plot_data(args.out_dir + "/density.dat",
                          {{"sigma2", report::format_double(sigma2)},
                           {"probes", std::to_string(k)},
                           {"order", std::to_string(m)},
                           {"integral", report::format_double(est.integral())}},
                          {est.grid, est.density});

  const auto k_values = config.integers("slq.k_values", {1, 2, 4, 8});
  const ProbeConvergence conv =
      probe_convergence(oracle, std::min<int>(m, 30), sigma2, grid, k_values,
                        derive_seed(config.seed(), 0x14), config.integer("slq.k_ref", 0));
  std::vector<double> ks(conv.k_values.begin(), conv.k_values.end());
  report::write_plot_data(args.out_dir + "/probe_convergence.dat",
                          {{"fitted_slope", report::format_double(conv.fitted_slope)},
                           {"k_ref", std::to_string(conv.k_ref)}},
                          {ks, conv.l1_distance});
  write_manifest(args.out_dir, "slq", config);
  std::cout << "slq: density integral " << est.integral() << ", convergence slope "
            << conv.fitted_slope << "\n";
  return kExitOk;
}

SpikeBasis basis_for_checkpoint(const RunConfig& config, const Checkpoint& ckpt,
                                const Dataset& ds, int k_spikes, std::uint64_t stream) {
  const HvpOracle oracle = oracle_for_checkpoint(config, ckpt, ds, stream);
  const LanczosResult lz = lanczos(
      oracle,
      lanczos_start_vector(oracle.dim,
                           static_cast<std::uint64_t>(config.integer("lanczos.seed", 7))),
      config.integer("lanczos.m", 10), config.number("lanczos.tol", 1e-10));
  SpikeBasis all = ritz(lz, std::min<int>(k_spikes, static_cast<int>(lz.t.order())),
                        oracle.provenance);
  SpikeBasis basis;
  basis.source = all.source;
  basis.orth_error = all.orth_error;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all.eigenvalues[i] > 0.0) {
      basis.eigenvalues.push_back(all.eigenvalues[i]);
      basis.vectors.push_back(all.vectors[i]);
    }
  }
  return basis;
}

void write_sensitivity_outputs(const std::string& out_dir, const SensitivityMatrix& s) {
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < s.spikes(); ++i) {
    std::vector<std::string> row{"spike_" + std::to_string(i + 1)};
    for (int j = 0; j < s.classes(); ++j) {
      row.push_back(report::format_double(s.s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::string> header{"spike"};
  for (int j = 0; j < s.classes(); ++j) header.push_back("class_" + std::to_string(j));
  std::ostringstream text;
  text << "# probe_amplitude: " << report::format_double(s.probe_amplitude) << "\n";
  text << "# noise_floor: " << report::format_double(s.noise_floor) << "\n";
  text << "# split: " << s.split_used << "\n";
  text << report::format_table(header, rows);
  report::write_text(out_dir + "/sensitivity_matrix.txt", text.str());

  std::vector<double> col_i, col_j, col_v;
  for (int i = 0; i < s.spikes(); ++i) {
    for (int j = 0; j < s.classes(); ++j) {
      col_i.push_back(i + 1);
      col_j.push_back(j);
      col_v.push_back(s.s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
  }
  report::write_plot_data(out_dir + "/sensitivity.dat",
                          {{"format", "spike class value"}}, {col_i, col_j, col_v});
}

int cmd_sensitivity(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  report::ensure_dir(args.out_dir);
  const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
  const Dataset ds = dataset_for(config, args.out_dir, false);
  const SpikeBasis basis =
      basis_for_checkpoint(config, ckpt, ds, config.integer("sensitivity.k_spikes", 3), 0x15);
  const double eps = config.number("sensitivity.eps", 0.02);
  const SensitivityMatrix s =
      sensitivity_matrix(ckpt.spec, ckpt.theta, basis, eps, ds, Split::sensitivity);
  write_sensitivity_outputs(args.out_dir, s);

  const RankDiagnostics rank = effective_rank(s);
  nlohmann::json j;
  j["singular_values"] = rank.singular_values;
  j["energy"] = rank.energy;
  j["effective_rank"] = rank.effective_rank;
  j["flatness"] = std::isfinite(rank.flatness) ? nlohmann::json(rank.flatness)
                                               : nlohmann::json("inf");
  j["frobenius"] = rank.frobenius;
  report::write_text(args.out_dir + "/rank.json", j.dump(2) + "\n");
  write_manifest(args.out_dir, "sensitivity", config);
  std::cout << "sensitivity: " << s.spikes() << "x" << s.classes() << " matrix, r_eff "
            << rank.effective_rank << "\n";
  return kExitOk;
}

int cmd_rank(const CommonArgs& args) {
  // Pre-screening diagnostic: one Lanczos run plus one sensitivity matrix.
  return cmd_sensitivity(args);
}

nlohmann::json iteration_to_json(const IterationRecord& rec) {
  nlohmann::json j;
  j["t"] = rec.t;
  j["accepted"] = rec.accepted;
  j["rolled_back"] = rec.rolled_back;
  j["skipped"] = rec.skipped;
  j["per_class_acc"] = rec.per_class_acc;
  j["sigma"] = rec.sigma;
  j["alpha_used"] = rec.alpha_used;
  j["alpha_star"] = rec.alpha_star;
  j["eigenvalues"] = rec.eigenvalues;
  j["g"] = rec.g;
  j["snr"] = rec.snr;
  j["hvp_seed"] = rec.hvp_seed;
  return j;
}

int cmd_surgery(const CommonArgs& args, bool resume, bool deflated, int stop_after) {
  RunConfig config;
  if (resume) {
    const auto manifest =
        nlohmann::json::parse(report::read_text(args.out_dir + "/manifest.json"));
    config = RunConfig::from_json_text(manifest.at("config").dump());
  } else {
    config = resolve_config(args);
  }
  report::ensure_dir(args.out_dir);
  const Dataset ds = dataset_for(config, args.out_dir, !resume);

  if (deflated) {
    const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
    DeflatedSurgeryConfig dc;
    dc.phases = config.integer("deflation.phases", 2);
    dc.spikes_per_phase = config.integer("deflation.spikes_per_phase", 6);
    dc.iters_per_phase = config.integer("deflation.iters_per_phase", 3);
    dc.lanczos_m = config.integer("deflation.lanczos_m", 16);
    dc.hvp_batch = config.integer("hvp.batch", 256);
    dc.alpha_max1 = config.number("deflation.alpha_max1", 0.06);
    dc.max_stored_vectors = config.integer("deflation.max_stored_vectors", 256);
    dc.seed = derive_seed(config.seed(), 0x5f);
    const DeflatedSurgeryRun run = run_deflated_surgery(ckpt.spec, ckpt.theta, ds, dc);

    std::vector<std::vector<std::string>> rows;
    for (const auto& phase : run.phases) {
      rows.push_back({std::to_string(phase.phase),
                      std::to_string(phase.first_spike) + "-" + std::to_string(phase.last_spike),
                      report::format_double(phase.lambda_max),
                      report::format_double(phase.alpha_max),
                      report::format_double(phase.cross_corr_max),
                      report::format_double(phase.sigma),
                      report::format_double(phase.global),
                      phase.stopped_by_memory_guard ? "memory-guard" : ""});
    }
    report::write_text(
        args.out_dir + "/phases.txt",
        report::format_table({"phase", "spikes", "lambda_max", "alpha_max", "cross_corr",
                              "sigma", "global", "note"},
                             rows));
    Checkpoint out = ckpt;
    out.theta = run.theta;
    save_checkpoint(args.out_dir + "/final.pv", out);
    report::write_text(args.out_dir + "/before_after.txt",
                       "before (heldout)\n" + accuracy_table(run.heldout_before) +
                           "\nafter (heldout)\n" + accuracy_table(run.heldout_after));
    write_manifest(args.out_dir, "surgery-deflated", config);
    std::cout << "deflated surgery: sigma " << run.heldout_before.sigma << " -> "
              << run.heldout_after.sigma << " over " << run.phases.size() << " phases\n";
    return kExitOk;
  }

  const SurgeryConfig sc = surgery_from_config(config);
  Checkpoint ckpt;
  SurgeryState state;
  ClassAccuracy heldout_before;
  int start_iteration = 0;

  if (resume) {
    const auto state_json =
        nlohmann::json::parse(report::read_text(args.out_dir + "/state.json"));
    ckpt = load_checkpoint(args.out_dir + "/current.pv");
    state.theta = ckpt.theta;
    state.accuracy = per_class_accuracy(ckpt.spec, state.theta, ds, Split::sensitivity);
    state.sigma0 = state_json.at("sigma0");
    state.controller_m = state_json.at("controller_m");
    state.controller_v = state_json.at("controller_v");
    state.controller_t = state_json.at("controller_t");
    state.controller_alpha = state_json.at("controller_alpha");
    start_iteration = state_json.at("iteration");
    for (const auto& j : state_json.at("log")) {
      IterationRecord rec;
      rec.t = j.at("t");
      rec.accepted = j.at("accepted");
      rec.rolled_back = j.at("rolled_back");
      rec.skipped = j.at("skipped");
      rec.per_class_acc = j.at("per_class_acc").get<std::vector<double>>();
      rec.sigma = j.at("sigma");
      rec.alpha_used = j.at("alpha_used");
      rec.alpha_star = j.at("alpha_star").get<std::vector<double>>();
      rec.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
      rec.g = j.at("g");
      rec.snr = j.at("snr");
      rec.hvp_seed = j.at("hvp_seed");
      state.log.push_back(std::move(rec));
    }
    heldout_before = per_class_accuracy(ckpt.spec, load_checkpoint(args.out_dir + "/baseline.pv").theta,
                                        ds, Split::heldout);
  } else {
    ckpt = load_checkpoint(args.checkpoint_path);
    heldout_before = per_class_accuracy(ckpt.spec, ckpt.theta, ds, Split::heldout);
    state = init_surgery_state(ckpt.spec, ckpt.theta, ds, sc);
    save_checkpoint(args.out_dir + "/baseline.pv", ckpt);
  }

  const auto save_state = [&](int iteration) {
    nlohmann::json j;
    j["iteration"] = iteration;
    j["sigma0"] = state.sigma0;
    j["controller_m"] = state.controller_m;
    j["controller_v"] = state.controller_v;
    j["controller_t"] = state.controller_t;
    j["controller_alpha"] = state.controller_alpha;
    j["log"] = nlohmann::json::array();
    for (const auto& rec : state.log) j["log"].push_back(iteration_to_json(rec));
    report::write_text(args.out_dir + "/state.json", j.dump(2) + "\n");
    Checkpoint current = ckpt;
    current.theta = state.theta;
    save_checkpoint(args.out_dir + "/current.pv", current);
  };

  int done_this_invocation = 0;
  {
    split_audit::ScopeGuard guard(false, "cli-surgery-loop");
    for (int t = start_iteration; t < sc.iterations; ++t) {
      const IterationRecord rec = surgery_step(state, ckpt.spec, ds, sc);
      if (rec.accepted) {
        Checkpoint accepted = ckpt;
        accepted.theta = state.theta;
        char name[32];
        std::snprintf(name, sizeof(name), "iter_%03d.pv", rec.t);
        save_checkpoint(args.out_dir + "/" + name, accepted);
      }
      save_state(t + 1);
      ++done_this_invocation;
      const bool stop_requested =
          (stop_after > 0 && done_this_invocation >= stop_after) || g_interrupted;
      if (stop_requested && t + 1 < sc.iterations) {
        write_manifest(args.out_dir, "surgery", config,
                       {{"interrupted_at_iteration", t + 1}});
        std::cout << "surgery: interrupted after iteration " << t + 1
                  << ", resume with --resume\n";
        return kExitInterrupted;
      }
    }
  }

  Checkpoint final_ckpt = ckpt;
  final_ckpt.theta = state.theta;
  save_checkpoint(args.out_dir + "/final.pv", final_ckpt);

  const ClassAccuracy heldout_after =
      per_class_accuracy(ckpt.spec, state.theta, ds, Split::heldout);
  report::write_text(args.out_dir + "/before_after.txt",
                     "before (heldout)\n" + accuracy_table(heldout_before) +
                         "\nafter (heldout)\n" + accuracy_table(heldout_after));

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"0", "baseline", report::format_double(state.sigma0), "", "", ""});
  for (const auto& rec : state.log) {
    rows.push_back({std::to_string(rec.t),
                    rec.skipped ? "skipped" : (rec.accepted ? "accepted" : "rollback"),
                    report::format_double(rec.sigma),
                    report::format_double(rec.alpha_used),
                    report::format_double(rec.g), report::format_double(rec.snr)});
  }
  report::write_text(args.out_dir + "/trajectory.txt",
                     report::format_table(
                         {"iter", "outcome", "sigma", "alpha_max", "g", "snr"}, rows));

  const DecileReport deciles = decile_report(heldout_before, heldout_after,
                                             std::min<int>(4, ds.classes));
  std::vector<std::vector<std::string>> drows;
  for (std::size_t i = 0; i < deciles.rows.size(); ++i) {
    drows.push_back({std::to_string(i + 1),
                     report::format_double(deciles.rows[i].baseline_mean),
                     report::format_double(deciles.rows[i].delta_mean),
                     std::to_string(deciles.rows[i].count)});
  }
  report::write_text(args.out_dir + "/decile.txt",
                     report::format_table({"group", "baseline_mean", "delta_mean", "count"},
                                          drows));
  write_manifest(args.out_dir, "surgery", config);
  std::cout << "surgery: heldout sigma " << heldout_before.sigma << " -> "
            << heldout_after.sigma << " (global " << heldout_before.global << " -> "
            << heldout_after.global << ")\n";
  return kExitOk;
}

int cmd_bulkwalk(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  report::ensure_dir(args.out_dir);
  const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
  const Dataset ds = dataset_for(config, args.out_dir, false);

  BulkWalkConfig wc;
  wc.steps = config.integer("bulkwalk.steps", 100);
  wc.epsilon = config.number("bulkwalk.epsilon", 0.0);
  wc.target_displacement = config.number("bulkwalk.target_displacement", 2.0);
  wc.wall_tol = config.number("bulkwalk.wall_tol", 0.5);
  wc.basis_m = config.integer("bulkwalk.basis_m", 400);
  wc.basis_k = config.integer("bulkwalk.basis_k", 0);
  wc.hvp_batch = config.integer("hvp.batch", 256);
  wc.history_cap = config.integer("bulkwalk.history_cap", 64);
  wc.seed = derive_seed(config.seed(), 0x60);
  const BulkWalkLog log = bulk_walk(ckpt.spec, ckpt.theta, ds, wc);

  std::vector<double> step_col, loss_col, acc_col, overlap_col, lmax_col;
  for (const auto& step : log.steps) {
    step_col.push_back(step.step);
    loss_col.push_back(step.loss);
    acc_col.push_back(step.global_acc);
    overlap_col.push_back(step.max_spike_overlap);
    lmax_col.push_back(step.lambda_max);
  }
  report::write_plot_data(
      args.out_dir + "/walk.dat",
      {{"epsilon", report::format_double(log.epsilon)},
       {"relative_displacement", report::format_double(log.relative_displacement)},
       {"start_loss", report::format_double(log.start_loss)},
       {"end_loss", report::format_double(log.end_loss)},
       {"archived_directions", std::to_string(log.archived_directions)}},
      {step_col, loss_col, acc_col, overlap_col, lmax_col});

  std::ostringstream summary;
  summary << "relative_displacement " << report::format_double(log.relative_displacement)
          << "\nloss " << report::format_double(log.start_loss) << " -> "
          << report::format_double(log.end_loss) << "\n";
  for (std::size_t c = 0; c < log.start_per_class.size(); ++c) {
    summary << "class_" << c << " " << report::format_double(log.start_per_class[c])
            << " -> " << report::format_double(log.end_per_class[c]) << "\n";
  }
  summary << (log.terminated_early ? "terminated: all directions absorbed\n" : "");
  report::write_text(args.out_dir + "/walk_summary.txt", summary.str());
  write_manifest(args.out_dir, "bulkwalk", config);
  std::cout << "bulkwalk: displacement " << log.relative_displacement << ", loss "
            << log.start_loss << " -> " << log.end_loss << "\n";
  return kExitOk;
}

int cmd_linearize(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  report::ensure_dir(args.out_dir);
  const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
  const Dataset ds = dataset_for(config, args.out_dir, false);
  const SpikeBasis basis =
      basis_for_checkpoint(config, ckpt, ds, config.integer("surgery.k_spikes", 3), 0x16);
  const SensitivityMatrix s = sensitivity_matrix(
      ckpt.spec, ckpt.theta, basis, config.number("linearize.probe_eps", 0.02), ds,
      Split::sensitivity);

  auto grid = log_grid(config.number("linearize.grid_lo", 5e-4),
                       config.number("linearize.grid_hi", 0.6),
                       config.integer("linearize.points", 38));
  grid.insert(grid.begin(), 0.0);
  WeightConfig protect;
  protect.p_exponent = 2.0;
  protect.protect_threshold = config.number("surgery.protect_threshold", 0.85);
  protect.protect_floor = config.number("surgery.protect_floor", -0.01);
  const LinearizationSweepLog log = linearization_sweep(ckpt.spec, ckpt.theta, ds, basis, s,
                                                        grid, protect, Split::sensitivity);

  std::vector<double> amax, anorm, pred, meas, err;
  for (const auto& point : log.points) {
    amax.push_back(point.alpha_max);
    anorm.push_back(point.alpha_norm);
    pred.push_back(point.predicted_norm);
    meas.push_back(point.measured_norm);
    err.push_back(point.error_norm);
  }
  report::write_plot_data(args.out_dir + "/sweep.dat",
                          {{"columns", "alpha_max alpha_norm predicted measured error"}},
                          {amax, anorm, pred, meas, err});
  nlohmann::json fit;
  fit["additive"] = {{"c", log.additive.c},
                     {"b", log.additive.b},
                     {"d", log.additive.d},
                     {"r2", log.additive.r2},
                     {"converged", log.additive.converged}};
  fit["power_law"] = {{"coefficient", log.power_law.coefficient},
                      {"exponent", log.power_law.exponent},
                      {"r2", log.power_law.r2}};
  fit["norm_correlation"] = log.norm_correlation;
  report::write_text(args.out_dir + "/fit.json", fit.dump(2) + "\n");
  write_manifest(args.out_dir, "linearize", config);
  std::cout << "linearize: correlation " << log.norm_correlation << ", d " << log.additive.d
            << "\n";
  return kExitOk;
}

int cmd_stability(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  report::ensure_dir(args.out_dir);
  const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
  const Dataset ds = dataset_for(config, args.out_dir, false);

  StabilityStudyConfig sc;
  sc.batch_sizes = config.integers("stability.batch_sizes", {64, 128, 256, 512});
  sc.ks = config.integers("stability.ks", {3});
  sc.lanczos_m = config.integer("stability.lanczos_m", 10);
  sc.top_k = config.integer("stability.top_k", 4);
  sc.batch_seed = derive_seed(config.seed(), 0x61);
  sc.lanczos_seed = derive_seed(config.seed(), 0x62);
  const StabilityStudy study = stability_study(ckpt.spec, ckpt.theta, ds, sc);

  std::vector<std::vector<std::string>> eig_rows, cos_rows, angle_rows, timing_rows;
  for (const auto& row : study.rows) {
    std::vector<std::string> eig{std::to_string(row.n)};
    for (double v : row.eigenvalues) eig.push_back(report::format_double(v));
    eig_rows.push_back(std::move(eig));
    cos_rows.push_back({std::to_string(row.n),
                        report::format_double(row.vs_reference.matched_cosine_mean),
                        report::format_double(row.vs_reference.matched_cosine_min),
                        report::format_double(row.vs_reference.diagonal_cosine_mean)});
    for (const auto& pa : row.vs_reference.angles) {
      angle_rows.push_back({std::to_string(row.n), std::to_string(pa.k),
                            report::format_double(pa.max_degrees),
                            report::format_double(pa.mean_degrees)});
    }
    timing_rows.push_back({std::to_string(row.n), report::format_double(row.hvp_seconds),
                           report::format_double(row.lanczos_seconds)});
  }
  std::vector<std::string> eig_header{"n"};
  for (int i = 1; i <= sc.top_k; ++i) eig_header.push_back("lambda_" + std::to_string(i));
  report::write_text(args.out_dir + "/eigenvalues.txt",
                     report::format_table(eig_header, eig_rows));
  report::write_text(args.out_dir + "/cosines.txt",
                     report::format_table({"n", "matched_mean", "matched_min", "diagonal_mean"},
                                          cos_rows));
  report::write_text(args.out_dir + "/angles.txt",
                     report::format_table({"n", "k", "max_deg", "mean_deg"}, angle_rows));
  report::write_text(args.out_dir + "/timing.txt",
                     report::format_table({"n", "hvp_s", "lanczos_s"}, timing_rows));
  write_manifest(args.out_dir, "stability", config);
  std::cout << "stability: " << study.rows.size() << " batch sizes, reference n "
            << study.reference_n << "\n";
  return kExitOk;
}

int cmd_baselines(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  report::ensure_dir(args.out_dir);
  const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
  const Dataset ds = dataset_for(config, args.out_dir, false);

  BaselineComparisonConfig bc;
  bc.finetune.epochs = config.integer("baselines.ft_epochs", 15);
  bc.finetune.lr = config.number("baselines.ft_lr", 1e-3);
  bc.finetune.batch_size = config.integer("train.batch_size", 64);
  bc.finetune.seed = derive_seed(config.seed(), 0x63);
  bc.finetune.optimizer = Optimizer::adam;
  bc.focal_gamma = config.number("baselines.focal_gamma", 2.0);
  bc.tau_sweep = config.numbers("baselines.tau_sweep",
                                {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0});
  bc.logit_adjust_tau = config.number("baselines.logit_adjust_tau", 1.0);
  bc.surgery = surgery_from_config(config);
  const BaselineComparison cmp = compare_baselines(ckpt.spec, ckpt.theta, ds, bc);

  std::vector<std::vector<std::string>> rows;
  for (const auto& row : cmp.rows) {
    std::string weakest;
    for (int c : row.weakest_classes) weakest += std::to_string(c) + " ";
    rows.push_back({row.method, report::format_double(row.global),
                    report::format_double(row.sigma),
                    report::format_double(row.delta_sigma), weakest});
  }
  report::write_text(args.out_dir + "/comparison.txt",
                     report::format_table(
                         {"method", "global", "sigma", "delta_sigma", "weakest"}, rows));
  nlohmann::json j;
  for (const auto& row : cmp.rows) {
    j[row.method] = {{"global", row.global},
                     {"sigma", row.sigma},
                     {"delta_sigma", row.delta_sigma},
                     {"per_class", row.per_class}};
  }
  j["best_tau"] = cmp.best_tau;
  report::write_text(args.out_dir + "/comparison.json", j.dump(2) + "\n");
  write_manifest(args.out_dir, "baselines", config);
  std::cout << "baselines: surgery sigma " << cmp.row("surgery").sigma << " vs focal "
            << cmp.row("focal_finetune").sigma << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  CLI::App app{"hesskit: matrix-free Hessian spectral toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  bool resume = false;
  bool deflated = false;
  bool synthetic = false;
  int stop_after = 0;

  const auto add_common = [&](CLI::App* cmd, bool needs_checkpoint) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--out", args.out_dir, "output report directory");
    cmd->add_option("--set", args.overrides, "config override key.path=value")
        ->take_all();
    cmd->add_option("--seed", args.seed_override, "global seed override")
        ->each([&](const std::string&) { args.seed_set = true; });
    if (needs_checkpoint) {
      cmd->add_option("--checkpoint", args.checkpoint_path, "model checkpoint file");
    }
  };

  auto* train_cmd = app.add_subcommand("train", "train the fixture classifier");
  add_common(train_cmd, false);
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Lanczos spectrum report");
  add_common(spectrum_cmd, true);
  spectrum_cmd->add_flag("--synthetic", synthetic, "use the planted spiked operator");
  auto* slq_cmd = app.add_subcommand("slq", "spectral density estimate");
  add_common(slq_cmd, true);
  auto* sensitivity_cmd = app.add_subcommand("sensitivity", "spike-class sensitivity matrix");
  add_common(sensitivity_cmd, true);
  auto* surgery_cmd = app.add_subcommand("surgery", "iterative rebalancing loop");
  add_common(surgery_cmd, true);
  surgery_cmd->add_flag("--resume", resume, "continue from the run directory state");
  surgery_cmd->add_flag("--deflated", deflated, "sequential deflated phases");
  surgery_cmd->add_option("--stop-after", stop_after,
                          "exit resumable (code 4) after N iterations this invocation");
  auto* bulkwalk_cmd = app.add_subcommand("bulkwalk", "directed bulk walk");
  add_common(bulkwalk_cmd, true);
  auto* linearize_cmd = app.add_subcommand("linearize", "linearization sweep and error fit");
  add_common(linearize_cmd, true);
  auto* stability_cmd = app.add_subcommand("stability", "nested-batch eigenstructure study");
  add_common(stability_cmd, true);
  auto* baselines_cmd = app.add_subcommand("baselines", "rebalancing method comparison");
  add_common(baselines_cmd, true);
  auto* rank_cmd = app.add_subcommand("rank", "effective-rank pre-screening diagnostic");
  add_common(rank_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(args);
    if (spectrum_cmd->parsed()) return cmd_spectrum(args, synthetic);
    if (slq_cmd->parsed()) return cmd_slq(args);
    if (sensitivity_cmd->parsed()) return cmd_sensitivity(args);
    if (surgery_cmd->parsed()) return cmd_surgery(args, resume, deflated, stop_after);
    if (bulkwalk_cmd->parsed()) return cmd_bulkwalk(args);
    if (linearize_cmd->parsed()) return cmd_linearize(args);
    if (stability_cmd->parsed()) return cmd_stability(args);
    if (baselines_cmd->parsed()) return cmd_baselines(args);
    if (rank_cmd->parsed()) return cmd_rank(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingDivergence& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
