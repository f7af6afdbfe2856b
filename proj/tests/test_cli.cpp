#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "hesskit/checkpoint.hpp"
#include "hesskit/spikes.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* path = std::getenv("HESSKIT_CLI");
  REQUIRE_MESSAGE(path != nullptr, "HESSKIT_CLI must point at the binary");
  return path;
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string command = cli() + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  char buffer[512];
  while (fgets(buffer, sizeof(buffer), pipe) != nullptr) result.output += buffer;
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE_MESSAGE(f.good(), "missing file ", path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("hesskit_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

const std::string kFastTrain =
    " --set train.epochs=8 --set fixture.total_samples=4000";

}  // namespace

TEST_CASE("cli train: checkpoint round-trips bit-exactly and emits the manifest") {
  TempDir tmp;
  const RunResult r = run("train --out " + (tmp / "t") + kFastTrain);
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  for (const char* file :
       {"checkpoint.pv", "manifest.json", "training_log.txt", "fixture_manifest.json",
        "heldout_accuracy.txt"}) {
    CHECK(fs::exists(tmp.path / "t" / file));
  }
  const auto ckpt = hesskit::load_checkpoint(tmp / "t/checkpoint.pv");
  const std::string again = tmp / "t/again.pv";
  hesskit::save_checkpoint(again, ckpt);
  CHECK(read_file(tmp / "t/checkpoint.pv") == read_file(again));
}

TEST_CASE("cli: unknown config keys are rejected with exit code 2") {
  TempDir tmp;
  const RunResult r = run("train --out " + (tmp / "x") + " --set lanczoz.m=10");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("lanczoz") != std::string::npos);

  const RunResult missing = run("surgery --out " + (tmp / "y"));
  CHECK(missing.exit_code != 0);  // no checkpoint given
}

TEST_CASE("cli: training divergence exits with code 3") {
  TempDir tmp;
  const RunResult r = run("train --out " + (tmp / "d") + kFastTrain +
                          " --set train.lr=1e8 --set train.optimizer=sgd");
  CHECK(r.exit_code == 3);
}

TEST_CASE("cli spectrum: synthetic planted spikes are labeled clear_spike") {
  TempDir tmp;
  const RunResult r = run("spectrum --synthetic --out " + (tmp / "s") +
                          " --set spiked.dim=300 --set lanczos.m=10");
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  const auto rep = hesskit::SpectrumReport::from_json(read_file(tmp / "s/spectrum.json"));
  REQUIRE(rep.eigenvalues.size() >= 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(rep.labels[static_cast<std::size_t>(i)] == hesskit::SpikeLabel::clear_spike);
  }
  // Lossless report round trip.
  const hesskit::SpectrumReport back = hesskit::SpectrumReport::from_json(rep.to_json());
  CHECK(back.eigenvalues == rep.eigenvalues);
  CHECK(back.labels == rep.labels);
}

TEST_CASE("cli spectrum: m=1 reports a single Ritz value") {
  TempDir tmp;
  REQUIRE(run("train --out " + (tmp / "t") + kFastTrain).exit_code == 0);
  const RunResult r = run("spectrum --checkpoint " + (tmp / "t/checkpoint.pv") +
                          " --out " + (tmp / "s") + " --set lanczos.m=1" +
                          " --set fixture.total_samples=4000");
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  const auto rep = hesskit::SpectrumReport::from_json(read_file(tmp / "s/spectrum.json"));
  CHECK(rep.eigenvalues.size() == 1);
}

TEST_CASE("cli surgery: T=0 leaves the checkpoint bit-identical") {
  TempDir tmp;
  REQUIRE(run("train --out " + (tmp / "t") + kFastTrain).exit_code == 0);
  const RunResult r = run("surgery --checkpoint " + (tmp / "t/checkpoint.pv") + " --out " +
                          (tmp / "g") + " --set surgery.iterations=0" +
                          " --set fixture.total_samples=4000");
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  const auto before = hesskit::load_checkpoint(tmp / "t/checkpoint.pv");
  const auto after = hesskit::load_checkpoint(tmp / "g/final.pv");
  REQUIRE(before.theta.size() == after.theta.size());
  CHECK(before.theta == after.theta);
}

TEST_CASE("cli surgery: kill-and-resume reproduces the uninterrupted run bit-exactly") {
  TempDir tmp;
  REQUIRE(run("train --out " + (tmp / "t") + kFastTrain).exit_code == 0);
  const std::string surgery_args = " --set surgery.iterations=4 --set hvp.batch=128" +
                                   std::string(" --set fixture.total_samples=4000");

  const RunResult full = run("surgery --checkpoint " + (tmp / "t/checkpoint.pv") +
                             " --out " + (tmp / "full") + surgery_args);
  REQUIRE_MESSAGE(full.exit_code == 0, full.output);

  const RunResult part = run("surgery --checkpoint " + (tmp / "t/checkpoint.pv") +
                             " --out " + (tmp / "split") + surgery_args + " --stop-after 2");
  CHECK(part.exit_code == 4);  // interrupted-resumable
  const RunResult rest = run("surgery --resume --out " + (tmp / "split"));
  REQUIRE_MESSAGE(rest.exit_code == 0, rest.output);

  CHECK(read_file(tmp / "full/final.pv") == read_file(tmp / "split/final.pv"));
  CHECK(read_file(tmp / "full/trajectory.txt") == read_file(tmp / "split/trajectory.txt"));
  CHECK(read_file(tmp / "full/before_after.txt") ==
        read_file(tmp / "split/before_after.txt"));
}

TEST_CASE("cli surgery: deflated phases record cross-correlations") {
  TempDir tmp;
  REQUIRE(run("train --out " + (tmp / "t") +
              " --set fixture.preset=deflate-12 --set fixture.total_samples=2400"
              " --set model.hidden=[32] --set train.epochs=10")
              .exit_code == 0);
  const RunResult r = run("surgery --deflated --checkpoint " + (tmp / "t/checkpoint.pv") +
                          " --out " + (tmp / "d") +
                          " --set fixture.preset=deflate-12"
                          " --set fixture.total_samples=2400 --set model.hidden=[32]"
                          " --set deflation.phases=2 --set deflation.iters_per_phase=1"
                          " --set deflation.spikes_per_phase=4");
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  CHECK(fs::exists(tmp.path / "d/phases.txt"));
  CHECK(fs::exists(tmp.path / "d/final.pv"));
}

TEST_CASE("cli experiments: each report directory contains its declared files") {
  TempDir tmp;
  REQUIRE(run("train --out " + (tmp / "t") + kFastTrain).exit_code == 0);
  const std::string ckpt = " --checkpoint " + (tmp / "t/checkpoint.pv");
  const std::string fx = " --set fixture.total_samples=4000";

  {
    const RunResult r = run("bulkwalk" + ckpt + " --out " + (tmp / "w") + fx +
                            " --set bulkwalk.steps=6 --set bulkwalk.basis_m=16");
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(fs::exists(tmp.path / "w/walk.dat"));
    CHECK(fs::exists(tmp.path / "w/walk_summary.txt"));
    CHECK(fs::exists(tmp.path / "w/manifest.json"));
  }
  {
    const RunResult r = run("linearize" + ckpt + " --out " + (tmp / "l") + fx +
                            " --set linearize.points=8");
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(fs::exists(tmp.path / "l/sweep.dat"));
    CHECK(fs::exists(tmp.path / "l/fit.json"));
  }
  {
    const RunResult r = run("stability" + ckpt + " --out " + (tmp / "st") + fx +
                            " --set stability.batch_sizes=[32,64]");
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(fs::exists(tmp.path / "st/eigenvalues.txt"));
    CHECK(fs::exists(tmp.path / "st/cosines.txt"));
    CHECK(fs::exists(tmp.path / "st/angles.txt"));
    CHECK(fs::exists(tmp.path / "st/timing.txt"));
  }
  {
    const RunResult r = run("baselines" + ckpt + " --out " + (tmp / "b") + fx +
                            " --set baselines.ft_epochs=4 --set surgery.iterations=2");
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(fs::exists(tmp.path / "b/comparison.txt"));
    CHECK(fs::exists(tmp.path / "b/comparison.json"));
  }
  {
    const RunResult r = run("slq" + ckpt + " --out " + (tmp / "q") + fx +
                            " --set slq.m=20 --set slq.k=3 --set slq.sigma2=0.01");
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(fs::exists(tmp.path / "q/density.dat"));
    CHECK(fs::exists(tmp.path / "q/probe_convergence.dat"));
  }
  {
    const RunResult r = run("rank" + ckpt + " --out " + (tmp / "r") + fx);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(fs::exists(tmp.path / "r/rank.json"));
    CHECK(fs::exists(tmp.path / "r/sensitivity_matrix.txt"));
  }
}

TEST_CASE("cli: logit adjustment on the balanced fixture is a zero-delta row") {
  TempDir tmp;
  const std::string fx =
      " --set fixture.preset=balanced-4 --set fixture.total_samples=4000";
  REQUIRE(run("train --out " + (tmp / "t") + fx + " --set train.epochs=10").exit_code == 0);
  const RunResult r = run("baselines --checkpoint " + (tmp / "t/checkpoint.pv") +
                          " --out " + (tmp / "b") + fx +
                          " --set baselines.ft_epochs=4 --set surgery.iterations=2");
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  const auto table = nlohmann::json::parse(read_file(tmp / "b/comparison.json"));
  CHECK(table.at("logit_adjust").at("delta_sigma").get<double>() == 0.0);
}

TEST_CASE("cli: repeated runs from the same config are bit-identical") {
  TempDir tmp;
  const std::string fx = kFastTrain;
  REQUIRE(run("train --out " + (tmp / "a") + fx).exit_code == 0);
  REQUIRE(run("train --out " + (tmp / "b") + fx).exit_code == 0);
  CHECK(read_file(tmp / "a/checkpoint.pv") == read_file(tmp / "b/checkpoint.pv"));
  CHECK(read_file(tmp / "a/manifest.json") == read_file(tmp / "b/manifest.json"));
  CHECK(read_file(tmp / "a/training_log.txt") == read_file(tmp / "b/training_log.txt"));

  const std::string ckpt = " --checkpoint " + (tmp / "a/checkpoint.pv");
  REQUIRE(run("surgery" + ckpt + " --out " + (tmp / "s1") + fx +
              " --set surgery.iterations=2")
              .exit_code == 0);
  REQUIRE(run("surgery" + ckpt + " --out " + (tmp / "s2") + fx +
              " --set surgery.iterations=2")
              .exit_code == 0);
  // Deterministic artifacts byte-identical; wall-clock timing files are the
  // only exclusion from the reproducibility contract.
  for (const char* file : {"final.pv", "trajectory.txt", "before_after.txt",
                           "state.json", "manifest.json", "decile.txt"}) {
    CHECK(read_file(tmp.path / "s1" / file) == read_file(tmp.path / "s2" / file));
  }
}
