#include <filesystem>

#include "ardt/cli.hpp"
#include "ardt/data_trie.hpp"
#include "ardt/dataset_io.hpp"
#include "ardt/util.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace ardt;
namespace fs = std::filesystem;

namespace {

int run(std::initializer_list<std::string> args) {
  return cli::run_command(std::vector<std::string>(args));
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ardt_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  static int counter;
};
int TempDir::counter = 0;

}  // namespace

TEST_CASE("usage errors exit with 2, help with 0") {
  CHECK(run({"definitely-not-a-command"}) == 2);
  CHECK(run({"--help"}) == 0);
  CHECK(run({"collect", "--no-such-flag"}) == 2);
}

TEST_CASE("collect writes the dataset and a manifest with input hashes") {
  TempDir dir;
  CHECK(run({"--out-dir", dir.str(), "collect", "--game", "gambling",
             "--protagonist", "uniform", "--adversary", "uniform", "--n-traj",
             "200", "--seed", "3", "--out", "full"}) == 0);
  const fs::path data = dir.path / "data" / "full.jsonl";
  REQUIRE(fs::exists(data));
  const Dataset ds = load_dataset(data);
  CHECK(ds.trajectories.size() == 200);
  CHECK(ds.meta.adversary == "uniform");

  const fs::path manifest = dir.path / "manifest.json";
  REQUIRE(fs::exists(manifest));
  const auto j = nlohmann::json::parse(read_file(manifest));
  CHECK(j.at("runs").size() == 1);
  CHECK(j.at("runs")[0].at("command") == "collect");
}

TEST_CASE("oracle prints gambling root values and validates the fixed point") {
  TempDir dir;
  REQUIRE(run({"--out-dir", dir.str(), "collect", "--game", "gambling",
               "--n-traj", "2000", "--seed", "1", "--out", "full"}) == 0);
  CHECK(run({"--out-dir", dir.str(), "oracle", "--game", "gambling", "--data",
             "full", "--values-out", "oracle"}) == 0);
  const TabularValueMap map =
      TabularValueMap::load(dir.path / "values" / "oracle.json");
  CHECK(*map.get("s=0", 0) == doctest::Approx(-15.0));
  CHECK(*map.get("s=0", 1) == doctest::Approx(-6.0));
  CHECK(*map.get("s=0", 2) == doctest::Approx(1.0));
}

TEST_CASE("learned relabel at alpha=0.5 agrees with the expected method") {
  TempDir dir;
  REQUIRE(run({"--out-dir", dir.str(), "collect", "--game", "single_stage",
               "--n-traj", "400", "--seed", "2", "--out", "d"}) == 0);
  CHECK(run({"--out-dir", dir.str(), "relabel", "--data", "d", "--method",
             "minimax", "--alpha", "0.5", "--iterations", "60", "--est-lr",
             "0.01", "--warmup-epochs", "20", "--seed", "5", "--out", "m",
             "--values-out", "vm"}) == 0);
  CHECK(run({"--out-dir", dir.str(), "relabel", "--data", "d", "--method",
             "expected", "--iterations", "60", "--est-lr", "0.01",
             "--warmup-epochs", "20", "--seed", "5", "--out", "e",
             "--values-out", "ve"}) == 0);
  const TabularValueMap vm =
      TabularValueMap::load(dir.path / "values" / "vm.json");
  const TabularValueMap ve =
      TabularValueMap::load(dir.path / "values" / "ve.json");
  for (const auto& [key, actions] : vm.entries()) {
    for (const auto& [action, value] : actions) {
      CHECK(std::abs(value - *ve.get(key, action)) < 0.1);
    }
  }
}

TEST_CASE("full pipeline runs and is byte-reproducible") {
  TempDir dir_a;
  const auto pipeline = [](const std::string& out) {
    REQUIRE(run({"--out-dir", out, "collect", "--game", "single_stage",
                 "--n-traj", "300", "--seed", "7", "--out", "d"}) == 0);
    REQUIRE(run({"--out-dir", out, "relabel", "--data", "d", "--method",
                 "tabular-minimax", "--out", "r"}) == 0);
    REQUIRE(run({"--out-dir", out, "train", "--data", "r", "--variant",
                 "ardt", "--steps", "25", "--batch-size", "16", "--embed",
                 "16", "--layers", "1", "--heads", "2", "--warmup-steps",
                 "5", "--seed", "9", "--tag", "m"}) == 0);
    REQUIRE(run({"--out-dir", out, "eval", "--checkpoint",
                 (fs::path(out) / "checkpoints" / "m.ckpt").string(),
                 "--game", "single_stage", "--targets", "6", "--adversaries",
                 "eps:0", "--episodes", "20", "--seeds", "0,1", "--tag",
                 "rep"}) == 0);
    REQUIRE(run({"--out-dir", out, "sweep", "--checkpoint",
                 (fs::path(out) / "checkpoints" / "m.ckpt").string(),
                 "--game", "single_stage", "--targets", "0,1,6",
                 "--adversaries", "eps:0", "--episodes", "10", "--seeds",
                 "0", "--tag", "sweep"}) == 0);
  };
  pipeline(dir_a.str());
  CHECK(fs::exists(dir_a.path / "reports" / "rep.json"));
  CHECK(fs::exists(dir_a.path / "reports" / "rep.csv"));
  CHECK(fs::exists(dir_a.path / "reports" / "sweep.svg"));
  CHECK(fs::exists(dir_a.path / "checkpoints" / "m.loss.csv"));

  TempDir dir_b;
  pipeline(dir_b.str());
  CHECK(read_file(dir_a.path / "reports" / "rep.json") ==
        read_file(dir_b.path / "reports" / "rep.json"));
  CHECK(read_file(dir_a.path / "reports" / "sweep.csv") ==
        read_file(dir_b.path / "reports" / "sweep.csv"));
}

TEST_CASE("dt variant is ardt with the return channel swapped") {
  // Copying rtg into minimax_rtg and training ardt must reproduce the dt
  // checkpoint bit-for-bit.
  TempDir dir;
  REQUIRE(run({"--out-dir", dir.str(), "collect", "--game", "single_stage",
               "--n-traj", "200", "--seed", "11", "--out", "d"}) == 0);
  Dataset ds = load_dataset(dir.path / "data" / "d.jsonl");
  for (auto& traj : ds.trajectories) traj.minimax_rtg = traj.rtg;
  save_dataset(ds, dir.path / "data" / "copied.jsonl");

  const std::vector<std::string> common = {
      "--steps", "20", "--batch-size", "8", "--embed", "16",
      "--layers", "1", "--heads", "2", "--seed", "13"};
  std::vector<std::string> ardt_args = {
      "--out-dir", dir.str(), "train", "--data",
      (dir.path / "data" / "copied.jsonl").string(), "--variant", "ardt",
      "--tag", "a"};
  ardt_args.insert(ardt_args.end(), common.begin(), common.end());
  std::vector<std::string> dt_args = {
      "--out-dir", dir.str(), "train", "--data",
      (dir.path / "data" / "copied.jsonl").string(), "--variant", "dt",
      "--tag", "b"};
  dt_args.insert(dt_args.end(), common.begin(), common.end());
  REQUIRE(cli::run_command(ardt_args) == 0);
  REQUIRE(cli::run_command(dt_args) == 0);
  CHECK(read_file(dir.path / "checkpoints" / "a.ckpt") ==
        read_file(dir.path / "checkpoints" / "b.ckpt"));
}

TEST_CASE("gradcheck subcommand passes") {
  CHECK(run({"gradcheck"}) == 0);
}

TEST_CASE("runtime failures exit with 1") {
  TempDir dir;
  CHECK(run({"--out-dir", dir.str(), "relabel", "--data", "missing",
             "--method", "tabular-minimax"}) == 1);
  CHECK(run({"--out-dir", dir.str(), "collect", "--game", "not_a_game",
             "--n-traj", "1"}) == 1);
}
