#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "replay.hpp"

namespace fs = std::filesystem;
using cadv::cli::run;

namespace {

struct Captured {
  int code;
  std::string out;
  std::string err;
};

Captured call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cadv_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

const char* const kSmallConfig =
    "mode = contrastive_adversarial\nepochs = 1\nbatch_size = 8\nd_h = 16\nn_layers = 1\nn_heads = 2\n"
    "d_ff = 32\nd_proj = 8\nmax_len = 24\nlr = 0.001\n";

}  // namespace

TEST_CASE("usage errors and help") {
  CHECK(call({"--help"}).code == cadv::cli::kExitOk);
  CHECK(call({}).code == cadv::cli::kExitUser);
  CHECK(call({"frobnicate"}).code == cadv::cli::kExitUser);
  CHECK(call({"synth", "--out", scratch("x").string(), "--bogus"}).code == cadv::cli::kExitUser);
  const auto missing = call({"preprocess", "--out", scratch("y").string(), "--corpus", "/nonexistent.jsonl"});
  CHECK(missing.code == cadv::cli::kExitUser);
  CHECK_FALSE(missing.err.empty());
}

TEST_CASE("the installed binary reports exit codes") {
  const std::string tool = CADV_TOOL;
  CHECK(std::system((tool + " --help > /dev/null").c_str()) == 0);
  CHECK(std::system((tool + " nonsense > /dev/null 2>&1").c_str()) != 0);
}

TEST_CASE("synth, stats and train write their outputs and a manifest") {
  const auto dir = scratch("pipeline");
  const auto synth = dir / "synth";
  REQUIRE(call({"synth", "--out", synth.string(), "--n", "120", "--seed", "5"}).code == 0);
  CHECK(fs::exists(synth / "corpus.jsonl"));
  CHECK(fs::exists(synth / "manifest.json"));

  const auto corpus = (synth / "corpus.jsonl").string();
  const auto stats = call({"stats", "--out", (dir / "stats").string(), "--corpus", corpus});
  REQUIRE(stats.code == 0);
  CHECK(stats.out.find("Total") != std::string::npos);
  CHECK(fs::exists(dir / "stats" / "counts.tsv"));

  fs::create_directories(dir);
  const auto cfg = dir / "small.cfg";
  std::ofstream(cfg) << kSmallConfig;
  const auto model = dir / "model";
  const auto trained = call({"train", "--out", model.string(), "--config", cfg.string(), "--corpus", corpus, "--seed", "3"});
  INFO(trained.err);
  REQUIRE(trained.code == 0);
  for (const char* name : {"checkpoint.bin", "vocab.txt", "results.jsonl", "test_metrics.json", "manifest.json"}) {
    CHECK(fs::exists(model / name));
  }
  const auto manifest = nlohmann::json::parse(replay::slurp(model / "manifest.json"));
  CHECK(manifest["command"] == "train");
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["corpus_sha256"].get<std::string>().size() == 64);
  CHECK(manifest["outputs"].size() == 4);

  const auto eval = call({"eval", "--out", (dir / "eval").string(), "--model", model.string(), "--corpus", corpus});
  CHECK(eval.code == 0);
  CHECK(fs::exists(dir / "eval" / "metrics.json"));

  SUBCASE("replaying the manifest reproduces every output") {
    const auto outcome = replay::from_manifest(model, dir / "model_again");
    CHECK(outcome.exit_code == 0);
    CHECK(outcome.compared.size() == 4);
    CHECK(outcome.differing.empty());
  }
  SUBCASE("a changed seed changes the checkpoint") {
    REQUIRE(call({"train", "--out", (dir / "other").string(), "--config", cfg.string(), "--corpus", corpus, "--seed", "4"})
                .code == 0);
    CHECK(replay::slurp(model / "checkpoint.bin") != replay::slurp(dir / "other" / "checkpoint.bin"));
  }
  SUBCASE("a bad override is a user error") {
    CHECK(call({"train", "--out", (dir / "bad").string(), "--corpus", corpus, "--mode", "sideways"}).code ==
          cadv::cli::kExitUser);
  }
}
