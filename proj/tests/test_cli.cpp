#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <map>
#include <string>

#include <json.hpp>

#include "helpers.hpp"

using testutil::TempDir;
using testutil::read_file;
using testutil::write_file;

namespace {

std::string binary() {
  const char* bin = std::getenv("CRYPTOFACTOR_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "CRYPTOFACTOR_BIN must point at the CLI");
  return bin;
}

int run(const std::string& args) {
  const std::string cmd =
      "CRYPTOFACTOR_LOG=quiet " + binary() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

// Small synthetic universe: fast but large enough for a non-empty panel
// once min_years is lowered to 1.
nlohmann::json small_synth() {
  return {{"seed", 33},     {"n_coins", 12},          {"n_days", 420},
          {"sigma_smb", 0.01}, {"stablecoin_fraction", 0.0},
          {"subreddit_fraction", 1.0}};
}

}  // namespace

TEST_CASE("synth writes inputs plus a ready-to-run config") {
  TempDir tmp;
  write_file(tmp.file("synth_cfg.json"),
             nlohmann::json{{"synth", small_synth()}}.dump());
  REQUIRE(run("synth --config " + tmp.file("synth_cfg.json").string() +
              " --out " + tmp.file("data").string()) == 0);
  for (const char* name : {"prices.csv", "meta.csv", "followers.csv",
                           "riskfree.csv", "truth.json", "config.json"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(tmp.file("data") / name));
  }
}

TEST_CASE("full pipeline: exit codes, artifacts, determinism") {
  TempDir tmp;
  write_file(tmp.file("synth_cfg.json"),
             nlohmann::json{{"synth", small_synth()}}.dump());
  REQUIRE(run("synth --config " + tmp.file("synth_cfg.json").string() +
              " --out " + tmp.file("data").string()) == 0);

  // Lower the sample requirement so 420 days qualify.
  auto cfg = nlohmann::json::parse(read_file(tmp.file("data/config.json")));
  cfg["min_years"] = 1;
  write_file(tmp.file("data/run_cfg.json"), cfg.dump());

  const std::string all_cmd =
      "all --config " + tmp.file("data/run_cfg.json").string();
  REQUIRE(run(all_cmd) == 0);

  const auto out = tmp.file("data/out");
  const char* artifacts[] = {
      "returns.csv",      "universe.csv",    "sample.csv",
      "factors.csv",      "ivol.csv",        "chars.csv",
      "panel_capm.csv",   "panel_ff3.csv",   "vif.csv",
      "results.csv",      "results_capm.txt", "results_ff3.txt",
      "summary_ff3.csv",  "ew_ivol.csv",     "truth_vs_estimate.txt"};
  std::map<std::string, std::string> first_run;
  for (const char* name : artifacts) {
    CAPTURE(name);
    REQUIRE(std::filesystem::exists(out / name));
    first_run[name] = read_file(out / name);
  }

  // Rerun over the same output directory: byte-identical artifacts.
  REQUIRE(run(all_cmd) == 0);
  for (const char* name : artifacts) {
    CAPTURE(name);
    CHECK(read_file(out / name) == first_run[name]);
  }
}

TEST_CASE("missing prices file exits with the data error code") {
  TempDir tmp;
  nlohmann::json cfg = {
      {"inputs",
       {{"prices", tmp.file("nope.csv").string()},
        {"meta", tmp.file("nope.csv").string()},
        {"followers", tmp.file("nope.csv").string()},
        {"riskfree", tmp.file("nope.csv").string()}}},
      {"out_dir", tmp.file("out").string()}};
  write_file(tmp.file("cfg.json"), cfg.dump());
  CHECK(run("all --config " + tmp.file("cfg.json").string()) == 3);
}

TEST_CASE("report without prior artifacts exits with the config error code") {
  TempDir tmp;
  nlohmann::json cfg = {{"out_dir", tmp.file("empty_out").string()}};
  write_file(tmp.file("cfg.json"), cfg.dump());
  CHECK(run("report --config " + tmp.file("cfg.json").string()) == 2);
}

TEST_CASE("invalid config JSON exits with the config error code") {
  TempDir tmp;
  write_file(tmp.file("cfg.json"), "{not json");
  CHECK(run("all --config " + tmp.file("cfg.json").string()) == 2);
  CHECK(run("all") == 2);  // --config required
}
