#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cryptofactor/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitEstimation = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cryptofactor: crypto factor construction, idiosyncratic "
               "volatility, and investor-base panel regressions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 0;
  std::optional<uint64_t> seed;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--threads", threads, "worker threads (overrides config)");
  app.add_option("--seed", seed, "synthetic-data seed (overrides config)");

  const char* subcommands[] = {"ingest", "factors", "ivol", "chars", "panel",
                               "vif",    "report",  "synth", "all"};
  const char* descriptions[] = {
      "load and validate inputs, write returns/universe/sample",
      "construct MRKT/SMB/WML factor series",
      "per-coin-month risk model fits and idiosyncratic volatility",
      "monthly coin characteristics",
      "assemble the lagged regression panels",
      "variance inflation factors for the panel regressors",
      "fixed-effects regression tables and diagnostics",
      "generate a synthetic input data set with ground truth",
      "run the full pipeline end to end"};
  for (size_t i = 0; i < std::size(subcommands); ++i) {
    app.add_subcommand(subcommands[i], descriptions[i])->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    cryptofactor::PipelineConfig cfg;
    if (!config_path.empty()) {
      cfg = cryptofactor::load_config(config_path);
    } else if (sub != "synth") {
      throw cryptofactor::ConfigError(
          cryptofactor::Errc::invalid_config,
          "--config is required for subcommand '" + sub + "'");
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads > 0) cfg.threads = threads;
    if (seed) cfg.synth.seed = *seed;

    cryptofactor::run_subcommand(sub, cfg);
    return 0;
  } catch (const cryptofactor::ConfigError& e) {
    std::cerr << "error[config/" << cryptofactor::errc_name(e.code())
              << "]: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cryptofactor::DataError& e) {
    std::cerr << "error[data/" << cryptofactor::errc_name(e.code())
              << "]: " << e.what() << "\n";
    return kExitData;
  } catch (const cryptofactor::EstimationError& e) {
    std::cerr << "error[estimation/" << cryptofactor::errc_name(e.code())
              << "]: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
