#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cryptofactor/characteristics.hpp"
#include "cryptofactor/econometrics.hpp"
#include "cryptofactor/factors.hpp"
#include "cryptofactor/ingest.hpp"
#include "cryptofactor/riskmodel.hpp"
#include "cryptofactor/synth.hpp"

namespace cryptofactor {

struct PipelineConfig {
  std::filesystem::path prices_path;
  std::filesystem::path meta_path;
  std::filesystem::path followers_path;
  std::filesystem::path riskfree_path;
  std::optional<std::filesystem::path> truth_path;
  std::filesystem::path out_dir = "out";

  double mcap_floor = 1'000'000.0;
  int min_years = 3;
  int min_obs = 10;
  int max_gap_days = 7;
  std::string week_anchor = "monday";
  IvolMode ivol_dof = IvolMode::Population;
  DibMode dib_mode = DibMode::Raw;
  double dib_scale = 1.0;
  SeType se_type = SeType::Homoskedastic;
  bool winsorize_returns = false;
  bool winsorize_chars = false;
  double winsor_lo = 0.01;
  double winsor_hi = 0.99;
  int threads = 1;

  SynthConfig synth;

  int anchor_weekday() const;      // throws ConfigError on a bad name
  std::string provenance() const;  // canonical one-line JSON header
};

// JSON config document; command-line flags override file values.
PipelineConfig load_config(const std::filesystem::path& path);
void write_config(const PipelineConfig& cfg, const std::filesystem::path& path);

struct IngestBundle {
  PriceTable prices;
  MetaMap meta;
  FollowerTable followers;
  RateSeries riskfree;
  ReturnTable returns;
  UniverseSeries universe;
  std::set<std::string> sample;
};

struct IvolBundle {
  std::vector<RiskFit> capm;
  std::vector<RiskFit> ff3;
};

struct PanelBundle {
  std::vector<CoinMonthRow> capm;
  std::vector<CoinMonthRow> ff3;
};

IngestBundle run_ingest(const PipelineConfig& cfg, bool write_artifacts);
FactorTable run_factors(const PipelineConfig& cfg, const IngestBundle& data,
                        bool write_artifacts);
IvolBundle run_ivol(const PipelineConfig& cfg, const IngestBundle& data,
                    const FactorTable& factors, bool write_artifacts);
void run_chars(const PipelineConfig& cfg, const IngestBundle& data);
PanelBundle run_panel(const PipelineConfig& cfg, const IngestBundle& data,
                      const IvolBundle& ivol, bool write_artifacts);
void run_vif_stage(const PipelineConfig& cfg);

// Extra material only available on a fresh full run: fits for the
// truth-versus-estimate loading recovery section.
struct ReportExtras {
  const IngestBundle* data = nullptr;
  const FactorTable* factors = nullptr;
};
void run_report(const PipelineConfig& cfg, const ReportExtras* extras);

void run_all(const PipelineConfig& cfg);

// Artifact readers used by the standalone vif/report stages. Throw
// ConfigError when a prior stage has not produced the file yet.
std::vector<CoinMonthRow> read_panel_csv(const std::filesystem::path& path);

struct IvolCsvRow {
  std::string coin_id;
  YearMonth month;
  RiskModel model;
  double ivol = 0;
};
std::vector<IvolCsvRow> read_ivol_csv(const std::filesystem::path& path);

// Dispatch for the CLI; throws the error categories main() maps to exit
// codes. Valid subcommands: ingest, factors, ivol, chars, panel, vif,
// report, synth, all.
void run_subcommand(const std::string& name, const PipelineConfig& cfg);

}  // namespace cryptofactor
