#include "cryptofactor/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cryptofactor/csv.hpp"
#include "cryptofactor/stats.hpp"

namespace cryptofactor {

namespace {

using nlohmann::json;

bool verbose() {
  const char* v = std::getenv("CRYPTOFACTOR_LOG");
  return !(v && std::string(v) == "quiet");
}

void stage_note(const std::string& msg) {
  if (verbose()) std::cerr << "[cryptofactor] " << msg << "\n";
}

std::string num17(double v) { return format_sig(v, 17); }
std::string num12(double v) { return format_sig(v, 12); }

const char* model_tag(RiskModel m) {
  return m == RiskModel::Capm ? "capm" : "ff3";
}

std::ofstream open_output(const std::filesystem::path& path,
                          const PipelineConfig& cfg) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError(Errc::missing_artifact,
                    "cannot write output file: " + path.string());
  }
  out << "# config: " << cfg.provenance() << "\n";
  return out;
}

json config_to_json(const PipelineConfig& c) {
  json j;
  j["inputs"] = {{"prices", c.prices_path.string()},
                 {"meta", c.meta_path.string()},
                 {"followers", c.followers_path.string()},
                 {"riskfree", c.riskfree_path.string()}};
  if (c.truth_path) j["inputs"]["truth"] = c.truth_path->string();
  j["out_dir"] = c.out_dir.string();
  j["mcap_floor"] = c.mcap_floor;
  j["min_years"] = c.min_years;
  j["min_obs"] = c.min_obs;
  j["max_gap_days"] = c.max_gap_days;
  j["week_anchor"] = c.week_anchor;
  j["ivol_dof"] = c.ivol_dof == IvolMode::Population ? "population" : "sample";
  j["dib_mode"] = c.dib_mode == DibMode::Raw ? "raw" : "log";
  j["dib_scale"] = c.dib_scale;
  j["se_type"] =
      c.se_type == SeType::Homoskedastic ? "homoskedastic" : "cluster_coin";
  j["winsorize_returns"] = c.winsorize_returns;
  j["winsorize_chars"] = c.winsorize_chars;
  j["winsor_lo"] = c.winsor_lo;
  j["winsor_hi"] = c.winsor_hi;
  j["threads"] = c.threads;
  j["synth"] = synth_config_to_json(c.synth);
  return j;
}

}  // namespace

int PipelineConfig::anchor_weekday() const {
  static const std::map<std::string, int> names = {
      {"sunday", 0},   {"monday", 1}, {"tuesday", 2}, {"wednesday", 3},
      {"thursday", 4}, {"friday", 5}, {"saturday", 6}};
  auto it = names.find(week_anchor);
  if (it == names.end()) {
    throw ConfigError(Errc::invalid_config,
                      "week_anchor must be a weekday name, got '" +
                          week_anchor + "'");
  }
  return it->second;
}

std::string PipelineConfig::provenance() const {
  return config_to_json(*this).dump();
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(Errc::missing_artifact,
                      "cannot open config file: " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(Errc::invalid_config,
                      path.string() + ": invalid JSON: " + e.what());
  }

  PipelineConfig cfg;
  try {
    if (j.contains("inputs")) {
      const auto& in_j = j["inputs"];
      if (in_j.contains("prices")) cfg.prices_path = in_j["prices"].get<std::string>();
      if (in_j.contains("meta")) cfg.meta_path = in_j["meta"].get<std::string>();
      if (in_j.contains("followers"))
        cfg.followers_path = in_j["followers"].get<std::string>();
      if (in_j.contains("riskfree"))
        cfg.riskfree_path = in_j["riskfree"].get<std::string>();
      if (in_j.contains("truth"))
        cfg.truth_path = std::filesystem::path(in_j["truth"].get<std::string>());
    }
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("mcap_floor")) cfg.mcap_floor = j["mcap_floor"].get<double>();
    if (j.contains("min_years")) cfg.min_years = j["min_years"].get<int>();
    if (j.contains("min_obs")) cfg.min_obs = j["min_obs"].get<int>();
    if (j.contains("max_gap_days"))
      cfg.max_gap_days = j["max_gap_days"].get<int>();
    if (j.contains("week_anchor"))
      cfg.week_anchor = j["week_anchor"].get<std::string>();
    if (j.contains("ivol_dof")) {
      const auto v = j["ivol_dof"].get<std::string>();
      if (v == "population") cfg.ivol_dof = IvolMode::Population;
      else if (v == "sample") cfg.ivol_dof = IvolMode::Sample;
      else throw ConfigError(Errc::invalid_config,
                             "ivol_dof must be population or sample");
    }
    if (j.contains("dib_mode")) {
      const auto v = j["dib_mode"].get<std::string>();
      if (v == "raw") cfg.dib_mode = DibMode::Raw;
      else if (v == "log") cfg.dib_mode = DibMode::Log;
      else throw ConfigError(Errc::invalid_config, "dib_mode must be raw or log");
    }
    if (j.contains("dib_scale")) cfg.dib_scale = j["dib_scale"].get<double>();
    if (j.contains("se_type")) {
      const auto v = j["se_type"].get<std::string>();
      if (v == "homoskedastic") cfg.se_type = SeType::Homoskedastic;
      else if (v == "cluster_coin") cfg.se_type = SeType::ClusterByCoin;
      else throw ConfigError(Errc::invalid_config,
                             "se_type must be homoskedastic or cluster_coin");
    }
    if (j.contains("winsorize_returns"))
      cfg.winsorize_returns = j["winsorize_returns"].get<bool>();
    if (j.contains("winsorize_chars"))
      cfg.winsorize_chars = j["winsorize_chars"].get<bool>();
    if (j.contains("winsor_lo")) cfg.winsor_lo = j["winsor_lo"].get<double>();
    if (j.contains("winsor_hi")) cfg.winsor_hi = j["winsor_hi"].get<double>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("synth")) cfg.synth = synth_config_from_json(j["synth"]);
  } catch (const json::exception& e) {
    throw ConfigError(Errc::invalid_config,
                      path.string() + ": bad config value: " + e.what());
  }

  if (cfg.mcap_floor <= 0) {
    throw ConfigError(Errc::invalid_config, "mcap_floor must be > 0");
  }
  if (cfg.min_years < 1 || cfg.min_obs < 2 || cfg.max_gap_days < 1 ||
      cfg.threads < 1) {
    throw ConfigError(Errc::invalid_config,
                      "min_years, min_obs, max_gap_days, threads must be >= 1");
  }
  cfg.anchor_weekday();  // validates the name
  return cfg;
}

void write_config(const PipelineConfig& cfg,
                  const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << config_to_json(cfg).dump(2) << "\n";
}

namespace {

void check_input(const std::filesystem::path& p, const char* what) {
  if (p.empty()) {
    throw ConfigError(Errc::invalid_config,
                      std::string("config missing input path for ") + what);
  }
  if (!std::filesystem::exists(p)) {
    throw DataError(Errc::missing_artifact,
                    std::string(what) + " file not found: " + p.string());
  }
}

void winsorize_return_table(ReturnTable& returns, const RateSeries& rf,
                            double lo_p, double hi_p) {
  std::vector<double> pool;
  for (const auto& [coin, obs] : returns) {
    for (const auto& o : obs) pool.push_back(o.ret);
  }
  if (pool.size() < 3) return;
  std::sort(pool.begin(), pool.end());
  const double lo = stats::quantile_sorted(pool, lo_p);
  const double hi = stats::quantile_sorted(pool, hi_p);
  for (auto& [coin, obs] : returns) {
    for (auto& o : obs) {
      const double clamped = std::clamp(o.ret, lo, hi);
      if (clamped != o.ret) {
        const double rf_daily = rf.daily_at(o.date).value_or(0.0);
        o.ret = clamped;
        o.excess = clamped - rf_daily;
      }
    }
  }
}

void winsorize_panel_chars(std::vector<CoinMonthRow>& panel, double lo_p,
                           double hi_p) {
  auto clamp_field = [&](auto getter) {
    std::vector<double> values;
    values.reserve(panel.size());
    for (auto& row : panel) values.push_back(*getter(row));
    std::sort(values.begin(), values.end());
    const double lo = stats::quantile_sorted(values, lo_p);
    const double hi = stats::quantile_sorted(values, hi_p);
    for (auto& row : panel) {
      double* v = getter(row);
      *v = std::clamp(*v, lo, hi);
    }
  };
  if (panel.size() < 3) return;
  clamp_field([](CoinMonthRow& r) { return &r.d_investor_base; });
  clamp_field([](CoinMonthRow& r) { return &r.size; });
  clamp_field([](CoinMonthRow& r) { return &r.mom; });
  clamp_field([](CoinMonthRow& r) { return &r.volume; });
  clamp_field([](CoinMonthRow& r) { return &r.amihud; });
}

// Nested specifications mirroring the controls added column by column.
std::vector<FeSpec> nested_specs(SeType se_type) {
  const std::vector<std::vector<std::string>> sets = {
      {"d_investor_base"},
      {"d_investor_base", "size"},
      {"d_investor_base", "size", "mom"},
      {"d_investor_base", "size", "mom", "volume"},
      {"d_investor_base", "size", "mom", "volume", "amihud"},
      {"d_investor_base", "size", "mom", "volume", "amihud", "category"},
  };
  std::vector<FeSpec> specs;
  for (const auto& regs : sets) {
    FeSpec s;
    s.dependent = "ivol";
    s.regressors = regs;
    s.fe_unit = true;
    s.fe_time = true;
    s.se_type = se_type;
    specs.push_back(std::move(s));
  }
  return specs;
}

}  // namespace

IngestBundle run_ingest(const PipelineConfig& cfg, bool write_artifacts) {
  check_input(cfg.prices_path, "prices");
  check_input(cfg.meta_path, "meta");
  check_input(cfg.followers_path, "followers");
  check_input(cfg.riskfree_path, "riskfree");

  StageLog log;
  IngestBundle data;
  data.prices = load_prices(cfg.prices_path);
  data.meta = load_meta(cfg.meta_path);
  data.followers = load_followers(cfg.followers_path);
  data.riskfree = load_riskfree(cfg.riskfree_path);
  data.returns =
      compute_returns(data.prices, data.riskfree, cfg.max_gap_days, &log);
  if (cfg.winsorize_returns) {
    winsorize_return_table(data.returns, data.riskfree, cfg.winsor_lo,
                           cfg.winsor_hi);
    log.note("returns winsorized at configured quantiles");
  }
  data.universe = build_universe(data.prices, data.meta, cfg.mcap_floor);
  data.sample =
      build_regression_sample(data.universe, data.meta, cfg.min_years, &log);

  if (write_artifacts) {
    auto returns_csv = open_output(cfg.out_dir / "returns.csv", cfg);
    returns_csv << "coin_id,date,ret,excess_ret\n";
    for (const auto& [coin, obs] : data.returns) {
      for (const auto& o : obs) {
        returns_csv << coin << "," << to_string(o.date) << "," << num17(o.ret)
                    << "," << num17(o.excess) << "\n";
      }
    }
    auto universe_csv = open_output(cfg.out_dir / "universe.csv", cfg);
    universe_csv << "date,n_eligible\n";
    for (const auto& [date, members] : data.universe.days) {
      universe_csv << to_string(date) << "," << members.size() << "\n";
    }
    auto sample_csv = open_output(cfg.out_dir / "sample.csv", cfg);
    sample_csv << "coin_id\n";
    for (const auto& coin : data.sample) sample_csv << coin << "\n";
    log.write(cfg.out_dir / "logs" / "ingest.log");
  }
  stage_note("ingest: " + std::to_string(data.prices.coins.size()) +
             " coins, sample size " + std::to_string(data.sample.size()));
  return data;
}

FactorTable run_factors(const PipelineConfig& cfg, const IngestBundle& data,
                        bool write_artifacts) {
  StageLog log;
  SortConfig sort_cfg;
  sort_cfg.anchor_weekday = cfg.anchor_weekday();

  auto mrkt = market_factor(data.returns, data.universe, data.prices,
                            data.riskfree, &log);
  auto sorts =
      weekly_sorts(data.returns, data.prices, data.universe, sort_cfg, &log);
  auto smb = smb_factor(sorts, data.returns, data.prices, &log);
  auto wml = wml_factor(sorts, data.returns, data.prices, &log);
  FactorTable factors = assemble_factors(mrkt, smb, wml, data.riskfree);

  if (write_artifacts) {
    auto factors_csv = open_output(cfg.out_dir / "factors.csv", cfg);
    factors_csv << "date,mrkt,smb,wml,rf_daily\n";
    for (const auto& row : factors.rows) {
      factors_csv << to_string(row.date) << "," << format_sig(row.mrkt, 10)
                  << "," << format_sig(row.smb, 10) << ","
                  << format_sig(row.wml, 10) << ","
                  << format_sig(row.rf_daily, 10) << "\n";
    }
    if (factors.rows.size() >= 30) {
      auto corr = factor_correlations(factors);
      auto corr_csv = open_output(cfg.out_dir / "factor_correlations.csv", cfg);
      const char* names[3] = {"mrkt", "smb", "wml"};
      corr_csv << "factor,mrkt,smb,wml\n";
      for (int i = 0; i < 3; ++i) {
        corr_csv << names[i];
        for (int j = 0; j < 3; ++j) corr_csv << "," << num12(corr[i][j]);
        corr_csv << "\n";
      }
    } else {
      log.skip("factor_correlations", Errc::too_few_observations,
               "rows=" + std::to_string(factors.rows.size()));
    }
    log.write(cfg.out_dir / "logs" / "factors.log");
  }
  stage_note("factors: " + std::to_string(factors.rows.size()) +
             " complete factor days");
  return factors;
}

IvolBundle run_ivol(const PipelineConfig& cfg, const IngestBundle& data,
                    const FactorTable& factors, bool write_artifacts) {
  if (factors.empty()) {
    throw EstimationError(Errc::empty_series,
                          "no complete factor days; cannot fit risk models");
  }
  StageLog log;
  FitOptions options;
  options.min_obs = cfg.min_obs;
  options.ivol_mode = cfg.ivol_dof;

  IvolBundle out;
  out.capm = ivol_panel(data.returns, factors, data.sample, RiskModel::Capm,
                        options, &log, cfg.threads);
  out.ff3 = ivol_panel(data.returns, factors, data.sample,
                       RiskModel::ThreeFactor, options, &log, cfg.threads);

  if (write_artifacts) {
    auto ivol_csv = open_output(cfg.out_dir / "ivol.csv", cfg);
    ivol_csv << "coin_id,month,model,alpha,beta_mrkt,beta_smb,beta_wml,"
                "n_obs,r2,ivol\n";
    auto write_rows = [&](const std::vector<RiskFit>& fits) {
      for (const auto& f : fits) {
        ivol_csv << f.coin_id << "," << to_string(f.month) << ","
                 << model_tag(f.model) << "," << num17(f.alpha) << ","
                 << num17(f.beta_mrkt) << ",";
        if (f.model == RiskModel::ThreeFactor) {
          ivol_csv << num17(f.beta_smb) << "," << num17(f.beta_wml);
        } else {
          ivol_csv << ",";  // SMB/WML empty for CAPM rows
        }
        ivol_csv << "," << f.n_obs << "," << num17(f.r2) << ","
                 << num17(f.ivol) << "\n";
      }
    };
    write_rows(out.capm);
    write_rows(out.ff3);
    log.write(cfg.out_dir / "logs" / "ivol.log");
  }
  stage_note("ivol: " + std::to_string(out.capm.size()) + " capm fits, " +
             std::to_string(out.ff3.size()) + " three-factor fits");
  return out;
}

void run_chars(const PipelineConfig& cfg, const IngestBundle& data) {
  StageLog log;
  auto chars_csv = open_output(cfg.out_dir / "chars.csv", cfg);
  chars_csv << "coin_id,month,size,mom,volume,amihud,d_investor_base\n";
  static const std::vector<ReturnObs> kNoReturns;
  static const std::vector<FollowerObs> kNoFollowers;
  for (const auto& coin : data.sample) {
    auto price_it = data.prices.coins.find(coin);
    if (price_it == data.prices.coins.end()) continue;
    const auto& series = price_it->second;
    auto ret_it = data.returns.find(coin);
    const auto& returns =
        ret_it == data.returns.end() ? kNoReturns : ret_it->second;
    auto fol_it = data.followers.find(coin);
    const auto& followers =
        fol_it == data.followers.end() ? kNoFollowers : fol_it->second;

    YearMonth first = ym_of(series.days.front().date);
    YearMonth last = ym_of(series.days.back().date);
    for (YearMonth m = first; m <= last; m = next_month(m)) {
      auto size = size_char(series, m);
      auto mom = mom_char(series, m);
      auto volume = volume_char(series, m);
      auto amihud = amihud_char(series, returns, m);
      auto dib = delta_investor_base(followers, m, cfg.dib_mode, cfg.dib_scale);
      if (!size && !mom && !volume && !amihud && !dib) continue;
      auto cell = [](const std::optional<double>& v) {
        return v ? num17(*v) : std::string();
      };
      chars_csv << coin << "," << to_string(m) << "," << cell(size) << ","
                << cell(mom) << "," << cell(volume) << "," << cell(amihud)
                << "," << cell(dib) << "\n";
    }
  }
  log.note("dib_units=" + std::string(cfg.dib_mode == DibMode::Raw
                                          ? "raw followers x scale"
                                          : "log ratio"));
  log.write(cfg.out_dir / "logs" / "chars.log");
  stage_note("chars: written");
}

PanelBundle run_panel(const PipelineConfig& cfg, const IngestBundle& data,
                      const IvolBundle& ivol, bool write_artifacts) {
  StageLog log;
  PanelBundle out;
  int empty_models = 0;
  auto build = [&](const std::vector<RiskFit>& fits,
                   const char* tag) -> std::vector<CoinMonthRow> {
    try {
      PanelBuildStats stats;
      auto panel =
          assemble_panel(fits, data.prices, data.returns, data.followers,
                         data.meta, cfg.dib_mode, cfg.dib_scale, &log, &stats);
      if (cfg.winsorize_chars) {
        winsorize_panel_chars(panel, cfg.winsor_lo, cfg.winsor_hi);
        log.note(std::string(tag) + " characteristics winsorized");
      }
      log.note(std::string(tag) + " panel rows kept=" +
               std::to_string(stats.rows_kept) +
               " dropped=" + std::to_string(stats.rows_dropped));
      return panel;
    } catch (const DataError& e) {
      if (e.code() == Errc::empty_panel) {
        ++empty_models;
        log.skip(std::string("panel model=") + tag, Errc::empty_panel, "");
        return {};
      }
      throw;
    }
  };
  out.capm = build(ivol.capm, "capm");
  out.ff3 = build(ivol.ff3, "ff3");
  if (empty_models == 2) {
    throw DataError(Errc::empty_panel, "both model panels are empty");
  }

  if (write_artifacts) {
    auto write_panel = [&](const std::vector<CoinMonthRow>& panel,
                           const std::string& name) {
      auto panel_csv = open_output(cfg.out_dir / name, cfg);
      panel_csv << "coin_id,month,ivol,d_investor_base,size,mom,volume,"
                   "amihud,category\n";
      for (const auto& row : panel) {
        panel_csv << row.coin_id << "," << to_string(row.month) << ","
                  << num17(row.ivol) << "," << num17(row.d_investor_base)
                  << "," << num17(row.size) << "," << num17(row.mom) << ","
                  << num17(row.volume) << "," << num17(row.amihud) << ","
                  << row.category << "\n";
      }
    };
    write_panel(out.capm, "panel_capm.csv");
    write_panel(out.ff3, "panel_ff3.csv");
    log.write(cfg.out_dir / "logs" / "panel.log");
  }
  stage_note("panel: capm rows " + std::to_string(out.capm.size()) +
             ", ff3 rows " + std::to_string(out.ff3.size()));
  return out;
}

std::vector<CoinMonthRow> read_panel_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError(Errc::missing_artifact,
                      "panel artifact not found (run the panel stage first): " +
                          path.string());
  }
  CsvFile f(path, {"coin_id", "month", "ivol", "d_investor_base", "size",
                   "mom", "volume", "amihud", "category"});
  std::vector<CoinMonthRow> panel;
  for (size_t r = 0; r < f.row_count(); ++r) {
    CoinMonthRow row;
    row.coin_id = std::string(f.field(r, f.col("coin_id")));
    YearMonth m;
    if (!try_parse_ym(f.field(r, f.col("month")), m)) {
      throw DataError(Errc::bad_value,
                      path.string() + ": bad month at line " +
                          std::to_string(f.line_number(r)));
    }
    row.month = m;
    double category;
    if (!f.try_number(r, f.col("ivol"), row.ivol) ||
        !f.try_number(r, f.col("d_investor_base"), row.d_investor_base) ||
        !f.try_number(r, f.col("size"), row.size) ||
        !f.try_number(r, f.col("mom"), row.mom) ||
        !f.try_number(r, f.col("volume"), row.volume) ||
        !f.try_number(r, f.col("amihud"), row.amihud) ||
        !f.try_number(r, f.col("category"), category)) {
      throw DataError(Errc::bad_numeric,
                      path.string() + ": bad numeric at line " +
                          std::to_string(f.line_number(r)));
    }
    row.category = category != 0 ? 1 : 0;
    panel.push_back(std::move(row));
  }
  return panel;
}

std::vector<IvolCsvRow> read_ivol_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError(Errc::missing_artifact,
                      "ivol artifact not found (run the ivol stage first): " +
                          path.string());
  }
  CsvFile f(path, {"coin_id", "month", "model", "ivol"});
  std::vector<IvolCsvRow> rows;
  for (size_t r = 0; r < f.row_count(); ++r) {
    IvolCsvRow row;
    row.coin_id = std::string(f.field(r, f.col("coin_id")));
    YearMonth m;
    if (!try_parse_ym(f.field(r, f.col("month")), m)) {
      throw DataError(Errc::bad_value, path.string() + ": bad month");
    }
    row.month = m;
    const auto model = f.field(r, f.col("model"));
    row.model = model == "capm" ? RiskModel::Capm : RiskModel::ThreeFactor;
    if (!f.try_number(r, f.col("ivol"), row.ivol)) {
      throw DataError(Errc::bad_numeric, path.string() + ": bad ivol value");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void run_vif_stage(const PipelineConfig& cfg) {
  // Prefer the three-factor panel; fall back to CAPM when absent/empty.
  std::vector<CoinMonthRow> panel;
  std::string source = "ff3";
  auto ff3_path = cfg.out_dir / "panel_ff3.csv";
  auto capm_path = cfg.out_dir / "panel_capm.csv";
  if (std::filesystem::exists(ff3_path)) panel = read_panel_csv(ff3_path);
  if (panel.empty() && std::filesystem::exists(capm_path)) {
    panel = read_panel_csv(capm_path);
    source = "capm";
  }
  if (panel.empty()) {
    throw ConfigError(Errc::missing_artifact,
                      "no non-empty panel artifact under " +
                          cfg.out_dir.string() + "; run the panel stage first");
  }

  PanelTable table = to_panel_table(panel);
  const std::vector<std::string> regressors = {
      "d_investor_base", "size", "mom", "volume", "amihud", "category"};
  VifReport report = vif(table, regressors);

  auto vif_csv = open_output(cfg.out_dir / "vif.csv", cfg);
  vif_csv << "# model: " << source << "\n";
  vif_csv << "regressor,vif,r2_aux,flagged\n";
  for (const auto& e : report.entries) {
    vif_csv << e.regressor << ","
            << (std::isinf(e.vif) ? "inf" : num12(e.vif)) << ","
            << num12(e.r2_aux) << "," << (e.flagged ? 1 : 0) << "\n";
  }
  stage_note("vif: written (" + source + " panel)");
}

namespace {

struct ModelReport {
  std::string tag;
  std::vector<FeSpec> specs;
  std::vector<FeFit> fits;
  std::vector<std::string> labels;
};

ModelReport fit_nested(const PipelineConfig& cfg,
                       const std::vector<CoinMonthRow>& panel,
                       const std::string& tag, StageLog& log) {
  ModelReport report;
  report.tag = tag;
  PanelTable table = to_panel_table(panel);
  int column = 0;
  for (const auto& spec : nested_specs(cfg.se_type)) {
    ++column;
    try {
      FeFit fit = two_way_fe(table, spec);
      report.specs.push_back(spec);
      report.fits.push_back(std::move(fit));
      report.labels.push_back(std::to_string(column));
    } catch (const EstimationError& e) {
      log.skip("regression model=" + tag +
                   " spec=" + std::to_string(column),
               e.code(), "");
    }
  }
  return report;
}

}  // namespace

void run_report(const PipelineConfig& cfg, const ReportExtras* extras) {
  StageLog log;

  std::map<std::string, std::vector<CoinMonthRow>> panels;
  {
    auto capm_path = cfg.out_dir / "panel_capm.csv";
    auto ff3_path = cfg.out_dir / "panel_ff3.csv";
    if (!std::filesystem::exists(capm_path) &&
        !std::filesystem::exists(ff3_path)) {
      throw ConfigError(Errc::missing_artifact,
                        "no panel artifacts under " + cfg.out_dir.string() +
                            "; run the panel stage (or `all`) first");
    }
    if (std::filesystem::exists(capm_path)) {
      panels["capm"] = read_panel_csv(capm_path);
    }
    if (std::filesystem::exists(ff3_path)) {
      panels["ff3"] = read_panel_csv(ff3_path);
    }
  }
  auto ivol_rows = read_ivol_csv(cfg.out_dir / "ivol.csv");

  // Equal-weighted ivol series per model, in percent.
  {
    auto ew_csv = open_output(cfg.out_dir / "ew_ivol.csv", cfg);
    ew_csv << "month,model,mean_ivol_percent,n_coins\n";
    std::map<std::pair<std::string, YearMonth>, std::pair<double, int>> acc;
    for (const auto& row : ivol_rows) {
      auto& [sum, n] = acc[{model_tag(row.model), row.month}];
      sum += row.ivol;
      ++n;
    }
    std::map<std::string, int> order = {{"capm", 0}, {"ff3", 1}};
    for (const auto& [model, idx] : order) {
      for (const auto& [key, sc] : acc) {
        if (key.first != model) continue;
        ew_csv << to_string(key.second) << "," << model << ","
               << num12(100.0 * sc.first / sc.second) << "," << sc.second
               << "\n";
      }
    }
  }

  auto results_csv = open_output(cfg.out_dir / "results.csv", cfg);
  results_csv << "model,spec,regressor,beta,se_homo,se_cluster,t,p,absorbed,"
                 "n_rows,n_coins,n_months,within_r2,dof\n";

  std::map<std::string, ModelReport> reports;
  for (const auto& [tag, panel] : panels) {
    if (panel.empty()) {
      log.skip("report model=" + tag, Errc::empty_panel, "");
      continue;
    }
    ModelReport report = fit_nested(cfg, panel, tag, log);
    for (size_t c = 0; c < report.fits.size(); ++c) {
      const FeFit& fit = report.fits[c];
      for (const auto& coef : fit.coefs) {
        results_csv << tag << "," << report.labels[c] << "," << coef.name
                    << "," << num17(coef.beta) << "," << num17(coef.se_homo)
                    << "," << num17(coef.se_cluster) << "," << num17(coef.t)
                    << "," << num17(coef.p) << "," << (coef.absorbed ? 1 : 0)
                    << "," << fit.n_rows << "," << fit.n_units << ","
                    << fit.n_times << "," << num17(fit.within_r2) << ","
                    << fit.dof << "\n";
      }
    }

    auto table_txt = open_output(
        cfg.out_dir / ("results_" + tag + ".txt"), cfg);
    table_txt << regression_table(
        report.fits, report.specs, report.labels,
        "idiosyncratic volatility (" + tag + "), regressors lagged one month");

    // Summary statistics and correlations per model panel.
    auto summary_csv =
        open_output(cfg.out_dir / ("summary_" + tag + ".csv"), cfg);
    summary_csv << "variable,mean,sd,min,p25,median,p75,max,n\n";
    for (const auto& s : summary_stats(panel)) {
      summary_csv << s.name << "," << num12(s.mean) << "," << num12(s.sd)
                  << "," << num12(s.min) << "," << num12(s.p25) << ","
                  << num12(s.median) << "," << num12(s.p75) << ","
                  << num12(s.max) << "," << s.n << "\n";
    }
    if (panel.size() >= 30) {
      CorrMatrix corr = panel_correlations(panel);
      auto corr_csv =
          open_output(cfg.out_dir / ("correlations_" + tag + ".csv"), cfg);
      corr_csv << "variable";
      for (const auto& name : corr.names) corr_csv << "," << name;
      corr_csv << "\n";
      for (size_t i = 0; i < corr.names.size(); ++i) {
        corr_csv << corr.names[i];
        for (size_t j = 0; j < corr.names.size(); ++j) {
          corr_csv << "," << num12(corr.values[i][j]);
        }
        corr_csv << "\n";
      }
    } else {
      log.skip("correlations model=" + tag, Errc::too_few_observations,
               "rows=" + std::to_string(panel.size()));
    }
    reports.emplace(tag, std::move(report));
  }

  // Truth-versus-estimate section for synthetic runs.
  std::filesystem::path truth_path;
  if (cfg.truth_path) {
    truth_path = *cfg.truth_path;
  } else {
    auto sibling = cfg.prices_path.parent_path() / "truth.json";
    if (std::filesystem::exists(sibling)) truth_path = sibling;
  }
  if (!truth_path.empty() && std::filesystem::exists(truth_path)) {
    SynthTruth truth = load_truth(truth_path);
    auto tv = open_output(cfg.out_dir / "truth_vs_estimate.txt", cfg);
    tv << "ground truth comparison (synthetic data)\n";
    tv << "true panel relation: ivol = " << num12(truth.panel_b0) << " + "
       << num12(truth.panel_b1) << " * d_investor_base(t-1) + effects\n\n";
    for (const auto& [tag, report] : reports) {
      if (report.fits.empty()) continue;
      const FeFit& fit = report.fits.front();  // no-controls column
      for (const auto& coef : fit.coefs) {
        if (coef.name != "d_investor_base") continue;
        tv << tag << ": b1_hat=" << num12(coef.beta)
           << " se=" << num12(coef.se) << " t=" << num12(coef.t)
           << " n=" << fit.n_rows << " (true b1=" << num12(truth.panel_b1)
           << ")\n";
      }
    }

    if (extras && extras->data && extras->factors) {
      // Loading recovery against the true factor realizations.
      std::map<std::string, const CoinTruth*> truth_by_coin;
      for (const auto& c : truth.coins) truth_by_coin[c.coin_id] = &c;
      FitOptions options;
      options.min_obs = cfg.min_obs;
      options.ivol_mode = cfg.ivol_dof;
      StageLog fit_log;
      auto fits =
          ivol_panel(extras->data->returns, truth.true_factors,
                     extras->data->sample, RiskModel::ThreeFactor, options,
                     &fit_log, cfg.threads);
      int n_checked = 0, n_close = 0;
      for (const auto& fit : fits) {
        auto it = truth_by_coin.find(fit.coin_id);
        if (it == truth_by_coin.end()) continue;
        ++n_checked;
        if (std::fabs(fit.beta_mrkt - it->second->beta) <= 0.2) ++n_close;
      }
      tv << "\nloading recovery vs true factors (three-factor fits): "
         << n_close << "/" << n_checked
         << " coin-months with |beta_hat - beta| <= 0.2\n";

      double corr_mrkt = 0;
      {
        std::vector<double> constructed, true_vals;
        std::map<Date, double> true_by_date;
        for (const auto& row : truth.true_factors.rows) {
          true_by_date[row.date] = row.mrkt;
        }
        for (const auto& row : extras->factors->rows) {
          auto it = true_by_date.find(row.date);
          if (it == true_by_date.end()) continue;
          constructed.push_back(row.mrkt);
          true_vals.push_back(it->second);
        }
        if (constructed.size() >= 3) {
          corr_mrkt = stats::pearson(constructed, true_vals);
        }
      }
      tv << "correlation of constructed MRKT with the generating market "
            "factor: "
         << num12(corr_mrkt) << "\n";
    }
  }

  log.write(cfg.out_dir / "logs" / "report.log");
  stage_note("report: written");
}

void run_all(const PipelineConfig& cfg) {
  IngestBundle data = run_ingest(cfg, true);
  FactorTable factors = run_factors(cfg, data, true);
  IvolBundle ivol = run_ivol(cfg, data, factors, true);
  run_chars(cfg, data);
  run_panel(cfg, data, ivol, true);
  run_vif_stage(cfg);
  ReportExtras extras;
  extras.data = &data;
  extras.factors = &factors;
  run_report(cfg, &extras);
}

void run_subcommand(const std::string& name, const PipelineConfig& cfg) {
  if (name == "synth") {
    generate(cfg.synth, cfg.out_dir);
    PipelineConfig generated = cfg;
    generated.prices_path = cfg.out_dir / "prices.csv";
    generated.meta_path = cfg.out_dir / "meta.csv";
    generated.followers_path = cfg.out_dir / "followers.csv";
    generated.riskfree_path = cfg.out_dir / "riskfree.csv";
    generated.truth_path = cfg.out_dir / "truth.json";
    generated.out_dir = cfg.out_dir / "out";
    write_config(generated, cfg.out_dir / "config.json");
    stage_note("synth: files written to " + cfg.out_dir.string());
    return;
  }
  if (name == "ingest") {
    run_ingest(cfg, true);
    return;
  }
  if (name == "factors") {
    IngestBundle data = run_ingest(cfg, false);
    run_factors(cfg, data, true);
    return;
  }
  if (name == "ivol") {
    IngestBundle data = run_ingest(cfg, false);
    FactorTable factors = run_factors(cfg, data, false);
    run_ivol(cfg, data, factors, true);
    return;
  }
  if (name == "chars") {
    IngestBundle data = run_ingest(cfg, false);
    run_chars(cfg, data);
    return;
  }
  if (name == "panel") {
    IngestBundle data = run_ingest(cfg, false);
    FactorTable factors = run_factors(cfg, data, false);
    IvolBundle ivol = run_ivol(cfg, data, factors, true);
    run_panel(cfg, data, ivol, true);
    return;
  }
  if (name == "vif") {
    run_vif_stage(cfg);
    return;
  }
  if (name == "report") {
    run_report(cfg, nullptr);
    return;
  }
  if (name == "all") {
    run_all(cfg);
    return;
  }
  throw ConfigError(Errc::invalid_config, "unknown subcommand: " + name);
}

}  // namespace cryptofactor
