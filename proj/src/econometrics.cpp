#include "cryptofactor/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "cryptofactor/stats.hpp"

namespace cryptofactor {

namespace {

constexpr double kRankTol = 1e-10;

struct LsSolution {
  Eigen::VectorXd coef;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd xtx_inv;  // (X'X)^-1 from the R factor
  double rss = 0;
  int rank = 0;
};

// Column-pivoted Householder QR least squares. When allow_rank_deficient is
// false a dropped pivot throws; otherwise trailing coefficients are zeroed
// (enough for auxiliary R^2 computations).
LsSolution solve_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    bool allow_rank_deficient) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(X.cols());
  if (n <= k) {
    throw EstimationError(Errc::underdetermined,
                          "least squares needs rows > cols, got " +
                              std::to_string(n) + " x " + std::to_string(k));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(kRankTol);
  const int rank = static_cast<int>(qr.rank());
  if (rank < k && !allow_rank_deficient) {
    const auto& perm = qr.colsPermutation().indices();
    const int dropped = perm[rank];
    throw EstimationError(Errc::rank_deficient,
                          "design matrix is rank deficient (column " +
                              std::to_string(dropped) + " dropped)");
  }

  LsSolution out;
  out.rank = rank;
  out.coef = qr.solve(y);
  out.residuals = y - X * out.coef;
  out.rss = out.residuals.squaredNorm();

  if (rank == k) {
    // (X'X)^-1 = P R^-1 R^-T P' from the triangular factor.
    Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k)
                            .triangularView<Eigen::Upper>();
    Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd unpermuted = r_inv * r_inv.transpose();
    const auto& p = qr.colsPermutation();
    out.xtx_inv = p * unpermuted * p.transpose();
  }
  return out;
}

double centered_tss(const Eigen::VectorXd& y) {
  const double m = y.mean();
  return (y.array() - m).matrix().squaredNorm();
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::string format_coef(double v) {
  char buf[48];
  if (std::fabs(v) >= 0.001 && std::fabs(v) < 100000) {
    std::snprintf(buf, sizeof buf, "%.4f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.4g", v);
  }
  return buf;
}

const char* stars(double t) {
  const double a = std::fabs(t);
  if (a >= 2.576) return "***";
  if (a >= 1.960) return "**";
  if (a >= 1.645) return "*";
  return "";
}

}  // namespace

void PanelTable::add_col(std::string name, std::vector<double> values) {
  col_names.push_back(std::move(name));
  cols.push_back(std::move(values));
}

const std::vector<double>& PanelTable::col(std::string_view name) const {
  for (size_t i = 0; i < col_names.size(); ++i) {
    if (col_names[i] == name) return cols[i];
  }
  throw EstimationError(Errc::invalid_config,
                        "panel has no column '" + std::string(name) + "'");
}

bool PanelTable::has_col(std::string_view name) const {
  for (const auto& c : col_names) {
    if (c == name) return true;
  }
  return false;
}

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           bool add_intercept) {
  Eigen::MatrixXd design;
  if (add_intercept) {
    design.resize(X.rows(), X.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(X.cols()) = X;
  } else {
    design = X;
  }

  LsSolution ls = solve_ls(design, y, /*allow_rank_deficient=*/false);

  OlsFit fit;
  fit.n = static_cast<int>(design.rows());
  fit.k = static_cast<int>(design.cols());
  fit.coef = ls.coef;
  fit.residuals = ls.residuals;
  fit.rss = ls.rss;

  const double sigma2 = ls.rss / static_cast<double>(fit.n - fit.k);
  fit.se.resize(fit.k);
  fit.t.resize(fit.k);
  for (int j = 0; j < fit.k; ++j) {
    fit.se[j] = std::sqrt(std::max(0.0, sigma2 * ls.xtx_inv(j, j)));
    fit.t[j] = fit.se[j] > 0 ? fit.coef[j] / fit.se[j] : 0.0;
  }

  const double tss = add_intercept ? centered_tss(y) : y.squaredNorm();
  fit.r2 = tss > 0 ? clamp01(1.0 - ls.rss / tss) : 1.0;
  return fit;
}

PanelIndex index_panel(const PanelTable& panel, bool drop_unit_singletons,
                       bool drop_time_singletons) {
  const size_t n = panel.n_rows();
  std::vector<char> keep(n, 1);

  bool changed = true;
  while (changed) {
    changed = false;
    if (drop_unit_singletons) {
      std::map<std::string, int> counts;
      for (size_t i = 0; i < n; ++i) {
        if (keep[i]) ++counts[panel.unit[i]];
      }
      for (size_t i = 0; i < n; ++i) {
        if (keep[i] && counts[panel.unit[i]] < 2) {
          keep[i] = 0;
          changed = true;
        }
      }
    }
    if (drop_time_singletons) {
      std::map<std::string, int> counts;
      for (size_t i = 0; i < n; ++i) {
        if (keep[i]) ++counts[panel.time[i]];
      }
      for (size_t i = 0; i < n; ++i) {
        if (keep[i] && counts[panel.time[i]] < 2) {
          keep[i] = 0;
          changed = true;
        }
      }
    }
  }

  PanelIndex idx;
  std::set<std::string> units, times;
  for (size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    idx.rows.push_back(static_cast<int>(i));
    units.insert(panel.unit[i]);
    times.insert(panel.time[i]);
  }
  idx.dropped_rows = static_cast<int>(n - idx.rows.size());
  idx.unit_labels.assign(units.begin(), units.end());
  idx.time_labels.assign(times.begin(), times.end());
  idx.n_units = static_cast<int>(idx.unit_labels.size());
  idx.n_times = static_cast<int>(idx.time_labels.size());

  std::map<std::string, int> unit_of, time_of;
  for (int u = 0; u < idx.n_units; ++u) unit_of[idx.unit_labels[u]] = u;
  for (int t = 0; t < idx.n_times; ++t) time_of[idx.time_labels[t]] = t;
  idx.unit_id.reserve(idx.rows.size());
  idx.time_id.reserve(idx.rows.size());
  for (int r : idx.rows) {
    idx.unit_id.push_back(unit_of[panel.unit[r]]);
    idx.time_id.push_back(time_of[panel.time[r]]);
  }
  return idx;
}

int demean_two_way(std::vector<Eigen::VectorXd>& columns, const PanelIndex& idx,
                   bool by_unit, bool by_time, double tol, int max_sweeps) {
  if (!by_unit && !by_time) return 0;
  const size_t n = idx.rows.size();
  std::vector<int> unit_count(idx.n_units, 0), time_count(idx.n_times, 0);
  for (size_t i = 0; i < n; ++i) {
    ++unit_count[idx.unit_id[i]];
    ++time_count[idx.time_id[i]];
  }

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double max_change = 0;
    for (auto& col : columns) {
      if (by_unit) {
        std::vector<double> sums(idx.n_units, 0.0);
        for (size_t i = 0; i < n; ++i) sums[idx.unit_id[i]] += col[i];
        for (size_t i = 0; i < n; ++i) {
          const double m = sums[idx.unit_id[i]] / unit_count[idx.unit_id[i]];
          col[i] -= m;
          max_change = std::max(max_change, std::fabs(m));
        }
      }
      if (by_time) {
        std::vector<double> sums(idx.n_times, 0.0);
        for (size_t i = 0; i < n; ++i) sums[idx.time_id[i]] += col[i];
        for (size_t i = 0; i < n; ++i) {
          const double m = sums[idx.time_id[i]] / time_count[idx.time_id[i]];
          col[i] -= m;
          max_change = std::max(max_change, std::fabs(m));
        }
      }
    }
    if (max_change < tol) break;
  }
  return sweep + 1;
}

FeFit two_way_fe(const PanelTable& panel, const FeSpec& spec) {
  if (spec.regressors.empty()) {
    throw EstimationError(Errc::invalid_config, "no regressors in FE spec");
  }
  {
    std::set<std::string> uniq(spec.regressors.begin(), spec.regressors.end());
    if (uniq.size() != spec.regressors.size()) {
      throw EstimationError(Errc::invalid_config, "duplicate regressor names");
    }
  }

  PanelIndex idx = index_panel(panel, spec.fe_unit, spec.fe_time);
  const int n = static_cast<int>(idx.rows.size());
  if ((spec.fe_unit && idx.n_units < 2) || (spec.fe_time && idx.n_times < 2) ||
      n < 3) {
    throw EstimationError(Errc::too_few_groups,
                          "need at least 2 units and 2 periods after "
                          "dropping singletons");
  }

  const int k_req = static_cast<int>(spec.regressors.size());
  const auto& y_full = panel.col(spec.dependent);
  std::vector<Eigen::VectorXd> work(1 + k_req);
  work[0].resize(n);
  for (int i = 0; i < n; ++i) work[0][i] = y_full[idx.rows[i]];
  std::vector<double> raw_scale(k_req, 0.0);
  for (int j = 0; j < k_req; ++j) {
    const auto& c = panel.col(spec.regressors[j]);
    work[1 + j].resize(n);
    for (int i = 0; i < n; ++i) {
      work[1 + j][i] = c[idx.rows[i]];
      raw_scale[j] = std::max(raw_scale[j], std::fabs(work[1 + j][i]));
    }
  }

  demean_two_way(work, idx, spec.fe_unit, spec.fe_time);

  // A regressor absorbed by the effects has no within variation left.
  std::vector<int> active;
  std::vector<char> absorbed(k_req, 0);
  for (int j = 0; j < k_req; ++j) {
    const double within = work[1 + j].cwiseAbs().maxCoeff();
    if (within <= kRankTol * std::max(1.0, raw_scale[j])) {
      absorbed[j] = 1;
    } else {
      active.push_back(j);
    }
  }
  if (active.empty()) {
    throw EstimationError(Errc::absorbed,
                          "all regressors are absorbed by the fixed effects");
  }

  const int k = static_cast<int>(active.size());
  const bool any_fe = spec.fe_unit || spec.fe_time;
  Eigen::MatrixXd X(n, any_fe ? k : k + 1);
  int col0 = 0;
  if (!any_fe) {
    X.col(0).setOnes();
    col0 = 1;
  }
  for (int j = 0; j < k; ++j) X.col(col0 + j) = work[1 + active[j]];
  Eigen::VectorXd y = work[0];

  LsSolution ls;
  try {
    ls = solve_ls(X, y, /*allow_rank_deficient=*/false);
  } catch (const EstimationError& e) {
    if (e.code() == Errc::rank_deficient) {
      throw EstimationError(Errc::rank_deficient,
                            std::string("collinear regressors after the "
                                        "within transformation: ") +
                                e.what());
    }
    throw;
  }

  const int dof = n - k - (spec.fe_unit ? idx.n_units - 1 : 0) -
                  (spec.fe_time ? idx.n_times - 1 : 0) - 1;
  if (dof < 1) {
    throw EstimationError(Errc::too_few_groups,
                          "no residual degrees of freedom");
  }
  const double sigma2 = ls.rss / dof;

  // Cluster-by-unit sandwich with the usual small-sample factor
  // G/(G-1) * (n-1)/(n-K), K counting slopes plus all absorbed effects.
  Eigen::MatrixXd v_cluster;
  {
    const int g_count = idx.n_units;
    std::vector<Eigen::VectorXd> scores(
        g_count, Eigen::VectorXd::Zero(X.cols()));
    for (int i = 0; i < n; ++i) {
      scores[idx.unit_id[i]] += X.row(i).transpose() * ls.residuals[i];
    }
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    for (const auto& s : scores) meat += s * s.transpose();
    const double c_small =
        (static_cast<double>(g_count) / std::max(1, g_count - 1)) *
        (static_cast<double>(n - 1) / dof);
    v_cluster = c_small * ls.xtx_inv * meat * ls.xtx_inv;
  }

  FeFit fit;
  fit.se_type = spec.se_type;
  fit.n_rows = n;
  fit.n_units = idx.n_units;
  fit.n_times = idx.n_times;
  fit.dropped_singletons = idx.dropped_rows;
  fit.dof = dof;

  fit.coefs.resize(k_req);
  for (int j = 0; j < k_req; ++j) {
    fit.coefs[j].name = spec.regressors[j];
    fit.coefs[j].absorbed = absorbed[j] != 0;
  }
  for (int j = 0; j < k; ++j) {
    FeCoef& c = fit.coefs[active[j]];
    const int xj = col0 + j;
    c.beta = ls.coef[xj];
    c.se_homo = std::sqrt(std::max(0.0, sigma2 * ls.xtx_inv(xj, xj)));
    c.se_cluster = std::sqrt(std::max(0.0, v_cluster(xj, xj)));
    c.se = spec.se_type == SeType::ClusterByCoin ? c.se_cluster : c.se_homo;
    c.t = c.se > 0 ? c.beta / c.se : 0.0;
    c.p = stats::two_sided_p(c.t);
  }

  const double tss = centered_tss(y);
  fit.within_r2 = tss > 0 ? clamp01(1.0 - ls.rss / tss) : 1.0;
  return fit;
}

VifReport vif(const PanelTable& panel,
              const std::vector<std::string>& regressors, double threshold) {
  if (regressors.size() < 2) {
    throw EstimationError(Errc::invalid_config,
                          "vif needs at least 2 regressors");
  }
  const int n = static_cast<int>(panel.n_rows());
  const int k = static_cast<int>(regressors.size());

  Eigen::MatrixXd cols(n, k);
  for (int j = 0; j < k; ++j) {
    const auto& c = panel.col(regressors[j]);
    for (int i = 0; i < n; ++i) cols(i, j) = c[i];
  }

  VifReport report;
  report.threshold = threshold;
  report.entries.resize(k);
  for (int j = 0; j < k; ++j) {
    Eigen::MatrixXd aux(n, k);  // intercept + the other regressors
    aux.col(0).setOnes();
    int c = 1;
    for (int m = 0; m < k; ++m) {
      if (m != j) aux.col(c++) = cols.col(m);
    }
    Eigen::VectorXd target = cols.col(j);
    LsSolution ls = solve_ls(aux, target, /*allow_rank_deficient=*/true);
    const double tss = centered_tss(target);
    double r2 = tss > 0 ? clamp01(1.0 - ls.rss / tss) : 1.0;

    VifEntry& e = report.entries[j];
    e.regressor = regressors[j];
    e.r2_aux = r2;
    if (1.0 - r2 <= 1e-12) {
      e.vif = std::numeric_limits<double>::infinity();
      e.r2_aux = 1.0;
    } else {
      e.vif = 1.0 / (1.0 - r2);
    }
    e.flagged = e.vif > threshold;
  }
  return report;
}

std::string regression_table(const std::vector<FeFit>& fits,
                             const std::vector<FeSpec>& specs,
                             const std::vector<std::string>& column_labels,
                             const std::string& dependent_label) {
  // Row order: union of regressors in first-appearance order.
  std::vector<std::string> row_names;
  for (const auto& fit : fits) {
    for (const auto& c : fit.coefs) {
      if (std::find(row_names.begin(), row_names.end(), c.name) ==
          row_names.end()) {
        row_names.push_back(c.name);
      }
    }
  }

  const size_t n_cols = fits.size();
  const int name_w = 18;
  const int col_w = 14;

  std::string out;
  auto pad = [](std::string s, int w) {
    if (static_cast<int>(s.size()) < w) s.append(w - s.size(), ' ');
    return s;
  };
  auto lead = [&](const std::string& s) { return pad(s, name_w); };
  auto cell = [&](const std::string& s) { return pad(s, col_w); };

  out += "dependent variable: " + dependent_label + "\n";
  out += lead("");
  for (size_t c = 0; c < n_cols; ++c) {
    out += cell("(" + (c < column_labels.size() ? column_labels[c]
                                                : std::to_string(c + 1)) +
                ")");
  }
  out += "\n";

  for (const auto& name : row_names) {
    std::string beta_line = lead(name);
    std::string se_line = lead("");
    for (const auto& fit : fits) {
      const FeCoef* found = nullptr;
      for (const auto& c : fit.coefs) {
        if (c.name == name) {
          found = &c;
          break;
        }
      }
      if (!found) {
        beta_line += cell("");
        se_line += cell("");
      } else if (found->absorbed) {
        beta_line += cell("absorbed");
        se_line += cell("");
      } else {
        beta_line += cell(format_coef(found->beta) + stars(found->t));
        se_line += cell("(" + format_coef(found->se) + ")");
      }
    }
    out += beta_line + "\n" + se_line + "\n";
  }

  auto yes_no = [](bool b) { return b ? std::string("yes") : std::string("no"); };
  std::string fe_unit_line = lead("coin FE");
  std::string fe_time_line = lead("month FE");
  std::string n_line = lead("N");
  std::string r2_line = lead("within R2");
  for (size_t c = 0; c < n_cols; ++c) {
    const bool have_spec = c < specs.size();
    fe_unit_line += cell(have_spec ? yes_no(specs[c].fe_unit) : "");
    fe_time_line += cell(have_spec ? yes_no(specs[c].fe_time) : "");
    n_line += cell(std::to_string(fits[c].n_rows));
    r2_line += cell(format_coef(fits[c].within_r2));
  }
  out += fe_unit_line + "\n" + fe_time_line + "\n" + n_line + "\n" +
         r2_line + "\n";
  out += "stars: * p<0.10, ** p<0.05, *** p<0.01 (two-sided normal)\n";
  return out;
}

}  // namespace cryptofactor
