#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

#include "cryptofactor/errors.hpp"

namespace cryptofactor {

struct OlsFit {
  Eigen::VectorXd coef;       // intercept first when add_intercept was set
  Eigen::VectorXd se;         // homoskedastic, sigma^2 = RSS/(n-k)
  Eigen::VectorXd t;
  Eigen::VectorXd residuals;
  double r2 = 0;              // centered iff intercept included
  double rss = 0;
  int n = 0;
  int k = 0;
};

// Least squares via column-pivoted Householder QR; relative rank tolerance
// 1e-10 on the R diagonal. Throws Underdetermined when rows <= cols and
// RankDeficient naming the first dropped column.
OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           bool add_intercept);

enum class SeType { Homoskedastic, ClusterByCoin };

struct FeSpec {
  std::string dependent;
  std::vector<std::string> regressors;
  bool fe_unit = true;   // cryptocurrency fixed effects
  bool fe_time = true;   // period fixed effects
  SeType se_type = SeType::Homoskedastic;
};

// Long-format panel: parallel arrays, one entry per row.
struct PanelTable {
  std::vector<std::string> unit;
  std::vector<std::string> time;
  std::vector<std::string> col_names;
  std::vector<std::vector<double>> cols;

  size_t n_rows() const { return unit.size(); }
  void add_col(std::string name, std::vector<double> values);
  const std::vector<double>& col(std::string_view name) const;
  bool has_col(std::string_view name) const;
};

struct FeCoef {
  std::string name;
  double beta = 0;
  double se = 0;          // per the requested SeType
  double se_homo = 0;
  double se_cluster = 0;  // filled when clustering was computed
  double t = 0;
  double p = 1;
  bool absorbed = false;  // collinear with the fixed effects, not estimated
};

struct FeFit {
  std::vector<FeCoef> coefs;  // one per requested regressor, in spec order
  double within_r2 = 0;
  int n_rows = 0;
  int n_units = 0;
  int n_times = 0;
  int dropped_singletons = 0;  // rows removed with their singleton groups
  int dof = 0;
  SeType se_type = SeType::Homoskedastic;
};

// Two-way fixed effects via iterated demeaning (alternating projections,
// max |change| < 1e-12, at most 100 sweeps), then OLS on the transformed
// data. Regressors absorbed by the effects are reported, not estimated.
FeFit two_way_fe(const PanelTable& panel, const FeSpec& spec);

// Rows surviving iterative removal of units/times that appear once.
// Shared by the within estimator and the dummy-variable oracle so both
// drop identically.
struct PanelIndex {
  std::vector<int> rows;      // indices into the original panel
  std::vector<int> unit_id;   // dense ids per kept row, by sorted label
  std::vector<int> time_id;
  std::vector<std::string> unit_labels;
  std::vector<std::string> time_labels;
  int n_units = 0;
  int n_times = 0;
  int dropped_rows = 0;
};
PanelIndex index_panel(const PanelTable& panel, bool drop_unit_singletons,
                       bool drop_time_singletons);

// Demeans columns in place by alternating unit/time group means.
// Returns the number of sweeps used.
int demean_two_way(std::vector<Eigen::VectorXd>& columns,
                   const PanelIndex& idx, bool by_unit, bool by_time,
                   double tol = 1e-12, int max_sweeps = 100);

struct VifEntry {
  std::string regressor;
  double vif = 1;      // +inf marker when the auxiliary fit is exact
  double r2_aux = 0;
  bool flagged = false;
};
struct VifReport {
  std::vector<VifEntry> entries;
  double threshold = 10.0;
};

// Variance inflation factors: each regressor regressed on all the others
// plus an intercept; vif = 1/(1 - r2_aux), flagged above the threshold.
VifReport vif(const PanelTable& panel,
              const std::vector<std::string>& regressors,
              double threshold = 10.0);

// Side-by-side coefficient table with significance stars at the two-sided
// normal 10/5/1% levels, standard errors in parentheses, and per-column
// N / within R^2 / fixed-effect indicators.
std::string regression_table(const std::vector<FeFit>& fits,
                             const std::vector<FeSpec>& specs,
                             const std::vector<std::string>& column_labels,
                             const std::string& dependent_label);

}  // namespace cryptofactor
