#pragma once

// Statistics used by the facet and validation analyses: correlation with
// t-distribution p-values, PCA, OLS with stepwise AIC selection, Fleiss'
// kappa, geometric means and group summaries.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ise::stats {

// ---------------------------------------------------------------------------
// Distributions

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// P(F >= f) for the F distribution with (d1, d2) degrees of freedom.
double f_upper_p(double f, double d1, double d2);

// ---------------------------------------------------------------------------
// Correlation

struct Correlation {
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Pearson r with a two-sided p-value from t = r sqrt((n-2)/(1-r^2)).
/// Pairs where either value is NaN are dropped. Throws DataError on length
/// mismatch, fewer than 3 complete pairs or a zero-variance input.
Correlation pearson(std::span<const double> x, std::span<const double> y);

/// Pearson on average ranks (ties share the mean of their positions).
Correlation spearman(std::span<const double> a, std::span<const double> b);

std::vector<double> average_ranks(std::span<const double> v);

struct NamedColumn {
  std::string name;
  std::vector<double> values;
};

/// cells[i][j] = pearson(rows[i], cols[j]); absent where undefined.
struct CorrelationTable {
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;
  std::vector<std::vector<std::optional<Correlation>>> cells;
  /// Columns (from either side) that made at least one cell undefined.
  std::vector<std::string> undefined;
};

CorrelationTable pearson_table(const std::vector<NamedColumn>& rows, const std::vector<NamedColumn>& cols);
/// Square symmetric table with r = 1 on the diagonal of defined columns.
CorrelationTable pearson_matrix(const std::vector<NamedColumn>& columns);

// ---------------------------------------------------------------------------
// PCA

enum class PcaMode { kCorrelation, kCovariance };
std::string_view to_string(PcaMode m);
PcaMode parse_pca_mode(std::string_view s);

struct PcaResult {
  PcaMode mode = PcaMode::kCorrelation;
  Eigen::VectorXd eigenvalues;               // all components, descending
  Eigen::VectorXd explained_variance_ratio;  // first n_components
  Eigen::MatrixXd loadings;                  // columns x n_components, orthonormal columns
  Eigen::MatrixXd scores;                    // rows x n_components
  Eigen::VectorXd column_means;
  Eigen::VectorXd column_scales;             // sample std (correlation) or 1
  std::vector<bool> sign_flipped;            // per component
};

/// Standardizes (correlation) or centers (covariance) the columns, takes the
/// eigen-decomposition of the resulting (n-1)-normalized Gram matrix and
/// orders components by eigenvalue. Each loading column is signed so its
/// largest-magnitude entry is positive. Throws DataError on fewer than two
/// rows or columns, non-finite input, or a zero-variance column in
/// correlation mode.
PcaResult pca(const Eigen::MatrixXd& data, std::size_t n_components, PcaMode mode = PcaMode::kCorrelation);

// ---------------------------------------------------------------------------
// Regression

struct RegressionResult {
  std::vector<std::string> terms;  // "const" first when an intercept is fitted
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> t_stats;
  std::vector<double> p_values;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double f_stat = 0.0;
  double f_p_value = 1.0;
  double rss = 0.0;
  double residual_std_error = 0.0;
  /// n ln(RSS/n) + 2k with k = number of fitted coefficients (intercept
  /// included). The error variance is not counted; it adds the same constant
  /// to every candidate model and so never changes a selection.
  double aic = 0.0;
  std::size_t n_obs = 0;
  std::size_t df_resid = 0;
  bool has_intercept = true;
  std::vector<double> residuals;
};

double ols_aic(double rss, std::size_t n_obs, std::size_t n_coefficients);

/// Least squares through a column-pivoted Householder QR. Throws DataError
/// naming the offending columns when the design is rank deficient, and when
/// n_obs <= number of coefficients.
RegressionResult ols_fit(std::span<const double> y, const std::vector<NamedColumn>& x, bool add_intercept = true);

enum class StepDirection { kBoth, kBackward, kForward };
std::string_view to_string(StepDirection d);
StepDirection parse_step_direction(std::string_view s);

struct StepRecord {
  std::string action;  // "start", "add" or "drop"
  std::string term;
  double aic = 0.0;
  std::vector<std::string> terms;  // predictors after the step
};

struct StepwiseResult {
  RegressionResult model;
  std::vector<StepRecord> path;
};

/// Greedy stepwise selection on AIC with the intercept always kept. Each
/// step takes the single add/drop with the lowest AIC (ties by predictor
/// name) if it strictly improves; otherwise stops. Backward and both start
/// from the full model, forward from intercept-only. A starting model that
/// cannot be fitted (n_obs too small or rank deficient) falls back to the
/// intercept-only start, and candidate moves that cannot be fitted are
/// skipped.
StepwiseResult step_aic(std::span<const double> y, const std::vector<NamedColumn>& x,
                        StepDirection direction = StepDirection::kBoth);

// ---------------------------------------------------------------------------
// Agreement, growth, summaries

/// Fleiss' kappa from an items x categories count matrix. Every item must be
/// rated by the same number n >= 2 of raters.
double fleiss_kappa(const std::vector<std::vector<std::size_t>>& counts);

/// exp of the mean log, evaluated in base 2. Throws DataError on an empty
/// input or a value <= 0.
double geometric_mean(std::span<const double> values);

struct GrowthBin {
  std::size_t bin = 0;  // 1-based; bin 1 holds the top-ranked companies
  std::vector<std::string> companies;
  double geometric_mean = 0.0;
};

struct StockBins {
  std::vector<GrowthBin> bins;
  std::vector<std::string> excluded;  // ranked companies without growth data
};

/// Splits `ranked` (best first) into n_bins contiguous bins, earliest bins
/// taking the remainder, after removing companies without growth data.
StockBins stock_growth_bins(const std::vector<std::string>& ranked,
                            const std::map<std::string, double>& growth, std::size_t n_bins);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> stddev;  // sample; absent for n < 2
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Quartiles use linear interpolation between order statistics.
Summary summarize(std::span<const double> values);
double quantile(std::vector<double> values, double q);

struct FacetScores {
  std::string company_id;
  double pc1_staff_welfare = 0.0;
  double pc2_financial_benefits = 0.0;
};

struct SectorSummary {
  std::string sector;
  std::string facet;
  Summary summary;
};

/// Per sector and facet summaries, sectors in ascending order. Throws
/// DataError naming the first company missing from `sectors`.
std::vector<SectorSummary> sector_facet_summary(const std::vector<FacetScores>& facets,
                                                const std::map<std::string, std::string>& sectors);

/// Descending score, ties by id ascending.
std::vector<std::pair<std::string, double>> rank_entities(const std::map<std::string, double>& scores);

double mean(std::span<const double> v);

}  // namespace ise::stats
