#include "ise/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "ise/error.hpp"

namespace ise::stats {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DataError(std::string(what) + ": non-finite value");
  }
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw DataError("incomplete_beta: shape parameters must be positive");
  if (std::isnan(x)) return kNaN;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (std::isnan(t) || !(df > 0.0)) return kNaN;
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

double f_upper_p(double f, double d1, double d2) {
  if (std::isnan(f) || !(d1 > 0.0) || !(d2 > 0.0)) return kNaN;
  if (std::isinf(f)) return 0.0;
  if (f <= 0.0) return 1.0;
  return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

double mean(std::span<const double> v) {
  if (v.empty()) throw DataError("mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: length mismatch");
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) continue;
    xs.push_back(x[i]);
    ys.push_back(y[i]);
  }
  const std::size_t n = xs.size();
  if (n < 3) throw DataError("pearson: fewer than 3 complete observations");
  require_finite(xs, "pearson");
  require_finite(ys, "pearson");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("pearson: zero-variance column");
  Correlation c;
  c.n = n;
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  if (std::fabs(c.r) >= 1.0) {
    c.p_value = 0.0;
  } else {
    const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
    c.p_value = student_t_two_sided_p(t, df);
  }
  return c;
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    // positions i..j (0-based) share rank mean(i+1 .. j+1)
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

Correlation spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("spearman: length mismatch");
  if (a.size() < 3) throw DataError("spearman: need at least 3 observations");
  require_finite(a, "spearman");
  require_finite(b, "spearman");
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  return pearson(ra, rb);
}

namespace {

bool has_variance(const std::vector<double>& v) {
  std::optional<double> first;
  for (double x : v) {
    if (std::isnan(x)) continue;
    if (!first) {
      first = x;
    } else if (x != *first) {
      return true;
    }
  }
  return false;
}

}  // namespace

CorrelationTable pearson_table(const std::vector<NamedColumn>& rows, const std::vector<NamedColumn>& cols) {
  CorrelationTable t;
  std::set<std::string> undefined;
  for (const auto& r : rows) {
    t.row_names.push_back(r.name);
    if (!has_variance(r.values)) undefined.insert(r.name);
  }
  for (const auto& c : cols) {
    t.col_names.push_back(c.name);
    if (!has_variance(c.values)) undefined.insert(c.name);
  }
  t.cells.assign(rows.size(), std::vector<std::optional<Correlation>>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (undefined.contains(rows[i].name) || undefined.contains(cols[j].name)) continue;
      try {
        t.cells[i][j] = pearson(rows[i].values, cols[j].values);
      } catch (const DataError&) {
        undefined.insert(rows[i].name);
      }
    }
  }
  t.undefined.assign(undefined.begin(), undefined.end());
  return t;
}

CorrelationTable pearson_matrix(const std::vector<NamedColumn>& columns) {
  CorrelationTable t = pearson_table(columns, columns);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) t.cells[i][j] = t.cells[j][i];
  }
  return t;
}

std::string_view to_string(PcaMode m) { return m == PcaMode::kCorrelation ? "correlation" : "covariance"; }

PcaMode parse_pca_mode(std::string_view s) {
  if (s == "correlation") return PcaMode::kCorrelation;
  if (s == "covariance") return PcaMode::kCovariance;
  throw ConfigError("unknown PCA mode '" + std::string(s) + "'");
}

PcaResult pca(const Eigen::MatrixXd& data, std::size_t n_components, PcaMode mode) {
  const auto n = data.rows();
  const auto m = data.cols();
  if (n < 2 || m < 2) throw DataError("pca: need at least 2 rows and 2 columns");
  if (n_components < 1 || static_cast<Eigen::Index>(n_components) > m) {
    throw ConfigError("pca: n_components must lie in [1, " + std::to_string(m) + "]");
  }
  if (!data.allFinite()) throw DataError("pca: missing or non-finite values");

  PcaResult res;
  res.mode = mode;
  res.column_means = data.colwise().mean().transpose();
  Eigen::MatrixXd z = data.rowwise() - res.column_means.transpose();
  res.column_scales = Eigen::VectorXd::Ones(m);
  if (mode == PcaMode::kCorrelation) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n - 1));
      if (sd == 0.0) throw DataError("pca: zero-variance column " + std::to_string(j));
      res.column_scales(j) = sd;
      z.col(j) /= sd;
    }
  }
  const Eigen::MatrixXd gram = (z.transpose() * z) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw DataError("pca: eigen-decomposition failed");

  // Eigen returns ascending eigenvalues.
  res.eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
  Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  const double total = res.eigenvalues.sum();
  const auto k = static_cast<Eigen::Index>(n_components);
  res.explained_variance_ratio = res.eigenvalues.head(k) / (total > 0.0 ? total : 1.0);
  res.loadings = vectors.leftCols(k);
  res.sign_flipped.assign(n_components, false);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    for (Eigen::Index r = 1; r < m; ++r) {
      if (std::fabs(res.loadings(r, c)) > std::fabs(res.loadings(arg, c))) arg = r;
    }
    if (res.loadings(arg, c) < 0.0) {
      res.loadings.col(c) *= -1.0;
      res.sign_flipped[static_cast<std::size_t>(c)] = true;
    }
  }
  res.scores = z * res.loadings;
  return res;
}

double ols_aic(double rss, std::size_t n_obs, std::size_t n_coefficients) {
  const double n = static_cast<double>(n_obs);
  return n * std::log(rss / n) + 2.0 * static_cast<double>(n_coefficients);
}

RegressionResult ols_fit(std::span<const double> y, const std::vector<NamedColumn>& x, bool add_intercept) {
  const std::size_t n = y.size();
  const std::size_t k = x.size() + (add_intercept ? 1 : 0);
  if (k == 0) throw DataError("ols: empty design");
  if (n <= k) {
    throw DataError("ols: " + std::to_string(n) + " observations cannot support " + std::to_string(k) +
                    " coefficients");
  }
  require_finite(y, "ols response");
  RegressionResult res;
  res.has_intercept = add_intercept;
  Eigen::MatrixXd design(n, k);
  Eigen::Index col = 0;
  if (add_intercept) {
    design.col(col++).setOnes();
    res.terms.push_back("const");
  }
  for (const auto& c : x) {
    if (c.values.size() != n) throw DataError("ols: column '" + c.name + "' has wrong length");
    require_finite(c.values, ("ols column " + c.name).c_str());
    design.col(col++) = Eigen::Map<const Eigen::VectorXd>(c.values.data(), static_cast<Eigen::Index>(n));
    res.terms.push_back(c.name);
  }
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < static_cast<Eigen::Index>(k)) {
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < static_cast<Eigen::Index>(k); ++i) {
      if (!names.empty()) names += ", ";
      names += res.terms[static_cast<std::size_t>(perm(i))];
    }
    throw DataError("ols: rank-deficient design (linearly dependent: " + names + ")");
  }
  const Eigen::VectorXd beta = qr.solve(yv);
  const Eigen::VectorXd resid = yv - design * beta;

  // (X'X)^-1 = P R^-1 R^-T P'
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(kk, kk).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(kk, kk));
  const Eigen::MatrixXd xtx_inv_perm = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  const Eigen::MatrixXd xtx_inv = perm * xtx_inv_perm * perm.transpose();

  res.n_obs = n;
  res.df_resid = n - k;
  res.rss = resid.squaredNorm();
  const double sigma2 = res.rss / static_cast<double>(res.df_resid);
  res.residual_std_error = std::sqrt(sigma2);
  const double df = static_cast<double>(res.df_resid);
  for (Eigen::Index i = 0; i < kk; ++i) {
    const double coef = beta(i);
    const double se = std::sqrt(std::max(0.0, sigma2 * xtx_inv(i, i)));
    const double t = coef / se;
    res.coefficients.push_back(coef);
    res.std_errors.push_back(se);
    res.t_stats.push_back(t);
    res.p_values.push_back(student_t_two_sided_p(t, df));
  }
  res.residuals.assign(resid.data(), resid.data() + n);

  double tss = 0.0;
  if (add_intercept) {
    const double my = yv.mean();
    tss = (yv.array() - my).square().sum();
  } else {
    tss = yv.squaredNorm();
  }
  const double n_d = static_cast<double>(n);
  const double df_total = add_intercept ? n_d - 1.0 : n_d;
  const double df_model = static_cast<double>(k) - (add_intercept ? 1.0 : 0.0);
  if (tss > 0.0) {
    res.r2 = 1.0 - res.rss / tss;
    res.adj_r2 = 1.0 - (1.0 - res.r2) * df_total / df;
  } else {
    res.r2 = kNaN;
    res.adj_r2 = kNaN;
  }
  if (df_model > 0.0 && tss > 0.0) {
    res.f_stat = ((tss - res.rss) / df_model) / (res.rss / df);
    res.f_p_value = f_upper_p(res.f_stat, df_model, df);
  } else {
    res.f_stat = kNaN;
    res.f_p_value = kNaN;
  }
  res.aic = ols_aic(res.rss, n, k);
  return res;
}

std::string_view to_string(StepDirection d) {
  switch (d) {
    case StepDirection::kBoth: return "both";
    case StepDirection::kBackward: return "backward";
    default: return "forward";
  }
}

StepDirection parse_step_direction(std::string_view s) {
  if (s == "both") return StepDirection::kBoth;
  if (s == "backward") return StepDirection::kBackward;
  if (s == "forward") return StepDirection::kForward;
  throw ConfigError("unknown stepwise direction '" + std::string(s) + "'");
}

StepwiseResult step_aic(std::span<const double> y, const std::vector<NamedColumn>& x, StepDirection direction) {
  std::set<std::string> names;
  for (const auto& c : x) {
    if (!names.insert(c.name).second) throw DataError("step_aic: duplicate predictor '" + c.name + "'");
  }
  using Subset = std::vector<std::size_t>;  // sorted indices into x
  auto fit = [&](const Subset& s) -> std::optional<RegressionResult> {
    if (y.size() <= s.size() + 1) return std::nullopt;
    std::vector<NamedColumn> cols;
    for (auto i : s) cols.push_back(x[i]);
    try {
      return ols_fit(y, cols, true);
    } catch (const DataError&) {
      return std::nullopt;
    }
  };
  auto term_names = [&](const Subset& s) {
    std::vector<std::string> out;
    for (auto i : s) out.push_back(x[i].name);
    return out;
  };

  Subset current;
  if (direction != StepDirection::kForward) {
    current.resize(x.size());
    std::iota(current.begin(), current.end(), std::size_t{0});
  }
  auto model = fit(current);
  if (!model) {
    current.clear();
    model = fit(current);
    if (!model) throw DataError("step_aic: even the intercept-only model cannot be fitted");
  }
  StepwiseResult out;
  out.path.push_back({"start", "", model->aic, term_names(current)});

  for (;;) {
    struct Move {
      std::string action;
      std::size_t index;
      Subset subset;
      RegressionResult fit;
    };
    std::optional<Move> best;
    auto consider = [&](std::string action, std::size_t index, Subset s) {
      auto f = fit(s);
      if (!f || std::isnan(f->aic)) return;
      if (!best || f->aic < best->fit.aic ||
          (f->aic == best->fit.aic && x[index].name < x[best->index].name)) {
        best = Move{std::move(action), index, std::move(s), std::move(*f)};
      }
    };
    if (direction != StepDirection::kForward) {
      for (std::size_t pos = 0; pos < current.size(); ++pos) {
        Subset s = current;
        s.erase(s.begin() + static_cast<std::ptrdiff_t>(pos));
        consider("drop", current[pos], std::move(s));
      }
    }
    if (direction != StepDirection::kBackward) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::find(current.begin(), current.end(), i) != current.end()) continue;
        Subset s = current;
        s.insert(std::upper_bound(s.begin(), s.end(), i), i);
        consider("add", i, std::move(s));
      }
    }
    if (!best || !(best->fit.aic < model->aic)) break;
    current = std::move(best->subset);
    model = std::move(best->fit);
    out.path.push_back({best->action, x[best->index].name, model->aic, term_names(current)});
  }
  out.model = std::move(*model);
  return out;
}

double fleiss_kappa(const std::vector<std::vector<std::size_t>>& counts) {
  if (counts.empty()) throw DataError("fleiss_kappa: no items");
  const std::size_t n_cat = counts.front().size();
  if (n_cat == 0) throw DataError("fleiss_kappa: no categories");
  std::size_t raters = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].size() != n_cat) throw DataError("fleiss_kappa: ragged count matrix");
    const std::size_t s = std::accumulate(counts[i].begin(), counts[i].end(), std::size_t{0});
    if (i == 0) raters = s;
    if (s != raters) {
      throw DataError("fleiss_kappa: item " + std::to_string(i) + " has " + std::to_string(s) +
                      " ratings, expected " + std::to_string(raters));
    }
  }
  if (raters < 2) throw DataError("fleiss_kappa: need at least 2 raters per item");

  const double n = static_cast<double>(raters);
  const double n_items = static_cast<double>(counts.size());
  std::vector<double> col_totals(n_cat, 0.0);
  double p_bar = 0.0;
  for (const auto& row : counts) {
    double sq = 0.0;
    for (std::size_t j = 0; j < n_cat; ++j) {
      const double c = static_cast<double>(row[j]);
      sq += c * c;
      col_totals[j] += c;
    }
    p_bar += (sq - n) / (n * (n - 1.0));
  }
  p_bar /= n_items;
  double p_e = 0.0;
  for (double t : col_totals) {
    const double pj = t / (n_items * n);
    p_e += pj * pj;
  }
  // Every rating in one category: agreement is perfect but chance-corrected
  // kappa is 0/0; report perfect agreement.
  if (p_e == 1.0) return 1.0;
  return (p_bar - p_e) / (1.0 - p_e);
}

double geometric_mean(std::span<const double> values) {
  if (values.empty()) throw DataError("geometric_mean: empty input");
  double sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DataError("geometric_mean: values must be positive and finite");
    }
    sum += std::log2(v);
  }
  return std::exp2(sum / static_cast<double>(values.size()));
}

StockBins stock_growth_bins(const std::vector<std::string>& ranked,
                            const std::map<std::string, double>& growth, std::size_t n_bins) {
  if (n_bins == 0) throw ConfigError("stock bins: n_bins must be positive");
  StockBins out;
  std::vector<std::string> kept;
  for (const auto& c : ranked) {
    auto it = growth.find(c);
    if (it == growth.end()) {
      out.excluded.push_back(c);
      continue;
    }
    if (!(it->second > 0.0)) throw DataError("stock growth for '" + c + "' is not positive");
    kept.push_back(c);
  }
  const std::size_t base = kept.size() / n_bins;
  const std::size_t extra = kept.size() % n_bins;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    if (size == 0) continue;
    GrowthBin bin;
    bin.bin = b + 1;
    std::vector<double> g;
    for (std::size_t i = 0; i < size; ++i, ++pos) {
      bin.companies.push_back(kept[pos]);
      g.push_back(growth.at(kept[pos]));
    }
    bin.geometric_mean = geometric_mean(g);
    out.bins.push_back(std::move(bin));
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw DataError("summary of empty sample");
  Summary s;
  s.n = values.size();
  s.mean = mean(values);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  std::vector<double> v(values.begin(), values.end());
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  s.q1 = quantile(v, 0.25);
  s.median = quantile(v, 0.5);
  s.q3 = quantile(v, 0.75);
  return s;
}

std::vector<SectorSummary> sector_facet_summary(const std::vector<FacetScores>& facets,
                                                const std::map<std::string, std::string>& sectors) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& f : facets) {
    auto it = sectors.find(f.company_id);
    if (it == sectors.end()) throw DataError("company '" + f.company_id + "' has no sector mapping");
    groups[it->second].first.push_back(f.pc1_staff_welfare);
    groups[it->second].second.push_back(f.pc2_financial_benefits);
  }
  std::vector<SectorSummary> out;
  for (const auto& [sector, g] : groups) {
    out.push_back({sector, "pc1_staff_welfare", summarize(g.first)});
    out.push_back({sector, "pc2_financial_benefits", summarize(g.second)});
  }
  return out;
}

std::vector<std::pair<std::string, double>> rank_entities(const std::map<std::string, double>& scores) {
  std::vector<std::pair<std::string, double>> out(scores.begin(), scores.end());
  // std::map iterates ids ascending; a stable sort keeps that order on ties.
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

}  // namespace ise::stats
