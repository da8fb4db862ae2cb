#pragma once

// Independent reference implementations used only by tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline double nearest_rank(std::vector<double> v, double percentile) {
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(v.size()) / 100.0));
  return v[std::max<std::size_t>(rank, 1) - 1];
}

// Cyclic Jacobi rotations on a symmetric matrix; eigenvalues descending.
inline std::vector<double> jacobi_eigenvalues(Matrix a, double tol = 1e-15, int max_sweeps = 100) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < tol * tol) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

// Pearson correlation matrix of the columns of x (rows = observations).
inline Matrix correlation_matrix(const Matrix& x) {
  const std::size_t n = x.size();
  const std::size_t m = x[0].size();
  std::vector<double> mean(m, 0.0);
  std::vector<double> sd(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) mean[j] += x[i][j];
    mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) sd[j] += (x[i][j] - mean[j]) * (x[i][j] - mean[j]);
    sd[j] = std::sqrt(sd[j] / static_cast<double>(n - 1));
  }
  Matrix c(m, std::vector<double>(m, 0.0));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (x[i][a] - mean[a]) * (x[i][b] - mean[b]);
      c[a][b] = s / static_cast<double>(n - 1) / (sd[a] * sd[b]);
    }
  return c;
}

// Least squares by normal equations and Gauss-Jordan with partial pivoting.
// Returns the residual sum of squares.
inline double ols_rss(const std::vector<double>& y, const Matrix& cols, bool intercept = true) {
  const std::size_t n = y.size();
  Matrix design;
  if (intercept) design.push_back(std::vector<double>(n, 1.0));
  for (const auto& c : cols) design.push_back(c);
  const std::size_t k = design.size();
  Matrix a(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t r = 0; r < n; ++r) a[i][j] += design[i][r] * design[j][r];
    for (std::size_t r = 0; r < n; ++r) a[i][k] += design[i][r] * y[r];
  }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    if (std::abs(a[col][col]) < 1e-12) throw std::runtime_error("singular design");
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= k; ++c) a[r][c] -= f * a[col][c];
    }
  }
  double rss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double fit = 0.0;
    for (std::size_t i = 0; i < k; ++i) fit += design[i][r] * a[i][k] / a[i][i];
    rss += (y[r] - fit) * (y[r] - fit);
  }
  return rss;
}

inline double aic(double rss, std::size_t n, std::size_t k) {
  return static_cast<double>(n) * std::log(rss / static_cast<double>(n)) + 2.0 * static_cast<double>(k);
}

struct SubsetChoice {
  unsigned mask = 0;
  double aic = 0.0;
};

// Minimum-AIC predictor subset over all 2^m subsets, intercept always in.
inline SubsetChoice best_subset(const std::vector<double>& y, const Matrix& cols) {
  SubsetChoice best{0, INFINITY};
  for (unsigned mask = 0; mask < (1u << cols.size()); ++mask) {
    Matrix chosen;
    for (std::size_t j = 0; j < cols.size(); ++j)
      if (mask & (1u << j)) chosen.push_back(cols[j]);
    const double a = aic(ols_rss(y, chosen), y.size(), chosen.size() + 1);
    if (a < best.aic) best = {mask, a};
  }
  return best;
}

inline double overlap_at(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b, std::size_t d) {
  std::set<std::uint32_t> sa(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(d));
  std::size_t common = 0;
  for (std::size_t i = 0; i < d; ++i) common += sa.count(b[i]);
  return static_cast<double>(common);
}

// (1-p) * sum_{d=1..k} p^(d-1) |A_d n B_d| / d
inline double rbo_finite(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b, double p) {
  const std::size_t k = std::min(a.size(), b.size());
  double s = 0.0;
  for (std::size_t d = 1; d <= k; ++d) s += std::pow(p, static_cast<double>(d - 1)) * overlap_at(a, b, d) / static_cast<double>(d);
  return (1.0 - p) * s;
}

// (X_k/k) p^k + (1-p)/p * sum_{d=1..k} (X_d/d) p^d
inline double rbo_extrapolated(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b, double p) {
  const std::size_t k = std::min(a.size(), b.size());
  if (k == 0) return 0.0;
  double s = 0.0;
  for (std::size_t d = 1; d <= k; ++d) s += overlap_at(a, b, d) / static_cast<double>(d) * std::pow(p, static_cast<double>(d));
  return overlap_at(a, b, k) / static_cast<double>(k) * std::pow(p, static_cast<double>(k)) + (1.0 - p) / p * s;
}

// Fleiss' kappa straight from the textbook definition.
inline double fleiss(const std::vector<std::vector<std::size_t>>& counts) {
  const double items = static_cast<double>(counts.size());
  double n = 0.0;
  for (auto c : counts[0]) n += static_cast<double>(c);
  const std::size_t cats = counts[0].size();
  double p_bar = 0.0;
  std::vector<double> pj(cats, 0.0);
  for (const auto& row : counts) {
    double sq = 0.0;
    for (std::size_t j = 0; j < cats; ++j) {
      sq += static_cast<double>(row[j] * row[j]);
      pj[j] += static_cast<double>(row[j]);
    }
    p_bar += (sq - n) / (n * (n - 1.0));
  }
  p_bar /= items;
  double pe = 0.0;
  for (double v : pj) pe += (v / (items * n)) * (v / (items * n));
  return (p_bar - pe) / (1.0 - pe);
}

}  // namespace oracle
