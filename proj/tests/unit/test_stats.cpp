#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "ise/error.hpp"
#include "ise/stats.hpp"
#include "oracles.hpp"

using namespace ise;
using namespace ise::stats;

TEST_CASE("incomplete beta and p-values agree with Boost") {
  for (double a : {0.5, 1.0, 2.5, 10.0}) {
    for (double b : {0.5, 3.0, 7.5}) {
      for (double x : {0.01, 0.3, 0.5, 0.77, 0.99}) {
        CHECK(incomplete_beta(a, b, x) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-10));
      }
    }
  }
  for (double df : {1.0, 3.0, 10.0, 57.0}) {
    boost::math::students_t dist(df);
    for (double t : {0.0, 0.4, 1.96, -2.5, 8.0}) {
      const double expect = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
      CHECK(student_t_two_sided_p(t, df) == doctest::Approx(expect).epsilon(1e-10));
    }
  }
  for (double d1 : {1.0, 2.0, 5.0}) {
    for (double d2 : {3.0, 20.0}) {
      boost::math::fisher_f dist(d1, d2);
      for (double f : {0.2, 1.0, 4.5}) {
        CHECK(f_upper_p(f, d1, d2) ==
              doctest::Approx(boost::math::cdf(boost::math::complement(dist, f))).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("pearson examples") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(pearson(x, std::vector<double>{2, 4, 6, 8}).r == doctest::Approx(1.0));
  CHECK(pearson(x, std::vector<double>{-1, -2, -3, -4}).r == doctest::Approx(-1.0));
  const auto c = pearson(x, std::vector<double>{1, 3, 2, 4});
  CHECK(c.r == doctest::Approx(0.8).epsilon(1e-12));
  const double t = 0.8 * std::sqrt(2.0 / (1 - 0.64));
  boost::math::students_t dist(2.0);
  CHECK(c.p_value == doctest::Approx(2 * boost::math::cdf(boost::math::complement(dist, t))).epsilon(1e-10));
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 1, 1, 1}), DataError);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("spearman examples") {
  std::vector<double> a{0.3, 1.2, -2.0, 4.4, 2.1};
  std::vector<double> cubed, rev(a);
  for (double v : a) cubed.push_back(v * v * v);
  CHECK(spearman(a, cubed).r == doctest::Approx(1.0));
  std::sort(rev.begin(), rev.end());
  std::vector<double> sorted = rev;
  std::reverse(rev.begin(), rev.end());
  CHECK(spearman(sorted, rev).r == doctest::Approx(-1.0));
  CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}).r == doctest::Approx(0.5));
  CHECK(average_ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});
}

TEST_CASE("pearson matrix is affine invariant") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  NamedColumn a{"a", {}}, b{"b", {}};
  for (int i = 0; i < 40; ++i) {
    a.values.push_back(z(rng));
    b.values.push_back(3.0 * a.values.back() + 7.0);
  }
  auto m = pearson_matrix({a, b});
  CHECK(std::abs(m.cells[0][1]->r - 1.0) < 1e-12);
}

TEST_CASE("pca on points along a line") {
  Eigen::MatrixXd x(5, 2);
  x << 1, 1, 2, 2, 3, 3, 4, 4, 5, 5;
  auto r = pca(x, 1);
  CHECK(std::abs(r.explained_variance_ratio(0) - 1.0) < 1e-9);
}

TEST_CASE("pca matches a Jacobi eigen oracle and keeps its invariants") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd x(10, 6);
    oracle::Matrix rows(10, std::vector<double>(6));
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 6; ++j) rows[i][j] = x(i, j) = z(rng) * (1 + j);
    auto r = pca(x, 6);
    auto ev = oracle::jacobi_eigenvalues(oracle::correlation_matrix(rows));
    const double total = std::accumulate(ev.begin(), ev.end(), 0.0);
    for (int c = 0; c < 6; ++c) CHECK(std::abs(r.explained_variance_ratio(c) - ev[c] / total) < 1e-8);
    CHECK(std::abs(r.explained_variance_ratio.sum() - 1.0) < 1e-9);
    for (int c = 1; c < 6; ++c) CHECK(r.explained_variance_ratio(c) <= r.explained_variance_ratio(c - 1));
    const Eigen::MatrixXd gram = r.loadings.transpose() * r.loadings;
    CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(r.scores.colwise().mean().cwiseAbs().maxCoeff() < 1e-9);
    for (int c = 0; c < 6; ++c) {
      Eigen::Index arg;
      r.loadings.col(c).cwiseAbs().maxCoeff(&arg);
      CHECK(r.loadings(arg, c) > 0);
    }
  }
}

TEST_CASE("pca input errors") {
  Eigen::MatrixXd one(1, 3);
  one << 1, 2, 3;
  CHECK_THROWS_AS(pca(one, 1), DataError);
  Eigen::MatrixXd flat(3, 2);
  flat << 1, 5, 2, 5, 3, 5;
  CHECK_THROWS_AS(pca(flat, 1), DataError);
  CHECK_NOTHROW(pca(flat, 1, PcaMode::kCovariance));
}

TEST_CASE("ols exact and constant fits") {
  NamedColumn x{"x", {1, 2, 3, 4, 5, 6}};
  std::vector<double> y;
  for (double v : x.values) y.push_back(2 * v + 3);
  auto f = ols_fit(y, {x});
  CHECK(std::abs(f.coefficients[0] - 3) < 1e-8);
  CHECK(std::abs(f.coefficients[1] - 2) < 1e-8);
  CHECK(f.r2 == doctest::Approx(1.0));
  std::vector<double> flat(6, 4.0);
  auto g = ols_fit(flat, {x});
  CHECK(std::abs(g.coefficients[1]) < 1e-12);
  CHECK(g.coefficients[0] == doctest::Approx(4.0));
}

TEST_CASE("planted regression recovered within three standard errors") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z;
  NamedColumn x1{"x1", {}}, x2{"x2", {}};
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) {
    x1.values.push_back(z(rng));
    x2.values.push_back(z(rng));
    y.push_back(1 + 0.5 * x1.values.back() - 2 * x2.values.back() + 0.01 * z(rng));
  }
  auto f = ols_fit(y, {x1, x2});
  const double truth[] = {1, 0.5, -2};
  for (int i = 0; i < 3; ++i) CHECK(std::abs(f.coefficients[i] - truth[i]) < 3 * f.std_errors[i]);
  CHECK(f.adj_r2 <= f.r2);
  CHECK(f.coefficients.size() == f.std_errors.size());
  CHECK(f.t_stats.size() == f.p_values.size());
  // Residuals are orthogonal to every design column.
  double dot0 = 0, dot1 = 0, dot2 = 0;
  for (int i = 0; i < 200; ++i) {
    dot0 += f.residuals[i];
    dot1 += f.residuals[i] * x1.values[i];
    dot2 += f.residuals[i] * x2.values[i];
  }
  CHECK(std::abs(dot0) < 1e-8);
  CHECK(std::abs(dot1) < 1e-8);
  CHECK(std::abs(dot2) < 1e-8);
  CHECK(f.aic == doctest::Approx(oracle::aic(f.rss, 200, 3)));
  CHECK(f.rss == doctest::Approx(oracle::ols_rss(y, {x1.values, x2.values})).epsilon(1e-9));
}

TEST_CASE("rank deficient design is rejected") {
  NamedColumn a{"a", {1, 2, 3, 4, 5}}, b{"b", {2, 4, 6, 8, 10}};
  CHECK_THROWS_AS(ols_fit(std::vector<double>{1, 2, 2, 3, 5}, {a, b}), DataError);
}

TEST_CASE("stepwise AIC against exhaustive subsets") {
  std::mt19937_64 rng(78);
  std::normal_distribution<double> z;
  const std::size_t n = 60;
  NamedColumn truth{"truth", {}}, noise{"noise", {}}, other{"other", {}};
  std::vector<double> y;
  for (std::size_t i = 0; i < n; ++i) {
    truth.values.push_back(z(rng));
    noise.values.push_back(z(rng));
    other.values.push_back(z(rng));
    y.push_back(2 + 1.5 * truth.values.back() + 0.2 * z(rng));
  }
  auto best = oracle::best_subset(y, {truth.values, noise.values});
  REQUIRE(best.mask == 1u);
  auto s = step_aic(y, {truth, noise});
  CHECK(s.model.terms == std::vector<std::string>{"const", "truth"});
  CHECK(s.model.aic == doctest::Approx(best.aic).epsilon(1e-12));

  std::vector<double> strong;
  for (std::size_t i = 0; i < n; ++i) strong.push_back(truth.values[i] - 2 * noise.values[i] + 3 * other.values[i] + 0.1 * z(rng));
  for (auto dir : {StepDirection::kBoth, StepDirection::kBackward, StepDirection::kForward}) {
    auto full = step_aic(strong, {truth, noise, other}, dir);
    CHECK(full.model.terms.size() == 4);
  }

  auto none = step_aic(y, {});
  CHECK(none.model.terms == std::vector<std::string>{"const"});
}

TEST_CASE("stepwise path strictly improves AIC") {
  std::mt19937_64 rng(91);
  std::normal_distribution<double> z;
  for (int t = 0; t < 20; ++t) {
    std::vector<NamedColumn> x;
    for (int j = 0; j < 4; ++j) x.push_back({"x" + std::to_string(j), {}});
    std::vector<double> y;
    for (int i = 0; i < 30; ++i) {
      double v = z(rng);
      for (int j = 0; j < 4; ++j) {
        x[j].values.push_back(z(rng));
        v += (j % 2 ? 0.0 : 0.8) * x[j].values.back();
      }
      y.push_back(v);
    }
    auto s = step_aic(y, x, StepDirection::kBoth);
    for (std::size_t k = 1; k < s.path.size(); ++k) CHECK(s.path[k].aic < s.path[k - 1].aic);
    CHECK(s.model.aic <= ols_fit(y, x).aic + 1e-12);
  }
}

TEST_CASE("fleiss kappa") {
  CHECK(fleiss_kappa({{3, 0}, {0, 3}, {3, 0}}) == 1.0);
  // P_bar == P_e: every item split the same way as the marginals.
  CHECK(fleiss_kappa({{1, 1}, {1, 1}, {2, 0}, {0, 2}}) == doctest::Approx(oracle::fleiss({{1, 1}, {1, 1}, {2, 0}, {0, 2}})));
  const std::vector<std::vector<std::size_t>> m = {{1, 1, 1}, {3, 0, 0}, {0, 2, 1}, {1, 0, 2}, {0, 3, 0}};
  CHECK(std::abs(fleiss_kappa(m) - oracle::fleiss(m)) < 1e-12);
  CHECK_THROWS_AS(fleiss_kappa({{2, 1}, {1, 1}}), DataError);
}

TEST_CASE("geometric mean") {
  CHECK(geometric_mean(std::vector<double>{2, 8}) == 4.0);
  CHECK(geometric_mean(std::vector<double>{1.7, 1.7, 1.7}) == doctest::Approx(1.7).epsilon(1e-15));
  // Independent oracle: cube root of the product.
  CHECK(geometric_mean(std::vector<double>{1.1, 0.9, 1.2}) ==
        doctest::Approx(std::pow(1.1 * 0.9 * 1.2, 1.0 / 3.0)).epsilon(1e-14));
  CHECK_THROWS_AS(geometric_mean(std::vector<double>{1, 0}), DataError);
  CHECK_THROWS_AS(geometric_mean(std::vector<double>{}), DataError);
}

TEST_CASE("stock growth bins") {
  std::map<std::string, double> growth{{"a", 2}, {"b", 8}, {"c", 1}, {"d", 1}, {"e", 3}};
  auto four = stock_growth_bins({"a", "b", "c", "d"}, growth, 2);
  REQUIRE(four.bins.size() == 2);
  CHECK(four.bins[0].companies == std::vector<std::string>{"a", "b"});
  CHECK(four.bins[0].geometric_mean == 4.0);
  CHECK(four.bins[1].geometric_mean == 1.0);
  auto five = stock_growth_bins({"a", "b", "c", "d", "e"}, growth, 2);
  CHECK(five.bins[0].companies.size() == 3);
  CHECK(five.bins[1].companies.size() == 2);
  auto missing = stock_growth_bins({"a", "zz", "b"}, growth, 1);
  CHECK(missing.excluded == std::vector<std::string>{"zz"});
  CHECK(missing.bins[0].companies.size() == 2);
}

TEST_CASE("sector summaries") {
  std::vector<FacetScores> f = {{"a", 1, 0}, {"b", 2, 0}, {"c", 3, 0}, {"d", 7, 1}};
  auto s = sector_facet_summary(f, {{"a", "x"}, {"b", "x"}, {"c", "x"}, {"d", "y"}});
  const auto& x = s[0].summary;
  CHECK(s[0].sector == "x");
  CHECK(x.mean == 2.0);
  CHECK(x.median == 2.0);
  const auto& y = s[2].summary;
  CHECK(s[2].sector == "y");
  CHECK(y.q1 == 7.0);
  CHECK(y.q3 == 7.0);
  CHECK_FALSE(y.stddev.has_value());
  CHECK_THROWS_AS(sector_facet_summary(f, {{"a", "x"}}), DataError);
}

TEST_CASE("ranking entities") {
  auto r = rank_entities({{"a", 0.2}, {"b", 0.5}});
  CHECK(r[0].first == "b");
  auto tie = rank_entities({{"z", 1}, {"m", 1}, {"a", 1}});
  CHECK(tie[0].first == "a");
  CHECK(tie[2].first == "z");
  CHECK(rank_entities({}).empty());
}

TEST_CASE("ranking is a permutation with a scale invariant argmax") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 1);
  for (int t = 0; t < 100; ++t) {
    std::map<std::string, double> s, scaled;
    for (int i = 0; i < 8; ++i) {
      const double v = u(rng);
      s["e" + std::to_string(i)] = v;
      scaled["e" + std::to_string(i)] = 3.7 * v;
    }
    auto r = rank_entities(s);
    CHECK(r.size() == s.size());
    std::set<std::string> keys;
    for (const auto& [k, v] : r) keys.insert(k);
    CHECK(keys.size() == s.size());
    CHECK(r[0].first == rank_entities(scaled)[0].first);
  }
}
