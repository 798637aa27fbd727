#include <cmath>
#include <vector>

#include <doctest.h>

#include <Eigen/Dense>

#include "mipipe/pool.hpp"
#include "mipipe/rng.hpp"

using namespace mipipe;

namespace {

IntensityMatrix complete_from(const Eigen::MatrixXd& values) {
  std::vector<std::string> row_ids, col_ids;
  for (Eigen::Index i = 0; i < values.rows(); ++i) row_ids.push_back("r" + std::to_string(i));
  for (Eigen::Index j = 0; j < values.cols(); ++j) col_ids.push_back("s" + std::to_string(j));
  return make_complete_matrix(row_ids, col_ids, values);
}

Design two_groups(int per_group) {
  std::vector<std::string> samples, labels;
  for (int j = 0; j < 2 * per_group; ++j) {
    samples.push_back("s" + std::to_string(j));
    labels.push_back(j < per_group ? "a" : "b");
  }
  return Design::from_assignments(samples, labels);
}

DrawFit random_fit(RngStream& rs, int p, int k) {
  DrawFit fit;
  fit.beta.resize(p, k);
  fit.resid_var.resize(p);
  fit.w_diag.resize(p, k);
  for (int i = 0; i < p; ++i) {
    for (int g = 0; g < k; ++g) fit.beta(i, g) = rs.normal(0, 2);
    fit.resid_var(i) = rs.chi_squared(6.0) / 6.0;
    for (int g = 0; g < k; ++g) fit.w_diag(i, g) = fit.resid_var(i) / (3.0 + g);
  }
  return fit;
}

}  // namespace

TEST_SUITE_BEGIN("pool");

TEST_CASE("constant row gives constant beta and zero residual variance") {
  Eigen::MatrixXd values = Eigen::MatrixXd::Constant(1, 6, 4.25);
  const auto fit = fit_draw(complete_from(values), two_groups(3));
  CHECK(fit.beta(0, 0) == 4.25);
  CHECK(fit.beta(0, 1) == 4.25);
  CHECK(fit.resid_var(0) == 0.0);
}

TEST_CASE("hand OLS example: groups (1,3) and (5,9)") {
  Eigen::MatrixXd values(1, 4);
  values << 1.0, 3.0, 5.0, 9.0;
  const auto fit = fit_draw(complete_from(values), two_groups(2));
  CHECK(fit.beta(0, 0) == doctest::Approx(2.0));
  CHECK(fit.beta(0, 1) == doctest::Approx(7.0));
  // RSS = (1-2)^2+(3-2)^2+(5-7)^2+(9-7)^2 = 10, s^2 = 10/2 = 5.
  CHECK(fit.resid_var(0) == doctest::Approx(5.0));
  CHECK(fit.w_diag(0, 0) == doctest::Approx(2.5));
  CHECK(fit.w_diag(0, 1) == doctest::Approx(2.5));
}

TEST_CASE("fit_draw equals the generic least-squares solve") {
  RngStream rs(41);
  const Design d = two_groups(4);
  Eigen::MatrixXd values(12, 8);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 8; ++j) values(i, j) = rs.normal(5, 3);
  }
  const auto fit = fit_draw(complete_from(values), d);
  const Eigen::MatrixXd xtx_inv = (d.X.transpose() * d.X).inverse();
  for (int i = 0; i < 12; ++i) {
    const Eigen::VectorXd y = values.row(i).transpose();
    const Eigen::VectorXd beta = xtx_inv * d.X.transpose() * y;
    for (int g = 0; g < 2; ++g) {
      CHECK(std::abs(fit.beta(i, g) - beta(g)) <= 1e-10);
    }
    const double rss = (y - d.X * beta).squaredNorm();
    CHECK(std::abs(fit.resid_var(i) - rss / 6.0) <= 1e-10);
  }
}

TEST_CASE("fit_draw requires a complete matrix") {
  Eigen::MatrixXd values(1, 4);
  values << 1.0, 2.0, 3.0, 4.0;
  auto m = complete_from(values);
  m.mask(0, 1) = false;
  m.values(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_draw(m, two_groups(2)), std::invalid_argument);
}

TEST_CASE("rubin mean of identical draws is that draw") {
  RngStream rs(42);
  const DrawFit fit = random_fit(rs, 7, 2);
  const Eigen::MatrixXd mean = rubin_mean({fit, fit, fit});
  CHECK((mean - fit.beta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rubin mean of 1 and 3 is 2") {
  DrawFit a, b;
  a.beta = Eigen::MatrixXd::Constant(1, 1, 1.0);
  b.beta = Eigen::MatrixXd::Constant(1, 1, 3.0);
  a.resid_var = b.resid_var = Eigen::VectorXd::Zero(1);
  a.w_diag = b.w_diag = Eigen::MatrixXd::Zero(1, 1);
  CHECK(rubin_mean({a, b})(0, 0) == 2.0);
}

TEST_CASE("rubin mean equals brute force on random stacks") {
  RngStream rs(43);
  std::vector<DrawFit> fits;
  for (int t = 0; t < 5; ++t) fits.push_back(random_fit(rs, 9, 3));
  const Eigen::MatrixXd mean = rubin_mean(fits);
  for (int i = 0; i < 9; ++i) {
    for (int g = 0; g < 3; ++g) {
      double acc = 0.0;
      for (const auto& f : fits) acc += f.beta(i, g);
      CHECK(std::abs(mean(i, g) - acc / 5.0) <= 1e-12);
    }
  }
}

TEST_CASE("identical draws make the combined covariance the mean of W") {
  RngStream rs(44);
  const DrawFit fit = random_fit(rs, 6, 2);
  const auto sigma = rubin_cov({fit, fit, fit}, fit.beta);
  for (int i = 0; i < 6; ++i) {
    CHECK((sigma[static_cast<std::size_t>(i)] - fit.w_matrix(i)).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("two draws, scalar case: between term substitutes directly") {
  DrawFit a, b;
  a.beta = Eigen::MatrixXd::Constant(1, 1, 0.0);
  b.beta = Eigen::MatrixXd::Constant(1, 1, 2.0);
  a.resid_var = b.resid_var = Eigen::VectorXd::Zero(1);
  a.w_diag = b.w_diag = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::MatrixXd mean = rubin_mean({a, b});
  const auto sigma = rubin_cov({a, b}, mean);
  // (D+1)/(D(D-1)) * ((0-1)^2 + (2-1)^2) = (3/2) * 2 = 3.
  CHECK(sigma[0](0, 0) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("combined covariance equals an independent brute-force evaluation") {
  RngStream rs(45);
  for (int rep = 0; rep < 20; ++rep) {
    const int draws = 2 + static_cast<int>(rs.uniform_index(5));
    const int p = 4, k = 2;
    std::vector<DrawFit> fits;
    for (int t = 0; t < draws; ++t) fits.push_back(random_fit(rs, p, k));
    const Eigen::MatrixXd beta_bar = rubin_mean(fits);
    const auto sigma = rubin_cov(fits, beta_bar);
    for (int i = 0; i < p; ++i) {
      Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(k, k);
      for (const auto& f : fits) expected += f.w_matrix(i);
      expected /= static_cast<double>(draws);
      Eigen::MatrixXd between = Eigen::MatrixXd::Zero(k, k);
      for (const auto& f : fits) {
        Eigen::RowVectorXd dev = f.beta.row(i) - beta_bar.row(i);
        between += dev.transpose() * dev;
      }
      expected += (static_cast<double>(draws) + 1.0) /
                  (static_cast<double>(draws) * (static_cast<double>(draws) - 1.0)) * between;
      CHECK((sigma[static_cast<std::size_t>(i)] - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("between factor identity: (D+1)/(D(D-1)) * sum = (1+1/D) * B") {
  RngStream rs(46);
  const int draws = 6;
  std::vector<double> betas;
  for (int t = 0; t < draws; ++t) betas.push_back(rs.normal(0, 1));
  double mean = 0.0;
  for (double b : betas) mean += b;
  mean /= draws;
  double sum_sq = 0.0;
  for (double b : betas) sum_sq += (b - mean) * (b - mean);
  const double lhs = (draws + 1.0) / (draws * (draws - 1.0)) * sum_sq;
  const double sample_cov = sum_sq / (draws - 1.0);
  const double rhs = (1.0 + 1.0 / draws) * sample_cov;
  CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
}

TEST_CASE("combined covariance is symmetric positive semidefinite") {
  RngStream rs(47);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<DrawFit> fits;
    for (int t = 0; t < 4; ++t) fits.push_back(random_fit(rs, 5, 3));
    const auto sigma = rubin_cov(fits, rubin_mean(fits));
    for (const auto& s : sigma) {
      CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
      CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("pool_stack warns on identical draws and reduces to the single fit") {
  Eigen::MatrixXd values(3, 6);
  RngStream rs(48);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 6; ++j) values(i, j) = rs.normal(0, 1);
  }
  const Design d = two_groups(3);
  ImputedStack stack;
  stack.row_ids = {"r0", "r1", "r2"};
  stack.col_ids = d.sample_ids;
  stack.draws = {values, values, values};
  const auto pooled = pool_stack(stack, d);
  CHECK(pooled.degenerate_between);
  const auto single = fit_draw(complete_from(values), d);
  CHECK((pooled.beta - single.beta).cwiseAbs().maxCoeff() <= 1e-14);
  for (int i = 0; i < 3; ++i) {
    CHECK((pooled.sigma[static_cast<std::size_t>(i)] - single.w_matrix(i)).cwiseAbs().maxCoeff() <=
          1e-14);
  }
  CHECK(pooled.df_resid == 4.0);
}

TEST_CASE("rubin_cov requires at least two draws") {
  RngStream rs(49);
  const DrawFit fit = random_fit(rs, 2, 2);
  CHECK_THROWS_AS(rubin_cov({fit}, fit.beta), std::invalid_argument);
}

TEST_SUITE_END();
