#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>

#include "mipipe/impute.hpp"

namespace mipipe {

namespace {

// One Bayesian-draw regression imputation of `target` given the other
// columns of the block (mice's "norm" step): draw sigma^2 from its scaled
// inverse-chi-square posterior, coefficients from their Gaussian
// posterior, then fill missing entries as X beta* + sigma* z.
void impute_column(Eigen::MatrixXd& block, const Mask& bmask, Eigen::Index target,
                   const std::vector<int>& predictor_order, RngStream& rs) {
  const Eigen::Index n_rows = block.rows();
  std::vector<Eigen::Index> obs_rows, mis_rows;
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    (bmask(i, target) ? obs_rows : mis_rows).push_back(i);
  }
  if (mis_rows.empty()) return;
  const auto n = static_cast<Eigen::Index>(obs_rows.size());

  // Keep predictors while n >= q + 2; drop in the given order (most
  // missing first) until the model is estimable, else intercept only.
  std::vector<int> predictors(predictor_order);
  while (!predictors.empty() && n < static_cast<Eigen::Index>(predictors.size()) + 1 + 2) {
    predictors.erase(predictors.begin());
  }
  const auto q = static_cast<Eigen::Index>(predictors.size()) + 1;

  auto build_design = [&](const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), q);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      x(static_cast<Eigen::Index>(r), 0) = 1.0;
      for (std::size_t c = 0; c < predictors.size(); ++c) {
        x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c) + 1) =
            block(rows[r], predictors[c]);
      }
    }
    return x;
  };

  const Eigen::MatrixXd x_obs = build_design(obs_rows);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) y(r) = block(obs_rows[static_cast<std::size_t>(r)], target);

  Eigen::MatrixXd xtx = x_obs.transpose() * x_obs;
  xtx.diagonal().array() += 1e-8 * (1.0 + xtx.trace() / static_cast<double>(q));
  const Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("norm engine: singular regression system");
  }
  const Eigen::VectorXd beta_hat = llt.solve(x_obs.transpose() * y);
  const double rss = (y - x_obs * beta_hat).squaredNorm();
  const double df = std::max<double>(1.0, static_cast<double>(n - q));

  const double sigma_sq = rss > 0.0 ? rss / rs.chi_squared(df) : 1e-12;
  const double sigma = std::sqrt(sigma_sq);

  // beta* = beta_hat + sigma * R^-1 z with R the upper Cholesky of X'X.
  Eigen::VectorXd z(q);
  for (Eigen::Index c = 0; c < q; ++c) z(c) = rs.normal();
  const Eigen::MatrixXd upper = llt.matrixU();
  const Eigen::VectorXd beta_star =
      beta_hat + sigma * upper.triangularView<Eigen::Upper>().solve(z);

  const Eigen::MatrixXd x_mis = build_design(mis_rows);
  for (std::size_t r = 0; r < mis_rows.size(); ++r) {
    block(mis_rows[r], target) =
        x_mis.row(static_cast<Eigen::Index>(r)).dot(beta_star) + sigma * rs.normal();
  }
}

}  // namespace

Eigen::MatrixXd engine_norm(const IntensityMatrix& m, const Design& d, const EngineConfig& cfg,
                            RngStream stream) {
  if (static_cast<Eigen::Index>(d.sample_ids.size()) != m.cols()) {
    throw std::invalid_argument("norm engine: design does not match matrix columns");
  }
  Eigen::MatrixXd out = m.values;

  for (int g = 0; g < d.n_conditions(); ++g) {
    const std::vector<int> cols = d.samples_of(g);
    const auto qk = static_cast<Eigen::Index>(cols.size());

    Eigen::MatrixXd block(m.rows(), qk);
    Mask bmask(m.rows(), qk);
    std::vector<int> missing_count(static_cast<std::size_t>(qk), 0);
    std::vector<std::vector<double>> observed_values(static_cast<std::size_t>(qk));
    bool any_missing = false;
    for (Eigen::Index c = 0; c < qk; ++c) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        block(i, c) = m.values(i, cols[static_cast<std::size_t>(c)]);
        bmask(i, c) = m.mask(i, cols[static_cast<std::size_t>(c)]);
        if (bmask(i, c)) {
          observed_values[static_cast<std::size_t>(c)].push_back(block(i, c));
        } else {
          ++missing_count[static_cast<std::size_t>(c)];
          any_missing = true;
        }
      }
      if (observed_values[static_cast<std::size_t>(c)].empty()) {
        throw std::runtime_error("norm engine: column '" +
                                 d.sample_ids[static_cast<std::size_t>(cols[static_cast<std::size_t>(c)])] +
                                 "' has no observed entries");
      }
    }
    if (!any_missing) continue;

    RngStream cond_stream = stream.derive(static_cast<std::uint64_t>(g));

    // Start from random draws out of each column's observed values.
    for (Eigen::Index c = 0; c < qk; ++c) {
      const auto& pool = observed_values[static_cast<std::size_t>(c)];
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (!bmask(i, c)) block(i, c) = pool[cond_stream.uniform_index(pool.size())];
      }
    }

    for (int cycle = 0; cycle < cfg.max_iter; ++cycle) {
      for (Eigen::Index target = 0; target < qk; ++target) {
        if (missing_count[static_cast<std::size_t>(target)] == 0) continue;
        std::vector<int> predictor_order;
        for (Eigen::Index c = 0; c < qk; ++c) {
          if (c != target) predictor_order.push_back(static_cast<int>(c));
        }
        // Most-missing predictors first so they are dropped first.
        std::stable_sort(predictor_order.begin(), predictor_order.end(), [&](int a, int b) {
          return missing_count[static_cast<std::size_t>(a)] > missing_count[static_cast<std::size_t>(b)];
        });
        impute_column(block, bmask, target, predictor_order, cond_stream);
      }
    }

    for (Eigen::Index c = 0; c < qk; ++c) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (!bmask(i, c)) out(i, cols[static_cast<std::size_t>(c)]) = block(i, c);
      }
    }
  }
  return out;
}

}  // namespace mipipe
