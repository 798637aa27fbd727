#include "mipipe/pool.hpp"

#include <stdexcept>

namespace mipipe {

Eigen::MatrixXd DrawFit::w_matrix(Eigen::Index row) const {
  return w_diag.row(row).asDiagonal();
}

DrawFit fit_draw(const IntensityMatrix& complete, const Design& d) {
  if (!complete.complete()) {
    throw std::invalid_argument("fit_draw: matrix must be complete");
  }
  if (static_cast<Eigen::Index>(d.sample_ids.size()) != complete.cols()) {
    throw std::invalid_argument("fit_draw: design does not match matrix columns");
  }
  const Eigen::Index p = complete.rows();
  const int n = d.n_samples();
  const int k = d.n_conditions();
  if (n - k <= 0) {
    throw std::invalid_argument("fit_draw: no residual degrees of freedom (N - I = 0)");
  }

  DrawFit fit;
  fit.beta.resize(p, k);
  fit.resid_var.resize(p);
  fit.w_diag.resize(p, k);

  for (Eigen::Index i = 0; i < p; ++i) {
    for (int g = 0; g < k; ++g) fit.beta(i, g) = 0.0;
    for (int j = 0; j < n; ++j) {
      fit.beta(i, d.condition_index[static_cast<std::size_t>(j)]) += complete.values(i, j);
    }
    for (int g = 0; g < k; ++g) fit.beta(i, g) /= d.group_sizes[static_cast<std::size_t>(g)];
    double rss = 0.0;
    for (int j = 0; j < n; ++j) {
      const double r = complete.values(i, j) - fit.beta(i, d.condition_index[static_cast<std::size_t>(j)]);
      rss += r * r;
    }
    const double s2 = rss / static_cast<double>(n - k);
    fit.resid_var(i) = s2;
    for (int g = 0; g < k; ++g) {
      fit.w_diag(i, g) = s2 / d.group_sizes[static_cast<std::size_t>(g)];
    }
  }
  return fit;
}

Eigen::MatrixXd rubin_mean(const std::vector<DrawFit>& fits) {
  if (fits.empty()) throw std::invalid_argument("rubin_mean: no draws");
  Eigen::MatrixXd acc = fits[0].beta;
  for (std::size_t t = 1; t < fits.size(); ++t) {
    if (fits[t].beta.rows() != acc.rows() || fits[t].beta.cols() != acc.cols()) {
      throw std::invalid_argument("rubin_mean: draw shapes disagree");
    }
    acc += fits[t].beta;
  }
  return acc / static_cast<double>(fits.size());
}

std::vector<Eigen::MatrixXd> rubin_cov(const std::vector<DrawFit>& fits,
                                       const Eigen::MatrixXd& beta_bar) {
  const auto draws = static_cast<double>(fits.size());
  if (fits.size() < 2) throw std::invalid_argument("rubin_cov: need at least two draws");
  const Eigen::Index p = beta_bar.rows();
  const Eigen::Index k = beta_bar.cols();
  const double between_factor = (draws + 1.0) / (draws * (draws - 1.0));

  std::vector<Eigen::MatrixXd> sigma(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) {
    Eigen::MatrixXd within = Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd between = Eigen::MatrixXd::Zero(k, k);
    for (const auto& fit : fits) {
      within += fit.w_matrix(i);
      const Eigen::RowVectorXd dev = fit.beta.row(i) - beta_bar.row(i);
      between += dev.transpose() * dev;
    }
    sigma[static_cast<std::size_t>(i)] = within / draws + between_factor * between;
  }
  return sigma;
}

PooledFit pool_stack(const ImputedStack& stack, const Design& d) {
  if (stack.draw_count() < 2) {
    throw std::invalid_argument("pool_stack: need at least two draws for Rubin's rules");
  }
  std::vector<DrawFit> fits;
  fits.reserve(stack.draws.size());
  for (int t = 0; t < stack.draw_count(); ++t) {
    fits.push_back(fit_draw(stack.draw_matrix(t), d));
  }
  PooledFit pooled;
  pooled.beta = rubin_mean(fits);
  pooled.sigma = rubin_cov(fits, pooled.beta);
  pooled.df_resid = static_cast<double>(d.n_samples() - d.n_conditions());
  pooled.draw_count = stack.draw_count();
  pooled.degenerate_between = stack.draws_identical();
  return pooled;
}

}  // namespace mipipe
