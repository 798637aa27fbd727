#pragma once

#include <vector>

#include "mipipe/design.hpp"
#include "mipipe/impute.hpp"
#include "mipipe/matrix.hpp"

namespace mipipe {

// Per-draw cell-means OLS fit. Under the 0/1 design, beta is the matrix of
// group means, resid_var the homoscedastic residual variance RSS/(N-I),
// and the estimator covariance W = resid_var * (X'X)^-1 is diagonal.
struct DrawFit {
  Eigen::MatrixXd beta;       // P x I
  Eigen::VectorXd resid_var;  // P
  Eigen::MatrixXd w_diag;     // P x I, diagonal of W per row

  Eigen::MatrixXd w_matrix(Eigen::Index row) const;  // I x I
};

DrawFit fit_draw(const IntensityMatrix& complete, const Design& d);

// First Rubin rule: elementwise mean of the per-draw estimates.
Eigen::MatrixXd rubin_mean(const std::vector<DrawFit>& fits);

// Second Rubin rule, combined covariance per row:
//   Sigma = (1/D) sum_d W_d
//         + (D+1)/(D(D-1)) * sum_d (beta_d - beta_bar)^T (beta_d - beta_bar)
std::vector<Eigen::MatrixXd> rubin_cov(const std::vector<DrawFit>& fits,
                                       const Eigen::MatrixXd& beta_bar);

struct PooledFit {
  Eigen::MatrixXd beta;                  // P x I combined estimates
  std::vector<Eigen::MatrixXd> sigma;    // P matrices, I x I
  double df_resid = 0.0;                 // N - I, same for every row
  int draw_count = 0;
  bool degenerate_between = false;       // all draws identical
};

PooledFit pool_stack(const ImputedStack& stack, const Design& d);

}  // namespace mipipe
