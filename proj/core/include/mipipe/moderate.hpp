#pragma once

#include <Eigen/Dense>

#include "mipipe/design.hpp"
#include "mipipe/pool.hpp"

namespace mipipe {

// Scalar variance from the combined covariance: the k-th diagonal of
// Sigma paired with the k-th diagonal of X'X, maximum over k. For a pure
// OLS covariance sigma^2 (X'X)^-1 this recovers sigma^2 exactly.
Eigen::VectorXd project_variance(const PooledFit& pooled, const Design& d);

struct EbPrior {
  double d0 = 0.0;      // prior degrees of freedom, may be +infinity
  double s0_sq = 0.0;   // prior variance
  int n_used = 0;       // rows that entered the moment fit
};

// Moment-method fit of the scaled-inverse-chi-square variance prior on the
// log scale (Smyth 2004). Rows with non-positive or non-finite variances
// are excluded; fewer than two usable rows is an error. When the observed
// log-variance dispersion does not exceed trigamma(df/2) the prior is
// degenerate: d0 = +infinity and s0^2 = exp(mean(log s^2) - digamma(df/2)
// + log(df/2)).
EbPrior fit_eb_prior(const Eigen::VectorXd& s_sq, double df);

// Posterior-mean shrinkage: (df * s^2 + d0 * s0^2) / (df + d0).
Eigen::VectorXd moderate_variance(const Eigen::VectorXd& s_sq, double df, double d0, double s0_sq);

struct ModerationFit {
  double d0 = 0.0;
  double s0_sq = 0.0;
  Eigen::VectorXd s_tilde_sq;  // length P
  double df_total = 0.0;       // df + d0, capped at 1e6 when d0 infinite
};

ModerationFit moderate_fit(const Eigen::VectorXd& s_sq, double df);

inline constexpr double kMaxModeratedDf = 1e6;

}  // namespace mipipe
