#include "mipipe/moderate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mipipe/specfun.hpp"

namespace mipipe {

Eigen::VectorXd project_variance(const PooledFit& pooled, const Design& d) {
  const auto p = static_cast<Eigen::Index>(pooled.sigma.size());
  const int k = d.n_conditions();
  Eigen::VectorXd out(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto& sigma = pooled.sigma[static_cast<std::size_t>(i)];
    double best = -std::numeric_limits<double>::infinity();
    for (int g = 0; g < k; ++g) {
      best = std::max(best, sigma(g, g) * static_cast<double>(d.group_sizes[static_cast<std::size_t>(g)]));
    }
    out(i) = best;
  }
  return out;
}

EbPrior fit_eb_prior(const Eigen::VectorXd& s_sq, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("fit_eb_prior: df must be positive");
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(s_sq.size()));
  for (Eigen::Index i = 0; i < s_sq.size(); ++i) {
    const double v = s_sq(i);
    if (std::isfinite(v) && v > 0.0) logs.push_back(std::log(v));
  }
  const auto n = static_cast<double>(logs.size());
  if (logs.size() < 2) {
    throw std::runtime_error("fit_eb_prior: need at least two positive finite variances");
  }

  // Moments of e = log s^2 - digamma(df/2) + log(df/2); under the prior,
  // E[e] = log s0^2 + digamma(d0/2) - log(d0/2) and
  // Var[e] = trigamma(df/2) + trigamma(d0/2).
  const double bias = specfun::digamma(df / 2.0) - std::log(df / 2.0);
  double mean_e = 0.0;
  for (double l : logs) mean_e += l - bias;
  mean_e /= n;
  double var_e = 0.0;
  for (double l : logs) {
    const double c = l - bias - mean_e;
    var_e += c * c;
  }
  var_e /= (n - 1.0);

  EbPrior prior;
  prior.n_used = static_cast<int>(logs.size());
  const double excess = var_e - specfun::trigamma(df / 2.0);
  if (excess > 0.0) {
    prior.d0 = 2.0 * specfun::trigamma_inverse(excess);
    prior.s0_sq = std::exp(mean_e + specfun::digamma(prior.d0 / 2.0) - std::log(prior.d0 / 2.0));
  } else {
    prior.d0 = std::numeric_limits<double>::infinity();
    prior.s0_sq = std::exp(mean_e);
  }
  return prior;
}

Eigen::VectorXd moderate_variance(const Eigen::VectorXd& s_sq, double df, double d0,
                                  double s0_sq) {
  Eigen::VectorXd out(s_sq.size());
  if (std::isinf(d0)) {
    out.setConstant(s0_sq);
    return out;
  }
  for (Eigen::Index i = 0; i < s_sq.size(); ++i) {
    out(i) = (df * s_sq(i) + d0 * s0_sq) / (df + d0);
  }
  return out;
}

ModerationFit moderate_fit(const Eigen::VectorXd& s_sq, double df) {
  const EbPrior prior = fit_eb_prior(s_sq, df);
  ModerationFit fit;
  fit.d0 = prior.d0;
  fit.s0_sq = prior.s0_sq;
  fit.s_tilde_sq = moderate_variance(s_sq, df, prior.d0, prior.s0_sq);
  fit.df_total = std::isinf(prior.d0) ? kMaxModeratedDf : std::min(kMaxModeratedDf, df + prior.d0);
  return fit;
}

}  // namespace mipipe
