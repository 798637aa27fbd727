#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>

#include "mipipe/impute.hpp"

namespace mipipe {

namespace {

constexpr double kRidgeScale = 1e-6;

// Cholesky with the ridge fallback 1e-6 * trace/dim on the diagonal.
Eigen::LLT<Eigen::MatrixXd> llt_with_ridge(Eigen::MatrixXd a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  const double dim = static_cast<double>(a.rows());
  double ridge = kRidgeScale * a.trace() / dim;
  if (!(ridge > 0.0)) ridge = kRidgeScale;
  for (int tries = 0; tries < 8; ++tries) {
    a.diagonal().array() += ridge;
    llt.compute(a);
    if (llt.info() == Eigen::Success) return llt;
    ridge *= 10.0;
  }
  throw std::runtime_error("mle engine: covariance not positive definite even after ridge");
}

struct Pattern {
  std::vector<int> obs;
  std::vector<int> mis;
  std::vector<Eigen::Index> rows;
};

std::vector<Pattern> group_patterns(const Mask& mask) {
  std::map<std::vector<char>, std::size_t> index;
  std::vector<Pattern> patterns;
  const Eigen::Index p = mask.rows();
  const Eigen::Index q = mask.cols();
  std::vector<char> key(static_cast<std::size_t>(q));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) key[static_cast<std::size_t>(j)] = mask(i, j) ? 1 : 0;
    auto it = index.find(key);
    if (it == index.end()) {
      Pattern pat;
      for (Eigen::Index j = 0; j < q; ++j) {
        (mask(i, j) ? pat.obs : pat.mis).push_back(static_cast<int>(j));
      }
      it = index.emplace(key, patterns.size()).first;
      patterns.push_back(std::move(pat));
    }
    patterns[it->second].rows.push_back(i);
  }
  return patterns;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t t = 0; t < idx.size(); ++t) out(static_cast<Eigen::Index>(t)) = v(idx[t]);
  return out;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& m, const std::vector<int>& ri,
                       const std::vector<int>& ci) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ri.size()), static_cast<Eigen::Index>(ci.size()));
  for (std::size_t r = 0; r < ri.size(); ++r) {
    for (std::size_t c = 0; c < ci.size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(ri[r], ci[c]);
    }
  }
  return out;
}

}  // namespace

MvnEmFit fit_mvn_em(const Eigen::MatrixXd& data, const Mask& mask, int max_iter, double tol) {
  const Eigen::Index n = data.rows();
  const Eigen::Index q = data.cols();
  if (n < 2) throw std::invalid_argument("fit_mvn_em: need at least two observations");

  MvnEmFit fit;
  fit.mean.resize(q);
  fit.cov = Eigen::MatrixXd::Zero(q, q);

  // Moment start: observed column means, diagonal observed variances.
  for (Eigen::Index j = 0; j < q; ++j) {
    double s = 0.0, ss = 0.0;
    int cnt = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mask(i, j)) {
        s += data(i, j);
        ss += data(i, j) * data(i, j);
        ++cnt;
      }
    }
    if (cnt == 0) throw std::runtime_error("fit_mvn_em: a column has no observed entries");
    const double mu = s / cnt;
    double var = ss / cnt - mu * mu;
    if (!(var > 0.0)) var = 1e-8;
    fit.mean(j) = mu;
    fit.cov(j, j) = var;
  }

  const auto patterns = group_patterns(mask);
  bool any_missing = false;
  for (const auto& pat : patterns) {
    if (!pat.mis.empty()) any_missing = true;
  }

  Eigen::VectorXd s1(q);
  Eigen::MatrixXd s2(q, q);
  Eigen::VectorXd xhat(q);

  for (int iter = 0; iter < max_iter; ++iter) {
    s1.setZero();
    s2.setZero();
    double loglik = 0.0;

    for (const auto& pat : patterns) {
      const auto qo = static_cast<Eigen::Index>(pat.obs.size());
      const auto qm = static_cast<Eigen::Index>(pat.mis.size());
      const Eigen::VectorXd mu_o = gather(fit.mean, pat.obs);
      const Eigen::VectorXd mu_m = gather(fit.mean, pat.mis);
      Eigen::MatrixXd cond_cov;
      Eigen::MatrixXd beta;  // Sigma_oo^-1 Sigma_om
      Eigen::LLT<Eigen::MatrixXd> llt_oo;
      double logdet_oo = 0.0;
      if (qo > 0) {
        const Eigen::MatrixXd sig_oo = gather(fit.cov, pat.obs, pat.obs);
        llt_oo = llt_with_ridge(sig_oo);
        for (Eigen::Index t = 0; t < qo; ++t) logdet_oo += 2.0 * std::log(llt_oo.matrixL()(t, t));
        if (qm > 0) {
          const Eigen::MatrixXd sig_om = gather(fit.cov, pat.obs, pat.mis);
          beta = llt_oo.solve(sig_om);
          cond_cov = gather(fit.cov, pat.mis, pat.mis) - sig_om.transpose() * beta;
        }
      } else {
        cond_cov = gather(fit.cov, pat.mis, pat.mis);
      }

      for (const Eigen::Index i : pat.rows) {
        Eigen::VectorXd y_o(qo);
        for (std::size_t t = 0; t < pat.obs.size(); ++t) {
          y_o(static_cast<Eigen::Index>(t)) = data(i, pat.obs[t]);
        }
        Eigen::VectorXd cond_mean;
        if (qm > 0) {
          cond_mean = qo > 0 ? (mu_m + beta.transpose() * (y_o - mu_o)).eval() : mu_m;
        }
        for (std::size_t t = 0; t < pat.obs.size(); ++t) xhat(pat.obs[t]) = y_o(static_cast<Eigen::Index>(t));
        for (std::size_t t = 0; t < pat.mis.size(); ++t) xhat(pat.mis[t]) = cond_mean(static_cast<Eigen::Index>(t));
        s1 += xhat;
        s2 += xhat * xhat.transpose();
        if (qm > 0) {
          for (std::size_t r = 0; r < pat.mis.size(); ++r) {
            for (std::size_t c = 0; c < pat.mis.size(); ++c) {
              s2(pat.mis[r], pat.mis[c]) += cond_cov(static_cast<Eigen::Index>(r),
                                                     static_cast<Eigen::Index>(c));
            }
          }
        }
        if (qo > 0) {
          const Eigen::VectorXd centered = y_o - mu_o;
          loglik += -0.5 * (static_cast<double>(qo) * std::log(2.0 * M_PI) + logdet_oo +
                            centered.dot(llt_oo.solve(centered)));
        }
      }
    }

    if (!fit.loglik.empty()) {
      const double prev = fit.loglik.back();
      if (loglik < prev - 1e-8 * (1.0 + std::abs(prev))) {
        throw std::runtime_error("fit_mvn_em: observed log-likelihood decreased (EM diverged)");
      }
    }
    fit.loglik.push_back(loglik);

    const Eigen::VectorXd new_mean = s1 / static_cast<double>(n);
    Eigen::MatrixXd new_cov = s2 / static_cast<double>(n) - new_mean * new_mean.transpose();
    new_cov = 0.5 * (new_cov + new_cov.transpose()).eval();

    double change = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      change = std::max(change, std::abs(new_mean(j) - fit.mean(j)) / (1.0 + std::abs(fit.mean(j))));
      for (Eigen::Index l = 0; l < q; ++l) {
        change = std::max(change, std::abs(new_cov(j, l) - fit.cov(j, l)) / (1.0 + std::abs(fit.cov(j, l))));
      }
    }
    if (!new_mean.allFinite() || !new_cov.allFinite()) {
      throw std::runtime_error("fit_mvn_em: parameters diverged to non-finite values");
    }
    fit.mean = new_mean;
    fit.cov = new_cov;
    fit.iterations = iter + 1;
    if (change < tol || !any_missing) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

Eigen::MatrixXd engine_mle(const IntensityMatrix& m, const Design& d, const EngineConfig& cfg,
                           RngStream stream) {
  if (static_cast<Eigen::Index>(d.sample_ids.size()) != m.cols()) {
    throw std::invalid_argument("mle engine: design does not match matrix columns");
  }
  Eigen::MatrixXd out = m.values;

  for (int g = 0; g < d.n_conditions(); ++g) {
    const std::vector<int> cols = d.samples_of(g);
    const auto qk = static_cast<Eigen::Index>(cols.size());

    Eigen::MatrixXd block(m.rows(), qk);
    Mask bmask(m.rows(), qk);
    bool any_missing = false;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index c = 0; c < qk; ++c) {
        block(i, c) = m.values(i, cols[static_cast<std::size_t>(c)]);
        bmask(i, c) = m.mask(i, cols[static_cast<std::size_t>(c)]);
        if (!bmask(i, c)) any_missing = true;
      }
    }
    if (!any_missing) continue;

    const MvnEmFit fit = fit_mvn_em(block, bmask, cfg.max_iter, cfg.tol);
    const RngStream cond_stream = stream.derive(static_cast<std::uint64_t>(g));

    // Per-pattern conditional moments at the fitted parameters.
    for (const auto& pat : group_patterns(bmask)) {
      if (pat.mis.empty()) continue;
      const auto qo = static_cast<Eigen::Index>(pat.obs.size());
      const auto qm = static_cast<Eigen::Index>(pat.mis.size());
      const Eigen::VectorXd mu_o = gather(fit.mean, pat.obs);
      const Eigen::VectorXd mu_m = gather(fit.mean, pat.mis);
      Eigen::MatrixXd beta;
      Eigen::MatrixXd cond_cov;
      if (qo > 0) {
        const Eigen::MatrixXd sig_om = gather(fit.cov, pat.obs, pat.mis);
        const auto llt_oo = llt_with_ridge(gather(fit.cov, pat.obs, pat.obs));
        beta = llt_oo.solve(sig_om);
        cond_cov = gather(fit.cov, pat.mis, pat.mis) - sig_om.transpose() * beta;
      } else {
        cond_cov = gather(fit.cov, pat.mis, pat.mis);
      }
      cond_cov = 0.5 * (cond_cov + cond_cov.transpose()).eval();
      Eigen::MatrixXd chol;
      if (!cfg.mle_deterministic) {
        chol = llt_with_ridge(cond_cov).matrixL();
      }

      for (const Eigen::Index i : pat.rows) {
        Eigen::VectorXd y_o(qo);
        for (std::size_t t = 0; t < pat.obs.size(); ++t) {
          y_o(static_cast<Eigen::Index>(t)) = block(i, pat.obs[t]);
        }
        Eigen::VectorXd fill = qo > 0 ? (mu_m + beta.transpose() * (y_o - mu_o)).eval() : mu_m;
        if (!cfg.mle_deterministic) {
          RngStream row_stream = cond_stream.derive(static_cast<std::uint64_t>(i));
          Eigen::VectorXd z(qm);
          for (Eigen::Index t = 0; t < qm; ++t) z(t) = row_stream.normal();
          fill += chol * z;
        }
        for (std::size_t t = 0; t < pat.mis.size(); ++t) {
          out(i, cols[static_cast<std::size_t>(pat.mis[t])]) = fill(static_cast<Eigen::Index>(t));
        }
      }
    }
  }
  return out;
}

}  // namespace mipipe
