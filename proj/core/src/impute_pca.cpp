#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/SVD>

#include "mipipe/impute.hpp"

namespace mipipe {

// Iterative PCA completion: fill missing cells with row means, then
// alternate rank-r SVD reconstruction and refilling of the missing cells
// until the observed-cell reconstruction error stalls. The objective is
// non-increasing, which the tests assert.
Eigen::MatrixXd engine_pca_traced(const IntensityMatrix& m, const EngineConfig& cfg,
                                  std::vector<double>* objective_trace) {
  const Eigen::Index p = m.rows();
  const Eigen::Index n = m.cols();
  const Eigen::Index rank = std::min<Eigen::Index>(cfg.n_components, std::min(p, n));

  Eigen::MatrixXd filled = m.values;
  bool any_missing = false;
  for (Eigen::Index i = 0; i < p; ++i) {
    double acc = 0.0;
    int cnt = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (m.mask(i, j)) {
        acc += m.values(i, j);
        ++cnt;
      }
    }
    if (cnt == 0) throw std::runtime_error("pca engine: row '" + m.row_ids[static_cast<std::size_t>(i)] +
                                           "' has no observed entries");
    const double row_mean = acc / cnt;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!m.mask(i, j)) {
        filled(i, j) = row_mean;
        any_missing = true;
      }
    }
  }
  if (!any_missing) {
    if (objective_trace) objective_trace->clear();
    return filled;
  }

  double prev_objective = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(filled, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw std::runtime_error("pca engine: SVD failed");
    const Eigen::MatrixXd recon = svd.matrixU().leftCols(rank) *
                                  svd.singularValues().head(rank).asDiagonal() *
                                  svd.matrixV().leftCols(rank).transpose();
    double objective = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (m.mask(i, j)) {
          const double diff = m.values(i, j) - recon(i, j);
          objective += diff * diff;
        } else {
          filled(i, j) = recon(i, j);
        }
      }
    }
    if (objective_trace) objective_trace->push_back(objective);
    if (std::abs(prev_objective - objective) <= cfg.tol * (1.0 + objective)) break;
    prev_objective = objective;
  }
  return filled;
}

Eigen::MatrixXd engine_pca(const IntensityMatrix& m, const EngineConfig& cfg) {
  return engine_pca_traced(m, cfg, nullptr);
}

}  // namespace mipipe
