#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mipipe/impute.hpp"

namespace mipipe {

namespace {

// Squared Euclidean distance over mutually observed columns, scaled by the
// number of shared columns. Infinity when nothing is shared.
double row_distance_sq(const IntensityMatrix& m, Eigen::Index a, Eigen::Index b) {
  double acc = 0.0;
  int shared = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (m.mask(a, j) && m.mask(b, j)) {
      const double diff = m.values(a, j) - m.values(b, j);
      acc += diff * diff;
      ++shared;
    }
  }
  if (shared == 0) return std::numeric_limits<double>::infinity();
  return acc / static_cast<double>(shared);
}

double row_mean_observed(const IntensityMatrix& m, Eigen::Index i) {
  double acc = 0.0;
  int cnt = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (m.mask(i, j)) {
      acc += m.values(i, j);
      ++cnt;
    }
  }
  return acc / static_cast<double>(cnt);
}

}  // namespace

Eigen::MatrixXd engine_knn(const IntensityMatrix& m, const EngineConfig& cfg) {
  Eigen::MatrixXd out = m.values;
  const Eigen::Index p = m.rows();
  const auto k = static_cast<std::size_t>(cfg.k_neighbors);

  std::vector<std::pair<double, Eigen::Index>> candidates;
  for (Eigen::Index i = 0; i < p; ++i) {
    bool any_missing = false;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!m.mask(i, j)) {
        any_missing = true;
        break;
      }
    }
    if (!any_missing) continue;

    candidates.clear();
    for (Eigen::Index other = 0; other < p; ++other) {
      if (other == i) continue;
      const double dist = row_distance_sq(m, i, other);
      if (std::isfinite(dist)) candidates.emplace_back(dist, other);
    }
    const std::size_t take = std::min(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                      candidates.end());

    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m.mask(i, j)) continue;
      double acc = 0.0;
      int cnt = 0;
      for (std::size_t t = 0; t < take; ++t) {
        const Eigen::Index nb = candidates[t].second;
        if (m.mask(nb, j)) {
          acc += m.values(nb, j);
          ++cnt;
        }
      }
      // No selected neighbor observed in this column: fall back to the
      // row's own observed mean.
      out(i, j) = cnt > 0 ? acc / static_cast<double>(cnt) : row_mean_observed(m, i);
    }
  }
  return out;
}

}  // namespace mipipe
