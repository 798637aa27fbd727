#include "mipipe/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mipipe {

IntensityMatrix log2_transform(const IntensityMatrix& m) {
  m.validate();
  IntensityMatrix out = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!m.mask(i, j)) continue;
      const double v = m.values(i, j);
      if (!(v > 0.0)) {
        throw std::runtime_error("log2_transform: non-positive value at row '" +
                                 m.row_ids[static_cast<std::size_t>(i)] + "', column '" +
                                 m.col_ids[static_cast<std::size_t>(j)] + "'");
      }
      out.values(i, j) = std::log2(v);
    }
  }
  return out;
}

namespace {

// Type-7 empirical quantile of a sorted vector at probability p.
double quantile_type7(const std::vector<double>& sorted, double p) {
  const std::size_t m = sorted.size();
  if (m == 1) return sorted[0];
  const double h = p * static_cast<double>(m - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= m) return sorted[m - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

IntensityMatrix quantile_normalize(const IntensityMatrix& m) {
  m.validate();
  const Eigen::Index p = m.rows();
  const Eigen::Index n = m.cols();

  std::vector<std::vector<double>> sorted_cols(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    auto& col = sorted_cols[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < p; ++i) {
      if (m.mask(i, j)) col.push_back(m.values(i, j));
    }
    if (col.empty()) {
      throw std::runtime_error("quantile_normalize: column '" +
                               m.col_ids[static_cast<std::size_t>(j)] +
                               "' has no observed entries");
    }
    std::sort(col.begin(), col.end());
  }

  // Mean of the per-column quantile functions; the reference distribution.
  auto reference = [&](double prob) {
    double acc = 0.0;
    for (const auto& col : sorted_cols) acc += quantile_type7(col, prob);
    return acc / static_cast<double>(n);
  };

  IntensityMatrix out = m;
  std::vector<Eigen::Index> order;
  std::vector<double> rank;  // averaged 0-based ranks
  for (Eigen::Index j = 0; j < n; ++j) {
    order.clear();
    for (Eigen::Index i = 0; i < p; ++i) {
      if (m.mask(i, j)) order.push_back(i);
    }
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return m.values(a, j) < m.values(b, j); });
    const std::size_t cnt = order.size();
    rank.assign(cnt, 0.0);
    for (std::size_t s = 0; s < cnt;) {
      std::size_t e = s + 1;
      while (e < cnt && m.values(order[e], j) == m.values(order[s], j)) ++e;
      const double avg = 0.5 * static_cast<double>(s + e - 1);
      for (std::size_t t = s; t < e; ++t) rank[t] = avg;
      s = e;
    }
    for (std::size_t s = 0; s < cnt; ++s) {
      const double prob = cnt == 1 ? 0.5 : rank[s] / static_cast<double>(cnt - 1);
      out.values(order[s], j) = reference(prob);
    }
  }
  return out;
}

std::vector<Eigen::Index> presence_kept_rows(const IntensityMatrix& m, const Design& d, int k) {
  if (k < 1) throw std::invalid_argument("filter_presence: k must be at least 1");
  for (int g = 0; g < d.n_conditions(); ++g) {
    if (k > d.group_sizes[static_cast<std::size_t>(g)]) {
      throw std::invalid_argument("filter_presence: k exceeds size of condition '" +
                                  d.conditions[static_cast<std::size_t>(g)] + "'");
    }
  }
  if (static_cast<Eigen::Index>(d.sample_ids.size()) != m.cols()) {
    throw std::invalid_argument("filter_presence: design does not match matrix columns");
  }
  std::vector<Eigen::Index> kept;
  std::vector<int> per_condition(static_cast<std::size_t>(d.n_conditions()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::fill(per_condition.begin(), per_condition.end(), 0);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m.mask(i, j)) ++per_condition[static_cast<std::size_t>(d.condition_index[static_cast<std::size_t>(j)])];
    }
    const bool keep = std::all_of(per_condition.begin(), per_condition.end(),
                                  [&](int c) { return c >= k; });
    if (keep) kept.push_back(i);
  }
  return kept;
}

IntensityMatrix filter_presence(const IntensityMatrix& m, const Design& d, int k) {
  return m.subset_rows(presence_kept_rows(m, d, k));
}

}  // namespace mipipe
