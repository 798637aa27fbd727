#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mipipe/impute.hpp"

namespace mipipe {

namespace {

// Small CART regression forest, enough for missForest-style column
// imputation: bootstrap per tree, mtry random candidate features per node,
// best SSE split, leaf mean prediction.
struct TreeNode {
  int feature = -1;          // -1 = leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

class RegressionTree {
 public:
  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& rows,
           int mtry, RngStream& rs) {
    nodes_.clear();
    std::vector<int> work(rows);
    build(x, y, work, 0, static_cast<int>(work.size()), mtry, rs);
  }

  double predict(const Eigen::RowVectorXd& x) const {
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
      const auto& nd = nodes_[static_cast<std::size_t>(node)];
      node = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(node)].value;
  }

 private:
  static constexpr int kMinNode = 5;

  int build(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<int>& rows, int begin,
            int end, int mtry, RngStream& rs) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const int count = end - begin;

    double sum = 0.0, sum_sq = 0.0;
    for (int t = begin; t < end; ++t) {
      const double v = y(rows[static_cast<std::size_t>(t)]);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / count;
    const double sse = sum_sq - sum * mean;
    if (count < 2 * kMinNode || sse <= 1e-12) {
      nodes_[static_cast<std::size_t>(id)].value = mean;
      return id;
    }

    // Sample mtry distinct candidate features.
    const int n_features = static_cast<int>(x.cols());
    std::vector<int> features(static_cast<std::size_t>(n_features));
    std::iota(features.begin(), features.end(), 0);
    for (int t = 0; t < std::min(mtry, n_features); ++t) {
      const auto pick = t + static_cast<int>(rs.uniform_index(static_cast<std::size_t>(n_features - t)));
      std::swap(features[static_cast<std::size_t>(t)], features[static_cast<std::size_t>(pick)]);
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = sse - 1e-12;
    std::vector<int> sorted(rows.begin() + begin, rows.begin() + end);
    for (int t = 0; t < std::min(mtry, n_features); ++t) {
      const int f = features[static_cast<std::size_t>(t)];
      std::sort(sorted.begin(), sorted.end(),
                [&](int a, int b) { return x(a, f) < x(b, f); });
      double left_sum = 0.0, left_sq = 0.0;
      for (int s = 0; s + 1 < count; ++s) {
        const double v = y(sorted[static_cast<std::size_t>(s)]);
        left_sum += v;
        left_sq += v * v;
        const double xa = x(sorted[static_cast<std::size_t>(s)], f);
        const double xb = x(sorted[static_cast<std::size_t>(s + 1)], f);
        if (xa == xb) continue;
        const int nl = s + 1, nr = count - nl;
        if (nl < kMinNode || nr < kMinNode) continue;
        const double right_sum = sum - left_sum;
        const double right_sq = sum_sq - left_sq;
        const double score = (left_sq - left_sum * left_sum / nl) +
                             (right_sq - right_sum * right_sum / nr);
        if (score < best_score) {
          best_score = score;
          best_feature = f;
          best_threshold = 0.5 * (xa + xb);
        }
      }
    }
    if (best_feature < 0) {
      nodes_[static_cast<std::size_t>(id)].value = mean;
      return id;
    }

    const auto mid = static_cast<int>(
        std::partition(rows.begin() + begin, rows.begin() + end,
                       [&](int r) { return x(r, best_feature) <= best_threshold; }) -
        rows.begin());
    if (mid == begin || mid == end) {
      nodes_[static_cast<std::size_t>(id)].value = mean;
      return id;
    }
    nodes_[static_cast<std::size_t>(id)].feature = best_feature;
    nodes_[static_cast<std::size_t>(id)].threshold = best_threshold;
    const int left = build(x, y, rows, begin, mid, mtry, rs);
    nodes_[static_cast<std::size_t>(id)].left = left;
    const int right = build(x, y, rows, mid, end, mtry, rs);
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  std::vector<TreeNode> nodes_;
};

class RegressionForest {
 public:
  RegressionForest(int n_trees, int mtry) : trees_(static_cast<std::size_t>(n_trees)), mtry_(mtry) {}

  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, RngStream stream) {
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<int> sample(n);
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      RngStream rs = stream.derive(t);
      for (std::size_t s = 0; s < n; ++s) sample[s] = static_cast<int>(rs.uniform_index(n));
      trees_[t].fit(x, y, sample, mtry_, rs);
    }
  }

  double predict(const Eigen::RowVectorXd& x) const {
    double acc = 0.0;
    for (const auto& tree : trees_) acc += tree.predict(x);
    return acc / static_cast<double>(trees_.size());
  }

 private:
  std::vector<RegressionTree> trees_;
  int mtry_;
};

}  // namespace

Eigen::MatrixXd engine_rf(const IntensityMatrix& m, const EngineConfig& cfg, RngStream stream) {
  const Eigen::Index p = m.rows();
  const Eigen::Index n = m.cols();

  std::vector<int> missing_count(static_cast<std::size_t>(n), 0);
  Eigen::MatrixXd filled = m.values;
  bool any_missing = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    double acc = 0.0;
    int cnt = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (m.mask(i, j)) {
        acc += m.values(i, j);
        ++cnt;
      } else {
        ++missing_count[static_cast<std::size_t>(j)];
      }
    }
    if (cnt == 0) {
      throw std::runtime_error("rf engine: column '" + m.col_ids[static_cast<std::size_t>(j)] +
                               "' has no observed entries");
    }
    const double col_mean = acc / cnt;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!m.mask(i, j)) {
        filled(i, j) = col_mean;
        any_missing = true;
      }
    }
  }
  if (!any_missing) return filled;

  std::vector<int> columns;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (missing_count[static_cast<std::size_t>(j)] > 0) columns.push_back(static_cast<int>(j));
  }
  std::stable_sort(columns.begin(), columns.end(), [&](int a, int b) {
    return missing_count[static_cast<std::size_t>(a)] < missing_count[static_cast<std::size_t>(b)];
  });

  const int mtry = std::max(1, static_cast<int>(n - 1) / 3);
  Eigen::MatrixXd previous = filled;
  double prev_change = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    previous = filled;
    RngStream iter_stream = stream.derive(static_cast<std::uint64_t>(iter));

    for (const int target : columns) {
      std::vector<Eigen::Index> obs_rows, mis_rows;
      for (Eigen::Index i = 0; i < p; ++i) {
        (m.mask(i, target) ? obs_rows : mis_rows).push_back(i);
      }
      Eigen::MatrixXd x_obs(static_cast<Eigen::Index>(obs_rows.size()), n - 1);
      Eigen::VectorXd y(static_cast<Eigen::Index>(obs_rows.size()));
      for (std::size_t r = 0; r < obs_rows.size(); ++r) {
        Eigen::Index c = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j == target) continue;
          x_obs(static_cast<Eigen::Index>(r), c++) = filled(obs_rows[r], j);
        }
        y(static_cast<Eigen::Index>(r)) = m.values(obs_rows[r], target);
      }
      RegressionForest forest(cfg.rf_trees, mtry);
      forest.fit(x_obs, y, iter_stream.derive(static_cast<std::uint64_t>(target)));

      Eigen::RowVectorXd features(n - 1);
      for (const Eigen::Index i : mis_rows) {
        Eigen::Index c = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j == target) continue;
          features(c++) = filled(i, j);
        }
        filled(i, target) = forest.predict(features);
      }
    }

    // missForest stop rule: quit when the normalized change in the fills
    // rises, returning the previous iteration's result.
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!m.mask(i, j)) {
          const double diff = filled(i, j) - previous(i, j);
          num += diff * diff;
          den += filled(i, j) * filled(i, j);
        }
      }
    }
    const double change = den > 0.0 ? num / den : 0.0;
    if (change > prev_change) return previous;
    prev_change = change;
    if (change <= cfg.tol * cfg.tol) break;
  }
  return filled;
}

}  // namespace mipipe
