#include "mipipe/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace mipipe {

namespace {

int accession_count(const std::string& field) {
  if (field.empty()) return 0;
  int count = 0;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = field.find(';', start);
    const std::size_t len = (pos == std::string::npos ? field.size() : pos) - start;
    if (len > 0) ++count;
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return count;
}

// log2(sum_i 2^v_i), stabilized against overflow.
double log2_sum_exp2(const std::vector<double>& v) {
  const double hi = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp2(x - hi);
  return hi + std::log2(acc);
}

}  // namespace

IntensityMatrix filter_unique(const IntensityMatrix& m) {
  m.validate();
  if (!m.has_proteins()) {
    throw std::invalid_argument("filter_unique: matrix carries no protein ids");
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (accession_count(m.protein_ids[static_cast<std::size_t>(i)]) == 1) keep.push_back(i);
  }
  return m.subset_rows(keep);
}

ImputedStack aggregate_sum(const ImputedStack& stack) {
  if (!stack.has_proteins()) {
    throw std::invalid_argument("aggregate_sum: stack carries no protein ids");
  }
  for (const auto& field : stack.protein_ids) {
    if (accession_count(field) != 1) {
      throw std::invalid_argument("aggregate_sum: non-unique peptide '" + field +
                                  "'; run filter_unique first");
    }
  }

  // Group peptide rows by accession, first appearance order.
  std::vector<std::string> proteins;
  std::vector<std::vector<Eigen::Index>> members;
  {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < stack.protein_ids.size(); ++i) {
      const auto& acc = stack.protein_ids[i];
      auto it = pos.find(acc);
      if (it == pos.end()) {
        it = pos.emplace(acc, proteins.size()).first;
        proteins.push_back(acc);
        members.emplace_back();
      }
      members[it->second].push_back(static_cast<Eigen::Index>(i));
    }
  }

  ImputedStack out;
  out.row_ids = proteins;
  out.protein_ids = proteins;
  out.col_ids = stack.col_ids;
  out.method = stack.method;
  out.seed = stack.seed;
  out.draws.reserve(stack.draws.size());

  const auto n = static_cast<Eigen::Index>(stack.col_ids.size());
  std::vector<double> bucket;
  for (const auto& draw : stack.draws) {
    Eigen::MatrixXd agg(static_cast<Eigen::Index>(proteins.size()), n);
    for (std::size_t g = 0; g < members.size(); ++g) {
      for (Eigen::Index j = 0; j < n; ++j) {
        bucket.clear();
        for (const Eigen::Index r : members[g]) bucket.push_back(draw(r, j));
        agg(static_cast<Eigen::Index>(g), j) = log2_sum_exp2(bucket);
      }
    }
    out.draws.push_back(std::move(agg));
  }
  return out;
}

}  // namespace mipipe
