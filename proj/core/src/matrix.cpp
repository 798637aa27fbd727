#include "mipipe/matrix.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace mipipe {

namespace {
void check_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw std::invalid_argument(std::string("duplicate ") + what + " id '" + id + "'");
    }
  }
}
}  // namespace

double IntensityMatrix::missing_fraction() const {
  const auto total = static_cast<double>(values.size());
  if (total == 0.0) return 0.0;
  return 1.0 - static_cast<double>(mask.count()) / total;
}

void IntensityMatrix::validate() const {
  const auto p = values.rows();
  const auto n = values.cols();
  if (mask.rows() != p || mask.cols() != n) {
    throw std::invalid_argument("matrix: mask dimensions disagree with values");
  }
  if (static_cast<Eigen::Index>(row_ids.size()) != p) {
    throw std::invalid_argument("matrix: row_ids length disagrees with values");
  }
  if (static_cast<Eigen::Index>(col_ids.size()) != n) {
    throw std::invalid_argument("matrix: col_ids length disagrees with values");
  }
  if (!protein_ids.empty() && static_cast<Eigen::Index>(protein_ids.size()) != p) {
    throw std::invalid_argument("matrix: protein_ids length disagrees with values");
  }
  check_unique(row_ids, "row");
  check_unique(col_ids, "column");
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (mask(i, j) && !std::isfinite(values(i, j))) {
        throw std::invalid_argument("matrix: non-finite observed value at row '" +
                                    row_ids[static_cast<std::size_t>(i)] + "', column '" +
                                    col_ids[static_cast<std::size_t>(j)] + "'");
      }
    }
  }
}

IntensityMatrix IntensityMatrix::subset_rows(const std::vector<Eigen::Index>& keep) const {
  IntensityMatrix out;
  out.col_ids = col_ids;
  const auto m = static_cast<Eigen::Index>(keep.size());
  out.values.resize(m, values.cols());
  out.mask.resize(m, values.cols());
  out.row_ids.reserve(keep.size());
  if (has_proteins()) out.protein_ids.reserve(keep.size());
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index src = keep[static_cast<std::size_t>(r)];
    if (src < 0 || src >= values.rows()) {
      throw std::invalid_argument("subset_rows: index out of range");
    }
    out.values.row(r) = values.row(src);
    out.mask.row(r) = mask.row(src);
    out.row_ids.push_back(row_ids[static_cast<std::size_t>(src)]);
    if (has_proteins()) out.protein_ids.push_back(protein_ids[static_cast<std::size_t>(src)]);
  }
  return out;
}

IntensityMatrix make_complete_matrix(std::vector<std::string> row_ids,
                                     std::vector<std::string> col_ids,
                                     Eigen::MatrixXd values) {
  IntensityMatrix m;
  m.row_ids = std::move(row_ids);
  m.col_ids = std::move(col_ids);
  m.mask = Mask::Constant(values.rows(), values.cols(), true);
  m.values = std::move(values);
  m.validate();
  return m;
}

}  // namespace mipipe
