#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mipipe {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// P x N block of log2 intensities with an explicit missingness mask.
// The mask is authoritative: entries with mask=false hold NaN as a
// sentinel and must never enter arithmetic.
struct IntensityMatrix {
  std::vector<std::string> row_ids;      // length P, unique
  std::vector<std::string> protein_ids;  // empty, or one accession string per row
  std::vector<std::string> col_ids;      // length N, unique
  Eigen::MatrixXd values;                // P x N
  Mask mask;                             // P x N, true = observed

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  bool has_proteins() const { return !protein_ids.empty(); }
  bool complete() const { return mask.all(); }

  std::size_t observed_count() const { return static_cast<std::size_t>(mask.count()); }
  double missing_fraction() const;

  // Throws std::invalid_argument on any invariant violation.
  void validate() const;

  // Copy restricted to the given rows, original order preserved.
  IntensityMatrix subset_rows(const std::vector<Eigen::Index>& keep) const;
};

// Complete matrix from values alone; mask all true.
IntensityMatrix make_complete_matrix(std::vector<std::string> row_ids,
                                     std::vector<std::string> col_ids,
                                     Eigen::MatrixXd values);

}  // namespace mipipe
