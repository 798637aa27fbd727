#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mipipe {

// Sample-to-condition assignment plus the N x I cell-means design matrix.
// Condition order is first appearance; every downstream index (contrasts,
// beta components) uses that order. X'X is diagonal with the group sizes.
struct Design {
  std::vector<std::string> sample_ids;  // length N, matrix column order
  std::vector<std::string> conditions;  // length I, first-appearance order
  std::vector<int> condition_index;     // length N, into conditions
  Eigen::MatrixXd X;                    // N x I, 0/1 cell means
  std::vector<int> group_sizes;         // length I, each >= 2

  int n_samples() const { return static_cast<int>(sample_ids.size()); }
  int n_conditions() const { return static_cast<int>(conditions.size()); }

  std::vector<int> samples_of(int condition) const;
  int condition_of(const std::string& sample_id) const;  // -1 if unknown

  // Same design with rows permuted to match the given sample order.
  // Throws if the id sets differ.
  Design aligned_to(const std::vector<std::string>& ordered_sample_ids) const;

  // Builds X and group sizes; validates (unique samples, every group >= 2).
  static Design from_assignments(const std::vector<std::string>& sample_ids,
                                 const std::vector<std::string>& condition_labels);
};

// One-vs-one comparison between condition indices; the reported log
// fold-change is beta[a] - beta[b].
struct Contrast {
  int a = 0;
  int b = 1;
};

Contrast make_contrast(const Design& d, int a, int b);
std::vector<Contrast> all_pairs(const Design& d);
std::string contrast_name(const Design& d, const Contrast& c);

}  // namespace mipipe
