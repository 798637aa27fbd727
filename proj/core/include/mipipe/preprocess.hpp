#pragma once

#include <vector>

#include "mipipe/design.hpp"
#include "mipipe/matrix.hpp"

namespace mipipe {

// Replaces every observed entry by its log2. Requires all observed values
// to be strictly positive; violations name the offending cell.
IntensityMatrix log2_transform(const IntensityMatrix& m);

// Quantile normalization. On complete matrices this is the classic
// rank-wise-mean scheme. With missing entries each column keeps its own
// type-7 quantile positions (ties get averaged ranks) and every observed
// value is mapped through the mean quantile function of all columns.
// A column with zero observed entries is an error.
IntensityMatrix quantile_normalize(const IntensityMatrix& m);

// Keeps rows with at least k observed entries in every condition.
IntensityMatrix filter_presence(const IntensityMatrix& m, const Design& d, int k);
std::vector<Eigen::Index> presence_kept_rows(const IntensityMatrix& m, const Design& d, int k);

}  // namespace mipipe
