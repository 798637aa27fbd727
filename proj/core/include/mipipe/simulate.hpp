#pragma once

#include <cstdint>
#include <vector>

#include "mipipe/design.hpp"
#include "mipipe/matrix.hpp"

namespace mipipe {

struct SimTruth {
  std::vector<bool> de_rows;  // true = differentially expressed
};

struct SimData {
  IntensityMatrix matrix;
  Design design;
  SimTruth truth;
};

// The three simulation designs. All are deterministic per seed and
// generated row by row from streams keyed by (seed, design id, row), so a
// parallel generator would produce bit-identical output.
//
// Design 1: 200 x 10, two groups of 5; rows 1-10 differential. All cells
//   N(100,1) except group 2 of the differential rows, N(200,1).
// Design 2: 1000 x 20, two groups of 10; rows 1-200 differential. Cell =
//   P_i + G_i*[group 2] + eps with P_i ~ N(1.5,0.5) and G_i ~ N(1.5,0.5)
//   drawn once per row, eps ~ N(0,0.5) per cell.
// Design 3: as design 2 but P and G are redrawn per cell (random effects).
SimData gen_sim1(std::uint64_t seed);
SimData gen_sim2(std::uint64_t seed);
SimData gen_sim3(std::uint64_t seed);
SimData gen_sim(int design_id, std::uint64_t seed);

// Masks exactly round(proportion * P * N) additional observed cells,
// chosen uniformly without replacement. A draw that would empty a row is
// redrawn, up to 1000 attempts.
IntensityMatrix ampute_mcar(const IntensityMatrix& m, double proportion, std::uint64_t seed);

}  // namespace mipipe
