#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mipipe/design.hpp"
#include "mipipe/matrix.hpp"

namespace mipipe {

// All files are plain UTF-8 CSV: comma separator, '.' decimal point, no
// quoting. Missing cells are empty or the literal token NA. Numbers are
// written with 17 significant digits so doubles round-trip exactly.

struct MatrixParseOptions {
  bool protein_column = false;  // second column carries protein accessions
};

IntensityMatrix read_matrix(const std::filesystem::path& path,
                            const MatrixParseOptions& options = {});
void write_matrix(const IntensityMatrix& m, const std::filesystem::path& path);

Design read_design(const std::filesystem::path& path);
void write_design(const Design& d, const std::filesystem::path& path);

std::vector<bool> read_truth(const std::filesystem::path& path);
void write_truth(const std::vector<std::string>& row_ids, const std::vector<bool>& de_rows,
                 const std::filesystem::path& path);

// printf %.17g formatting used for every floating-point cell we emit.
std::string format_g17(double x);

}  // namespace mipipe
