#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mipipe/design.hpp"
#include "mipipe/moderate.hpp"
#include "mipipe/pool.hpp"

namespace mipipe {

struct ReportHeader {
  double d0 = 0.0;
  double s0_sq = 0.0;
  int draws = 0;
  std::string method;
  std::uint64_t seed = 0;
  double fdr = 0.01;
};

struct TestReport {
  std::vector<std::string> row_ids;
  Contrast contrast;
  std::string contrast_label;
  Eigen::VectorXd logfc;   // beta[a] - beta[b]
  Eigen::VectorXd t;
  double df = 0.0;
  Eigen::VectorXd p;
  Eigen::VectorXd p_adj;
  std::vector<bool> decided;
  ReportHeader header;
};

// Moderated t per row for one contrast. The standard-error form divides by
// s_tilde * sqrt((X'X)^-1_aa + (X'X)^-1_bb); eq9_literal divides by the
// moderated variance instead of its square root (kept for fidelity
// experiments, not the default).
TestReport moderated_t(const PooledFit& pooled, const ModerationFit& mod, const Design& d,
                       const Contrast& c, const std::vector<std::string>& row_ids,
                       bool eq9_literal = false);

double pvalue(double t, double df);

// Benjamini-Hochberg step-up adjustment; input order preserved.
Eigen::VectorXd bh_adjust(const Eigen::VectorXd& p);

// decided = (p_adj <= threshold), closed at the boundary.
void decide(TestReport& report, double threshold);

void write_report(const TestReport& report, const std::filesystem::path& path);

}  // namespace mipipe
