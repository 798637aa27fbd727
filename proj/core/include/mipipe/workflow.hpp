#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mipipe/design.hpp"
#include "mipipe/impute.hpp"
#include "mipipe/infer.hpp"
#include "mipipe/matrix.hpp"

namespace mipipe {

struct WorkflowOptions {
  EngineConfig engine;
  int draws = 0;            // 0 = White's rule from the missing fraction
  double fdr = 0.01;
  bool aggregate = false;   // peptide -> protein roll-up between imputation and pooling
  bool eq9_literal = false;
  std::uint64_t seed = 0;
};

struct WorkflowResult {
  std::vector<TestReport> reports;  // one per contrast, matrix row order
  std::vector<std::string> row_ids; // rows actually tested (protein ids after aggregation)
  double d0 = 0.0;
  double s0_sq = 0.0;
  int draws_used = 0;
  int rule_draws = 0;               // White's rule value before the floor of 2
  bool degenerate_between = false;
  Eigen::MatrixXd pooled_beta;
  Eigen::MatrixXd pooled_sigma_diag;  // P x I, diagonal of the combined covariance
  Eigen::VectorXd pooled_variance;    // projected s^2 per tested row
};

// Multiple-imputation workflow: impute D times, pool with Rubin's rules,
// project the combined covariance, moderate, test each contrast, adjust
// with BH. Input rows must have at least one observed value per condition.
WorkflowResult run_mi_workflow(const IntensityMatrix& m, const Design& d,
                               const std::vector<Contrast>& contrasts,
                               const WorkflowOptions& opts);

// Single-imputation comparator: one draw of the same engine, per-draw OLS
// variance, then the same moderation and testing path.
WorkflowResult run_single_workflow(const IntensityMatrix& m, const Design& d,
                                   const std::vector<Contrast>& contrasts,
                                   const WorkflowOptions& opts);

}  // namespace mipipe
