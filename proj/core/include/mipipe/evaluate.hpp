#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mipipe/impute.hpp"
#include "mipipe/simulate.hpp"

namespace mipipe {

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long total() const { return tp + fp + tn + fn; }
};

ConfusionCounts confusion(const std::vector<bool>& decided, const std::vector<bool>& truth);

// Confusion-matrix summaries. A degenerate denominator yields NaN, the
// explicit undefined marker; summaries exclude those and report how many
// were excluded.
struct MetricSet {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double f_score = 0.0;
  double mcc = 0.0;
};

MetricSet metrics(const ConfusionCounts& c);

struct BenchOptions {
  int design_id = 1;
  int replicates = 30;
  std::vector<double> mv_grid = {0.01, 0.05, 0.10, 0.15, 0.20, 0.25};
  EngineConfig engine;
  double fdr = 0.01;
  std::uint64_t seed = 1;
  int threads = 1;
  bool normalize = false;  // simulated data are already on model scale
};

struct BenchRow {
  double mv_fraction = 0.0;
  int replicate = 0;
  std::string workflow;  // "mi4p" or "baseline"
  int draws = 0;
  int tested_rows = 0;
  ConfusionCounts counts;
  MetricSet scores;
};

struct BenchSummaryRow {
  double mv_fraction = 0.0;
  std::string workflow;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;
  int n_defined = 0;
  int n_undefined = 0;
};

struct BenchResult {
  BenchOptions options;
  std::vector<BenchRow> rows;        // fraction-major, replicate-minor, mi4p then baseline
  std::vector<BenchSummaryRow> summary;
};

// Simulation benchmark: per replicate and missingness fraction, generate,
// ampute, presence-filter (k=1), then run the multiple-imputation workflow
// and the single-imputation baseline with the same engine, scoring both
// against the generator's truth on the tested rows.
BenchResult bench(const BenchOptions& opts);

void write_bench_rows(const BenchResult& result, const std::filesystem::path& path);
void write_bench_summary(const BenchResult& result, const std::filesystem::path& path);

// Mean and sd of one metric over replicates at a given fraction/workflow;
// used by the acceptance checks.
double bench_metric_mean(const BenchResult& result, double mv_fraction,
                         const std::string& workflow, const std::string& metric);

}  // namespace mipipe
