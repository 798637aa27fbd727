#include <cmath>
#include <vector>

#include <doctest.h>

#include "mipipe/aggregate.hpp"
#include "mipipe/preprocess.hpp"
#include "mipipe/simulate.hpp"
#include "mipipe/workflow.hpp"

using namespace mipipe;

TEST_SUITE_BEGIN("workflow");

TEST_CASE("design-1 pipeline finds the ten differential rows") {
  const auto sim = gen_sim1(101);
  const auto amputed = ampute_mcar(sim.matrix, 0.10, 102);
  const auto filtered = filter_presence(amputed, sim.design, 1);
  WorkflowOptions opts;
  opts.engine.method = ImputeMethod::mle;
  opts.seed = 103;
  const auto result = run_mi_workflow(filtered, sim.design, {Contrast{1, 0}}, opts);
  REQUIRE(result.reports.size() == 1);
  const auto& report = result.reports.front();
  int decided_de = 0, decided_null = 0;
  for (std::size_t i = 0; i < report.decided.size(); ++i) {
    const bool is_de = report.row_ids[i] <= "p0010" && report.row_ids[i] >= "p0001";
    if (report.decided[i]) {
      ++(is_de ? decided_de : decided_null);
    }
  }
  CHECK(decided_de == 10);
  CHECK(decided_null <= 4);
  CHECK(result.draws_used == 10);  // 10% missing
}

TEST_CASE("auto draw count floors at two and reports the rule value") {
  const auto sim = gen_sim1(104);
  const auto amputed = ampute_mcar(sim.matrix, 0.01, 105);
  WorkflowOptions opts;
  opts.engine.method = ImputeMethod::knn;
  opts.seed = 106;
  const auto result = run_mi_workflow(amputed, sim.design, {Contrast{1, 0}}, opts);
  CHECK(result.draws_used == 2);
  CHECK(result.rule_draws == 1);
  CHECK(result.degenerate_between);  // knn ignores the stream
}

TEST_CASE("workflow is deterministic given seed") {
  const auto sim = gen_sim1(107);
  const auto amputed = ampute_mcar(sim.matrix, 0.15, 108);
  const auto filtered = filter_presence(amputed, sim.design, 1);
  WorkflowOptions opts;
  opts.engine.method = ImputeMethod::mle;
  opts.seed = 109;
  const auto a = run_mi_workflow(filtered, sim.design, {Contrast{1, 0}}, opts);
  const auto b = run_mi_workflow(filtered, sim.design, {Contrast{1, 0}}, opts);
  CHECK(a.reports.front().t == b.reports.front().t);
  CHECK(a.reports.front().p_adj == b.reports.front().p_adj);
}

TEST_CASE("single workflow equals a one-draw analysis") {
  const auto sim = gen_sim1(110);
  const auto amputed = ampute_mcar(sim.matrix, 0.05, 111);
  const auto filtered = filter_presence(amputed, sim.design, 1);
  WorkflowOptions opts;
  opts.engine.method = ImputeMethod::knn;
  opts.seed = 112;
  const auto single = run_single_workflow(filtered, sim.design, {Contrast{1, 0}}, opts);
  CHECK(single.draws_used == 1);
  REQUIRE(single.reports.size() == 1);
  // Sanity: strong effects survive a single-imputation analysis too.
  int decided = 0;
  for (const bool b : single.reports.front().decided) decided += b;
  CHECK(decided >= 10);
}

TEST_CASE("aggregation runs between imputation and pooling") {
  // Two peptides per protein; the protein-level report must cover the
  // distinct proteins, in first-appearance order.
  const auto sim = gen_sim1(113);
  IntensityMatrix m = sim.matrix;
  m.protein_ids.clear();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    m.protein_ids.push_back("prot" + std::to_string(i / 2));
  }
  const auto amputed = ampute_mcar(m, 0.05, 114);
  const auto filtered = filter_presence(amputed, sim.design, 1);
  WorkflowOptions opts;
  opts.engine.method = ImputeMethod::mle;
  opts.aggregate = true;
  opts.seed = 115;
  const auto result = run_mi_workflow(filtered, sim.design, {Contrast{1, 0}}, opts);
  CHECK(result.row_ids.size() < filtered.row_ids.size());
  CHECK(result.row_ids.front() == "prot0");
  CHECK(result.reports.front().row_ids == result.row_ids);
  // Proteins built from the differential peptide rows stay differential.
  int decided = 0;
  for (std::size_t i = 0; i < 5; ++i) decided += result.reports.front().decided[i];
  CHECK(decided == 5);
}

TEST_CASE("requesting a single draw for the mi workflow is an error") {
  const auto sim = gen_sim1(116);
  WorkflowOptions opts;
  opts.engine.method = ImputeMethod::knn;
  opts.draws = 1;
  CHECK_THROWS_AS(run_mi_workflow(sim.matrix, sim.design, {Contrast{1, 0}}, opts),
                  std::invalid_argument);
}

TEST_SUITE_END();
