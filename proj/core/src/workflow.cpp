#include "mipipe/workflow.hpp"

#include <cmath>
#include <stdexcept>

#include "mipipe/aggregate.hpp"
#include "mipipe/moderate.hpp"
#include "mipipe/pool.hpp"

namespace mipipe {

namespace {

WorkflowResult finish(const ImputedStack& stack, const Design& d,
                      const std::vector<Contrast>& contrasts, const WorkflowOptions& opts,
                      int rule_draws) {
  const ImputedStack* active = &stack;
  ImputedStack aggregated;
  if (opts.aggregate) {
    aggregated = aggregate_sum(stack);
    active = &aggregated;
  }

  const PooledFit pooled = pool_stack(*active, d);
  const Eigen::VectorXd s_sq = project_variance(pooled, d);
  const ModerationFit mod = moderate_fit(s_sq, pooled.df_resid);

  WorkflowResult result;
  result.row_ids = active->row_ids;
  result.d0 = mod.d0;
  result.s0_sq = mod.s0_sq;
  result.draws_used = stack.draw_count();
  result.rule_draws = rule_draws;
  result.degenerate_between = pooled.degenerate_between;
  result.pooled_beta = pooled.beta;
  result.pooled_variance = s_sq;
  result.pooled_sigma_diag.resize(pooled.beta.rows(), pooled.beta.cols());
  for (Eigen::Index i = 0; i < pooled.beta.rows(); ++i) {
    result.pooled_sigma_diag.row(i) = pooled.sigma[static_cast<std::size_t>(i)].diagonal();
  }

  for (const Contrast& c : contrasts) {
    TestReport report = moderated_t(pooled, mod, d, c, active->row_ids, opts.eq9_literal);
    report.header.method = to_string(opts.engine.method);
    report.header.seed = opts.seed;
    report.header.draws = stack.draw_count();
    decide(report, opts.fdr);
    result.reports.push_back(std::move(report));
  }
  return result;
}

}  // namespace

WorkflowResult run_mi_workflow(const IntensityMatrix& m, const Design& d,
                               const std::vector<Contrast>& contrasts,
                               const WorkflowOptions& opts) {
  const double fraction = m.missing_fraction();
  const int rule = static_cast<int>(std::llround(100.0 * fraction));
  const int draws = opts.draws > 0 ? opts.draws : choose_draw_count(fraction);
  if (draws < 2) {
    throw std::invalid_argument("mi workflow: need at least two draws (got " +
                                std::to_string(draws) + ")");
  }
  const ImputedStack stack = impute_multiple(m, d, draws, opts.engine, opts.seed);
  return finish(stack, d, contrasts, opts, rule);
}

WorkflowResult run_single_workflow(const IntensityMatrix& m, const Design& d,
                                   const std::vector<Contrast>& contrasts,
                                   const WorkflowOptions& opts) {
  // One draw; the pooled covariance degenerates to the OLS W of that draw,
  // so reuse the same moderation/testing path on a duplicated stack.
  ImputedStack stack = impute_multiple(m, d, 1, opts.engine, opts.seed);
  stack.draws.push_back(stack.draws.front());
  WorkflowResult result = finish(stack, d, contrasts, opts, 1);
  result.draws_used = 1;
  for (auto& report : result.reports) report.header.draws = 1;
  return result;
}

}  // namespace mipipe
