#include "mipipe/infer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mipipe/csv.hpp"
#include "mipipe/specfun.hpp"

namespace mipipe {

double pvalue(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("pvalue: df must be positive");
  return specfun::student_two_sided_p(t, df);
}

TestReport moderated_t(const PooledFit& pooled, const ModerationFit& mod, const Design& d,
                       const Contrast& c, const std::vector<std::string>& row_ids,
                       bool eq9_literal) {
  const Eigen::Index p = pooled.beta.rows();
  if (mod.s_tilde_sq.size() != p) {
    throw std::invalid_argument("moderated_t: moderation fit length disagrees with rows");
  }
  if (c.a == c.b || c.a < 0 || c.b < 0 || c.a >= d.n_conditions() || c.b >= d.n_conditions()) {
    throw std::invalid_argument("moderated_t: invalid contrast");
  }

  TestReport report;
  report.row_ids = row_ids;
  report.contrast = c;
  report.contrast_label = contrast_name(d, c);
  report.df = mod.df_total;
  report.logfc.resize(p);
  report.t.resize(p);
  report.p.resize(p);
  report.header.d0 = mod.d0;
  report.header.s0_sq = mod.s0_sq;
  report.header.draws = pooled.draw_count;

  // (X'X)^-1 is diagonal with 1/n_k; the contrast of two group means has
  // unit variance factor 1/n_a + 1/n_b.
  const double unit = 1.0 / d.group_sizes[static_cast<std::size_t>(c.a)] +
                      1.0 / d.group_sizes[static_cast<std::size_t>(c.b)];
  const double sqrt_unit = std::sqrt(unit);

  for (Eigen::Index i = 0; i < p; ++i) {
    const double diff = pooled.beta(i, c.a) - pooled.beta(i, c.b);
    report.logfc(i) = diff;
    const double s_tilde_sq = mod.s_tilde_sq(i);
    const double denom = eq9_literal ? s_tilde_sq * sqrt_unit
                                     : std::sqrt(s_tilde_sq) * sqrt_unit;
    double t_stat;
    if (denom > 0.0) {
      t_stat = diff / denom;
    } else {
      // Zero moderated variance: infinite statistic unless the numerator
      // vanishes too.
      t_stat = diff == 0.0 ? 0.0
                           : std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    report.t(i) = t_stat;
    report.p(i) = pvalue(t_stat, mod.df_total);
  }
  report.p_adj = bh_adjust(report.p);
  return report;
}

Eigen::VectorXd bh_adjust(const Eigen::VectorXd& p) {
  const Eigen::Index m = p.size();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(p(i) >= 0.0 && p(i) <= 1.0)) {
      throw std::invalid_argument("bh_adjust: p-values must lie in [0,1]");
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return p(a) < p(b); });

  Eigen::VectorXd adjusted(m);
  double running = 1.0;
  for (Eigen::Index r = m - 1; r >= 0; --r) {
    const Eigen::Index idx = order[static_cast<std::size_t>(r)];
    const double value = p(idx) * static_cast<double>(m) / static_cast<double>(r + 1);
    running = std::min(running, value);
    adjusted(idx) = running;
  }
  return adjusted;
}

void decide(TestReport& report, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("decide: threshold must lie in [0,1]");
  }
  report.header.fdr = threshold;
  report.decided.assign(static_cast<std::size_t>(report.p_adj.size()), false);
  for (Eigen::Index i = 0; i < report.p_adj.size(); ++i) {
    report.decided[static_cast<std::size_t>(i)] = report.p_adj(i) <= threshold;
  }
}

void write_report(const TestReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  out << "# d0=" << format_g17(report.header.d0) << '\n';
  out << "# s0_sq=" << format_g17(report.header.s0_sq) << '\n';
  out << "# draws=" << report.header.draws << '\n';
  out << "# method=" << report.header.method << '\n';
  out << "# seed=" << report.header.seed << '\n';
  out << "# fdr=" << format_g17(report.header.fdr) << '\n';
  out << "row_id,contrast,logfc,t,df,p,p_adj,decided\n";
  for (Eigen::Index i = 0; i < report.logfc.size(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    out << report.row_ids[s] << ',' << report.contrast_label << ',' << format_g17(report.logfc(i))
        << ',' << format_g17(report.t(i)) << ',' << format_g17(report.df) << ','
        << format_g17(report.p(i)) << ',' << format_g17(report.p_adj(i)) << ','
        << (report.decided.empty() ? 0 : static_cast<int>(report.decided[s])) << '\n';
  }
  if (!out) throw std::runtime_error("I/O failure writing " + path.string());
}

}  // namespace mipipe
