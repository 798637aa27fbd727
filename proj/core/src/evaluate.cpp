#include "mipipe/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "mipipe/csv.hpp"
#include "mipipe/parallel.hpp"
#include "mipipe/preprocess.hpp"
#include "mipipe/workflow.hpp"

namespace mipipe {

namespace {
constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();
}

ConfusionCounts confusion(const std::vector<bool>& decided, const std::vector<bool>& truth) {
  if (decided.size() != truth.size()) {
    throw std::invalid_argument("confusion: decision and truth lengths differ");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < decided.size(); ++i) {
    if (truth[i]) {
      ++(decided[i] ? c.tp : c.fn);
    } else {
      ++(decided[i] ? c.fp : c.tn);
    }
  }
  return c;
}

MetricSet metrics(const ConfusionCounts& c) {
  const auto tp = static_cast<double>(c.tp);
  const auto fp = static_cast<double>(c.fp);
  const auto tn = static_cast<double>(c.tn);
  const auto fn = static_cast<double>(c.fn);

  MetricSet m;
  m.sensitivity = tp + fn > 0.0 ? tp / (tp + fn) : kUndefined;
  m.specificity = tn + fp > 0.0 ? tn / (tn + fp) : kUndefined;
  m.precision = tp + fp > 0.0 ? tp / (tp + fp) : kUndefined;
  const double f_denom = tp + 0.5 * (fp + fn);
  m.f_score = f_denom > 0.0 ? tp / f_denom : kUndefined;
  const double mcc_denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  m.mcc = mcc_denom > 0.0 ? (tp * tn - fp * fn) / std::sqrt(mcc_denom) : kUndefined;
  return m;
}

namespace {

struct ReplicateOutput {
  BenchRow mi4p;
  BenchRow baseline;
};

double metric_by_name(const BenchRow& row, const std::string& name) {
  if (name == "sensitivity") return row.scores.sensitivity;
  if (name == "specificity") return row.scores.specificity;
  if (name == "precision") return row.scores.precision;
  if (name == "f_score") return row.scores.f_score;
  if (name == "mcc") return row.scores.mcc;
  if (name == "tp") return static_cast<double>(row.counts.tp);
  if (name == "fp") return static_cast<double>(row.counts.fp);
  if (name == "tn") return static_cast<double>(row.counts.tn);
  if (name == "fn") return static_cast<double>(row.counts.fn);
  throw std::invalid_argument("unknown bench metric '" + name + "'");
}

BenchRow score_workflow(const WorkflowResult& wf, const std::vector<bool>& truth,
                        double mv_fraction, int replicate, const std::string& name) {
  BenchRow row;
  row.mv_fraction = mv_fraction;
  row.replicate = replicate;
  row.workflow = name;
  row.draws = wf.draws_used;
  row.tested_rows = static_cast<int>(truth.size());
  row.counts = confusion(wf.reports.front().decided, truth);
  row.scores = metrics(row.counts);
  return row;
}

}  // namespace

BenchResult bench(const BenchOptions& opts) {
  if (opts.replicates < 1) throw std::invalid_argument("bench: replicates must be positive");
  if (opts.mv_grid.empty()) throw std::invalid_argument("bench: empty missingness grid");

  const std::size_t cells = opts.mv_grid.size() * static_cast<std::size_t>(opts.replicates);
  std::vector<ReplicateOutput> outputs(cells);

  const RngStream root =
      RngStream(opts.seed).derive(rng_tag::bench, static_cast<std::uint64_t>(opts.design_id));

  parallel_for(cells, opts.threads, [&](std::size_t cell) {
    const std::size_t frac_idx = cell / static_cast<std::size_t>(opts.replicates);
    const int replicate = static_cast<int>(cell % static_cast<std::size_t>(opts.replicates));
    const double fraction = opts.mv_grid[frac_idx];

    const RngStream keys = root.derive(frac_idx, static_cast<std::uint64_t>(replicate));
    SimData sim = gen_sim(opts.design_id, keys.derive(1).key());
    IntensityMatrix working = fraction > 0.0
                                  ? ampute_mcar(sim.matrix, fraction, keys.derive(2).key())
                                  : sim.matrix;
    if (opts.normalize) working = quantile_normalize(working);

    // The real-data presence rule (>=1 per condition) keeps the imputation
    // precondition satisfied; only kept rows are tested and scored.
    const auto kept = presence_kept_rows(working, sim.design, 1);
    const IntensityMatrix filtered = working.subset_rows(kept);
    std::vector<bool> truth;
    truth.reserve(kept.size());
    for (const auto idx : kept) truth.push_back(sim.truth.de_rows[static_cast<std::size_t>(idx)]);

    const std::vector<Contrast> contrasts = {Contrast{1, 0}};

    WorkflowOptions wf_opts;
    wf_opts.engine = opts.engine;
    wf_opts.fdr = opts.fdr;
    wf_opts.seed = keys.derive(3).key();
    const WorkflowResult mi = run_mi_workflow(filtered, sim.design, contrasts, wf_opts);

    WorkflowOptions base_opts = wf_opts;
    base_opts.seed = keys.derive(4).key();
    const WorkflowResult single = run_single_workflow(filtered, sim.design, contrasts, base_opts);

    outputs[cell].mi4p = score_workflow(mi, truth, fraction, replicate, "mi4p");
    outputs[cell].baseline = score_workflow(single, truth, fraction, replicate, "baseline");
  });

  BenchResult result;
  result.options = opts;
  result.rows.reserve(cells * 2);
  for (std::size_t frac_idx = 0; frac_idx < opts.mv_grid.size(); ++frac_idx) {
    for (int r = 0; r < opts.replicates; ++r) {
      const std::size_t cell = frac_idx * static_cast<std::size_t>(opts.replicates) +
                               static_cast<std::size_t>(r);
      result.rows.push_back(outputs[cell].mi4p);
      result.rows.push_back(outputs[cell].baseline);
    }
  }

  const std::vector<std::string> metric_names = {"tp",        "fp",          "tn",
                                                 "fn",        "sensitivity", "specificity",
                                                 "precision", "f_score",     "mcc"};
  for (const double fraction : opts.mv_grid) {
    for (const std::string workflow : {"mi4p", "baseline"}) {
      for (const auto& name : metric_names) {
        BenchSummaryRow s;
        s.mv_fraction = fraction;
        s.workflow = workflow;
        s.metric = name;
        double sum = 0.0;
        int defined = 0, undefined = 0;
        for (const auto& row : result.rows) {
          if (row.mv_fraction != fraction || row.workflow != workflow) continue;
          const double v = metric_by_name(row, name);
          if (std::isnan(v)) {
            ++undefined;
          } else {
            sum += v;
            ++defined;
          }
        }
        s.n_defined = defined;
        s.n_undefined = undefined;
        s.mean = defined > 0 ? sum / defined : kUndefined;
        if (defined > 1) {
          double ss = 0.0;
          for (const auto& row : result.rows) {
            if (row.mv_fraction != fraction || row.workflow != workflow) continue;
            const double v = metric_by_name(row, name);
            if (!std::isnan(v)) ss += (v - s.mean) * (v - s.mean);
          }
          s.sd = std::sqrt(ss / (defined - 1));
        } else {
          s.sd = kUndefined;
        }
        result.summary.push_back(std::move(s));
      }
    }
  }
  return result;
}

void write_bench_rows(const BenchResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write bench rows: " + path.string());
  out << "design,mv,replicate,workflow,method,draws,tested_rows,tp,fp,tn,fn,"
         "sensitivity,specificity,precision,f_score,mcc\n";
  for (const auto& row : result.rows) {
    out << result.options.design_id << ',' << format_g17(row.mv_fraction) << ',' << row.replicate
        << ',' << row.workflow << ',' << to_string(result.options.engine.method) << ','
        << row.draws << ',' << row.tested_rows << ',' << row.counts.tp << ',' << row.counts.fp
        << ',' << row.counts.tn << ',' << row.counts.fn << ',' << format_g17(row.scores.sensitivity)
        << ',' << format_g17(row.scores.specificity) << ',' << format_g17(row.scores.precision)
        << ',' << format_g17(row.scores.f_score) << ',' << format_g17(row.scores.mcc) << '\n';
  }
  if (!out) throw std::runtime_error("I/O failure writing " + path.string());
}

void write_bench_summary(const BenchResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write bench summary: " + path.string());
  out << "design,mv,workflow,method,metric,mean,sd,n_defined,n_undefined\n";
  for (const auto& s : result.summary) {
    out << result.options.design_id << ',' << format_g17(s.mv_fraction) << ',' << s.workflow << ','
        << to_string(result.options.engine.method) << ',' << s.metric << ','
        << format_g17(s.mean) << ',' << format_g17(s.sd) << ',' << s.n_defined << ','
        << s.n_undefined << '\n';
  }
  if (!out) throw std::runtime_error("I/O failure writing " + path.string());
}

double bench_metric_mean(const BenchResult& result, double mv_fraction,
                         const std::string& workflow, const std::string& metric) {
  for (const auto& s : result.summary) {
    if (s.mv_fraction == mv_fraction && s.workflow == workflow && s.metric == metric) {
      return s.mean;
    }
  }
  throw std::invalid_argument("bench summary has no entry for the requested cell");
}

}  // namespace mipipe
