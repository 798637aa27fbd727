// mipipe: multiple-imputation differential analysis for incomplete
// quantitative matrices. Subcommands cover the whole workflow: simulate,
// ampute, normalize, filter, impute, aggregate, analyze, evaluate, bench.

#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mipipe/aggregate.hpp"
#include "mipipe/csv.hpp"
#include "mipipe/evaluate.hpp"
#include "mipipe/infer.hpp"
#include "mipipe/preprocess.hpp"
#include "mipipe/simulate.hpp"
#include "mipipe/version.hpp"
#include "mipipe/workflow.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

// One manifest per invocation, beside the primary output. Flags and seed
// are enough to replay the run; the timestamp is informative only.
void write_run_manifest(const fs::path& primary_output, const std::string& command,
                        const std::vector<std::string>& argv, std::uint64_t seed,
                        const json& config, const std::vector<std::string>& outputs) {
  json manifest;
  manifest["tool"] = "mipipe";
  manifest["version"] = mipipe::kVersion;
  manifest["command"] = command;
  manifest["argv"] = argv;
  manifest["seed"] = seed;
  manifest["config"] = config;
  manifest["config_hash"] = hex64(fnv1a64(config.dump()));
  manifest["outputs"] = outputs;
  manifest["timestamp"] = iso_timestamp();
  fs::path path = primary_output;
  path += ".manifest.json";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  out << manifest.dump(2) << '\n';
}

std::vector<std::string> collect_argv(int argc, char** argv) {
  return std::vector<std::string>(argv, argv + argc);
}

mipipe::EngineConfig engine_from_flags(const std::string& method, int k, int ncp, int trees,
                                       int max_iter, double tol, bool mle_deterministic) {
  mipipe::EngineConfig cfg;
  cfg.method = mipipe::impute_method_from_string(method);
  cfg.k_neighbors = k;
  cfg.n_components = ncp;
  cfg.rf_trees = trees;
  cfg.max_iter = max_iter;
  cfg.tol = tol;
  cfg.mle_deterministic = mle_deterministic;
  cfg.validate();
  return cfg;
}

json engine_to_json(const mipipe::EngineConfig& cfg) {
  return json{{"method", mipipe::to_string(cfg.method)},
              {"k_neighbors", cfg.k_neighbors},
              {"n_components", cfg.n_components},
              {"rf_trees", cfg.rf_trees},
              {"max_iter", cfg.max_iter},
              {"tol", cfg.tol},
              {"mle_deterministic", cfg.mle_deterministic}};
}

int parse_draws(const std::string& s) {
  if (s == "auto") return 0;
  const int v = std::stoi(s);
  if (v < 1) throw std::runtime_error("--draws must be a positive integer or 'auto'");
  return v;
}

std::vector<double> parse_fraction_list(const std::string& s) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t pos = s.find(',', start);
    const std::string tok = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (!tok.empty()) out.push_back(std::stod(tok));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (out.empty()) throw std::runtime_error("--mv expects a comma-separated fraction list");
  return out;
}

struct StackManifest {
  mipipe::EngineConfig cfg;
  std::uint64_t seed = 0;
  int draws = 0;
  double missing_fraction = 0.0;
  bool protein_column = false;
  std::vector<fs::path> files;
};

void write_stack(const mipipe::ImputedStack& stack, const mipipe::EngineConfig& cfg,
                 double missing_fraction, int rule_draws, const std::string& prefix) {
  const fs::path prefix_path(prefix);
  json manifest;
  manifest["method"] = mipipe::to_string(stack.method);
  manifest["seed"] = stack.seed;
  manifest["draws"] = stack.draw_count();
  manifest["rule_draws"] = rule_draws;
  manifest["missing_fraction"] = missing_fraction;
  manifest["protein_column"] = stack.has_proteins();
  manifest["config"] = engine_to_json(cfg);
  json files = json::array();
  for (int t = 0; t < stack.draw_count(); ++t) {
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "_d%03d.csv", t + 1);
    fs::path draw_path = prefix_path;
    draw_path += suffix;
    mipipe::write_matrix(stack.draw_matrix(t), draw_path);
    files.push_back(draw_path.filename().string());
  }
  manifest["files"] = files;
  fs::path manifest_path = prefix_path;
  manifest_path += "_manifest.json";
  std::ofstream out(manifest_path);
  if (!out) throw std::runtime_error("cannot write stack manifest: " + manifest_path.string());
  out << manifest.dump(2) << '\n';
}

StackManifest read_stack_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stack manifest: " + path.string());
  json manifest = json::parse(in);
  StackManifest sm;
  sm.cfg.method = mipipe::impute_method_from_string(manifest.at("method").get<std::string>());
  if (manifest.contains("config")) {
    const auto& c = manifest["config"];
    sm.cfg.k_neighbors = c.value("k_neighbors", sm.cfg.k_neighbors);
    sm.cfg.n_components = c.value("n_components", sm.cfg.n_components);
    sm.cfg.rf_trees = c.value("rf_trees", sm.cfg.rf_trees);
    sm.cfg.max_iter = c.value("max_iter", sm.cfg.max_iter);
    sm.cfg.tol = c.value("tol", sm.cfg.tol);
    sm.cfg.mle_deterministic = c.value("mle_deterministic", sm.cfg.mle_deterministic);
  }
  sm.seed = manifest.at("seed").get<std::uint64_t>();
  sm.draws = manifest.at("draws").get<int>();
  sm.missing_fraction = manifest.value("missing_fraction", 0.0);
  sm.protein_column = manifest.value("protein_column", false);
  for (const auto& f : manifest.at("files")) {
    sm.files.push_back(path.parent_path() / f.get<std::string>());
  }
  return sm;
}

mipipe::ImputedStack load_stack(const StackManifest& sm) {
  mipipe::ImputedStack stack;
  stack.method = sm.cfg.method;
  stack.seed = sm.seed;
  mipipe::MatrixParseOptions opts;
  opts.protein_column = sm.protein_column;
  bool first = true;
  for (const auto& file : sm.files) {
    const mipipe::IntensityMatrix m = mipipe::read_matrix(file, opts);
    if (!m.complete()) {
      throw std::runtime_error("stack draw is not complete: " + file.string());
    }
    if (first) {
      stack.row_ids = m.row_ids;
      stack.protein_ids = m.protein_ids;
      stack.col_ids = m.col_ids;
      first = false;
    }
    stack.draws.push_back(m.values);
  }
  if (stack.draws.empty()) throw std::runtime_error("stack manifest lists no draws");
  return stack;
}

struct ReportRows {
  std::vector<std::string> contrast;
  std::vector<std::string> row_id;
  std::vector<bool> decided;
};

ReportRows read_report_decisions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report: " + path.string());
  ReportRows rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t pos = line.find(',', start);
      fields.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (fields.size() != 8) throw std::runtime_error("malformed report row: " + line);
    rows.row_id.push_back(fields[0]);
    rows.contrast.push_back(fields[1]);
    rows.decided.push_back(fields[7] == "1");
  }
  return rows;
}

void log_workflow_notes(const mipipe::WorkflowResult& result) {
  if (result.rule_draws < 2 && result.draws_used == 2) {
    std::cerr << "note: draw-count rule gave " << result.rule_draws
              << ", floored to 2 (Rubin's second rule needs D >= 2)\n";
  }
  if (result.degenerate_between) {
    std::cerr << "warning: all imputation draws identical; between-imputation variance is "
                 "degenerate (deterministic engine?)\n";
  }
  std::cerr << "note: moderation prior d0=" << result.d0 << " s0_sq=" << result.s0_sq
            << " draws=" << result.draws_used << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiple-imputation differential analysis workflow"};
  app.set_version_flag("--version", mipipe::kVersion);
  app.require_subcommand(1);
  const std::vector<std::string> full_argv = collect_argv(argc, argv);

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand("simulate", "generate one of the simulation designs");
  int sim_design = 1;
  std::uint64_t sim_seed = 1;
  std::string sim_out, sim_design_out, sim_truth_out;
  sim_cmd->add_option("--design", sim_design, "design id")->check(CLI::Range(1, 3))->required();
  sim_cmd->add_option("--seed", sim_seed, "RNG seed")->required();
  sim_cmd->add_option("--out", sim_out, "output matrix CSV")->required();
  sim_cmd->add_option("--design-out", sim_design_out, "output design CSV")->required();
  sim_cmd->add_option("--truth-out", sim_truth_out, "output truth CSV")->required();

  // ---- ampute ----
  auto* amp_cmd = app.add_subcommand("ampute", "mask observed cells completely at random");
  std::string amp_in, amp_out;
  double amp_prop = 0.0;
  std::uint64_t amp_seed = 1;
  amp_cmd->add_option("--in", amp_in, "input matrix CSV")->required();
  amp_cmd->add_option("--prop", amp_prop, "fraction of all cells to mask")->required();
  amp_cmd->add_option("--seed", amp_seed, "RNG seed")->required();
  amp_cmd->add_option("--out", amp_out, "output matrix CSV")->required();

  // ---- normalize ----
  auto* norm_cmd = app.add_subcommand("normalize", "quantile normalization");
  std::string norm_in, norm_out;
  bool norm_log2 = false;
  norm_cmd->add_option("--in", norm_in)->required();
  norm_cmd->add_option("--out", norm_out)->required();
  norm_cmd->add_flag("--log2", norm_log2, "log2-transform before normalizing");

  // ---- filter ----
  auto* filt_cmd = app.add_subcommand("filter", "presence filter per condition");
  std::string filt_in, filt_design, filt_out;
  int filt_k = 1;
  filt_cmd->add_option("--in", filt_in)->required();
  filt_cmd->add_option("--design", filt_design)->required();
  filt_cmd->add_option("--min-per-condition", filt_k, "minimum observed per condition");
  filt_cmd->add_option("--out", filt_out)->required();

  // ---- impute ----
  auto* imp_cmd = app.add_subcommand("impute", "multiple imputation to a stack of draws");
  std::string imp_in, imp_design, imp_method = "mle", imp_draws = "auto", imp_prefix;
  std::uint64_t imp_seed = 1;
  int imp_k = 10, imp_ncp = 2, imp_trees = 100, imp_max_iter = 10;
  double imp_tol = 1e-4;
  bool imp_mle_det = false, imp_protein = false;
  imp_cmd->add_option("--in", imp_in)->required();
  imp_cmd->add_option("--design", imp_design)->required();
  imp_cmd->add_option("--method", imp_method, "knn|mle|norm|pca|rf");
  imp_cmd->add_option("--draws", imp_draws, "draw count or 'auto'");
  imp_cmd->add_option("--seed", imp_seed)->required();
  imp_cmd->add_option("--out-prefix", imp_prefix, "prefix for draw CSVs + manifest")->required();
  imp_cmd->add_option("--k", imp_k, "kNN neighbor count");
  imp_cmd->add_option("--ncp", imp_ncp, "PCA component count");
  imp_cmd->add_option("--trees", imp_trees, "random-forest tree count");
  imp_cmd->add_option("--max-iter", imp_max_iter);
  imp_cmd->add_option("--tol", imp_tol);
  imp_cmd->add_flag("--mle-deterministic", imp_mle_det, "conditional means instead of draws");
  imp_cmd->add_flag("--protein-col", imp_protein, "input has a protein id column");

  // ---- aggregate ----
  auto* agg_cmd = app.add_subcommand("aggregate", "peptide-to-protein roll-up of a stack");
  std::string agg_in, agg_prefix;
  agg_cmd->add_option("--in", agg_in, "stack manifest JSON")->required();
  agg_cmd->add_option("--out-prefix", agg_prefix, "prefix for protein-level draws + manifest")
      ->required();

  // ---- analyze ----
  auto* ana_cmd = app.add_subcommand("analyze", "full differential-analysis pipeline");
  std::string ana_in, ana_design, ana_method = "mle", ana_draws = "auto", ana_out;
  std::string ana_contrast, ana_dump_pooled;
  std::uint64_t ana_seed = 1;
  double ana_fdr = 0.01, ana_tol = 1e-4;
  int ana_k = 10, ana_ncp = 2, ana_trees = 100, ana_max_iter = 10, ana_filter_min = 0;
  int ana_threads = 1;
  bool ana_norm = false, ana_log2 = false, ana_aggregate = false, ana_protein = false;
  bool ana_mle_det = false, ana_eq9 = false;
  ana_cmd->add_option("--in", ana_in)->required();
  ana_cmd->add_option("--design", ana_design)->required();
  ana_cmd->add_option("--method", ana_method, "knn|mle|norm|pca|rf");
  ana_cmd->add_option("--draws", ana_draws, "draw count or 'auto'");
  ana_cmd->add_option("--seed", ana_seed)->required();
  ana_cmd->add_option("--fdr", ana_fdr, "BH threshold on adjusted p-values");
  ana_cmd->add_option("--out", ana_out, "report CSV")->required();
  ana_cmd->add_option("--contrast", ana_contrast, "condition pair 'a,b' (default: all pairs)");
  ana_cmd->add_option("--filter-min", ana_filter_min,
                      "presence filter: minimum observed per condition");
  ana_cmd->add_option("--dump-pooled", ana_dump_pooled, "write pooled beta/covariance CSV");
  ana_cmd->add_option("--k", ana_k);
  ana_cmd->add_option("--ncp", ana_ncp);
  ana_cmd->add_option("--trees", ana_trees);
  ana_cmd->add_option("--max-iter", ana_max_iter);
  ana_cmd->add_option("--tol", ana_tol);
  ana_cmd->add_option("--threads", ana_threads)->envname("MIPIPE_THREADS");
  ana_cmd->add_flag("--normalize", ana_norm, "quantile-normalize before imputing");
  ana_cmd->add_flag("--log2", ana_log2, "log2-transform first");
  ana_cmd->add_flag("--aggregate", ana_aggregate, "roll peptides up to proteins");
  ana_cmd->add_flag("--protein-col", ana_protein, "input has a protein id column");
  ana_cmd->add_flag("--mle-deterministic", ana_mle_det);
  ana_cmd->add_flag("--eq9-literal", ana_eq9, "divide by moderated variance, not its sqrt");

  // ---- evaluate ----
  auto* eval_cmd = app.add_subcommand("evaluate", "score a report against simulation truth");
  std::string eval_report, eval_truth, eval_out;
  eval_cmd->add_option("--report", eval_report)->required();
  eval_cmd->add_option("--truth", eval_truth)->required();
  eval_cmd->add_option("--out", eval_out)->required();

  // ---- bench ----
  auto* bench_cmd = app.add_subcommand("bench", "simulation benchmark: mi4p vs baseline");
  int bench_design = 1, bench_reps = 30, bench_threads = 1;
  std::string bench_mv = "0.01,0.05,0.1,0.15,0.2,0.25", bench_method = "mle", bench_out;
  double bench_fdr = 0.01, bench_tol = 1e-4;
  int bench_k = 10, bench_ncp = 2, bench_trees = 100, bench_max_iter = 10;
  std::uint64_t bench_seed = 1;
  bool bench_mle_det = false, bench_normalize = false;
  std::string bench_summary_out;
  bench_cmd->add_option("--design", bench_design)->check(CLI::Range(1, 3))->required();
  bench_cmd->add_option("--reps", bench_reps, "replicates per fraction");
  bench_cmd->add_option("--mv", bench_mv, "comma-separated missingness fractions");
  bench_cmd->add_option("--method", bench_method, "knn|mle|norm|pca|rf");
  bench_cmd->add_option("--fdr", bench_fdr);
  bench_cmd->add_option("--seed", bench_seed)->required();
  bench_cmd->add_option("--out", bench_out, "per-replicate results CSV")->required();
  bench_cmd->add_option("--summary-out", bench_summary_out, "mean/sd summary CSV");
  bench_cmd->add_option("--threads", bench_threads)->envname("MIPIPE_THREADS");
  bench_cmd->add_option("--k", bench_k);
  bench_cmd->add_option("--ncp", bench_ncp);
  bench_cmd->add_option("--trees", bench_trees);
  bench_cmd->add_option("--max-iter", bench_max_iter);
  bench_cmd->add_option("--tol", bench_tol);
  bench_cmd->add_flag("--mle-deterministic", bench_mle_det);
  bench_cmd->add_flag("--normalize", bench_normalize, "quantile-normalize simulated data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim_cmd) {
      const mipipe::SimData sim = mipipe::gen_sim(sim_design, sim_seed);
      mipipe::write_matrix(sim.matrix, sim_out);
      mipipe::write_design(sim.design, sim_design_out);
      mipipe::write_truth(sim.matrix.row_ids, sim.truth.de_rows, sim_truth_out);
      write_run_manifest(sim_out, "simulate", full_argv, sim_seed,
                         json{{"design", sim_design}},
                         {sim_out, sim_design_out, sim_truth_out});
    } else if (*amp_cmd) {
      const auto m = mipipe::read_matrix(amp_in);
      mipipe::write_matrix(mipipe::ampute_mcar(m, amp_prop, amp_seed), amp_out);
      write_run_manifest(amp_out, "ampute", full_argv, amp_seed, json{{"prop", amp_prop}},
                         {amp_out});
    } else if (*norm_cmd) {
      auto m = mipipe::read_matrix(norm_in);
      if (norm_log2) m = mipipe::log2_transform(m);
      mipipe::write_matrix(mipipe::quantile_normalize(m), norm_out);
      write_run_manifest(norm_out, "normalize", full_argv, 0, json{{"log2", norm_log2}},
                         {norm_out});
    } else if (*filt_cmd) {
      const auto m = mipipe::read_matrix(filt_in);
      const auto d = mipipe::read_design(filt_design).aligned_to(m.col_ids);
      mipipe::write_matrix(mipipe::filter_presence(m, d, filt_k), filt_out);
      write_run_manifest(filt_out, "filter", full_argv, 0, json{{"min_per_condition", filt_k}},
                         {filt_out});
    } else if (*imp_cmd) {
      mipipe::MatrixParseOptions popts;
      popts.protein_column = imp_protein;
      const auto m = mipipe::read_matrix(imp_in, popts);
      const auto d = mipipe::read_design(imp_design).aligned_to(m.col_ids);
      const auto cfg = engine_from_flags(imp_method, imp_k, imp_ncp, imp_trees, imp_max_iter,
                                         imp_tol, imp_mle_det);
      const double fraction = m.missing_fraction();
      const int requested = parse_draws(imp_draws);
      const int rule = static_cast<int>(std::llround(100.0 * fraction));
      const int draws = requested > 0 ? requested : mipipe::choose_draw_count(fraction);
      if (requested == 0 && rule < 2) {
        std::cerr << "note: draw-count rule gave " << rule << ", floored to 2\n";
      }
      const auto stack = mipipe::impute_multiple(m, d, draws, cfg, imp_seed);
      write_stack(stack, cfg, fraction, rule, imp_prefix);
      write_run_manifest(imp_prefix, "impute", full_argv, imp_seed, engine_to_json(cfg),
                         {imp_prefix + "_manifest.json"});
    } else if (*agg_cmd) {
      const StackManifest sm = read_stack_manifest(agg_in);
      const auto stack = load_stack(sm);
      const auto protein_stack = mipipe::aggregate_sum(stack);
      write_stack(protein_stack, sm.cfg, sm.missing_fraction, sm.draws, agg_prefix);
      write_run_manifest(agg_prefix, "aggregate", full_argv, sm.seed, engine_to_json(sm.cfg),
                         {agg_prefix + "_manifest.json"});
    } else if (*ana_cmd) {
      mipipe::MatrixParseOptions popts;
      popts.protein_column = ana_protein || ana_aggregate;
      auto m = mipipe::read_matrix(ana_in, popts);
      const auto d = mipipe::read_design(ana_design).aligned_to(m.col_ids);
      if (ana_aggregate) m = mipipe::filter_unique(m);
      if (ana_log2) m = mipipe::log2_transform(m);
      if (ana_norm) m = mipipe::quantile_normalize(m);
      if (ana_filter_min > 0) m = mipipe::filter_presence(m, d, ana_filter_min);

      std::vector<mipipe::Contrast> contrasts;
      if (!ana_contrast.empty()) {
        const auto comma = ana_contrast.find(',');
        if (comma == std::string::npos) {
          throw std::runtime_error("--contrast expects 'conditionA,conditionB'");
        }
        const std::string la = ana_contrast.substr(0, comma);
        const std::string lb = ana_contrast.substr(comma + 1);
        const auto find_cond = [&](const std::string& label) {
          for (int g = 0; g < d.n_conditions(); ++g) {
            if (d.conditions[static_cast<std::size_t>(g)] == label) return g;
          }
          throw std::runtime_error("unknown condition '" + label + "' in --contrast");
        };
        contrasts.push_back(mipipe::make_contrast(d, find_cond(la), find_cond(lb)));
      } else {
        contrasts = mipipe::all_pairs(d);
      }

      mipipe::WorkflowOptions wopts;
      wopts.engine = engine_from_flags(ana_method, ana_k, ana_ncp, ana_trees, ana_max_iter,
                                       ana_tol, ana_mle_det);
      wopts.draws = parse_draws(ana_draws);
      wopts.fdr = ana_fdr;
      wopts.aggregate = ana_aggregate;
      wopts.eq9_literal = ana_eq9;
      wopts.seed = ana_seed;
      (void)ana_threads;  // workflow stages are row-parallel internally only via bench

      const auto result = mipipe::run_mi_workflow(m, d, contrasts, wopts);
      log_workflow_notes(result);

      // Single CSV with one block of rows per contrast.
      {
        std::ofstream rep(ana_out);
        if (!rep) throw std::runtime_error("cannot write report: " + ana_out);
        rep << "# d0=" << mipipe::format_g17(result.d0) << '\n';
        rep << "# s0_sq=" << mipipe::format_g17(result.s0_sq) << '\n';
        rep << "# draws=" << result.draws_used << '\n';
        rep << "# method=" << mipipe::to_string(wopts.engine.method) << '\n';
        rep << "# seed=" << ana_seed << '\n';
        rep << "# fdr=" << mipipe::format_g17(ana_fdr) << '\n';
        rep << "row_id,contrast,logfc,t,df,p,p_adj,decided\n";
        for (const auto& report : result.reports) {
          for (Eigen::Index i = 0; i < report.logfc.size(); ++i) {
            const auto s = static_cast<std::size_t>(i);
            rep << report.row_ids[s] << ',' << report.contrast_label << ','
                << mipipe::format_g17(report.logfc(i)) << ',' << mipipe::format_g17(report.t(i))
                << ',' << mipipe::format_g17(report.df) << ',' << mipipe::format_g17(report.p(i))
                << ',' << mipipe::format_g17(report.p_adj(i)) << ','
                << static_cast<int>(report.decided[s]) << '\n';
          }
        }
        if (!rep) throw std::runtime_error("I/O failure writing " + ana_out);
      }

      if (!ana_dump_pooled.empty()) {
        std::ofstream pooled(ana_dump_pooled);
        if (!pooled) throw std::runtime_error("cannot write " + ana_dump_pooled);
        pooled << "row_id";
        for (const auto& cond : d.conditions) pooled << ",beta_" << cond;
        for (const auto& cond : d.conditions) pooled << ",sigma_" << cond;
        pooled << ",projected_s_sq\n";
        for (Eigen::Index i = 0; i < result.pooled_beta.rows(); ++i) {
          pooled << result.row_ids[static_cast<std::size_t>(i)];
          for (int g = 0; g < d.n_conditions(); ++g) {
            pooled << ',' << mipipe::format_g17(result.pooled_beta(i, g));
          }
          for (int g = 0; g < d.n_conditions(); ++g) {
            pooled << ',' << mipipe::format_g17(result.pooled_sigma_diag(i, g));
          }
          pooled << ',' << mipipe::format_g17(result.pooled_variance(i)) << '\n';
        }
      }

      json config = engine_to_json(wopts.engine);
      config["draws"] = ana_draws;
      config["fdr"] = ana_fdr;
      config["aggregate"] = ana_aggregate;
      config["normalize"] = ana_norm;
      config["log2"] = ana_log2;
      config["filter_min"] = ana_filter_min;
      config["eq9_literal"] = ana_eq9;
      std::vector<std::string> outputs = {ana_out};
      if (!ana_dump_pooled.empty()) outputs.push_back(ana_dump_pooled);
      write_run_manifest(ana_out, "analyze", full_argv, ana_seed, config, outputs);
    } else if (*eval_cmd) {
      const ReportRows rows = read_report_decisions(eval_report);
      const std::vector<bool> truth = mipipe::read_truth(eval_truth);

      // Truth rows are positional; map report row ids through the truth
      // file's own ids.
      std::ifstream tin(eval_truth);
      std::map<std::string, bool> truth_by_id;
      {
        std::string line;
        std::size_t idx = 0;
        bool first = true;
        while (std::getline(tin, line)) {
          if (line.empty()) continue;
          const auto comma = line.find(',');
          const std::string id = line.substr(0, comma);
          if (first && id == "row_id") {
            first = false;
            continue;
          }
          first = false;
          if (idx >= truth.size()) break;
          truth_by_id[id] = truth[idx++];
        }
      }

      std::map<std::string, std::pair<std::vector<bool>, std::vector<bool>>> by_contrast;
      for (std::size_t i = 0; i < rows.row_id.size(); ++i) {
        auto it = truth_by_id.find(rows.row_id[i]);
        if (it == truth_by_id.end()) {
          throw std::runtime_error("report row '" + rows.row_id[i] + "' missing from truth file");
        }
        auto& bucket = by_contrast[rows.contrast[i]];
        bucket.first.push_back(rows.decided[i]);
        bucket.second.push_back(it->second);
      }

      std::ofstream out(eval_out);
      if (!out) throw std::runtime_error("cannot write " + eval_out);
      out << "contrast,tested,tp,fp,tn,fn,sensitivity,specificity,precision,f_score,mcc\n";
      for (const auto& [label, bucket] : by_contrast) {
        const auto counts = mipipe::confusion(bucket.first, bucket.second);
        const auto scores = mipipe::metrics(counts);
        out << label << ',' << counts.total() << ',' << counts.tp << ',' << counts.fp << ','
            << counts.tn << ',' << counts.fn << ',' << mipipe::format_g17(scores.sensitivity)
            << ',' << mipipe::format_g17(scores.specificity) << ','
            << mipipe::format_g17(scores.precision) << ',' << mipipe::format_g17(scores.f_score)
            << ',' << mipipe::format_g17(scores.mcc) << '\n';
      }
      write_run_manifest(eval_out, "evaluate", full_argv, 0, json::object(), {eval_out});
    } else if (*bench_cmd) {
      mipipe::BenchOptions bopts;
      bopts.design_id = bench_design;
      bopts.replicates = bench_reps;
      bopts.mv_grid = parse_fraction_list(bench_mv);
      bopts.engine = engine_from_flags(bench_method, bench_k, bench_ncp, bench_trees,
                                       bench_max_iter, bench_tol, bench_mle_det);
      bopts.fdr = bench_fdr;
      bopts.seed = bench_seed;
      bopts.threads = bench_threads;
      bopts.normalize = bench_normalize;
      const auto result = mipipe::bench(bopts);
      mipipe::write_bench_rows(result, bench_out);
      const std::string summary_path = bench_summary_out.empty()
                                           ? (fs::path(bench_out).parent_path() /
                                              (fs::path(bench_out).stem().string() + "_summary.csv"))
                                                 .string()
                                           : bench_summary_out;
      mipipe::write_bench_summary(result, summary_path);
      json config = engine_to_json(bopts.engine);
      config["design"] = bench_design;
      config["reps"] = bench_reps;
      config["mv"] = bopts.mv_grid;
      config["fdr"] = bench_fdr;
      config["normalize"] = bench_normalize;
      write_run_manifest(bench_out, "bench", full_argv, bench_seed, config,
                         {bench_out, summary_path});
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
