#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#ifndef MIPIPE_CLI_BIN
#define MIPIPE_CLI_BIN "mipipe"
#endif

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MIPIPE_CLI_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "mipipe_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_data_rows(const fs::path& report) {
  std::ifstream in(report);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("row_id,", 0) == 0) continue;
    ++rows;
  }
  return rows;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("simulate, ampute, analyze end to end") {
  const auto dir = work_dir();
  const auto m = (dir / "m.csv").string();
  const auto d = (dir / "d.csv").string();
  const auto t = (dir / "t.csv").string();
  const auto ma = (dir / "ma.csv").string();
  const auto report = (dir / "report.csv").string();

  REQUIRE(run_cli("simulate --design 1 --seed 7 --out " + m + " --design-out " + d +
                  " --truth-out " + t) == 0);
  REQUIRE(run_cli("ampute --in " + m + " --prop 0.1 --seed 8 --out " + ma) == 0);
  REQUIRE(run_cli("analyze --in " + ma + " --design " + d +
                  " --method mle --draws auto --seed 9 --fdr 0.01 --filter-min 1 --out " +
                  report) == 0);
  CHECK(count_data_rows(report) == 200);
  CHECK(fs::exists(report + ".manifest.json"));

  // evaluate the report against the truth labels
  const auto metrics_csv = (dir / "metrics.csv").string();
  REQUIRE(run_cli("evaluate --report " + report + " --truth " + t + " --out " + metrics_csv) == 0);
  const std::string text = slurp(metrics_csv);
  CHECK(text.find("contrast,tested") == 0);
  CHECK(text.find("c2-vs-c1") != std::string::npos);
}

TEST_CASE("unknown flag exits with the usage code") {
  CHECK(run_cli("simulate --no-such-flag 1") == 2);
  CHECK(run_cli("frobnicate") == 2);
}

TEST_CASE("missing required options exit with the usage code") {
  CHECK(run_cli("analyze") == 2);
  CHECK(run_cli("simulate --design 1") == 2);
}

TEST_CASE("data errors exit with code one") {
  const auto dir = work_dir();
  const auto bad = (dir / "bad.csv").string();
  std::ofstream(bad) << "id,s1,s2\na,1,oops\n";
  CHECK(run_cli("ampute --in " + bad + " --prop 0.1 --seed 1 --out " + (dir / "x.csv").string()) ==
        1);
}

TEST_CASE("identical flags and seed reproduce the report byte for byte") {
  const auto dir = work_dir();
  const auto m = (dir / "m2.csv").string();
  const auto d = (dir / "d2.csv").string();
  const auto t = (dir / "t2.csv").string();
  const auto r1 = (dir / "r1.csv").string();
  const auto r2 = (dir / "r2.csv").string();
  REQUIRE(run_cli("simulate --design 1 --seed 21 --out " + m + " --design-out " + d +
                  " --truth-out " + t) == 0);
  const std::string analyze_args = " --design " + d +
                                   " --method norm --draws 3 --seed 22 --fdr 0.05 --out ";
  REQUIRE(run_cli("analyze --in " + m + analyze_args + r1) == 0);
  REQUIRE(run_cli("analyze --in " + m + analyze_args + r2) == 0);
  CHECK(slurp(r1) == slurp(r2));
}

TEST_CASE("impute then aggregate via stack manifests") {
  const auto dir = work_dir();
  // Peptide matrix with protein ids and a couple of missing cells.
  const auto pep = dir / "pep.csv";
  std::ofstream(pep) << "id,protein,s1,s2,s3,s4\n"
                        "pep1,P1,10,11,10.5,10.2\n"
                        "pep2,P1,12,NA,12.2,12.1\n"
                        "pep3,P2,20,20.5,NA,20.2\n";
  const auto des = dir / "pep_design.csv";
  std::ofstream(des) << "sample,condition\ns1,a\ns2,a\ns3,b\ns4,b\n";

  const auto prefix = (dir / "stack").string();
  REQUIRE(run_cli("impute --in " + pep.string() + " --design " + des.string() +
                  " --method knn --k 2 --draws 2 --seed 3 --protein-col --out-prefix " + prefix) ==
          0);
  REQUIRE(fs::exists(prefix + "_manifest.json"));
  REQUIRE(fs::exists(prefix + "_d001.csv"));
  REQUIRE(fs::exists(prefix + "_d002.csv"));

  const auto agg_prefix = (dir / "protein_stack").string();
  REQUIRE(run_cli("aggregate --in " + prefix + "_manifest.json --out-prefix " + agg_prefix) == 0);
  REQUIRE(fs::exists(agg_prefix + "_d001.csv"));
  const std::string draw = slurp(agg_prefix + "_d001.csv");
  CHECK(draw.find("P1") != std::string::npos);
  CHECK(draw.find("P2") != std::string::npos);
  CHECK(draw.find("pep1") == std::string::npos);
}

TEST_CASE("normalize and filter subcommands") {
  const auto dir = work_dir();
  const auto in = dir / "norm_in.csv";
  std::ofstream(in) << "id,s1,s2\nr1,1,4\nr2,2,5\nr3,3,6\n";
  const auto out = (dir / "norm_out.csv").string();
  REQUIRE(run_cli("normalize --in " + in.string() + " --out " + out) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("2.5") != std::string::npos);

  const auto fdes = dir / "filt_design.csv";
  std::ofstream(fdes) << "sample,condition\ns1,a\ns2,a\ns3,b\ns4,b\n";
  const auto fin = dir / "filt_in.csv";
  std::ofstream(fin) << "id,s1,s2,s3,s4\nr1,1,2,3,4\nr2,NA,NA,3,4\n";
  const auto fout = (dir / "filt_out.csv").string();
  REQUIRE(run_cli("filter --in " + fin.string() + " --design " + fdes.string() +
                  " --min-per-condition 1 --out " + fout) == 0);
  const std::string filtered = slurp(fout);
  CHECK(filtered.find("r1") != std::string::npos);
  CHECK(filtered.find("r2") == std::string::npos);
}

TEST_SUITE_END();
