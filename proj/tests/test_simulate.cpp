#include <cmath>

#include <doctest.h>

#include "mipipe/rng.hpp"
#include "mipipe/simulate.hpp"

using namespace mipipe;

TEST_SUITE_BEGIN("simulate");

TEST_CASE("design 1 dimensions and truth") {
  const auto sim = gen_sim1(7);
  CHECK(sim.matrix.rows() == 200);
  CHECK(sim.matrix.cols() == 10);
  CHECK(sim.matrix.complete());
  int de = 0;
  for (const bool b : sim.truth.de_rows) de += b;
  CHECK(de == 10);
  for (int i = 0; i < 10; ++i) CHECK(sim.truth.de_rows[static_cast<std::size_t>(i)]);
  CHECK(sim.design.group_sizes == std::vector<int>{5, 5});
}

TEST_CASE("design 1 differential block mean is near 200") {
  const auto sim = gen_sim1(11);
  double acc = 0.0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 5; j < 10; ++j) acc += sim.matrix.values(i, j);
  }
  CHECK(std::abs(acc / 50.0 - 200.0) < 0.5);
}

TEST_CASE("generators are deterministic per seed") {
  for (int design = 1; design <= 3; ++design) {
    const auto a = gen_sim(design, 123);
    const auto b = gen_sim(design, 123);
    CHECK(a.matrix.values == b.matrix.values);
    const auto c = gen_sim(design, 124);
    CHECK(a.matrix.values != c.matrix.values);
  }
}

TEST_CASE("design 2 dimensions, truth and moments") {
  const auto sim = gen_sim2(21);
  CHECK(sim.matrix.rows() == 1000);
  CHECK(sim.matrix.cols() == 20);
  int de = 0;
  for (const bool b : sim.truth.de_rows) de += b;
  CHECK(de == 200);

  // Group-1 cells have expectation E[P] + E[eps] = 1.5.
  double acc = 0.0;
  for (int i = 0; i < 1000; ++i) {
    for (int j = 0; j < 10; ++j) acc += sim.matrix.values(i, j);
  }
  CHECK(std::abs(acc / 10000.0 - 1.5) < 0.05);

  // Non-differential rows: group means differ only through the noise.
  double diff = 0.0;
  int n_rows = 0;
  for (int i = 200; i < 1000; ++i) {
    double g1 = 0.0, g2 = 0.0;
    for (int j = 0; j < 10; ++j) {
      g1 += sim.matrix.values(i, j);
      g2 += sim.matrix.values(i, j + 10);
    }
    diff += (g2 - g1) / 10.0;
    ++n_rows;
  }
  CHECK(std::abs(diff / n_rows) < 0.05);
}

TEST_CASE("design 2 shares the row effect across replicates") {
  // Within a non-differential row the 20 cells share P_i, so the variance
  // of the row mean across rows is Var(P) + Var(eps)/20 ~ 0.2625, well
  // above the 0.0125 it would be if P were redrawn per cell.
  const auto sim = gen_sim2(31);
  double mean_acc = 0.0, sq_acc = 0.0;
  const int rows = 800;
  for (int i = 200; i < 1000; ++i) {
    const double row_mean = sim.matrix.values.row(i).mean();
    mean_acc += row_mean;
    sq_acc += row_mean * row_mean;
  }
  const double mean = mean_acc / rows;
  const double var = sq_acc / rows - mean * mean;
  CHECK(var > 0.15);
  CHECK(var < 0.40);
}

TEST_CASE("design 3 per-cell variance and effect size") {
  const auto sim = gen_sim3(41);
  CHECK(sim.matrix.rows() == 1000);
  CHECK(sim.matrix.cols() == 20);

  // Group-1 cells are iid sums of two draws: variance 0.25 + 0.25.
  double acc = 0.0, sq = 0.0;
  const int n = 1000 * 10;
  for (int i = 0; i < 1000; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double v = sim.matrix.values(i, j);
      acc += v;
      sq += v * v;
    }
  }
  const double mean = acc / n;
  CHECK(std::abs(sq / n - mean * mean - 0.5) < 0.05);

  // Differential rows: group-2 mean minus group-1 mean is near E[G] = 1.5.
  double diff = 0.0;
  for (int i = 0; i < 200; ++i) {
    double g1 = 0.0, g2 = 0.0;
    for (int j = 0; j < 10; ++j) {
      g1 += sim.matrix.values(i, j);
      g2 += sim.matrix.values(i, j + 10);
    }
    diff += (g2 - g1) / 10.0;
  }
  CHECK(std::abs(diff / 200.0 - 1.5) < 0.1);
}

TEST_CASE("design 3 redraws the row effect per cell") {
  const auto sim = gen_sim3(51);
  // Row means of non-differential rows now concentrate: Var ~ 0.5/20.
  double mean_acc = 0.0, sq_acc = 0.0;
  const int rows = 800;
  for (int i = 200; i < 1000; ++i) {
    const double row_mean = sim.matrix.values.row(i).mean();
    mean_acc += row_mean;
    sq_acc += row_mean * row_mean;
  }
  const double mean = mean_acc / rows;
  const double var = sq_acc / rows - mean * mean;
  CHECK(var < 0.06);
}

TEST_CASE("ampute with proportion zero returns the matrix unchanged") {
  const auto sim = gen_sim1(3);
  const auto out = ampute_mcar(sim.matrix, 0.0, 99);
  CHECK(out.values == sim.matrix.values);
  CHECK((out.mask == sim.matrix.mask).all());
}

TEST_CASE("ampute removes the exact cell count") {
  const auto sim = gen_sim1(5);
  const auto out = ampute_mcar(sim.matrix, 0.10, 17);
  CHECK(out.mask.count() == 2000 - 200);
  for (Eigen::Index i = 0; i < out.rows(); ++i) CHECK(out.mask.row(i).any());
}

TEST_CASE("ampute is deterministic per seed") {
  const auto sim = gen_sim1(6);
  const auto a = ampute_mcar(sim.matrix, 0.25, 11);
  const auto b = ampute_mcar(sim.matrix, 0.25, 11);
  CHECK((a.mask == b.mask).all());
  const auto c = ampute_mcar(sim.matrix, 0.25, 12);
  CHECK((a.mask != c.mask).any());
}

TEST_CASE("ampute never empties a row, erroring when impossible") {
  IntensityMatrix tiny = make_complete_matrix({"a", "b"}, {"s1", "s2"},
                                              Eigen::MatrixXd::Constant(2, 2, 1.0));
  // Removing 3 of 4 cells must empty one of the two rows.
  CHECK_THROWS_WITH_AS(ampute_mcar(tiny, 0.75, 1), doctest::Contains("1000 attempts"),
                       std::runtime_error);
}

TEST_CASE("amputation is independent of cell values") {
  // MCAR check: over many replicates, removed and retained cells share the
  // same mean within Monte-Carlo error.
  RngStream rs(71);
  Eigen::MatrixXd values(40, 5);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 5; ++j) values(i, j) = rs.normal(10.0, 3.0);
  }
  const auto m = make_complete_matrix(
      [] {
        std::vector<std::string> ids;
        for (int i = 0; i < 40; ++i) ids.push_back("r" + std::to_string(i));
        return ids;
      }(),
      {"s1", "s2", "s3", "s4", "s5"}, values);

  const int reps = 1000;
  double diff_acc = 0.0, diff_sq = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    const auto out = ampute_mcar(m, 0.2, static_cast<std::uint64_t>(rep + 1));
    double removed = 0.0, kept = 0.0;
    int n_removed = 0, n_kept = 0;
    for (int i = 0; i < 40; ++i) {
      for (int j = 0; j < 5; ++j) {
        if (out.mask(i, j)) {
          kept += values(i, j);
          ++n_kept;
        } else {
          removed += values(i, j);
          ++n_removed;
        }
      }
    }
    const double d = removed / n_removed - kept / n_kept;
    diff_acc += d;
    diff_sq += d * d;
  }
  const double mean_diff = diff_acc / reps;
  const double sd_diff = std::sqrt(diff_sq / reps - mean_diff * mean_diff);
  CHECK(std::abs(mean_diff) <= 3.0 * sd_diff / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("invalid proportion is rejected") {
  const auto sim = gen_sim1(8);
  CHECK_THROWS_AS(ampute_mcar(sim.matrix, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(ampute_mcar(sim.matrix, -0.1, 1), std::invalid_argument);
}

TEST_SUITE_END();
