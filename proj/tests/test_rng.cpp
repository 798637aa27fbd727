#include <cmath>
#include <set>
#include <vector>

#include <doctest.h>

#include "mipipe/rng.hpp"

using mipipe::RngStream;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same key reproduces the sequence") {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derivation ignores parent draw position") {
  RngStream parent(7);
  const RngStream child_before = parent.derive(3);
  for (int i = 0; i < 10; ++i) parent.next_u64();
  const RngStream child_after = parent.derive(3);
  RngStream x = child_before, y = child_after;
  for (int i = 0; i < 20; ++i) CHECK(x.next_u64() == y.next_u64());
}

TEST_CASE("distinct derivation words give distinct streams") {
  RngStream parent(7);
  RngStream a = parent.derive(1), b = parent.derive(2);
  int equal = 0;
  for (int i = 0; i < 64; ++i) equal += a.next_u64() == b.next_u64();
  CHECK(equal == 0);
}

TEST_CASE("uniform ranges") {
  RngStream rs(11);
  for (int i = 0; i < 10000; ++i) {
    const double u = rs.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rs.uniform_oo();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("uniform_index stays in range and hits all buckets") {
  RngStream rs(13);
  std::vector<int> hits(10, 0);
  for (int i = 0; i < 20000; ++i) ++hits[rs.uniform_index(10)];
  for (const int h : hits) {
    CHECK(h > 1700);  // expectation 2000
    CHECK(h < 2300);
  }
}

TEST_CASE("normal moments") {
  RngStream rs(17);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rs.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("chi squared mean is df") {
  RngStream rs(19);
  const int n = 20000;
  for (const double df : {1.0, 5.0, 18.0}) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rs.chi_squared(df);
    CHECK(std::abs(sum / n - df) < 0.15 * std::sqrt(2.0 * df));
  }
}

TEST_SUITE_END();
