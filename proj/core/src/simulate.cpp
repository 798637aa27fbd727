#include "mipipe/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

#include "mipipe/rng.hpp"

namespace mipipe {

namespace {

std::vector<std::string> numbered_ids(const char* prefix, int count, int width) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(count));
  char buf[32];
  for (int i = 1; i <= count; ++i) {
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, i);
    ids.emplace_back(buf);
  }
  return ids;
}

Design two_group_design(int per_group) {
  std::vector<std::string> samples = numbered_ids("s", 2 * per_group, 2);
  std::vector<std::string> labels;
  labels.reserve(samples.size());
  for (int j = 0; j < 2 * per_group; ++j) labels.emplace_back(j < per_group ? "c1" : "c2");
  return Design::from_assignments(samples, labels);
}

SimData assemble(int design_id, int p, int per_group, int n_de, std::uint64_t seed,
                 const std::function<void(RngStream&, bool, Eigen::Index, Eigen::MatrixXd&)>& fill_row) {
  const int n = 2 * per_group;
  SimData out;
  out.design = two_group_design(per_group);
  Eigen::MatrixXd values(p, n);
  RngStream base = RngStream(seed).derive(rng_tag::simulate, static_cast<std::uint64_t>(design_id));
  out.truth.de_rows.assign(static_cast<std::size_t>(p), false);
  for (Eigen::Index i = 0; i < p; ++i) {
    const bool de = i < n_de;
    out.truth.de_rows[static_cast<std::size_t>(i)] = de;
    RngStream row_stream = base.derive(static_cast<std::uint64_t>(i));
    fill_row(row_stream, de, i, values);
  }
  out.matrix = make_complete_matrix(numbered_ids("p", p, 4), out.design.sample_ids, std::move(values));
  return out;
}

}  // namespace

SimData gen_sim1(std::uint64_t seed) {
  constexpr int kRows = 200, kPerGroup = 5, kDe = 10;
  return assemble(1, kRows, kPerGroup, kDe, seed,
                  [&](RngStream& rs, bool de, Eigen::Index i, Eigen::MatrixXd& values) {
                    for (int j = 0; j < 2 * kPerGroup; ++j) {
                      const bool group2 = j >= kPerGroup;
                      const double mean = (de && group2) ? 200.0 : 100.0;
                      values(i, j) = rs.normal(mean, 1.0);
                    }
                  });
}

SimData gen_sim2(std::uint64_t seed) {
  constexpr int kRows = 1000, kPerGroup = 10, kDe = 200;
  return assemble(2, kRows, kPerGroup, kDe, seed,
                  [&](RngStream& rs, bool de, Eigen::Index i, Eigen::MatrixXd& values) {
                    const double peptide_mean = rs.normal(1.5, 0.5);
                    const double group_effect = de ? rs.normal(1.5, 0.5) : 0.0;
                    for (int j = 0; j < 2 * kPerGroup; ++j) {
                      const bool group2 = j >= kPerGroup;
                      values(i, j) = peptide_mean + (group2 ? group_effect : 0.0) + rs.normal(0.0, 0.5);
                    }
                  });
}

SimData gen_sim3(std::uint64_t seed) {
  constexpr int kRows = 1000, kPerGroup = 10, kDe = 200;
  return assemble(3, kRows, kPerGroup, kDe, seed,
                  [&](RngStream& rs, bool de, Eigen::Index i, Eigen::MatrixXd& values) {
                    for (int j = 0; j < 2 * kPerGroup; ++j) {
                      const bool group2 = j >= kPerGroup;
                      double v = rs.normal(1.5, 0.5) + rs.normal(0.0, 0.5);
                      if (group2 && de) v += rs.normal(1.5, 0.5);
                      values(i, j) = v;
                    }
                  });
}

SimData gen_sim(int design_id, std::uint64_t seed) {
  switch (design_id) {
    case 1: return gen_sim1(seed);
    case 2: return gen_sim2(seed);
    case 3: return gen_sim3(seed);
    default: throw std::invalid_argument("simulate: design must be 1, 2 or 3");
  }
}

IntensityMatrix ampute_mcar(const IntensityMatrix& m, double proportion, std::uint64_t seed) {
  m.validate();
  if (!(proportion >= 0.0 && proportion < 1.0)) {
    throw std::invalid_argument("ampute_mcar: proportion must lie in [0,1)");
  }
  const auto total = static_cast<double>(m.values.size());
  const auto remove_count = static_cast<std::size_t>(std::llround(proportion * total));
  if (remove_count == 0) return m;

  std::vector<std::pair<Eigen::Index, Eigen::Index>> observed;
  std::vector<int> row_observed(static_cast<std::size_t>(m.rows()), 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m.mask(i, j)) {
        observed.emplace_back(i, j);
        ++row_observed[static_cast<std::size_t>(i)];
      }
    }
  }
  if (remove_count > observed.size()) {
    throw std::runtime_error("ampute_mcar: fewer observed cells than requested removals");
  }

  RngStream base = RngStream(seed).derive(rng_tag::ampute);
  std::vector<int> remaining;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    RngStream rs = base.derive(static_cast<std::uint64_t>(attempt));
    // Partial Fisher-Yates: the first remove_count slots become the sample.
    std::vector<std::size_t> idx(observed.size());
    for (std::size_t t = 0; t < idx.size(); ++t) idx[t] = t;
    remaining = row_observed;
    bool ok = true;
    for (std::size_t t = 0; t < remove_count; ++t) {
      const std::size_t pick = t + rs.uniform_index(idx.size() - t);
      std::swap(idx[t], idx[pick]);
      const auto [r, c] = observed[idx[t]];
      if (--remaining[static_cast<std::size_t>(r)] == 0) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    IntensityMatrix out = m;
    for (std::size_t t = 0; t < remove_count; ++t) {
      const auto [r, c] = observed[idx[t]];
      out.mask(r, c) = false;
      out.values(r, c) = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
  }
  throw std::runtime_error(
      "ampute_mcar: could not draw a pattern keeping every row partially observed "
      "after 1000 attempts");
}

}  // namespace mipipe
