#include "mipipe/impute.hpp"

#include <cmath>
#include <stdexcept>

namespace mipipe {

std::string to_string(ImputeMethod m) {
  switch (m) {
    case ImputeMethod::knn: return "knn";
    case ImputeMethod::mle: return "mle";
    case ImputeMethod::norm: return "norm";
    case ImputeMethod::pca: return "pca";
    case ImputeMethod::rf: return "rf";
  }
  throw std::logic_error("unknown impute method");
}

ImputeMethod impute_method_from_string(const std::string& s) {
  if (s == "knn") return ImputeMethod::knn;
  if (s == "mle") return ImputeMethod::mle;
  if (s == "norm") return ImputeMethod::norm;
  if (s == "pca") return ImputeMethod::pca;
  if (s == "rf") return ImputeMethod::rf;
  throw std::invalid_argument("unknown imputation method '" + s +
                              "' (expected knn|mle|norm|pca|rf)");
}

void EngineConfig::validate() const {
  if (k_neighbors < 1) throw std::invalid_argument("engine config: k_neighbors must be positive");
  if (n_components < 1) throw std::invalid_argument("engine config: n_components must be positive");
  if (rf_trees < 1) throw std::invalid_argument("engine config: rf_trees must be positive");
  if (max_iter < 1) throw std::invalid_argument("engine config: max_iter must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("engine config: tol must be positive");
}

IntensityMatrix ImputedStack::draw_matrix(int d) const {
  if (d < 0 || d >= draw_count()) throw std::out_of_range("stack draw index out of range");
  IntensityMatrix m;
  m.row_ids = row_ids;
  m.protein_ids = protein_ids;
  m.col_ids = col_ids;
  m.values = draws[static_cast<std::size_t>(d)];
  m.mask = Mask::Constant(m.values.rows(), m.values.cols(), true);
  return m;
}

bool ImputedStack::draws_identical() const {
  for (std::size_t d = 1; d < draws.size(); ++d) {
    if (draws[d] != draws[0]) return false;
  }
  return true;
}

int choose_draw_count(double missing_fraction) {
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) {
    throw std::invalid_argument("choose_draw_count: fraction must lie in [0,1)");
  }
  const auto rule = static_cast<int>(std::llround(100.0 * missing_fraction));
  return rule < 2 ? 2 : rule;
}

namespace {

Eigen::MatrixXd run_engine(const IntensityMatrix& m, const Design& d, const EngineConfig& cfg,
                           RngStream stream) {
  switch (cfg.method) {
    case ImputeMethod::knn: return engine_knn(m, cfg);
    case ImputeMethod::mle: return engine_mle(m, d, cfg, stream);
    case ImputeMethod::norm: return engine_norm(m, d, cfg, stream);
    case ImputeMethod::pca: return engine_pca(m, cfg);
    case ImputeMethod::rf: return engine_rf(m, cfg, stream);
  }
  throw std::logic_error("unknown impute method");
}

}  // namespace

ImputedStack impute_multiple(const IntensityMatrix& m, const Design& d, int draws,
                             const EngineConfig& cfg, std::uint64_t seed) {
  m.validate();
  cfg.validate();
  if (draws < 1) throw std::invalid_argument("impute_multiple: draw count must be positive");
  if (static_cast<Eigen::Index>(d.sample_ids.size()) != m.cols()) {
    throw std::invalid_argument("impute_multiple: design does not match matrix columns");
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<int> per_condition(static_cast<std::size_t>(d.n_conditions()), 0);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m.mask(i, j)) ++per_condition[static_cast<std::size_t>(d.condition_index[static_cast<std::size_t>(j)])];
    }
    for (int g = 0; g < d.n_conditions(); ++g) {
      if (per_condition[static_cast<std::size_t>(g)] == 0) {
        throw std::runtime_error("impute_multiple: row '" + m.row_ids[static_cast<std::size_t>(i)] +
                                 "' has no observed value in condition '" +
                                 d.conditions[static_cast<std::size_t>(g)] + "'");
      }
    }
  }

  ImputedStack stack;
  stack.row_ids = m.row_ids;
  stack.protein_ids = m.protein_ids;
  stack.col_ids = m.col_ids;
  stack.method = cfg.method;
  stack.seed = seed;
  stack.draws.reserve(static_cast<std::size_t>(draws));

  const RngStream base = RngStream(seed).derive(rng_tag::impute);
  for (int t = 0; t < draws; ++t) {
    Eigen::MatrixXd filled = run_engine(m, d, cfg, base.derive(static_cast<std::uint64_t>(t)));
    if (filled.rows() != m.rows() || filled.cols() != m.cols()) {
      throw std::logic_error("impute engine returned wrong shape");
    }
    // Observed entries are authoritative; engines never get to change them.
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (m.mask(i, j)) {
          filled(i, j) = m.values(i, j);
        } else if (!std::isfinite(filled(i, j))) {
          throw std::runtime_error("impute engine '" + to_string(cfg.method) +
                                   "' produced a non-finite fill at row '" +
                                   m.row_ids[static_cast<std::size_t>(i)] + "'");
        }
      }
    }
    stack.draws.push_back(std::move(filled));
  }
  return stack;
}

}  // namespace mipipe
