#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mipipe/design.hpp"
#include "mipipe/matrix.hpp"
#include "mipipe/rng.hpp"

namespace mipipe {

enum class ImputeMethod { knn, mle, norm, pca, rf };

std::string to_string(ImputeMethod m);
ImputeMethod impute_method_from_string(const std::string& s);

struct EngineConfig {
  ImputeMethod method = ImputeMethod::mle;
  int k_neighbors = 10;        // knn
  int n_components = 2;        // pca
  int rf_trees = 100;          // rf
  int max_iter = 10;           // iterative engines
  double tol = 1e-4;           // relative change threshold
  bool mle_deterministic = false;  // fill with conditional means instead of draws

  void validate() const;
};

// D completed copies of one input matrix. Observed entries are identical
// to the source in every draw; draws differ only at originally missing
// cells.
struct ImputedStack {
  std::vector<std::string> row_ids;
  std::vector<std::string> protein_ids;
  std::vector<std::string> col_ids;
  std::vector<Eigen::MatrixXd> draws;
  ImputeMethod method = ImputeMethod::mle;
  std::uint64_t seed = 0;

  int draw_count() const { return static_cast<int>(draws.size()); }
  bool has_proteins() const { return !protein_ids.empty(); }
  IntensityMatrix draw_matrix(int d) const;  // materialize one draw, all-true mask
  bool draws_identical() const;
};

// White's rule of thumb with a floor of 2 (Rubin's second rule divides by
// D-1): D = max(2, round(100 * missing_fraction)).
int choose_draw_count(double missing_fraction);

// Runs the configured engine D times on independent keyed streams.
// Requires every row to have at least one observed value per condition.
ImputedStack impute_multiple(const IntensityMatrix& m, const Design& d, int draws,
                             const EngineConfig& cfg, std::uint64_t seed);

// Individual engines; each returns a complete value matrix. Observed
// entries pass through unchanged.
Eigen::MatrixXd engine_knn(const IntensityMatrix& m, const EngineConfig& cfg);
Eigen::MatrixXd engine_mle(const IntensityMatrix& m, const Design& d, const EngineConfig& cfg,
                           RngStream stream);
Eigen::MatrixXd engine_norm(const IntensityMatrix& m, const Design& d, const EngineConfig& cfg,
                            RngStream stream);
Eigen::MatrixXd engine_pca(const IntensityMatrix& m, const EngineConfig& cfg);
Eigen::MatrixXd engine_rf(const IntensityMatrix& m, const EngineConfig& cfg, RngStream stream);

// EM fit of a multivariate normal under arbitrary missingness; exposed for
// the mle engine and its tests. One row of `data` is one observation.
struct MvnEmFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::vector<double> loglik;  // observed-data log-likelihood per iteration
  int iterations = 0;
  bool converged = false;
};
MvnEmFit fit_mvn_em(const Eigen::MatrixXd& data, const Mask& mask, int max_iter, double tol);

// Objective trace of the iterative-PCA engine (sum of squared
// reconstruction error over observed cells); exposed for tests.
Eigen::MatrixXd engine_pca_traced(const IntensityMatrix& m, const EngineConfig& cfg,
                                  std::vector<double>* objective_trace);

}  // namespace mipipe
