#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "layerprobe/embedding_store.hpp"

namespace layerprobe {

// Forces the permutation stream of the control pass; kIdentity is a test hook
// that makes the control pass reproduce the observed pass exactly.
enum class PermutationMode { kRandom, kIdentity };

struct ProbeConfig {
  std::vector<double> alpha_grid = default_alpha_grid();
  std::size_t outer_folds = 5;
  std::size_t inner_folds = 5;
  std::size_t subset_size = 4000;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  bool standardize_predictors = false;
  bool permute = false;
  PermutationMode permutation_mode = PermutationMode::kRandom;

  // Five log-spaced values over [1000, 10000].
  static std::vector<double> default_alpha_grid() { return {1000, 1778, 3162, 5623, 10000}; }

  void validate() const;  // throws DataError
};

// 1 - SSE/SST with SST taken around the mean of y_true. Negative when the
// predictions are worse than that mean. Throws NumericError for constant
// y_true.
double r_squared(std::span<const double> y_true, std::span<const double> y_pred);

struct AlphaSelection {
  double alpha = 0.0;
  std::vector<double> mean_mse;  // per grid entry, mean over inner folds
};

// K-fold CV restricted to the given training rows. Picks the alpha with the
// smallest mean validation MSE; exact ties go to the larger alpha.
AlphaSelection inner_select_alpha(const Eigen::Ref<const Eigen::MatrixXd>& X_train,
                                  const Eigen::Ref<const Eigen::VectorXd>& y_train,
                                  std::span<const double> grid, std::size_t inner_folds,
                                  std::uint64_t seed, bool standardize = false);

// Outer-fold scores of one repeat of one pass.
struct RepeatResult {
  std::vector<double> fold_r2;
  std::vector<double> chosen_alphas;
};

struct ProbePass {
  std::vector<double> fold_r2;  // repeats x outer_folds, repeat-major
  std::vector<double> chosen_alphas;
  double mean_r2 = 0.0;
};

// Rows of X are predictors for the usable words; `rows[i]` selects the X row
// whose target is `targets[i]`. Subset, fold and inner-CV streams depend only
// on (task_seed, repeat), so the observed and permuted passes of the same
// task see identical subsets and folds.
RepeatResult run_repeat(const EmbeddingMatrix& X, std::span<const std::size_t> rows,
                        std::span<const double> targets, const ProbeConfig& config,
                        std::uint64_t task_seed, std::size_t repeat);

ProbePass collect_repeats(std::vector<RepeatResult> repeats);

// Observed pass. Rows of X align with y; masked targets are dropped before
// any subset is drawn.
ProbePass run_probe(const EmbeddingMatrix& X, std::span<const std::optional<double>> y,
                    const ProbeConfig& config, std::uint64_t task_seed);

// Same protocol with each repeat's subset targets permuted.
ProbePass run_permutation_control(const EmbeddingMatrix& X,
                                  std::span<const std::optional<double>> y,
                                  const ProbeConfig& config, std::uint64_t task_seed);

inline double selectivity(double r2_obs, double r2_rand) { return r2_obs - r2_rand; }

// Fold boundaries: fold f covers [bounds[f], bounds[f+1]).
std::vector<std::size_t> fold_bounds(std::size_t n, std::size_t folds);

}  // namespace layerprobe
