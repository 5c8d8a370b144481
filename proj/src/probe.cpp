#include "layerprobe/probe.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "layerprobe/csv.hpp"
#include "layerprobe/errors.hpp"
#include "layerprobe/norm_data.hpp"
#include "layerprobe/ridge.hpp"
#include "layerprobe/rng.hpp"

namespace layerprobe {

void ProbeConfig::validate() const {
  if (alpha_grid.empty()) throw DataError("probe config: alpha grid is empty");
  for (double a : alpha_grid)
    if (!(a > 0.0) || !std::isfinite(a))
      throw DataError("probe config: alpha values must be positive, got " +
                      text::format_double(a));
  if (outer_folds < 2) throw DataError("probe config: outer_folds must be >= 2");
  if (inner_folds < 2) throw DataError("probe config: inner_folds must be >= 2");
  if (repeats < 1) throw DataError("probe config: repeats must be >= 1");
  if (subset_size < outer_folds)
    throw DataError("probe config: subset_size must be at least outer_folds");
}

double r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size())
    throw DataError("r_squared: length mismatch (" + std::to_string(y_true.size()) + " vs " +
                    std::to_string(y_pred.size()) + ")");
  if (y_true.size() < 2) throw DataError("r_squared: need at least 2 values");
  const double mean =
      std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(y_true.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double r = y_true[i] - y_pred[i];
    const double c = y_true[i] - mean;
    sse += r * r;
    sst += c * c;
  }
  if (sst == 0.0) throw NumericError("r_squared: evaluation targets are constant");
  return 1.0 - sse / sst;
}

std::vector<std::size_t> fold_bounds(std::size_t n, std::size_t folds) {
  std::vector<std::size_t> b(folds + 1);
  for (std::size_t f = 0; f <= folds; ++f) b[f] = f * n / folds;
  return b;
}

namespace {

// Row indices [0, n) minus [lo, hi).
std::vector<Eigen::Index> complement(std::size_t n, std::size_t lo, std::size_t hi) {
  std::vector<Eigen::Index> out;
  out.reserve(n - (hi - lo));
  for (std::size_t i = 0; i < n; ++i)
    if (i < lo || i >= hi) out.push_back(static_cast<Eigen::Index>(i));
  return out;
}

std::vector<Eigen::Index> range(std::size_t lo, std::size_t hi) {
  std::vector<Eigen::Index> out(hi - lo);
  std::iota(out.begin(), out.end(), static_cast<Eigen::Index>(lo));
  return out;
}

}  // namespace

AlphaSelection inner_select_alpha(const Eigen::Ref<const Eigen::MatrixXd>& X_train,
                                  const Eigen::Ref<const Eigen::VectorXd>& y_train,
                                  std::span<const double> grid, std::size_t inner_folds,
                                  std::uint64_t seed, bool standardize) {
  if (grid.empty()) throw DataError("inner CV: alpha grid is empty");
  const auto n = static_cast<std::size_t>(X_train.rows());
  if (n < inner_folds || inner_folds < 2)
    throw DataError("inner CV: training split of " + std::to_string(n) +
                    " rows is smaller than inner_folds=" + std::to_string(inner_folds));

  AlphaSelection sel;
  sel.mean_mse.assign(grid.size(), 0.0);
  if (grid.size() == 1) {
    sel.alpha = grid[0];
    return sel;
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Engine eng = make_engine(seed);
  shuffle(std::span<Eigen::Index>(order), eng);

  const auto bounds = fold_bounds(n, inner_folds);
  for (std::size_t k = 0; k < inner_folds; ++k) {
    std::vector<Eigen::Index> train, val;
    train.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      (i >= bounds[k] && i < bounds[k + 1] ? val : train).push_back(order[i]);

    const Eigen::MatrixXd Xt = X_train(train, Eigen::all);
    const Eigen::VectorXd yt = y_train(train);
    const Eigen::MatrixXd Xv = X_train(val, Eigen::all);
    const Eigen::VectorXd yv = y_train(val);
    const RidgeProblem problem(Xt, yt, standardize);
    for (std::size_t a = 0; a < grid.size(); ++a) {
      const Eigen::VectorXd pred = problem.solve(grid[a]).predict(Xv);
      sel.mean_mse[a] += (yv - pred).squaredNorm() / static_cast<double>(val.size());
    }
  }
  for (double& m : sel.mean_mse) m /= static_cast<double>(inner_folds);

  std::size_t best = 0;
  for (std::size_t a = 1; a < grid.size(); ++a) {
    if (sel.mean_mse[a] < sel.mean_mse[best] ||
        (sel.mean_mse[a] == sel.mean_mse[best] && grid[a] > grid[best]))
      best = a;
  }
  sel.alpha = grid[best];
  return sel;
}

RepeatResult run_repeat(const EmbeddingMatrix& X, std::span<const std::size_t> rows,
                        std::span<const double> targets, const ProbeConfig& config,
                        std::uint64_t task_seed, std::size_t repeat) {
  config.validate();
  if (rows.size() != targets.size())
    throw DataError("probe: " + std::to_string(rows.size()) + " rows but " +
                    std::to_string(targets.size()) + " targets");
  if (rows.size() < config.subset_size)
    throw DataError("probe: only " + std::to_string(rows.size()) +
                    " usable words, subset_size is " + std::to_string(config.subset_size));

  const std::size_t k = config.subset_size;
  const auto picked = sample_without_replacement(rows.size(), k, subset_seed(task_seed, repeat));

  Eigen::MatrixXd Xs(static_cast<Eigen::Index>(k), X.cols());
  Eigen::VectorXd ys(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t r = rows[picked[i]];
    if (r >= static_cast<std::size_t>(X.rows())) throw DataError("probe: row index out of range");
    Xs.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(r)).cast<double>();
    ys(static_cast<Eigen::Index>(i)) = targets[picked[i]];
  }

  if (config.permute && config.permutation_mode == PermutationMode::kRandom) {
    const auto perm = random_permutation(
        k, mix_seed({task_seed, static_cast<std::uint64_t>(StreamTag::kPermutation), repeat}));
    const Eigen::VectorXd original = ys;
    for (std::size_t i = 0; i < k; ++i)
      ys(static_cast<Eigen::Index>(i)) = original(static_cast<Eigen::Index>(perm[i]));
  }

  RepeatResult out;
  const auto bounds = fold_bounds(k, config.outer_folds);
  for (std::size_t f = 0; f < config.outer_folds; ++f) {
    const auto train = complement(k, bounds[f], bounds[f + 1]);
    const auto test = range(bounds[f], bounds[f + 1]);
    const Eigen::MatrixXd Xt = Xs(train, Eigen::all);
    const Eigen::VectorXd yt = ys(train);

    const std::uint64_t inner_seed = mix_seed(
        {task_seed, static_cast<std::uint64_t>(StreamTag::kInnerFolds), repeat, f});
    const double alpha = inner_select_alpha(Xt, yt, config.alpha_grid, config.inner_folds,
                                            inner_seed, config.standardize_predictors)
                             .alpha;

    const RidgeFit fit = RidgeProblem(Xt, yt, config.standardize_predictors).solve(alpha);
    const Eigen::VectorXd pred = fit.predict(Xs(test, Eigen::all));
    const Eigen::VectorXd truth = ys(test);
    out.fold_r2.push_back(r_squared(std::span<const double>(truth.data(), truth.size()),
                                    std::span<const double>(pred.data(), pred.size())));
    out.chosen_alphas.push_back(alpha);
  }
  return out;
}

ProbePass collect_repeats(std::vector<RepeatResult> repeats) {
  ProbePass pass;
  for (auto& r : repeats) {
    pass.fold_r2.insert(pass.fold_r2.end(), r.fold_r2.begin(), r.fold_r2.end());
    pass.chosen_alphas.insert(pass.chosen_alphas.end(), r.chosen_alphas.begin(),
                              r.chosen_alphas.end());
  }
  pass.mean_r2 = pass.fold_r2.empty()
                     ? 0.0
                     : std::accumulate(pass.fold_r2.begin(), pass.fold_r2.end(), 0.0) /
                           static_cast<double>(pass.fold_r2.size());
  return pass;
}

namespace {

ProbePass run_pass(const EmbeddingMatrix& X, std::span<const std::optional<double>> y,
                   ProbeConfig config, std::uint64_t task_seed, bool permute) {
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw DataError("probe: X has " + std::to_string(X.rows()) + " rows but y has " +
                    std::to_string(y.size()) + " entries");
  config.permute = permute;
  std::vector<std::size_t> rows;
  std::vector<double> targets;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i]) {
      rows.push_back(i);
      targets.push_back(*y[i]);
    }
  }
  std::vector<RepeatResult> repeats;
  for (std::size_t r = 0; r < config.repeats; ++r)
    repeats.push_back(run_repeat(X, rows, targets, config, task_seed, r));
  return collect_repeats(std::move(repeats));
}

}  // namespace

ProbePass run_probe(const EmbeddingMatrix& X, std::span<const std::optional<double>> y,
                    const ProbeConfig& config, std::uint64_t task_seed) {
  return run_pass(X, y, config, task_seed, false);
}

ProbePass run_permutation_control(const EmbeddingMatrix& X,
                                  std::span<const std::optional<double>> y,
                                  const ProbeConfig& config, std::uint64_t task_seed) {
  return run_pass(X, y, config, task_seed, true);
}

}  // namespace layerprobe
