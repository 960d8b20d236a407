#include "geoinfer/imputation.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace geoinfer {

using nlohmann::json;

namespace {

std::vector<Eigen::Index> resolve_target_order(const DataTable& table,
                                               const ImputationConfig& config) {
  const auto schema_targets = table.columns_with_role(ColumnRole::MechanicalTarget);
  if (schema_targets.empty())
    throw std::invalid_argument("imputation: table has no mechanical_target columns");
  if (config.target_order.empty()) return schema_targets;

  std::vector<Eigen::Index> order;
  for (const auto& name : config.target_order) {
    const Eigen::Index col = table.column_index(name);
    if (table.schema()[static_cast<std::size_t>(col)].role != ColumnRole::MechanicalTarget)
      throw std::invalid_argument("imputation: '" + name + "' is not a mechanical_target column");
    order.push_back(col);
  }
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  auto expected = schema_targets;
  std::sort(expected.begin(), expected.end());
  if (sorted != expected)
    throw std::invalid_argument(
        "imputation: target_order must be a permutation of the mechanical_target columns");
  return order;
}

void check_inputs(const DataTable& train, const DataTable& test) {
  if (train.has_missing())
    throw std::invalid_argument("imputation: training table must be fully observed");
  if (train.n_cols() != test.n_cols())
    throw std::invalid_argument("imputation: train/test column mismatch");
  for (std::size_t j = 0; j < train.schema().size(); ++j)
    if (train.schema()[j].name != test.schema()[j].name)
      throw std::invalid_argument("imputation: train/test schema mismatch");
  for (Eigen::Index j : test.columns_with_role(ColumnRole::IndexFeature))
    for (Eigen::Index i = 0; i < test.n_rows(); ++i)
      if (test.is_missing(i, j))
        throw std::invalid_argument("imputation: index feature missing in test row " +
                                    std::to_string(i) + "; index features must be observed");
}

}  // namespace

Matrix initialize(const DataTable& train, const DataTable& test, const ImputationConfig& config) {
  check_inputs(train, test);
  const auto targets = resolve_target_order(test, config);

  Matrix estimates = test.values();
  for (Eigen::Index col : targets) {
    const double mean = train.values().col(col).mean();
    for (Eigen::Index i = 0; i < test.n_rows(); ++i)
      if (test.is_missing(i, col)) estimates(i, col) = mean;
  }
  return estimates;
}

ImputationRun run_icm(const DataTable& train, const DataTable& test,
                      const ImputationConfig& config, const std::optional<Matrix>& truth) {
  if (config.iterations < 1) throw std::invalid_argument("imputation: iterations must be >= 1");
  if (truth && (truth->rows() != test.n_rows() || truth->cols() != test.n_cols()))
    throw std::invalid_argument("imputation: truth shape mismatch");

  ImputationRun run;
  run.target_cols = resolve_target_order(test, config);
  for (Eigen::Index col : run.target_cols)
    run.target_names.push_back(test.schema()[static_cast<std::size_t>(col)].name);
  run.observed_mask = test.missing();
  run.has_truth = truth.has_value();

  Matrix estimates = initialize(train, test, config);
  run.estimates.push_back(estimates);

  // Feature layout per target: every non-class column except the target
  // itself, in schema order (index features plus the other targets).
  const auto n_targets = run.target_cols.size();
  std::vector<std::vector<Eigen::Index>> feature_cols(n_targets);
  std::vector<PredictorContext> contexts;
  contexts.reserve(n_targets);
  for (std::size_t t = 0; t < n_targets; ++t) {
    for (Eigen::Index j = 0; j < test.n_cols(); ++j) {
      if (j == run.target_cols[t]) continue;
      if (test.schema()[static_cast<std::size_t>(j)].role == ColumnRole::ClassLabel) continue;
      feature_cols[t].push_back(j);
    }
    Matrix train_features(train.n_rows(), static_cast<Eigen::Index>(feature_cols[t].size()));
    for (std::size_t j = 0; j < feature_cols[t].size(); ++j)
      train_features.col(static_cast<Eigen::Index>(j)) = train.values().col(feature_cols[t][j]);
    // The training context never changes across sweeps; build it once.
    contexts.push_back(PredictorContext::regression(
        train_features, train.values().col(run.target_cols[t]), config.hyper));
  }

  run.final_posteriors.assign(
      static_cast<std::size_t>(test.n_rows()),
      std::vector<std::optional<DiscretePosterior>>(n_targets));

  int iterations_done = 0;
  for (int k = 1; k <= config.iterations; ++k) {
    const bool last = k == config.iterations;
    double max_delta = 0.0;
    for (std::size_t t = 0; t < n_targets; ++t) {
      const Eigen::Index target = run.target_cols[t];
      Vector features(static_cast<Eigen::Index>(feature_cols[t].size()));
      for (Eigen::Index i = 0; i < test.n_rows(); ++i) {
        if (!test.is_missing(i, target)) continue;
        for (std::size_t j = 0; j < feature_cols[t].size(); ++j)
          features(static_cast<Eigen::Index>(j)) = estimates(i, feature_cols[t][j]);
        const DiscretePosterior post = predict_posterior(contexts[t], features, config.bins);
        const double updated = posterior_mean(post);
        max_delta = std::max(max_delta, std::abs(updated - estimates(i, target)));
        estimates(i, target) = updated;
        if (last) run.final_posteriors[static_cast<std::size_t>(i)][t] = post;
      }
    }
    run.estimates.push_back(estimates);
    iterations_done = k;
    if (config.early_stop_tol && max_delta < *config.early_stop_tol && !last) {
      // Freeze: remaining sweeps cannot move the estimates further than tol;
      // still produce the final-sweep posteriors.
      for (std::size_t t = 0; t < n_targets; ++t) {
        const Eigen::Index target = run.target_cols[t];
        Vector features(static_cast<Eigen::Index>(feature_cols[t].size()));
        for (Eigen::Index i = 0; i < test.n_rows(); ++i) {
          if (!test.is_missing(i, target)) continue;
          for (std::size_t j = 0; j < feature_cols[t].size(); ++j)
            features(static_cast<Eigen::Index>(j)) = estimates(i, feature_cols[t][j]);
          run.final_posteriors[static_cast<std::size_t>(i)][t] =
              predict_posterior(contexts[t], features, config.bins);
        }
      }
      break;
    }
  }
  run.iterations_run = iterations_done;

  if (truth) {
    run.rmse_by_iteration.resize(n_targets);
    for (std::size_t t = 0; t < n_targets; ++t)
      run.rmse_by_iteration[t].resize(run.estimates.size());
    for (std::size_t k = 0; k < run.estimates.size(); ++k) {
      const auto per_target = rmse(run.estimates[k], *truth, run.observed_mask, run.target_cols);
      for (std::size_t t = 0; t < n_targets; ++t) run.rmse_by_iteration[t][k] = per_target[t];
    }
  }
  return run;
}

std::vector<std::optional<double>> rmse(const Matrix& estimates, const Matrix& truth,
                                        const BoolMatrix& mask,
                                        const std::vector<Eigen::Index>& target_cols) {
  std::vector<std::optional<double>> out;
  out.reserve(target_cols.size());
  for (Eigen::Index col : target_cols) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index i = 0; i < estimates.rows(); ++i) {
      if (!mask(i, col)) continue;
      const double err = estimates(i, col) - truth(i, col);
      sum += err * err;
      ++count;
    }
    if (count == 0)
      out.push_back(std::nullopt);
    else
      out.push_back(std::sqrt(sum / count));
  }
  return out;
}

std::vector<std::optional<std::vector<double>>> normalized_trend(const ImputationRun& run) {
  if (!run.has_truth)
    throw std::invalid_argument("normalized_trend: run has no truth");
  std::vector<std::optional<std::vector<double>>> out(run.target_cols.size());
  for (std::size_t t = 0; t < run.target_cols.size(); ++t) {
    const auto& series = run.rmse_by_iteration[t];
    if (series.size() < 2 || !series[1] || *series[1] <= 0.0) continue;
    const double base = *series[1];
    std::vector<double> trend;
    for (std::size_t k = 1; k < series.size(); ++k) trend.push_back(*series[k] / base);
    out[t] = std::move(trend);
  }
  return out;
}

std::string run_to_json(const ImputationRun& run) {
  json snapshots = json::array();
  for (const auto& snap : run.estimates) {
    json m = json::array();
    for (Eigen::Index i = 0; i < snap.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < snap.cols(); ++j) row.push_back(snap(i, j));
      m.push_back(std::move(row));
    }
    snapshots.push_back(std::move(m));
  }

  json mask = json::array();
  for (Eigen::Index i = 0; i < run.observed_mask.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < run.observed_mask.cols(); ++j)
      row.push_back(run.observed_mask(i, j));
    mask.push_back(std::move(row));
  }

  json posteriors = json::array();
  for (std::size_t i = 0; i < run.final_posteriors.size(); ++i) {
    for (std::size_t t = 0; t < run.target_names.size(); ++t) {
      const auto& post = run.final_posteriors[i][t];
      if (!post) continue;
      json edges = json::array();
      for (Eigen::Index b = 0; b < post->bin_edges.size(); ++b)
        edges.push_back(post->bin_edges(b));
      json probs = json::array();
      for (Eigen::Index b = 0; b < post->probs.size(); ++b) probs.push_back(post->probs(b));
      posteriors.push_back({{"row", i},
                            {"target", run.target_names[t]},
                            {"bin_edges", std::move(edges)},
                            {"probs", std::move(probs)}});
    }
  }

  json rmse_table = json::array();
  if (run.has_truth) {
    for (std::size_t t = 0; t < run.target_names.size(); ++t) {
      const auto& series = run.rmse_by_iteration[t];
      json entry = {{"target", run.target_names[t]}};
      json values = json::array();
      for (const auto& v : series) {
        if (v)
          values.push_back(*v);
        else
          values.push_back(nullptr);
      }
      entry["rmse_by_iteration"] = std::move(values);
      rmse_table.push_back(std::move(entry));
    }
  }

  json obj = {{"target_names", run.target_names},
              {"iterations_run", run.iterations_run},
              {"snapshots", std::move(snapshots)},
              {"was_missing", std::move(mask)},
              {"final_posteriors", std::move(posteriors)},
              {"rmse", std::move(rmse_table)}};
  return obj.dump(2);
}

}  // namespace geoinfer
