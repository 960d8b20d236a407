#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geoinfer/predictor.hpp"

namespace geoinfer {

/// Controls for the iterated conditional-mean sweep. `target_order` must be a
/// permutation of the table's mechanical_target columns; empty means schema
/// order.
struct ImputationConfig {
  int iterations = 10;
  std::vector<std::string> target_order;
  int bins = kDefaultBins;
  PredictorHyper hyper;
  std::optional<double> early_stop_tol;  // off by default
};

/// Result of one imputation run: per-sweep estimate snapshots (index 0 is the
/// initialization), the final-sweep posteriors of every originally missing
/// cell, and RMSE trajectories when the truth is known.
struct ImputationRun {
  std::vector<std::string> target_names;
  std::vector<Eigen::Index> target_cols;
  std::vector<Matrix> estimates;  // iterations + 1 snapshots
  BoolMatrix observed_mask;       // copy of the test missingness (true = was missing)
  // final_posteriors[row][t]: posterior of target t in that row, when missing
  std::vector<std::vector<std::optional<DiscretePosterior>>> final_posteriors;
  // rmse_by_iteration[t][k]: RMSE of target t at snapshot k (vs truth); absent
  // when the run had no truth or the target has no missing cells
  std::vector<std::vector<std::optional<double>>> rmse_by_iteration;
  bool has_truth = false;
  int iterations_run = 0;
};

/// Missing target cells take the training column mean; everything observed is
/// copied through untouched.
Matrix initialize(const DataTable& train, const DataTable& test, const ImputationConfig& config);

ImputationRun run_icm(const DataTable& train, const DataTable& test,
                      const ImputationConfig& config,
                      const std::optional<Matrix>& truth = std::nullopt);

/// Per-target RMSE over the masked cells only; absent when a target has none.
std::vector<std::optional<double>> rmse(const Matrix& estimates, const Matrix& truth,
                                        const BoolMatrix& mask,
                                        const std::vector<Eigen::Index>& target_cols);

/// Each target's RMSE trajectory divided by its iteration-1 value; K entries
/// for k = 1..K. Values below one indicate improvement over the first sweep.
std::vector<std::optional<std::vector<double>>> normalized_trend(const ImputationRun& run);

std::string run_to_json(const ImputationRun& run);

}  // namespace geoinfer
