#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geoinfer/imputation.hpp"

namespace geoinfer {

using ModelFn = std::function<double(const Vector&)>;

enum class ShapMode { Exact, MonteCarlo };

struct ShapOptions {
  ShapMode mode = ShapMode::Exact;
  int n_permutations = 200;  // Monte Carlo only; antithetic pairs
  std::uint64_t seed = 0;
};

/// Attribution of a single prediction. `base_value` is the mean model output
/// over the background; efficiency guarantees base + sum(phi) = model(x).
struct ShapAttribution {
  double base_value = 0.0;
  Vector phi;
  Vector std_error;  // per-feature Monte Carlo standard error; empty in exact mode
};

/// Interventional permutation-Shapley attribution. Exact mode enumerates all
/// 2^d coalitions with Shapley weights (d <= 10); Monte Carlo averages
/// marginal contributions over sampled orderings, each paired with its
/// reverse. Absent features are marginalized by substituting background rows.
ShapAttribution permutation_shap(const ModelFn& model, const Matrix& background, const Vector& x,
                                 const ShapOptions& options = {});

struct ShapResult {
  double base_value = 0.0;
  Matrix attributions;  // n_samples x d
  Matrix inputs;        // the explained feature rows
  Vector model_outputs;
  std::vector<std::string> feature_names;
  std::vector<ColumnRole> feature_roles;
  int n_permutations = 0;
  std::uint64_t seed = 0;
};

inline constexpr int kDefaultShapBackground = 32;

/// Explain the final-iteration posterior-mean model of one imputation target
/// for the given test rows. The background is a seeded uniform subsample of
/// the training rows.
ShapResult shap_for_target(const DataTable& train, const ImputationRun& run,
                           const std::string& target, const std::vector<Eigen::Index>& rows,
                           const ShapOptions& options = {},
                           int background_size = kDefaultShapBackground,
                           const PredictorHyper& hyper = {}, int bins = kDefaultBins);

struct MeanAbsShap {
  std::vector<std::string> feature_names;
  Vector values;
  std::vector<bool> is_index_feature;  // partition: index properties vs other targets
};

MeanAbsShap mean_abs_shap(const ShapResult& result);

/// Paired (feature value, attribution) data for one feature, row order kept.
std::vector<std::pair<double, double>> shap_scatter_data(const ShapResult& result,
                                                         const std::string& feature);

struct SimilarityMatrix {
  Matrix values;  // rows: test samples, cols: train samples
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
};

/// Cosine similarities between two embedding sets (rows are embeddings).
SimilarityMatrix cosine_matrix(const Matrix& test_embeddings, const Matrix& train_embeddings,
                               std::vector<std::string> row_labels = {},
                               std::vector<std::string> col_labels = {});

std::string shap_to_csv(const ShapResult& result);
std::string shap_to_json(const ShapResult& result);
std::string similarity_to_csv(const SimilarityMatrix& sim);

}  // namespace geoinfer
