#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geoinfer/data.hpp"

namespace geoinfer {

/// Optional overrides for the fit-free defaults (kernel bandwidth, neighbor
/// count, posterior bin count, class smoothing).
struct PredictorHyper {
  std::optional<double> bandwidth;
  std::optional<int> k_neighbors;
  std::optional<int> bins;
  std::optional<double> alpha;
};

inline constexpr int kDefaultBins = 128;
inline constexpr double kDefaultAlpha = 0.5;
inline constexpr int kDefaultKNeighbors = 16;

/// Quantized predictive distribution: B+1 strictly increasing bin edges and
/// B nonnegative probabilities summing to one.
struct DiscretePosterior {
  Vector bin_edges;
  Vector probs;
};

double posterior_mean(const DiscretePosterior& p);
double posterior_quantile(const DiscretePosterior& p, double q);

/// Per-class probabilities ordered by the context's class registry.
struct ProbabilityVector {
  std::vector<std::string> classes;
  Vector probs;

  double prob_of(const std::string& class_name) const;
};

/// Normalized vector of kernel affinities from a query to every context
/// sample; unit Euclidean norm.
using AffinityEmbedding = Vector;

/// Immutable in-context state: the standardized and whitened training set plus
/// the fit-free kernel hyperparameters. No trained parameters; every
/// prediction conditions on the stored context directly.
class PredictorContext {
 public:
  static PredictorContext classification(const Matrix& features, std::vector<int> labels,
                                         std::vector<std::string> class_names,
                                         const PredictorHyper& hyper = {},
                                         std::vector<std::string> feature_names = {});
  static PredictorContext regression(const Matrix& features, Vector targets,
                                     const PredictorHyper& hyper = {},
                                     std::vector<std::string> feature_names = {});

  Eigen::Index n_samples() const { return whitened_.rows(); }
  Eigen::Index n_features() const { return whitened_.cols(); }
  bool is_classification() const { return !class_names_.empty(); }

  double bandwidth() const { return bandwidth_; }
  bool bandwidth_overridden() const { return bandwidth_overridden_; }
  int k_neighbors() const { return k_; }
  double alpha() const { return alpha_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<int>& labels() const { return labels_; }
  const Vector& targets() const { return targets_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const StandardizationStats& stats() const { return stats_; }

  /// Map a raw feature vector into the whitened context space.
  Vector whiten(const Vector& x) const;
  /// Squared whitened distances from a raw query to every context sample.
  Vector squared_distances(const Vector& x) const;
  /// Indices of the k nearest context samples, ties broken by row order.
  std::vector<Eigen::Index> nearest(const Vector& squared_dists, int k) const;

 private:
  PredictorContext() = default;
  void init(const Matrix& features, const PredictorHyper& hyper,
            std::vector<std::string> feature_names);

  StandardizationStats stats_;
  Matrix whitening_;  // lower Cholesky factor of the feature correlation
  Matrix whitened_;   // n x d whitened training features
  Vector row_sq_norms_;
  std::vector<int> labels_;
  std::vector<std::string> class_names_;
  Vector targets_;
  std::vector<std::string> feature_names_;
  double bandwidth_ = 0.0;
  bool bandwidth_overridden_ = false;
  int k_ = kDefaultKNeighbors;
  double alpha_ = kDefaultAlpha;
};

/// Build a context from a table: the target column supplies labels or targets,
/// every remaining non-class column is a feature.
PredictorContext build_context(const DataTable& train, const std::string& target_column,
                               const PredictorHyper& hyper = {});

ProbabilityVector predict_class_proba(const PredictorContext& ctx, const Vector& x);

DiscretePosterior predict_posterior(const PredictorContext& ctx, const Vector& x,
                                    int bins = kDefaultBins);

AffinityEmbedding embed(const PredictorContext& ctx, const Vector& x);

/// Row-major probability surface of one class at cell centers.
struct DecisionGrid {
  std::vector<double> x_coords;  // first feature axis
  std::vector<double> y_coords;  // second feature axis
  Matrix probs;                  // probs(i, j) at (x_coords[i], y_coords[j])
};

DecisionGrid decision_grid(const PredictorContext& ctx, std::pair<double, double> x_range,
                           std::pair<double, double> y_range, std::pair<int, int> resolution,
                           const std::string& class_name = "Sand");

}  // namespace geoinfer
