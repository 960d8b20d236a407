#include "geoinfer/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geoinfer {

namespace {

double normal_cdf(double t) { return 0.5 * std::erfc(-t * 0.70710678118654752440); }

void check_finite(const Vector& x, Eigen::Index expected_dim) {
  if (x.size() != expected_dim)
    throw std::invalid_argument("predictor: query has dimension " + std::to_string(x.size()) +
                                ", context expects " + std::to_string(expected_dim));
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (!std::isfinite(x(j))) throw std::invalid_argument("predictor: non-finite query input");
}

/// Multivariate Silverman factor in whitened (unit-covariance) space.
double silverman_bandwidth(Eigen::Index n, Eigen::Index d) {
  const double dd = static_cast<double>(d);
  return std::pow(4.0 / (dd + 2.0), 1.0 / (dd + 4.0)) *
         std::pow(static_cast<double>(n), -1.0 / (dd + 4.0));
}

}  // namespace

double posterior_mean(const DiscretePosterior& p) {
  double mean = 0.0;
  for (Eigen::Index b = 0; b < p.probs.size(); ++b)
    mean += p.probs(b) * 0.5 * (p.bin_edges(b) + p.bin_edges(b + 1));
  return mean;
}

double posterior_quantile(const DiscretePosterior& p, double q) {
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("posterior_quantile: q must lie in [0, 1]");
  double cum = 0.0;
  for (Eigen::Index b = 0; b < p.probs.size(); ++b) {
    const double next = cum + p.probs(b);
    if (next >= q && p.probs(b) > 0.0) {
      const double t = std::clamp((q - cum) / p.probs(b), 0.0, 1.0);
      return p.bin_edges(b) + t * (p.bin_edges(b + 1) - p.bin_edges(b));
    }
    cum = next;
  }
  // q beyond accumulated mass (roundoff): right edge of the last massive bin.
  for (Eigen::Index b = p.probs.size(); b-- > 0;)
    if (p.probs(b) > 0.0) return p.bin_edges(b + 1);
  return p.bin_edges(0);
}

double ProbabilityVector::prob_of(const std::string& class_name) const {
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (classes[c] == class_name) return probs(static_cast<Eigen::Index>(c));
  throw std::invalid_argument("ProbabilityVector: unknown class '" + class_name + "'");
}

void PredictorContext::init(const Matrix& features, const PredictorHyper& hyper,
                            std::vector<std::string> feature_names) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (n < 2) throw std::invalid_argument("PredictorContext: need at least two context samples");
  if (d < 1) throw std::invalid_argument("PredictorContext: need at least one feature");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (!std::isfinite(features(i, j)))
        throw std::invalid_argument("PredictorContext: non-finite training feature");

  stats_ = fit_standardization(features);
  Matrix z(n, d);
  for (Eigen::Index j = 0; j < d; ++j)
    z.col(j) = (features.col(j).array() - stats_.mean(j)) / stats_.stddev(j);

  Matrix corr = (z.transpose() * z) / static_cast<double>(n);
  corr.diagonal().setOnes();
  corr.diagonal().array() += 1e-9;
  Eigen::LLT<Matrix> llt(corr);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("PredictorContext: feature correlation not factorizable");
  whitening_ = llt.matrixL();
  whitened_ = whitening_.triangularView<Eigen::Lower>().solve(z.transpose()).transpose();
  row_sq_norms_ = whitened_.rowwise().squaredNorm();

  if (hyper.bandwidth) {
    if (!(*hyper.bandwidth > 0.0))
      throw std::invalid_argument("PredictorContext: bandwidth must be positive");
    bandwidth_ = *hyper.bandwidth;
    bandwidth_overridden_ = true;
  } else {
    bandwidth_ = silverman_bandwidth(n, d);
  }
  k_ = hyper.k_neighbors ? *hyper.k_neighbors : kDefaultKNeighbors;
  if (k_ < 1) throw std::invalid_argument("PredictorContext: k_neighbors must be >= 1");
  k_ = std::min<int>(k_, static_cast<int>(n));
  alpha_ = hyper.alpha ? *hyper.alpha : kDefaultAlpha;
  if (alpha_ < 0.0) throw std::invalid_argument("PredictorContext: alpha must be >= 0");
  feature_names_ = std::move(feature_names);
}

PredictorContext PredictorContext::classification(const Matrix& features, std::vector<int> labels,
                                                  std::vector<std::string> class_names,
                                                  const PredictorHyper& hyper,
                                                  std::vector<std::string> feature_names) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows())
    throw std::invalid_argument("PredictorContext: label count mismatch");
  if (class_names.size() < 2)
    throw std::invalid_argument("PredictorContext: need at least two classes");
  for (int label : labels)
    if (label < 0 || label >= static_cast<int>(class_names.size()))
      throw std::invalid_argument("PredictorContext: label index out of range");
  PredictorContext ctx;
  ctx.init(features, hyper, std::move(feature_names));
  ctx.labels_ = std::move(labels);
  ctx.class_names_ = std::move(class_names);
  return ctx;
}

PredictorContext PredictorContext::regression(const Matrix& features, Vector targets,
                                              const PredictorHyper& hyper,
                                              std::vector<std::string> feature_names) {
  if (targets.size() != features.rows())
    throw std::invalid_argument("PredictorContext: target count mismatch");
  for (Eigen::Index i = 0; i < targets.size(); ++i)
    if (!std::isfinite(targets(i)))
      throw std::invalid_argument("PredictorContext: non-finite training target");
  PredictorContext ctx;
  ctx.init(features, hyper, std::move(feature_names));
  ctx.targets_ = std::move(targets);
  return ctx;
}

Vector PredictorContext::whiten(const Vector& x) const {
  Vector z(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j)
    z(j) = (x(j) - stats_.mean(j)) / stats_.stddev(j);
  return whitening_.triangularView<Eigen::Lower>().solve(z);
}

Vector PredictorContext::squared_distances(const Vector& x) const {
  check_finite(x, n_features());
  const Vector z = whiten(x);
  Vector d2 = row_sq_norms_ - 2.0 * (whitened_ * z);
  d2.array() += z.squaredNorm();
  return d2.cwiseMax(0.0);
}

std::vector<Eigen::Index> PredictorContext::nearest(const Vector& squared_dists, int k) const {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(squared_dists.size()));
  std::iota(order.begin(), order.end(), 0);
  const auto mid =
      order.begin() + std::min<std::ptrdiff_t>(k, static_cast<std::ptrdiff_t>(order.size()));
  // Tie-break on the row index so the selection is a deterministic total order.
  std::partial_sort(order.begin(), mid, order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return squared_dists(a) < squared_dists(b) ||
           (squared_dists(a) == squared_dists(b) && a < b);
  });
  order.resize(static_cast<std::size_t>(mid - order.begin()));
  return order;
}

PredictorContext build_context(const DataTable& train, const std::string& target_column,
                               const PredictorHyper& hyper) {
  if (train.n_rows() == 0) throw std::invalid_argument("build_context: empty table");
  const Eigen::Index target = train.column_index(target_column);

  std::vector<Eigen::Index> feature_cols;
  std::vector<std::string> feature_names;
  for (Eigen::Index j = 0; j < train.n_cols(); ++j) {
    if (j == target || train.schema()[static_cast<std::size_t>(j)].role == ColumnRole::ClassLabel)
      continue;
    feature_cols.push_back(j);
    feature_names.push_back(train.schema()[static_cast<std::size_t>(j)].name);
  }
  if (feature_cols.empty()) throw std::invalid_argument("build_context: no feature columns");

  Matrix features(train.n_rows(), static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t j = 0; j < feature_cols.size(); ++j) {
    for (Eigen::Index i = 0; i < train.n_rows(); ++i) {
      if (train.is_missing(i, feature_cols[j]))
        throw std::invalid_argument("build_context: missing feature value in training table");
      features(i, static_cast<Eigen::Index>(j)) = train.value(i, feature_cols[j]);
    }
  }

  if (train.schema()[static_cast<std::size_t>(target)].role == ColumnRole::ClassLabel) {
    std::vector<int> labels(static_cast<std::size_t>(train.n_rows()));
    for (Eigen::Index i = 0; i < train.n_rows(); ++i) {
      if (train.is_missing(i, target))
        throw std::invalid_argument("build_context: missing class label");
      labels[static_cast<std::size_t>(i)] = static_cast<int>(train.value(i, target));
    }
    return PredictorContext::classification(features, std::move(labels), train.categories(),
                                            hyper, std::move(feature_names));
  }

  Vector targets(train.n_rows());
  for (Eigen::Index i = 0; i < train.n_rows(); ++i) {
    if (train.is_missing(i, target))
      throw std::invalid_argument("build_context: missing target value in training table");
    targets(i) = train.value(i, target);
  }
  return PredictorContext::regression(features, std::move(targets), hyper,
                                      std::move(feature_names));
}

namespace {

struct NeighborWeights {
  std::vector<Eigen::Index> index;
  Vector weights;  // not normalized
};

/// Gaussian weights over the k nearest context samples. Falls back to uniform
/// weights when every kernel value underflows to zero.
NeighborWeights weigh_neighbors(const PredictorContext& ctx, const Vector& sq_dists, int k,
                                double bandwidth) {
  NeighborWeights out;
  out.index = ctx.nearest(sq_dists, k);
  const auto m = static_cast<Eigen::Index>(out.index.size());
  out.weights.resize(m);
  const double two_h2 = 2.0 * bandwidth * bandwidth;
  for (Eigen::Index i = 0; i < m; ++i)
    out.weights(i) = std::exp(-sq_dists(out.index[static_cast<std::size_t>(i)]) / two_h2);
  if (out.weights.sum() <= 0.0) out.weights.setOnes();
  return out;
}

}  // namespace

ProbabilityVector predict_class_proba(const PredictorContext& ctx, const Vector& x) {
  if (!ctx.is_classification())
    throw std::invalid_argument("predict_class_proba: context has no class labels");
  const Vector sq = ctx.squared_distances(x);
  const auto nw = weigh_neighbors(ctx, sq, ctx.k_neighbors(), ctx.bandwidth());

  const auto n_classes = static_cast<Eigen::Index>(ctx.class_names().size());
  Vector sums = Vector::Zero(n_classes);
  for (Eigen::Index i = 0; i < nw.weights.size(); ++i)
    sums(ctx.labels()[static_cast<std::size_t>(nw.index[static_cast<std::size_t>(i)])]) +=
        nw.weights(i);

  ProbabilityVector out;
  out.classes = ctx.class_names();
  out.probs = (sums.array() + ctx.alpha()) /
              (sums.sum() + ctx.alpha() * static_cast<double>(n_classes));
  return out;
}

DiscretePosterior predict_posterior(const PredictorContext& ctx, const Vector& x, int bins) {
  if (ctx.is_classification())
    throw std::invalid_argument("predict_posterior: context target is categorical");
  if (bins < 8) throw std::invalid_argument("predict_posterior: need at least 8 bins");

  const Vector sq = ctx.squared_distances(x);
  const auto neighbors = ctx.nearest(sq, ctx.k_neighbors());
  const auto m = static_cast<Eigen::Index>(neighbors.size());

  // Regression locality: the kernel scale adapts to the query's k-NN radius
  // unless an explicit bandwidth override pins it.
  double h;
  if (ctx.bandwidth_overridden()) {
    h = ctx.bandwidth();
  } else {
    h = std::sqrt(sq(neighbors.back()));
    if (h <= 0.0) h = 1.0;  // all k neighbors coincide with the query
  }
  Vector weights(m);
  const double two_h2 = 2.0 * h * h;
  for (Eigen::Index i = 0; i < m; ++i)
    weights(i) = std::exp(-sq(neighbors[static_cast<std::size_t>(i)]) / two_h2);
  if (weights.sum() <= 0.0) weights.setOnes();
  weights /= weights.sum();

  // Bin grid spans the context target range extended by half on each side.
  const double y_min = ctx.targets().minCoeff();
  const double y_max = ctx.targets().maxCoeff();
  double range = y_max - y_min;
  double lo = y_min - 0.5 * range;
  double hi = y_max + 0.5 * range;
  if (range <= 0.0) {  // degenerate constant target
    lo = y_min - 0.5;
    hi = y_max + 0.5;
  }
  const double width = (hi - lo) / bins;

  // Target-space smoothing: Silverman's rule on the neighbor targets, floored
  // at one bin width.
  Vector ny(m);
  for (Eigen::Index i = 0; i < m; ++i) ny(i) = ctx.targets()(neighbors[static_cast<std::size_t>(i)]);
  double sigma = 0.0;
  {
    const double mean = ny.mean();
    const double sd = std::sqrt((ny.array() - mean).square().mean());
    std::vector<double> sorted(ny.data(), ny.data() + ny.size());
    std::sort(sorted.begin(), sorted.end());
    auto quant = [&](double q) {
      const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
      const auto b = static_cast<std::size_t>(pos);
      const double t = pos - static_cast<double>(b);
      return b + 1 < sorted.size() ? sorted[b] * (1.0 - t) + sorted[b + 1] * t : sorted[b];
    };
    const double iqr = quant(0.75) - quant(0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    sigma = 0.9 * spread * std::pow(static_cast<double>(m), -0.2);
  }
  sigma = std::max(sigma, width);

  DiscretePosterior post;
  post.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b)
    post.bin_edges(b) = lo + (hi - lo) * static_cast<double>(b) / bins;
  post.probs = Vector::Zero(bins);

  // Each component only touches the bins within 8 sigma of its center; mass
  // beyond that is below 1e-15 and vanishes in the renormalization.
  for (Eigen::Index i = 0; i < m; ++i) {
    const int b_lo = std::clamp(static_cast<int>(std::floor((ny(i) - 8.0 * sigma - lo) / width)),
                                0, bins - 1);
    const int b_hi = std::clamp(static_cast<int>(std::ceil((ny(i) + 8.0 * sigma - lo) / width)),
                                b_lo + 1, bins);
    double prev = normal_cdf((post.bin_edges(b_lo) - ny(i)) / sigma);
    for (int b = b_lo; b < b_hi; ++b) {
      const double cur = normal_cdf((post.bin_edges(b + 1) - ny(i)) / sigma);
      post.probs(b) += weights(i) * std::max(cur - prev, 0.0);
      prev = cur;
    }
  }
  const double total = post.probs.sum();
  if (total <= 0.0) throw std::runtime_error("predict_posterior: zero posterior mass");
  post.probs /= total;
  return post;
}

AffinityEmbedding embed(const PredictorContext& ctx, const Vector& x) {
  const Vector sq = ctx.squared_distances(x);
  const double two_h2 = 2.0 * ctx.bandwidth() * ctx.bandwidth();
  Vector affinities = (-sq.array() / two_h2).exp();
  double norm = affinities.norm();
  if (norm <= 0.0) {
    // Degenerate far-field query: indicator of the k nearest samples.
    affinities.setZero();
    for (Eigen::Index i : ctx.nearest(sq, ctx.k_neighbors())) affinities(i) = 1.0;
    norm = affinities.norm();
  }
  return affinities / norm;
}

DecisionGrid decision_grid(const PredictorContext& ctx, std::pair<double, double> x_range,
                           std::pair<double, double> y_range, std::pair<int, int> resolution,
                           const std::string& class_name) {
  if (!(x_range.second > x_range.first) || !(y_range.second > y_range.first))
    throw std::invalid_argument("decision_grid: degenerate axis range");
  if (resolution.first < 2 || resolution.second < 2)
    throw std::invalid_argument("decision_grid: resolution must be at least 2 per axis");
  if (ctx.n_features() != 2)
    throw std::invalid_argument("decision_grid: context must have exactly two features");

  DecisionGrid grid;
  const double dx = (x_range.second - x_range.first) / resolution.first;
  const double dy = (y_range.second - y_range.first) / resolution.second;
  for (int i = 0; i < resolution.first; ++i)
    grid.x_coords.push_back(x_range.first + (i + 0.5) * dx);
  for (int j = 0; j < resolution.second; ++j)
    grid.y_coords.push_back(y_range.first + (j + 0.5) * dy);

  grid.probs.resize(resolution.first, resolution.second);
  Vector query(2);
  for (int i = 0; i < resolution.first; ++i)
    for (int j = 0; j < resolution.second; ++j) {
      query(0) = grid.x_coords[static_cast<std::size_t>(i)];
      query(1) = grid.y_coords[static_cast<std::size_t>(j)];
      grid.probs(i, j) = predict_class_proba(ctx, query).prob_of(class_name);
    }
  return grid;
}

}  // namespace geoinfer
