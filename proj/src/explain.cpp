#include "geoinfer/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace geoinfer {

using nlohmann::json;

namespace {

std::string coalition_string(std::uint32_t mask, int d) {
  std::string s;
  for (int j = 0; j < d; ++j) s.push_back(mask & (1u << j) ? '1' : '0');
  return s;
}

/// Interventional value of a coalition: model output averaged over background
/// rows with the coalition's features replaced by the query's.
class CoalitionValue {
 public:
  CoalitionValue(const ModelFn& model, const Matrix& background, const Vector& x)
      : model_(model), background_(background), x_(x), d_(static_cast<int>(x.size())) {
    if (d_ <= 26) cache_.assign(std::size_t{1} << d_, std::nullopt);
  }

  double operator()(std::uint32_t mask) {
    if (!cache_.empty() && cache_[mask]) return *cache_[mask];
    Vector z(d_);
    double sum = 0.0;
    for (Eigen::Index b = 0; b < background_.rows(); ++b) {
      for (int j = 0; j < d_; ++j)
        z(j) = (mask & (1u << j)) ? x_(j) : background_(b, j);
      const double out = model_(z);
      if (!std::isfinite(out))
        throw std::runtime_error("permutation_shap: model returned non-finite value on coalition " +
                                 coalition_string(mask, d_));
      sum += out;
    }
    const double value = sum / static_cast<double>(background_.rows());
    if (!cache_.empty()) cache_[mask] = value;
    return value;
  }

 private:
  const ModelFn& model_;
  const Matrix& background_;
  const Vector& x_;
  int d_;
  std::vector<std::optional<double>> cache_;
};

ShapAttribution exact_shap(const ModelFn& model, const Matrix& background, const Vector& x) {
  const int d = static_cast<int>(x.size());
  if (d > 10)
    throw std::invalid_argument("permutation_shap: exact mode supports at most 10 features");

  CoalitionValue value(model, background, x);
  const std::uint32_t full = (1u << d) - 1u;

  std::vector<double> values(std::size_t{1} << d);
  for (std::uint32_t mask = 0; mask <= full; ++mask) values[mask] = value(mask);

  // Shapley weight for a coalition of size s not containing j: s!(d-1-s)!/d!
  std::vector<double> weight(static_cast<std::size_t>(d));
  {
    std::vector<double> factorial(static_cast<std::size_t>(d) + 1, 1.0);
    for (int i = 1; i <= d; ++i)
      factorial[static_cast<std::size_t>(i)] = factorial[static_cast<std::size_t>(i) - 1] * i;
    for (int s = 0; s < d; ++s)
      weight[static_cast<std::size_t>(s)] = factorial[static_cast<std::size_t>(s)] *
                                            factorial[static_cast<std::size_t>(d - 1 - s)] /
                                            factorial[static_cast<std::size_t>(d)];
  }

  ShapAttribution out;
  out.base_value = values[0];
  out.phi = Vector::Zero(d);
  for (int j = 0; j < d; ++j) {
    const std::uint32_t bit = 1u << j;
    double phi = 0.0;
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
      if (mask & bit) continue;
      const int s = std::popcount(mask);
      phi += weight[static_cast<std::size_t>(s)] * (values[mask | bit] - values[mask]);
    }
    out.phi(j) = phi;
  }
  return out;
}

ShapAttribution monte_carlo_shap(const ModelFn& model, const Matrix& background, const Vector& x,
                                 int n_permutations, std::uint64_t seed) {
  const int d = static_cast<int>(x.size());
  if (n_permutations < 2)
    throw std::invalid_argument("permutation_shap: need at least 2 permutations");

  CoalitionValue value(model, background, x);
  Rng rng(seed);

  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);

  Matrix contributions(n_permutations, d);
  int done = 0;
  while (done < n_permutations) {
    // Fisher-Yates draw, then the same ordering reversed (antithetic pair).
    for (int j = d - 1; j > 0; --j) {
      const auto swap_with = static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(j + 1)));
      std::swap(order[static_cast<std::size_t>(j)], order[swap_with]);
    }
    for (int rep = 0; rep < 2 && done < n_permutations; ++rep) {
      std::uint32_t mask = 0;
      double prev = value(0);
      for (int pos = 0; pos < d; ++pos) {
        const int j = rep == 0 ? order[static_cast<std::size_t>(pos)]
                               : order[static_cast<std::size_t>(d - 1 - pos)];
        mask |= 1u << j;
        const double cur = value(mask);
        contributions(done, j) = cur - prev;
        prev = cur;
      }
      ++done;
    }
  }

  ShapAttribution out;
  out.base_value = value(0);
  out.phi = contributions.colwise().mean();
  out.std_error.resize(d);
  for (int j = 0; j < d; ++j) {
    const double var = (contributions.col(j).array() - out.phi(j)).square().sum() /
                       std::max(1, n_permutations - 1);
    out.std_error(j) = std::sqrt(var / n_permutations);
  }
  return out;
}

}  // namespace

ShapAttribution permutation_shap(const ModelFn& model, const Matrix& background, const Vector& x,
                                 const ShapOptions& options) {
  if (x.size() < 1) throw std::invalid_argument("permutation_shap: need at least one feature");
  if (background.rows() < 1) throw std::invalid_argument("permutation_shap: empty background");
  if (background.cols() != x.size())
    throw std::invalid_argument("permutation_shap: background/query dimension mismatch");
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (!std::isfinite(x(j))) throw std::invalid_argument("permutation_shap: non-finite query");

  if (options.mode == ShapMode::Exact) return exact_shap(model, background, x);
  return monte_carlo_shap(model, background, x, options.n_permutations, options.seed);
}

ShapResult shap_for_target(const DataTable& train, const ImputationRun& run,
                           const std::string& target, const std::vector<Eigen::Index>& rows,
                           const ShapOptions& options, int background_size,
                           const PredictorHyper& hyper, int bins) {
  const Eigen::Index target_col = train.column_index(target);
  if (train.schema()[static_cast<std::size_t>(target_col)].role != ColumnRole::MechanicalTarget)
    throw std::invalid_argument("shap_for_target: '" + target + "' is not a mechanical_target");
  if (run.estimates.empty()) throw std::invalid_argument("shap_for_target: empty run");

  std::vector<Eigen::Index> feature_cols;
  ShapResult result;
  for (Eigen::Index j = 0; j < train.n_cols(); ++j) {
    if (j == target_col) continue;
    if (train.schema()[static_cast<std::size_t>(j)].role == ColumnRole::ClassLabel) continue;
    feature_cols.push_back(j);
    result.feature_names.push_back(train.schema()[static_cast<std::size_t>(j)].name);
    result.feature_roles.push_back(train.schema()[static_cast<std::size_t>(j)].role);
  }

  Matrix train_features(train.n_rows(), static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t j = 0; j < feature_cols.size(); ++j)
    train_features.col(static_cast<Eigen::Index>(j)) = train.values().col(feature_cols[j]);
  const PredictorContext ctx = PredictorContext::regression(
      train_features, train.values().col(target_col), hyper);

  const ModelFn model = [&](const Vector& z) {
    return posterior_mean(predict_posterior(ctx, z, bins));
  };

  // Seeded uniform subsample of training rows (without replacement).
  Matrix background;
  {
    const auto n = train.n_rows();
    const auto size = std::min<Eigen::Index>(background_size, n);
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    Rng rng(options.seed);
    for (Eigen::Index i = 0; i < size; ++i) {
      const auto pick = i + static_cast<Eigen::Index>(
                                rng.uniform_int(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick)]);
    }
    background.resize(size, train_features.cols());
    for (Eigen::Index i = 0; i < size; ++i)
      background.row(i) = train_features.row(pool[static_cast<std::size_t>(i)]);
  }

  const Matrix& final_estimates = run.estimates.back();
  result.attributions.resize(static_cast<Eigen::Index>(rows.size()),
                             static_cast<Eigen::Index>(feature_cols.size()));
  result.inputs.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(feature_cols.size()));
  result.model_outputs.resize(static_cast<Eigen::Index>(rows.size()));
  result.n_permutations = options.mode == ShapMode::MonteCarlo ? options.n_permutations : 0;
  result.seed = options.seed;

  Vector x(static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Eigen::Index row = rows[r];
    if (row < 0 || row >= final_estimates.rows())
      throw std::invalid_argument("shap_for_target: row index out of range");
    for (std::size_t j = 0; j < feature_cols.size(); ++j)
      x(static_cast<Eigen::Index>(j)) = final_estimates(row, feature_cols[j]);
    const auto attribution = permutation_shap(model, background, x, options);
    result.attributions.row(static_cast<Eigen::Index>(r)) = attribution.phi.transpose();
    result.inputs.row(static_cast<Eigen::Index>(r)) = x.transpose();
    result.model_outputs(static_cast<Eigen::Index>(r)) = model(x);
    result.base_value = attribution.base_value;
  }
  return result;
}

MeanAbsShap mean_abs_shap(const ShapResult& result) {
  if (result.attributions.rows() == 0)
    throw std::invalid_argument("mean_abs_shap: empty result");
  MeanAbsShap out;
  out.feature_names = result.feature_names;
  out.values = result.attributions.array().abs().colwise().mean();
  for (const auto role : result.feature_roles)
    out.is_index_feature.push_back(role == ColumnRole::IndexFeature);
  return out;
}

std::vector<std::pair<double, double>> shap_scatter_data(const ShapResult& result,
                                                         const std::string& feature) {
  Eigen::Index col = -1;
  for (std::size_t j = 0; j < result.feature_names.size(); ++j)
    if (result.feature_names[j] == feature) col = static_cast<Eigen::Index>(j);
  if (col < 0) throw std::invalid_argument("shap_scatter_data: unknown feature '" + feature + "'");
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(static_cast<std::size_t>(result.attributions.rows()));
  for (Eigen::Index i = 0; i < result.attributions.rows(); ++i)
    pairs.emplace_back(result.inputs(i, col), result.attributions(i, col));
  return pairs;
}

SimilarityMatrix cosine_matrix(const Matrix& test_embeddings, const Matrix& train_embeddings,
                               std::vector<std::string> row_labels,
                               std::vector<std::string> col_labels) {
  if (test_embeddings.cols() != train_embeddings.cols())
    throw std::invalid_argument("cosine_matrix: embedding dimension mismatch");
  auto norms = [](const Matrix& m, const char* side) {
    Vector n = m.rowwise().norm();
    for (Eigen::Index i = 0; i < n.size(); ++i)
      if (n(i) <= 0.0)
        throw std::invalid_argument(std::string("cosine_matrix: zero-norm ") + side +
                                    " embedding at row " + std::to_string(i));
    return n;
  };
  const Vector tn = norms(test_embeddings, "test");
  const Vector rn = norms(train_embeddings, "train");

  SimilarityMatrix sim;
  sim.values = (test_embeddings * train_embeddings.transpose()).array().colwise() / tn.array();
  sim.values = sim.values.array().rowwise() / rn.transpose().array();
  sim.row_labels = std::move(row_labels);
  sim.col_labels = std::move(col_labels);
  return sim;
}

std::string shap_to_csv(const ShapResult& result) {
  std::ostringstream out;
  out << "sample";
  for (const auto& name : result.feature_names) out << ',' << name;
  out << ",base_value,model_output\n";
  for (Eigen::Index i = 0; i < result.attributions.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < result.attributions.cols(); ++j)
      out << ',' << format_sig12(result.attributions(i, j));
    out << ',' << format_sig12(result.base_value) << ','
        << format_sig12(result.model_outputs(i)) << '\n';
  }
  return out.str();
}

std::string shap_to_json(const ShapResult& result) {
  json attributions = json::array();
  json inputs = json::array();
  for (Eigen::Index i = 0; i < result.attributions.rows(); ++i) {
    json arow = json::array();
    json irow = json::array();
    for (Eigen::Index j = 0; j < result.attributions.cols(); ++j) {
      arow.push_back(result.attributions(i, j));
      irow.push_back(result.inputs(i, j));
    }
    attributions.push_back(std::move(arow));
    inputs.push_back(std::move(irow));
  }
  json roles = json::array();
  for (const auto role : result.feature_roles) roles.push_back(to_string(role));
  json outputs = json::array();
  for (Eigen::Index i = 0; i < result.model_outputs.size(); ++i)
    outputs.push_back(result.model_outputs(i));
  json obj = {{"base_value", result.base_value},
              {"feature_names", result.feature_names},
              {"feature_roles", std::move(roles)},
              {"attributions", std::move(attributions)},
              {"inputs", std::move(inputs)},
              {"model_outputs", std::move(outputs)},
              {"n_permutations", result.n_permutations},
              {"seed", result.seed}};
  return obj.dump(2);
}

std::string similarity_to_csv(const SimilarityMatrix& sim) {
  std::ostringstream out;
  for (Eigen::Index j = 0; j < sim.values.cols(); ++j) {
    out << ',';
    if (j < static_cast<Eigen::Index>(sim.col_labels.size()))
      out << sim.col_labels[static_cast<std::size_t>(j)];
    else
      out << "train_" << j;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < sim.values.rows(); ++i) {
    if (i < static_cast<Eigen::Index>(sim.row_labels.size()))
      out << sim.row_labels[static_cast<std::size_t>(i)];
    else
      out << "test_" << i;
    for (Eigen::Index j = 0; j < sim.values.cols(); ++j)
      out << ',' << format_sig12(sim.values(i, j));
    out << '\n';
  }
  return out.str();
}

}  // namespace geoinfer
