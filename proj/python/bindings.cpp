#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "geoinfer/cli.hpp"
#include "geoinfer/data.hpp"
#include "geoinfer/explain.hpp"
#include "geoinfer/imputation.hpp"
#include "geoinfer/predictor.hpp"
#include "geoinfer/report.hpp"

namespace py = pybind11;
using namespace geoinfer;

PYBIND11_MODULE(_geoinfer, m) {
  m.doc() = "In-context soil parameter inference: kernel posteriors, iterated "
            "conditional-mean imputation, permutation-SHAP attribution";

  // --- data -----------------------------------------------------------------
  py::enum_<ColumnRole>(m, "ColumnRole")
      .value("index_feature", ColumnRole::IndexFeature)
      .value("mechanical_target", ColumnRole::MechanicalTarget)
      .value("class_label", ColumnRole::ClassLabel);

  py::enum_<SoilClass>(m, "SoilClass")
      .value("Clay", SoilClass::Clay)
      .value("Sand", SoilClass::Sand);

  py::class_<ColumnSchema>(m, "ColumnSchema")
      .def(py::init([](const std::string& name, ColumnRole role, const std::string& units) {
             return ColumnSchema{name, role, units};
           }),
           py::arg("name"), py::arg("role"), py::arg("units") = "")
      .def_readwrite("name", &ColumnSchema::name)
      .def_readwrite("role", &ColumnSchema::role)
      .def_readwrite("units", &ColumnSchema::units)
      .def("__repr__", [](const ColumnSchema& c) {
        return "ColumnSchema(" + c.name + ", " + to_string(c.role) + ")";
      });

  py::class_<DataTable>(m, "DataTable")
      .def(py::init<std::vector<ColumnSchema>, Matrix, BoolMatrix, std::vector<std::string>>(),
           py::arg("schema"), py::arg("values"), py::arg("missing"),
           py::arg("categories") = std::vector<std::string>{})
      .def_property_readonly("n_rows", &DataTable::n_rows)
      .def_property_readonly("n_cols", &DataTable::n_cols)
      .def_property_readonly("schema", &DataTable::schema)
      .def_property_readonly("values", &DataTable::values)
      .def_property_readonly("missing",
                             [](const DataTable& t) { return BoolMatrix(t.missing()); })
      .def_property_readonly("categories", &DataTable::categories)
      .def("class_labels", &DataTable::class_labels)
      .def("column_index", &DataTable::column_index)
      .def("has_missing", &DataTable::has_missing);

  m.def("vs_from_n", &vs_from_n, py::arg("n"), py::arg("soil"),
        "Shear-wave velocity from SPT blow count (class-specific power law)");
  m.def("builtin_soil_dataset", &builtin_soil_dataset,
        "The built-in 16+16 sample soil classification dataset");
  m.def("load_csv", &load_csv, py::arg("path"), py::arg("schema"));
  m.def("write_csv", &write_csv, py::arg("table"), py::arg("path"));
  m.def("parse_csv", &parse_csv, py::arg("text"), py::arg("schema"));
  m.def("to_csv", &to_csv, py::arg("table"));

  py::class_<StandardizationStats>(m, "StandardizationStats")
      .def_readonly("mean", &StandardizationStats::mean)
      .def_readonly("stddev", &StandardizationStats::stddev);
  m.def("fit_standardization",
        py::overload_cast<const DataTable&>(&fit_standardization), py::arg("train"));

  py::class_<OracleBenchmark>(m, "OracleBenchmark")
      .def_readonly("train", &OracleBenchmark::train)
      .def_readonly("test", &OracleBenchmark::test)
      .def_readonly("truth", &OracleBenchmark::truth)
      .def_readonly("joint_mean", &OracleBenchmark::joint_mean)
      .def_readonly("joint_cov", &OracleBenchmark::joint_cov)
      .def_readonly("seed", &OracleBenchmark::seed);
  m.def("oracle_schema", &oracle_schema);
  m.def("generate_oracle_benchmark", &generate_oracle_benchmark, py::arg("seed"),
        py::arg("n_train"), py::arg("n_test"), py::arg("missing_rate"));
  m.def("analytic_conditional_mean", &analytic_conditional_mean, py::arg("oracle"),
        py::arg("row"), py::arg("target_col"));
  m.def("oracle_to_json", &oracle_to_json);
  m.def("oracle_from_json", &oracle_from_json);

  // --- predictor --------------------------------------------------------------
  py::class_<PredictorHyper>(m, "PredictorHyper")
      .def(py::init([](std::optional<double> bandwidth, std::optional<int> k_neighbors,
                       std::optional<int> bins, std::optional<double> alpha) {
             PredictorHyper h;
             h.bandwidth = bandwidth;
             h.k_neighbors = k_neighbors;
             h.bins = bins;
             h.alpha = alpha;
             return h;
           }),
           py::arg("bandwidth") = std::nullopt, py::arg("k_neighbors") = std::nullopt,
           py::arg("bins") = std::nullopt, py::arg("alpha") = std::nullopt)
      .def_readwrite("bandwidth", &PredictorHyper::bandwidth)
      .def_readwrite("k_neighbors", &PredictorHyper::k_neighbors)
      .def_readwrite("bins", &PredictorHyper::bins)
      .def_readwrite("alpha", &PredictorHyper::alpha);

  py::class_<DiscretePosterior>(m, "DiscretePosterior")
      .def_readonly("bin_edges", &DiscretePosterior::bin_edges)
      .def_readonly("probs", &DiscretePosterior::probs)
      .def("mean", &posterior_mean)
      .def("quantile", &posterior_quantile, py::arg("q"));
  m.def("posterior_mean", &posterior_mean);
  m.def("posterior_quantile", &posterior_quantile, py::arg("posterior"), py::arg("q"));

  py::class_<ProbabilityVector>(m, "ProbabilityVector")
      .def_readonly("classes", &ProbabilityVector::classes)
      .def_readonly("probs", &ProbabilityVector::probs)
      .def("prob_of", &ProbabilityVector::prob_of, py::arg("class_name"));

  py::class_<PredictorContext>(m, "PredictorContext")
      .def_static("classification", &PredictorContext::classification, py::arg("features"),
                  py::arg("labels"), py::arg("class_names"),
                  py::arg("hyper") = PredictorHyper{},
                  py::arg("feature_names") = std::vector<std::string>{})
      .def_static("regression", &PredictorContext::regression, py::arg("features"),
                  py::arg("targets"), py::arg("hyper") = PredictorHyper{},
                  py::arg("feature_names") = std::vector<std::string>{})
      .def_property_readonly("n_samples", &PredictorContext::n_samples)
      .def_property_readonly("n_features", &PredictorContext::n_features)
      .def_property_readonly("is_classification", &PredictorContext::is_classification)
      .def_property_readonly("bandwidth", &PredictorContext::bandwidth)
      .def_property_readonly("k_neighbors", &PredictorContext::k_neighbors)
      .def_property_readonly("alpha", &PredictorContext::alpha)
      .def_property_readonly("class_names", &PredictorContext::class_names)
      .def_property_readonly("feature_names", &PredictorContext::feature_names);

  m.def("build_context", &build_context, py::arg("train"), py::arg("target_column"),
        py::arg("hyper") = PredictorHyper{});
  m.def("predict_class_proba", &predict_class_proba, py::arg("ctx"), py::arg("x"));
  m.def("predict_posterior", &predict_posterior, py::arg("ctx"), py::arg("x"),
        py::arg("bins") = kDefaultBins);
  m.def("embed", &embed, py::arg("ctx"), py::arg("x"));

  py::class_<DecisionGrid>(m, "DecisionGrid")
      .def_readonly("x_coords", &DecisionGrid::x_coords)
      .def_readonly("y_coords", &DecisionGrid::y_coords)
      .def_readonly("probs", &DecisionGrid::probs);
  m.def("decision_grid", &decision_grid, py::arg("ctx"), py::arg("x_range"), py::arg("y_range"),
        py::arg("resolution"), py::arg("class_name") = "Sand");

  // --- imputation --------------------------------------------------------------
  py::class_<ImputationConfig>(m, "ImputationConfig")
      .def(py::init([](int iterations, std::vector<std::string> target_order, int bins,
                       PredictorHyper hyper, std::optional<double> early_stop_tol) {
             ImputationConfig c;
             c.iterations = iterations;
             c.target_order = std::move(target_order);
             c.bins = bins;
             c.hyper = hyper;
             c.early_stop_tol = early_stop_tol;
             return c;
           }),
           py::arg("iterations") = 10,
           py::arg("target_order") = std::vector<std::string>{}, py::arg("bins") = kDefaultBins,
           py::arg("hyper") = PredictorHyper{}, py::arg("early_stop_tol") = std::nullopt)
      .def_readwrite("iterations", &ImputationConfig::iterations)
      .def_readwrite("target_order", &ImputationConfig::target_order)
      .def_readwrite("bins", &ImputationConfig::bins)
      .def_readwrite("hyper", &ImputationConfig::hyper)
      .def_readwrite("early_stop_tol", &ImputationConfig::early_stop_tol);

  py::class_<ImputationRun>(m, "ImputationRun")
      .def_readonly("target_names", &ImputationRun::target_names)
      .def_readonly("target_cols", &ImputationRun::target_cols)
      .def_readonly("estimates", &ImputationRun::estimates)
      .def_property_readonly("observed_mask",
                             [](const ImputationRun& r) { return BoolMatrix(r.observed_mask); })
      .def_readonly("rmse_by_iteration", &ImputationRun::rmse_by_iteration)
      .def_readonly("has_truth", &ImputationRun::has_truth)
      .def_readonly("iterations_run", &ImputationRun::iterations_run)
      .def(
          "final_posterior",
          [](const ImputationRun& r, Eigen::Index row,
             const std::string& target) -> std::optional<DiscretePosterior> {
            for (std::size_t t = 0; t < r.target_names.size(); ++t)
              if (r.target_names[t] == target)
                return r.final_posteriors[static_cast<std::size_t>(row)][t];
            throw std::invalid_argument("unknown target: " + target);
          },
          py::arg("row"), py::arg("target"));

  m.def("initialize", &initialize, py::arg("train"), py::arg("test"),
        py::arg("config") = ImputationConfig{});
  m.def("run_icm", &run_icm, py::arg("train"), py::arg("test"),
        py::arg("config") = ImputationConfig{}, py::arg("truth") = std::nullopt);
  m.def("rmse", &rmse, py::arg("estimates"), py::arg("truth"), py::arg("mask"),
        py::arg("target_cols"));
  m.def("normalized_trend", &normalized_trend, py::arg("run"));
  m.def("run_to_json", &run_to_json, py::arg("run"));

  // --- explain -------------------------------------------------------------------
  py::enum_<ShapMode>(m, "ShapMode")
      .value("exact", ShapMode::Exact)
      .value("monte_carlo", ShapMode::MonteCarlo);

  py::class_<ShapOptions>(m, "ShapOptions")
      .def(py::init([](ShapMode mode, int n_permutations, std::uint64_t seed) {
             ShapOptions o;
             o.mode = mode;
             o.n_permutations = n_permutations;
             o.seed = seed;
             return o;
           }),
           py::arg("mode") = ShapMode::Exact, py::arg("n_permutations") = 200,
           py::arg("seed") = 0)
      .def_readwrite("mode", &ShapOptions::mode)
      .def_readwrite("n_permutations", &ShapOptions::n_permutations)
      .def_readwrite("seed", &ShapOptions::seed);

  py::class_<ShapAttribution>(m, "ShapAttribution")
      .def_readonly("base_value", &ShapAttribution::base_value)
      .def_readonly("phi", &ShapAttribution::phi)
      .def_readonly("std_error", &ShapAttribution::std_error);

  m.def(
      "permutation_shap",
      [](const py::function& model, const Matrix& background, const Vector& x,
         const ShapOptions& options) {
        const ModelFn fn = [&model](const Vector& z) { return model(z).cast<double>(); };
        return permutation_shap(fn, background, x, options);
      },
      py::arg("model"), py::arg("background"), py::arg("x"),
      py::arg("options") = ShapOptions{});

  py::class_<ShapResult>(m, "ShapResult")
      .def_readonly("base_value", &ShapResult::base_value)
      .def_readonly("attributions", &ShapResult::attributions)
      .def_readonly("inputs", &ShapResult::inputs)
      .def_readonly("model_outputs", &ShapResult::model_outputs)
      .def_readonly("feature_names", &ShapResult::feature_names)
      .def_readonly("n_permutations", &ShapResult::n_permutations)
      .def_readonly("seed", &ShapResult::seed);

  m.def("shap_for_target", &shap_for_target, py::arg("train"), py::arg("run"), py::arg("target"),
        py::arg("rows"), py::arg("options") = ShapOptions{},
        py::arg("background_size") = kDefaultShapBackground,
        py::arg("hyper") = PredictorHyper{}, py::arg("bins") = kDefaultBins);

  py::class_<MeanAbsShap>(m, "MeanAbsShap")
      .def_readonly("feature_names", &MeanAbsShap::feature_names)
      .def_readonly("values", &MeanAbsShap::values)
      .def_readonly("is_index_feature", &MeanAbsShap::is_index_feature);
  m.def("mean_abs_shap", &mean_abs_shap, py::arg("result"));
  m.def("shap_scatter_data", &shap_scatter_data, py::arg("result"), py::arg("feature"));

  py::class_<SimilarityMatrix>(m, "SimilarityMatrix")
      .def_readonly("values", &SimilarityMatrix::values)
      .def_readonly("row_labels", &SimilarityMatrix::row_labels)
      .def_readonly("col_labels", &SimilarityMatrix::col_labels);
  m.def("cosine_matrix", &cosine_matrix, py::arg("test_embeddings"),
        py::arg("train_embeddings"), py::arg("row_labels") = std::vector<std::string>{},
        py::arg("col_labels") = std::vector<std::string>{});
  m.def("shap_to_csv", &shap_to_csv);
  m.def("shap_to_json", &shap_to_json);
  m.def("similarity_to_csv", &similarity_to_csv);

  // --- report (convenience wrappers) -----------------------------------------------
  m.def(
      "render_violin_svg",
      [](const DiscretePosterior& p, std::optional<double> truth,
         std::optional<double> observed) {
        return render_svg(violin_from_posterior(p, truth, observed));
      },
      py::arg("posterior"), py::arg("truth") = std::nullopt, py::arg("observed") = std::nullopt);
  m.def("table_rmse", &table_rmse, py::arg("run"));

  // --- cli ----------------------------------------------------------------------------
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv = {"geoinfer"};
        for (const auto& a : args) argv.push_back(a.c_str());
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Invoke the command-line interface with an argument list");
}
