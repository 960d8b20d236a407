#include "geoinfer/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "geoinfer/data.hpp"
#include "geoinfer/explain.hpp"
#include "geoinfer/imputation.hpp"
#include "geoinfer/predictor.hpp"
#include "geoinfer/report.hpp"

namespace geoinfer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kPalette[6] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                 "#d62728", "#9467bd", "#8c564b"};

json config_to_json(const CliConfig& config) {
  json obj = {{"seed", config.seed},
              {"iterations", config.iterations},
              {"bins", config.bins},
              {"alpha", config.alpha},
              {"shap_mode", config.shap_mode},
              {"shap_permutations", config.shap_permutations},
              {"background_size", config.background_size},
              {"grid_resolution", config.grid_resolution},
              {"target_order", config.target_order}};
  obj["bandwidth"] = config.bandwidth ? json(*config.bandwidth) : json(nullptr);
  obj["k_neighbors"] = config.k_neighbors ? json(*config.k_neighbors) : json(nullptr);
  return obj;
}

CliConfig config_from_json(const json& obj) {
  CliConfig config;
  config.seed = obj.value("seed", std::uint64_t{0});
  config.iterations = obj.value("iterations", 10);
  config.bins = obj.value("bins", 128);
  config.alpha = obj.value("alpha", 0.5);
  config.shap_mode = obj.value("shap_mode", std::string("exact"));
  config.shap_permutations = obj.value("shap_permutations", 200);
  config.background_size = obj.value("background_size", 32);
  config.grid_resolution = obj.value("grid_resolution", 100);
  config.target_order = obj.value("target_order", std::vector<std::string>{});
  if (obj.contains("bandwidth") && !obj["bandwidth"].is_null())
    config.bandwidth = obj["bandwidth"].get<double>();
  if (obj.contains("k_neighbors") && !obj["k_neighbors"].is_null())
    config.k_neighbors = obj["k_neighbors"].get<int>();
  return config;
}

PredictorHyper hyper_from(const CliConfig& config) {
  PredictorHyper hyper;
  hyper.bandwidth = config.bandwidth;
  hyper.k_neighbors = config.k_neighbors;
  hyper.alpha = config.alpha;
  hyper.bins = config.bins;
  return hyper;
}

/// Exclusive lock on an output directory for the lifetime of a command.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".geoinfer.lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
      throw std::runtime_error("output directory is locked by another run: " + path_.string());
    ::close(fd);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

/// Collects artifacts for a command, writes them relative to the output
/// directory, and records the manifest (written last, checksum-free).
class ArtifactSink {
 public:
  ArtifactSink(std::string command, const fs::path& out_dir, json config, json inputs)
      : command_(std::move(command)),
        out_dir_(out_dir),
        config_(std::move(config)),
        inputs_(std::move(inputs)) {
    fs::create_directories(out_dir_);
    lock_.emplace(out_dir_);
  }

  void write(const std::string& relative_path, const std::string& content) {
    const fs::path full = out_dir_ / relative_path;
    std::ofstream out(full, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write artifact: " + full.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + full.string());
    artifacts_.push_back({{"path", relative_path}, {"fnv1a64", fnv1a64_hex(content)}});
  }

  json finish() {
    json manifest = {{"command", command_},
                     {"config", config_},
                     {"inputs", inputs_},
                     {"outputs", artifacts_}};
    const fs::path full = out_dir_ / "manifest.json";
    std::ofstream out(full, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest: " + full.string());
    out << manifest.dump(2) << '\n';
    return manifest;
  }

  const json& artifacts() const { return artifacts_; }
  const fs::path& out_dir() const { return out_dir_; }

 private:
  std::string command_;
  fs::path out_dir_;
  json config_;
  json inputs_;
  json artifacts_ = json::array();
  std::optional<DirLock> lock_;
};

void print_summary(bool enabled, const std::string& command, const ArtifactSink& sink,
                   const json& metrics) {
  if (!enabled) return;
  json summary = {{"command", command},
                  {"out_dir", sink.out_dir().string()},
                  {"artifacts", sink.artifacts()},
                  {"metrics", metrics}};
  std::cout << summary.dump(2) << std::endl;
}

std::vector<ColumnSchema> load_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema file: " + path);
  json arr = json::parse(in);
  std::vector<ColumnSchema> schema;
  for (const auto& item : arr)
    schema.push_back({item.at("name").get<std::string>(),
                      column_role_from_string(item.at("role").get<std::string>()),
                      item.value("units", std::string{})});
  return schema;
}

std::string schema_to_json_text(const std::vector<ColumnSchema>& schema) {
  json arr = json::array();
  for (const auto& col : schema)
    arr.push_back({{"name", col.name}, {"role", to_string(col.role)}, {"units", col.units}});
  return arr.dump(2) + "\n";
}

Series reference_curve(SoilClass soil, double n_lo, double n_hi) {
  Series s;
  s.label = soil == SoilClass::Clay ? "100*N^(1/3) (Clay)" : "80*N^(1/3) (Sand)";
  s.color = soil == SoilClass::Clay ? "#2166ac" : "#e66101";
  s.dashed = true;
  for (int i = 0; i <= 200; ++i) {
    const double n = n_lo + (n_hi - n_lo) * i / 200.0;
    s.points.emplace_back(n, vs_from_n(std::max(n, 1e-6), soil));
  }
  return s;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  // Rank-based AUC with midrank tie handling.
  const auto n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t r = i; r <= j; ++r) ranks[order[r]] = midrank;
    i = j + 1;
  }
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t s = 0; s < n; ++s)
    if (labels[s] == 1) {
      positive_rank_sum += ranks[s];
      ++n_pos;
    }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc_auc: single-class labels");
  return (positive_rank_sum - 0.5 * static_cast<double>(n_pos) * (n_pos + 1)) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

int fail(const std::string& message) {
  std::cerr << "error: " << message << std::endl;
  return 1;
}

}  // namespace

int cmd_soil_demo(const SoilDemoOptions& options) {
  try {
    ArtifactSink sink("soil-demo", options.out_dir, config_to_json(options.config),
                      json::object());
    const auto [train, test] = builtin_soil_dataset();
    const PredictorContext ctx = build_context(train, "soil", hyper_from(options.config));

    // Scatter of both splits with the two reference curves.
    {
      ChartSpec spec;
      spec.kind = ChartKind::Scatter;
      spec.title = "Soil samples in the N-Vs plane";
      spec.x_label = "N-value";
      spec.y_label = "Vs (m/s)";
      Series train_clay{"train Clay", {}, "#2166ac", false, "circle"};
      Series train_sand{"train Sand", {}, "#e66101", false, "circle"};
      Series test_clay{"test Clay", {}, "#2166ac", false, "star"};
      Series test_sand{"test Sand", {}, "#e66101", false, "star"};
      auto add_points = [](const DataTable& t, Series& clay, Series& sand) {
        const auto labels = t.class_labels();
        for (Eigen::Index i = 0; i < t.n_rows(); ++i)
          (labels[static_cast<std::size_t>(i)] == "Clay" ? clay : sand)
              .points.emplace_back(t.value(i, 0), t.value(i, 1));
      };
      add_points(train, train_clay, train_sand);
      add_points(test, test_clay, test_sand);
      spec.series = {train_clay, train_sand, test_clay, test_sand};
      spec.overlays = {reference_curve(SoilClass::Clay, 1.0, 55.0),
                       reference_curve(SoilClass::Sand, 1.0, 55.0)};
      sink.write("scatter.svg", render_svg(spec));
    }

    // Probability surface with contours and the training samples overlaid.
    {
      const int res = options.config.grid_resolution;
      const DecisionGrid grid =
          decision_grid(ctx, {0.5, 55.0}, {80.0, 360.0}, {res, res}, "Sand");
      ChartSpec spec;
      spec.kind = ChartKind::Heatmap;
      spec.title = "P(Sand) over the N-Vs domain";
      spec.x_label = "N-value";
      spec.y_label = "Vs (m/s)";
      spec.grid = grid.probs;
      spec.x_coords = grid.x_coords;
      spec.y_coords = grid.y_coords;
      spec.contour_levels = {0.1, 0.25, 0.5, 0.75, 0.9};
      spec.value_min = 0.0;
      spec.value_max = 1.0;
      Series train_clay{"train Clay", {}, "#08306b", false, "circle"};
      Series train_sand{"train Sand", {}, "#7f2704", false, "circle"};
      const auto labels = train.class_labels();
      for (Eigen::Index i = 0; i < train.n_rows(); ++i)
        (labels[static_cast<std::size_t>(i)] == "Clay" ? train_clay : train_sand)
            .points.emplace_back(train.value(i, 0), train.value(i, 1));
      spec.series = {train_clay, train_sand};
      spec.overlays = {reference_curve(SoilClass::Clay, 1.0, 55.0),
                       reference_curve(SoilClass::Sand, 1.0, 55.0)};
      sink.write("decision_heatmap.svg", render_svg(spec));
    }

    // Embedding cosine similarities, fixture ordering on both axes.
    {
      Matrix train_emb(train.n_rows(), ctx.n_samples());
      Matrix test_emb(test.n_rows(), ctx.n_samples());
      Vector x(2);
      for (Eigen::Index i = 0; i < train.n_rows(); ++i) {
        x << train.value(i, 0), train.value(i, 1);
        train_emb.row(i) = embed(ctx, x).transpose();
      }
      for (Eigen::Index i = 0; i < test.n_rows(); ++i) {
        x << test.value(i, 0), test.value(i, 1);
        test_emb.row(i) = embed(ctx, x).transpose();
      }
      std::vector<std::string> labels;
      for (int i = 1; i <= 16; ++i) labels.push_back(std::to_string(i));
      const SimilarityMatrix sim = cosine_matrix(test_emb, train_emb, labels, labels);
      sink.write("similarity.csv", similarity_to_csv(sim));

      ChartSpec spec;
      spec.kind = ChartKind::Heatmap;
      spec.title = "Embedding cosine similarity (test vs train)";
      spec.x_label = "test sample No.";
      spec.y_label = "train sample No.";
      spec.grid = sim.values;  // grid(i, j): test i, train j
      for (int i = 1; i <= 16; ++i) {
        spec.x_coords.push_back(i);
        spec.y_coords.push_back(i);
      }
      spec.x_tick_labels = labels;
      spec.y_tick_labels = labels;
      spec.value_min = 0.0;
      spec.value_max = 1.0;
      sink.write("similarity_heatmap.svg", render_svg(spec));
    }

    // Held-out metrics.
    json metrics;
    {
      std::vector<double> scores;
      std::vector<int> labels;
      const auto test_labels = test.class_labels();
      int correct = 0;
      Vector x(2);
      for (Eigen::Index i = 0; i < test.n_rows(); ++i) {
        x << test.value(i, 0), test.value(i, 1);
        const double p_sand = predict_class_proba(ctx, x).prob_of("Sand");
        scores.push_back(p_sand);
        const int truth = test_labels[static_cast<std::size_t>(i)] == "Sand" ? 1 : 0;
        labels.push_back(truth);
        const int predicted = p_sand > 0.5 ? 1 : 0;  // tie -> lower class index
        if (predicted == truth) ++correct;
      }
      metrics = {{"accuracy", static_cast<double>(correct) / static_cast<double>(scores.size())},
                 {"n_correct", correct},
                 {"n_test", scores.size()},
                 {"roc_auc", roc_auc(scores, labels)},
                 {"p_sand", scores}};
      sink.write("metrics.json", metrics.dump(2) + "\n");
    }

    sink.finish();
    print_summary(options.json_summary, "soil-demo", sink, metrics);
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int cmd_impute(const ImputeOptions& options) {
  try {
    json inputs = {{"train_csv", options.train_csv},
                   {"test_csv", options.test_csv},
                   {"schema_json", options.schema_json}};
    inputs["truth_csv"] = options.truth_csv ? json(*options.truth_csv) : json(nullptr);
    ArtifactSink sink("impute", options.out_dir, config_to_json(options.config), inputs);

    const auto schema = load_schema_file(options.schema_json);
    const DataTable train = load_csv(options.train_csv, schema);
    const DataTable test = load_csv(options.test_csv, schema);

    std::optional<Matrix> truth;
    if (options.truth_csv) {
      const DataTable truth_table = load_csv(*options.truth_csv, schema);
      if (truth_table.has_missing())
        throw std::runtime_error("truth CSV must be fully observed");
      if (truth_table.n_rows() != test.n_rows())
        throw std::runtime_error("truth CSV row count differs from test CSV");
      truth = truth_table.values();
    }

    if (!test.has_missing())
      std::cerr << "warning: test table is fully observed; estimates will be constant"
                << std::endl;

    ImputationConfig config;
    config.iterations = options.config.iterations;
    config.bins = options.config.bins;
    config.hyper = hyper_from(options.config);
    config.target_order = options.config.target_order;

    const ImputationRun run = run_icm(train, test, config, truth);
    sink.write("run.json", run_to_json(run));

    // One violin chart per target: posteriors for originally missing cells,
    // filled dots for observed ones.
    for (std::size_t t = 0; t < run.target_names.size(); ++t) {
      const Eigen::Index col = run.target_cols[t];
      ChartSpec spec;
      spec.kind = ChartKind::Violin;
      spec.title = "Final-iteration posteriors: " + run.target_names[t];
      spec.x_label = "test sample";
      spec.y_label = run.target_names[t];
      bool has_violin = false;
      for (Eigen::Index i = 0; i < test.n_rows(); ++i) {
        ViolinSpec violin;
        violin.center_x = static_cast<double>(i + 1);
        violin.label = std::to_string(i + 1);
        if (run.observed_mask(i, col)) {
          const auto& post = run.final_posteriors[static_cast<std::size_t>(i)][t];
          if (!post) continue;
          violin.bin_edges = post->bin_edges;
          violin.probs = post->probs;
          violin.median = posterior_quantile(*post, 0.5);
          if (truth) violin.truth = (*truth)(i, col);
          has_violin = true;
        } else {
          // Observed: degenerate zero-width marker only.
          violin.bin_edges = Vector::Zero(2);
          violin.bin_edges << test.value(i, col), test.value(i, col) + 1e-12;
          violin.probs = Vector::Zero(1);
          violin.observed = test.value(i, col);
        }
        spec.violins.push_back(std::move(violin));
      }
      if (has_violin)
        sink.write("violin_" + run.target_names[t] + ".svg", render_svg(spec));
    }

    json metrics = {{"iterations_run", run.iterations_run},
                    {"n_snapshots", run.estimates.size()}};
    if (truth) {
      sink.write("rmse_table.csv", table_rmse(run));
      const auto trends = normalized_trend(run);
      ChartSpec spec;
      spec.kind = ChartKind::Line;
      spec.title = "Normalized RMSE by iteration";
      spec.x_label = "iteration";
      spec.y_label = "RMSE / RMSE at iteration 1";
      for (std::size_t t = 0; t < trends.size(); ++t) {
        if (!trends[t]) continue;
        Series s;
        s.label = run.target_names[t];
        s.color = kPalette[t % 6];
        for (std::size_t k = 0; k < trends[t]->size(); ++k)
          s.points.emplace_back(static_cast<double>(k + 1), (*trends[t])[k]);
        spec.series.push_back(std::move(s));
      }
      if (!spec.series.empty()) sink.write("rmse_trend.svg", render_svg(spec));
      json rmse_json = json::object();
      for (std::size_t t = 0; t < run.target_names.size(); ++t) {
        const auto& series = run.rmse_by_iteration[t];
        if (series.size() > 1 && series[1] && series.back())
          rmse_json[run.target_names[t]] = {{"iter1", *series[1]},
                                            {"final", *series.back()}};
      }
      metrics["rmse"] = rmse_json;
    }

    sink.finish();
    print_summary(options.json_summary, "impute", sink, metrics);
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int cmd_explain(const ExplainOptions& options) {
  try {
    const fs::path run_dir(options.run_dir);
    const fs::path run_manifest_path = run_dir / "manifest.json";
    std::ifstream manifest_in(run_manifest_path);
    if (!manifest_in)
      throw std::runtime_error("missing run manifest: " + run_manifest_path.string());
    const json run_manifest = json::parse(manifest_in);
    if (run_manifest.at("command").get<std::string>() != "impute")
      throw std::runtime_error("explain expects the output directory of an impute run");
    {
      std::ifstream run_in(run_dir / "run.json");
      if (!run_in) throw std::runtime_error("missing run.json in " + run_dir.string());
    }

    const json& run_inputs = run_manifest.at("inputs");
    const CliConfig run_config = config_from_json(run_manifest.at("config"));
    const auto schema = load_schema_file(run_inputs.at("schema_json").get<std::string>());
    const DataTable train = load_csv(run_inputs.at("train_csv").get<std::string>(), schema);
    const DataTable test = load_csv(run_inputs.at("test_csv").get<std::string>(), schema);

    json inputs = {{"run_dir", options.run_dir}};
    ArtifactSink sink("explain", options.out_dir, config_to_json(options.config), inputs);

    // Reproduce the run deterministically from its recorded config.
    ImputationConfig icm_config;
    icm_config.iterations = run_config.iterations;
    icm_config.bins = run_config.bins;
    icm_config.hyper = hyper_from(run_config);
    icm_config.target_order = run_config.target_order;
    const ImputationRun run = run_icm(train, test, icm_config);

    std::vector<std::string> targets = options.targets;
    if (targets.empty()) targets = run.target_names;

    ShapOptions shap_options;
    if (options.config.shap_mode == "exact")
      shap_options.mode = ShapMode::Exact;
    else if (options.config.shap_mode == "monte_carlo")
      shap_options.mode = ShapMode::MonteCarlo;
    else
      throw std::runtime_error("unknown shap mode: " + options.config.shap_mode);
    shap_options.n_permutations = options.config.shap_permutations;
    shap_options.seed = options.config.seed;

    json metrics = json::object();
    for (const auto& target : targets) {
      const Eigen::Index col = test.column_index(target);
      std::vector<Eigen::Index> rows;
      if (options.rows.empty()) {
        for (Eigen::Index i = 0; i < test.n_rows(); ++i)
          if (test.is_missing(i, col)) rows.push_back(i);
      } else {
        for (int r : options.rows) rows.push_back(r);
      }
      if (rows.empty()) continue;

      const ShapResult result =
          shap_for_target(train, run, target, rows, shap_options,
                          options.config.background_size, hyper_from(run_config),
                          run_config.bins);
      sink.write("shap_" + target + ".csv", shap_to_csv(result));
      sink.write("shap_" + target + ".json", shap_to_json(result));

      const MeanAbsShap means = mean_abs_shap(result);
      {
        ChartSpec spec;
        spec.kind = ChartKind::Bar;
        spec.title = "Mean |SHAP| for " + target;
        spec.y_label = "mean |phi|";
        for (Eigen::Index j = 0; j < means.values.size(); ++j) {
          spec.bar_values.push_back(means.values(j));
          spec.bar_labels.push_back(means.feature_names[static_cast<std::size_t>(j)]);
          spec.bar_highlight.push_back(!means.is_index_feature[static_cast<std::size_t>(j)]);
        }
        sink.write("shap_bar_" + target + ".svg", render_svg(spec));
      }

      // Scatter of the most influential index property.
      std::string top_feature;
      double top_value = -1.0;
      for (Eigen::Index j = 0; j < means.values.size(); ++j) {
        if (!means.is_index_feature[static_cast<std::size_t>(j)]) continue;
        if (means.values(j) > top_value) {
          top_value = means.values(j);
          top_feature = means.feature_names[static_cast<std::size_t>(j)];
        }
      }
      if (!top_feature.empty()) {
        const auto pairs = shap_scatter_data(result, top_feature);
        ChartSpec spec;
        spec.kind = ChartKind::Scatter;
        spec.title = "SHAP of " + top_feature + " vs value (" + target + ")";
        spec.x_label = top_feature;
        spec.y_label = "SHAP value";
        Series s;
        s.label = target;
        s.color = kPalette[0];
        s.points = pairs;
        spec.series.push_back(std::move(s));
        sink.write("shap_scatter_" + target + ".svg", render_svg(spec));
        metrics[target] = {{"top_index_feature", top_feature},
                           {"rows_explained", rows.size()}};
      }
    }

    sink.finish();
    print_summary(options.json_summary, "explain", sink, metrics);
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int cmd_generate(const GenerateOptions& options) {
  try {
    json config = {{"seed", options.seed},
                   {"n_train", options.n_train},
                   {"n_test", options.n_test},
                   {"missing_rate", options.missing_rate}};
    ArtifactSink sink("generate", options.out_dir, config, json::object());

    const OracleBenchmark oracle = generate_oracle_benchmark(
        options.seed, options.n_train, options.n_test, options.missing_rate);

    sink.write("schema.json", schema_to_json_text(oracle.train.schema()));
    sink.write("train.csv", to_csv(oracle.train));
    sink.write("test.csv", to_csv(oracle.test));
    DataTable truth_table(oracle.test.schema(), oracle.truth,
                          BoolMatrix::Constant(oracle.truth.rows(), oracle.truth.cols(), false));
    sink.write("truth.csv", to_csv(truth_table));
    sink.write("oracle.json", oracle_to_json(oracle));

    int masked = 0;
    for (Eigen::Index i = 0; i < oracle.test.n_rows(); ++i)
      for (Eigen::Index j = 0; j < oracle.test.n_cols(); ++j)
        if (oracle.test.is_missing(i, j)) ++masked;
    json metrics = {{"n_train", options.n_train},
                    {"n_test", options.n_test},
                    {"masked_cells", masked}};
    sink.finish();
    print_summary(options.json_summary, "generate", sink, metrics);
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int cmd_replay(const std::string& manifest_path, const std::string& out_dir) {
  try {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
    const json manifest = json::parse(in);
    const std::string command = manifest.at("command").get<std::string>();
    const json& inputs = manifest.at("inputs");

    int rc = 1;
    if (command == "soil-demo") {
      SoilDemoOptions options;
      options.config = config_from_json(manifest.at("config"));
      options.out_dir = out_dir;
      rc = cmd_soil_demo(options);
    } else if (command == "impute") {
      ImputeOptions options;
      options.config = config_from_json(manifest.at("config"));
      options.train_csv = inputs.at("train_csv").get<std::string>();
      options.test_csv = inputs.at("test_csv").get<std::string>();
      options.schema_json = inputs.at("schema_json").get<std::string>();
      if (!inputs.at("truth_csv").is_null())
        options.truth_csv = inputs.at("truth_csv").get<std::string>();
      options.out_dir = out_dir;
      rc = cmd_impute(options);
    } else if (command == "explain") {
      ExplainOptions options;
      options.config = config_from_json(manifest.at("config"));
      options.run_dir = inputs.at("run_dir").get<std::string>();
      options.out_dir = out_dir;
      rc = cmd_explain(options);
    } else if (command == "generate") {
      GenerateOptions options;
      const json& config = manifest.at("config");
      options.seed = config.at("seed").get<std::uint64_t>();
      options.n_train = config.at("n_train").get<int>();
      options.n_test = config.at("n_test").get<int>();
      options.missing_rate = config.at("missing_rate").get<double>();
      options.out_dir = out_dir;
      rc = cmd_generate(options);
    } else {
      throw std::runtime_error("manifest has unknown command: " + command);
    }
    if (rc != 0) return rc;

    // Verify that every artifact reproduced bit-for-bit.
    int mismatches = 0;
    for (const auto& artifact : manifest.at("outputs")) {
      const std::string rel = artifact.at("path").get<std::string>();
      std::ifstream file(fs::path(out_dir) / rel, std::ios::binary);
      if (!file) {
        std::cerr << "replay: missing artifact " << rel << std::endl;
        ++mismatches;
        continue;
      }
      std::ostringstream buf;
      buf << file.rdbuf();
      const std::string checksum = fnv1a64_hex(buf.str());
      if (checksum != artifact.at("fnv1a64").get<std::string>()) {
        std::cerr << "replay: checksum mismatch for " << rel << std::endl;
        ++mismatches;
      }
    }
    if (mismatches != 0) {
      std::cerr << "replay: " << mismatches << " artifact(s) differ" << std::endl;
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("GEOINFER_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring non-numeric GEOINFER_SEED" << std::endl;
    }
  }
  return 0;
}

/// Wire the shared config flags; precedence CLI > config file > env > default.
void add_config_flags(CLI::App* app, CliConfig& config, std::string& config_file) {
  app->add_option("--config", config_file, "JSON config file (flags take precedence)");
  app->add_option("--seed", config.seed, "random seed");
  app->add_option("--iterations", config.iterations, "ICM sweep count")->check(CLI::PositiveNumber);
  app->add_option("--bins", config.bins, "posterior bin count")->check(CLI::Range(8, 100000));
  auto* bw = app->add_option_function<double>(
      "--bandwidth", [&config](double v) { config.bandwidth = v; },
      "kernel bandwidth override (whitened space)");
  bw->check(CLI::PositiveNumber);
  app->add_option_function<int>(
         "--k", [&config](int v) { config.k_neighbors = v; }, "neighbor count")
      ->check(CLI::PositiveNumber);
  app->add_option("--alpha", config.alpha, "class-probability smoothing");
  app->add_option("--shap-mode", config.shap_mode, "exact or monte_carlo")
      ->check(CLI::IsMember({"exact", "monte_carlo"}));
  app->add_option("--shap-perms", config.shap_permutations, "Monte Carlo permutation count")
      ->check(CLI::PositiveNumber);
  app->add_option("--background-size", config.background_size, "SHAP background subsample size")
      ->check(CLI::PositiveNumber);
  app->add_option("--grid-resolution", config.grid_resolution, "decision grid resolution")
      ->check(CLI::Range(2, 4000));
  app->add_option("--target-order", config.target_order,
                  "imputation target order (column names)");
}

void merge_config_file(const std::string& path, CliConfig& config, const CLI::App* app) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  const json obj = json::parse(in);
  auto unset = [&](const std::string& flag) { return app->count(flag) == 0; };
  if (obj.contains("seed") && unset("--seed")) config.seed = obj["seed"].get<std::uint64_t>();
  if (obj.contains("iterations") && unset("--iterations"))
    config.iterations = obj["iterations"].get<int>();
  if (obj.contains("bins") && unset("--bins")) config.bins = obj["bins"].get<int>();
  if (obj.contains("bandwidth") && !obj["bandwidth"].is_null() && unset("--bandwidth"))
    config.bandwidth = obj["bandwidth"].get<double>();
  if (obj.contains("k_neighbors") && !obj["k_neighbors"].is_null() && unset("--k"))
    config.k_neighbors = obj["k_neighbors"].get<int>();
  if (obj.contains("alpha") && unset("--alpha")) config.alpha = obj["alpha"].get<double>();
  if (obj.contains("shap_mode") && unset("--shap-mode"))
    config.shap_mode = obj["shap_mode"].get<std::string>();
  if (obj.contains("shap_permutations") && unset("--shap-perms"))
    config.shap_permutations = obj["shap_permutations"].get<int>();
  if (obj.contains("background_size") && unset("--background-size"))
    config.background_size = obj["background_size"].get<int>();
  if (obj.contains("grid_resolution") && unset("--grid-resolution"))
    config.grid_resolution = obj["grid_resolution"].get<int>();
  if (obj.contains("target_order") && unset("--target-order"))
    config.target_order = obj["target_order"].get<std::vector<std::string>>();
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"geoinfer: in-context soil parameter inference"};
  app.require_subcommand(1);

  CliConfig config;
  config.seed = default_seed();
  std::string config_file;

  // soil-demo
  auto* demo = app.add_subcommand("soil-demo", "classification study on the built-in dataset");
  SoilDemoOptions demo_options;
  add_config_flags(demo, config, config_file);
  demo->add_option("--out", demo_options.out_dir, "output directory")->required();
  demo->add_flag("--json", demo_options.json_summary, "print summary JSON to stdout");

  // impute
  auto* impute = app.add_subcommand("impute", "iterated conditional-mean imputation");
  ImputeOptions impute_options;
  add_config_flags(impute, config, config_file);
  impute->add_option("--train", impute_options.train_csv, "training CSV")->required();
  impute->add_option("--test", impute_options.test_csv, "test CSV")->required();
  impute->add_option("--schema", impute_options.schema_json, "schema JSON")->required();
  std::string truth_path;
  impute->add_option("--truth", truth_path, "fully observed truth CSV");
  impute->add_option("--out", impute_options.out_dir, "output directory")->required();
  impute->add_flag("--json", impute_options.json_summary, "print summary JSON to stdout");

  // explain
  auto* explain = app.add_subcommand("explain", "SHAP attribution of an impute run");
  ExplainOptions explain_options;
  add_config_flags(explain, config, config_file);
  explain->add_option("--run", explain_options.run_dir, "impute output directory")->required();
  explain->add_option("--target", explain_options.targets, "targets to explain (default: all)");
  explain->add_option("--rows", explain_options.rows, "test rows to explain (default: missing)");
  explain->add_option("--out", explain_options.out_dir, "output directory")->required();
  explain->add_flag("--json", explain_options.json_summary, "print summary JSON to stdout");

  // generate
  auto* generate = app.add_subcommand("generate", "write an oracle benchmark bundle");
  GenerateOptions generate_options;
  generate_options.seed = config.seed;
  generate->add_option("--seed", generate_options.seed, "random seed");
  generate->add_option("--n-train", generate_options.n_train, "training rows")
      ->check(CLI::Range(50, 10000000));
  generate->add_option("--n-test", generate_options.n_test, "test rows")->check(CLI::PositiveNumber);
  generate->add_option("--missing-rate", generate_options.missing_rate, "target missingness rate")
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  generate->add_option("--out", generate_options.out_dir, "output directory")->required();
  generate->add_flag("--json", generate_options.json_summary, "print summary JSON to stdout");

  // replay
  auto* replay = app.add_subcommand("replay", "re-run a manifest and verify artifacts");
  std::string replay_manifest;
  std::string replay_out;
  replay->add_option("manifest", replay_manifest, "manifest.json of a previous run")->required();
  replay->add_option("--out", replay_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (demo->parsed() || impute->parsed() || explain->parsed())
      merge_config_file(config_file,
                        config,
                        demo->parsed() ? demo : (impute->parsed() ? impute : explain));
  } catch (const std::exception& e) {
    return fail(e.what());
  }

  if (demo->parsed()) {
    demo_options.config = config;
    return cmd_soil_demo(demo_options);
  }
  if (impute->parsed()) {
    impute_options.config = config;
    if (impute->count("--truth")) impute_options.truth_csv = truth_path;
    return cmd_impute(impute_options);
  }
  if (explain->parsed()) {
    explain_options.config = config;
    return cmd_explain(explain_options);
  }
  if (generate->parsed()) return cmd_generate(generate_options);
  if (replay->parsed()) return cmd_replay(replay_manifest, replay_out);
  return 1;
}

}  // namespace geoinfer
