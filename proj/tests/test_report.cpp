#include <doctest.h>

#include <cmath>

#include "geoinfer/explain.hpp"
#include "geoinfer/predictor.hpp"
#include "geoinfer/report.hpp"
#include "xml_check.hpp"

using namespace geoinfer;

namespace {

ChartSpec tiny_heatmap() {
  ChartSpec spec;
  spec.kind = ChartKind::Heatmap;
  spec.title = "one cell";
  spec.grid = Matrix::Constant(1, 1, 0.75);
  spec.x_coords = {0.0};
  spec.y_coords = {0.0};
  return spec;
}

}  // namespace

TEST_CASE("a 1x1 heatmap renders to well-formed SVG with one cell") {
  const std::string svg = render_svg(tiny_heatmap());
  std::string error;
  CHECK_MESSAGE(xml_well_formed(svg, &error), error);
  CHECK(count_occurrences(svg, "class=\"cell\"") == 1);
  CHECK(svg.find("<svg") != std::string::npos);
}

TEST_CASE("rendering is deterministic") {
  ChartSpec spec;
  spec.kind = ChartKind::Line;
  spec.title = "trend";
  Series s;
  s.label = "target";
  for (int i = 0; i < 10; ++i) s.points.emplace_back(i, std::sin(0.3 * i));
  spec.series.push_back(s);
  const std::string a = render_svg(spec);
  const std::string b = render_svg(spec);
  CHECK(a == b);
  CHECK(a.find("timestamp") == std::string::npos);
}

TEST_CASE("a 16x16 similarity heatmap renders all 256 cells") {
  const auto [train, test] = builtin_soil_dataset();
  const auto ctx = build_context(train, "soil");
  Matrix train_emb(16, 16), test_emb(16, 16);
  Vector x(2);
  for (Eigen::Index i = 0; i < 16; ++i) {
    x << train.value(i, 0), train.value(i, 1);
    train_emb.row(i) = embed(ctx, x).transpose();
    x << test.value(i, 0), test.value(i, 1);
    test_emb.row(i) = embed(ctx, x).transpose();
  }
  const auto sim = cosine_matrix(test_emb, train_emb);

  ChartSpec spec;
  spec.kind = ChartKind::Heatmap;
  spec.grid = sim.values;
  for (int i = 1; i <= 16; ++i) {
    spec.x_coords.push_back(i);
    spec.y_coords.push_back(i);
    spec.x_tick_labels.push_back(std::to_string(i));
    spec.y_tick_labels.push_back(std::to_string(i));
  }
  const std::string svg = render_svg(spec);
  std::string error;
  CHECK_MESSAGE(xml_well_formed(svg, &error), error);
  CHECK(count_occurrences(svg, "class=\"cell\"") == 256);
}

TEST_CASE("heatmap contours appear when the level crosses the data") {
  ChartSpec spec;
  spec.kind = ChartKind::Heatmap;
  spec.grid.resize(8, 8);
  spec.contour_levels = {0.5};
  for (int i = 0; i < 8; ++i) {
    spec.x_coords.push_back(i);
    spec.y_coords.push_back(i);
    for (int j = 0; j < 8; ++j) spec.grid(i, j) = i / 7.0;
  }
  const std::string svg = render_svg(spec);
  CHECK(svg.find("<path") != std::string::npos);

  // No contour when the level is outside the data range.
  spec.contour_levels = {2.0};
  spec.value_max = 3.0;
  const std::string flat = render_svg(spec);
  CHECK(flat.find("<path") == std::string::npos);
}

TEST_CASE("heatmap payload validation") {
  ChartSpec spec = tiny_heatmap();
  spec.x_coords = {0.0, 1.0};
  CHECK_THROWS_AS(render_svg(spec), std::invalid_argument);
  spec = tiny_heatmap();
  spec.value_max = spec.value_min;
  CHECK_THROWS_AS(render_svg(spec), std::invalid_argument);
  spec = tiny_heatmap();
  spec.grid = Matrix(0, 0);
  spec.x_coords = {};
  spec.y_coords = {};
  CHECK_THROWS_AS(render_svg(spec), std::invalid_argument);
}

TEST_CASE("violin from a point-mass posterior degenerates to a bar") {
  DiscretePosterior p;
  p.bin_edges.resize(5);
  p.bin_edges << 0.0, 1.0, 2.0, 3.0, 4.0;
  p.probs = Vector::Zero(4);
  p.probs(2) = 1.0;
  const ChartSpec spec = violin_from_posterior(p);
  REQUIRE(spec.violins.size() == 1);
  CHECK(*spec.violins[0].median == doctest::Approx(2.5));
  const std::string svg = render_svg(spec);
  std::string error;
  CHECK_MESSAGE(xml_well_formed(svg, &error), error);
  CHECK(count_occurrences(svg, "class=\"violin\"") == 1);
  CHECK(count_occurrences(svg, "class=\"median\"") == 1);
}

TEST_CASE("violin of a symmetric posterior centers its median") {
  DiscretePosterior p;
  const int bins = 64;
  p.bin_edges.resize(bins + 1);
  p.probs.resize(bins);
  double total = 0.0;
  for (int b = 0; b <= bins; ++b) p.bin_edges(b) = -2.0 + 4.0 * b / bins;
  for (int b = 0; b < bins; ++b) {
    const double mid = 0.5 * (p.bin_edges(b) + p.bin_edges(b + 1));
    p.probs(b) = std::exp(-0.5 * mid * mid);
    total += p.probs(b);
  }
  p.probs /= total;
  const ChartSpec spec = violin_from_posterior(p, 0.7, std::nullopt);
  CHECK(*spec.violins[0].median == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(*spec.violins[0].truth == 0.7);
  const std::string svg = render_svg(spec);
  CHECK(count_occurrences(svg, "class=\"truth\"") == 1);
  CHECK(count_occurrences(svg, "class=\"observed\"") == 0);
}

TEST_CASE("violin markers reproduce quantile and truth on an oracle run") {
  const auto oracle = generate_oracle_benchmark(19, 80, 6, 0.6);
  ImputationConfig config;
  config.iterations = 2;
  const ImputationRun run = run_icm(oracle.train, oracle.test, config, oracle.truth);
  bool checked = false;
  for (Eigen::Index i = 0; i < oracle.test.n_rows() && !checked; ++i)
    for (std::size_t t = 0; t < run.target_names.size() && !checked; ++t) {
      const auto& post = run.final_posteriors[static_cast<std::size_t>(i)][t];
      if (!post) continue;
      const double truth_value = oracle.truth(i, run.target_cols[t]);
      const ChartSpec spec = violin_from_posterior(*post, truth_value);
      CHECK(*spec.violins[0].median ==
            doctest::Approx(posterior_quantile(*post, 0.5)).epsilon(1e-12));
      CHECK(*spec.violins[0].truth == truth_value);
      checked = true;
    }
  CHECK(checked);
}

TEST_CASE("every chart kind emits well-formed XML") {
  std::string error;

  ChartSpec bar;
  bar.kind = ChartKind::Bar;
  bar.title = "mean |phi| & friends";  // exercises escaping
  bar.bar_values = {0.4, 1.2, 0.1};
  bar.bar_labels = {"a<1>", "b&c", "d"};
  bar.bar_highlight = {false, true, false};
  CHECK_MESSAGE(xml_well_formed(render_svg(bar), &error), error);

  ChartSpec scatter;
  scatter.kind = ChartKind::Scatter;
  Series points;
  points.marker = "star";
  points.points = {{1.0, 2.0}, {3.0, -1.0}};
  scatter.series.push_back(points);
  Series curve;
  curve.points = {{0.0, 0.0}, {4.0, 4.0}};
  scatter.overlays.push_back(curve);
  CHECK_MESSAGE(xml_well_formed(render_svg(scatter), &error), error);

  ChartSpec empty;
  empty.kind = ChartKind::Scatter;
  CHECK_THROWS_AS(render_svg(empty), std::invalid_argument);

  ChartSpec bad_bar;
  bad_bar.kind = ChartKind::Bar;
  CHECK_THROWS_AS(render_svg(bad_bar), std::invalid_argument);

  ChartSpec bad_violin;
  bad_violin.kind = ChartKind::Violin;
  CHECK_THROWS_AS(render_svg(bad_violin), std::invalid_argument);
  ViolinSpec v;
  v.bin_edges = Vector::Zero(3);
  v.probs = Vector::Zero(1);  // size mismatch
  bad_violin.violins.push_back(v);
  CHECK_THROWS_AS(render_svg(bad_violin), std::invalid_argument);
}

TEST_CASE("table_rmse formats baselines and ratios") {
  ImputationRun run;
  run.has_truth = true;
  run.iterations_run = 3;
  run.target_names = {"t1", "t2", "t3"};
  run.target_cols = {0, 1, 2};
  run.rmse_by_iteration = {
      {4.0, 2.0, 2.0, 2.0},                                        // ratio 1.0
      {1.0, 0.0, 0.0, 0.0},                                        // zero baseline -> empty ratio
      {std::nullopt, std::nullopt, std::nullopt, std::nullopt}};   // absent target
  const std::string csv = table_rmse(run);
  CHECK(csv.find("target,rmse_iter1,rmse_iter3,ratio") == 0);
  CHECK(csv.find("t1,2,2,1\n") != std::string::npos);
  CHECK(csv.find("t2,0,0,\n") != std::string::npos);
  CHECK(csv.find("t3,,,\n") != std::string::npos);

  ImputationRun no_truth;
  CHECK_THROWS_AS(table_rmse(no_truth), std::invalid_argument);
}

TEST_CASE("table_rmse matches the imputation module's numbers") {
  const auto oracle = generate_oracle_benchmark(23, 100, 8, 0.5);
  ImputationConfig config;
  config.iterations = 2;
  const ImputationRun run = run_icm(oracle.train, oracle.test, config, oracle.truth);
  const std::string csv = table_rmse(run);
  for (std::size_t t = 0; t < run.target_names.size(); ++t) {
    const auto& series = run.rmse_by_iteration[t];
    if (!series[1]) continue;
    const std::string expected =
        run.target_names[t] + "," + format_sig12(*series[1]) + "," + format_sig12(*series.back());
    CHECK(csv.find(expected) != std::string::npos);
  }
}
