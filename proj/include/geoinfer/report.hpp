#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geoinfer/imputation.hpp"

namespace geoinfer {

enum class ChartKind { Heatmap, Line, Violin, Bar, Scatter };

/// A named point set drawn as a polyline (line charts, overlays) or as
/// individual markers (scatter charts).
struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f77b4";
  bool dashed = false;
  std::string marker = "circle";  // scatter: "circle" or "star"
};

/// One violin: a discretized density profile plus optional markers.
struct ViolinSpec {
  double center_x = 0.0;
  std::string label;
  Vector bin_edges;
  Vector probs;
  std::optional<double> median;
  std::optional<double> truth;
  std::optional<double> observed;
};

/// Declarative chart description consumed by render_svg. Only the payload
/// matching `kind` is read; dimensions are validated at render time.
struct ChartSpec {
  ChartKind kind = ChartKind::Line;
  std::string title;
  std::string x_label;
  std::string y_label;

  // heatmap
  Matrix grid;  // grid(i, j) at (x_coords[i], y_coords[j])
  std::vector<double> x_coords;
  std::vector<double> y_coords;
  std::vector<double> contour_levels;
  double value_min = 0.0;
  double value_max = 1.0;
  std::vector<std::string> x_tick_labels;  // optional categorical axes
  std::vector<std::string> y_tick_labels;

  // line / scatter
  std::vector<Series> series;
  std::vector<Series> overlays;  // reference curves, drawn dashed

  // violin
  std::vector<ViolinSpec> violins;

  // bar
  std::vector<double> bar_values;
  std::vector<std::string> bar_labels;
  std::vector<bool> bar_highlight;  // true = second color group
};

/// Deterministic SVG 1.1 text: fixed 800x600 canvas, 10% margins, all
/// coordinates formatted to 4 decimals, no timestamps.
std::string render_svg(const ChartSpec& spec);

/// Mirrored density profile of a posterior with median/truth/observed markers.
ChartSpec violin_from_posterior(const DiscretePosterior& p,
                                std::optional<double> truth = std::nullopt,
                                std::optional<double> observed = std::nullopt);

/// CSV with columns {target, rmse_iter1, rmse_iterK, ratio}; ratio cell is
/// empty when the baseline is zero or the target had no missing cells.
std::string table_rmse(const ImputationRun& run);

}  // namespace geoinfer
