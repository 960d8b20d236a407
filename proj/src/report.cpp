#include "geoinfer/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace geoinfer {

namespace {

constexpr double kCanvasW = 800.0;
constexpr double kCanvasH = 600.0;
constexpr double kMarginX = 80.0;  // 10% of width
constexpr double kMarginY = 60.0;  // 10% of height

std::string escape_xml(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string num(double v) { return format_fixed(v, 4); }

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v == 0.0 ? 0.0 : v);
  return std::string(buf);
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  double map(double v, double pix_lo, double pix_hi) const {
    const double t = (v - lo) / (hi - lo);
    return pix_lo + t * (pix_hi - pix_lo);
  }
};

struct Frame {
  Axis x;
  Axis y;
  double px(double v) const { return x.map(v, kMarginX, kCanvasW - kMarginX); }
  double py(double v) const { return y.map(v, kCanvasH - kMarginY, kMarginY); }
};

void expand(Axis& a, double v) {
  a.lo = std::min(a.lo, v);
  a.hi = std::max(a.hi, v);
}

Axis padded(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

/// Diverging blue-white-orange ramp; stops #2166AC, #F7F7F7, #E66101.
std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int stops[3][3] = {{0x21, 0x66, 0xAC}, {0xF7, 0xF7, 0xF7}, {0xE6, 0x61, 0x01}};
  const int a = t < 0.5 ? 0 : 1;
  const double u = t < 0.5 ? t * 2.0 : (t - 0.5) * 2.0;
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[a][0] + u * (stops[a + 1][0] - stops[a][0]))),
                static_cast<int>(std::lround(stops[a][1] + u * (stops[a + 1][1] - stops[a][1]))),
                static_cast<int>(std::lround(stops[a][2] + u * (stops[a + 1][2] - stops[a][2]))));
  return std::string(buf);
}

void open_svg(std::ostringstream& out, const ChartSpec& spec) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(kCanvasW)
      << "\" height=\"" << num(kCanvasH) << "\" viewBox=\"0 0 " << num(kCanvasW) << ' '
      << num(kCanvasH) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << num(kCanvasW) << "\" height=\"" << num(kCanvasH)
      << "\" fill=\"#ffffff\"/>\n";
  if (!spec.title.empty())
    out << "<text x=\"" << num(kCanvasW / 2) << "\" y=\"" << num(kMarginY / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << escape_xml(spec.title) << "</text>\n";
}

void axis_labels(std::ostringstream& out, const ChartSpec& spec) {
  if (!spec.x_label.empty())
    out << "<text x=\"" << num(kCanvasW / 2) << "\" y=\"" << num(kCanvasH - kMarginY / 4)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << escape_xml(spec.x_label) << "</text>\n";
  if (!spec.y_label.empty())
    out << "<text x=\"" << num(kMarginX / 4) << "\" y=\"" << num(kCanvasH / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 "
        << num(kMarginX / 4) << ' ' << num(kCanvasH / 2) << ")\">" << escape_xml(spec.y_label)
        << "</text>\n";
}

void frame_box(std::ostringstream& out) {
  out << "<rect x=\"" << num(kMarginX) << "\" y=\"" << num(kMarginY) << "\" width=\""
      << num(kCanvasW - 2 * kMarginX) << "\" height=\"" << num(kCanvasH - 2 * kMarginY)
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
}

void numeric_ticks(std::ostringstream& out, const Frame& frame) {
  for (int i = 0; i <= 4; ++i) {
    const double tx = frame.x.lo + (frame.x.hi - frame.x.lo) * i / 4.0;
    const double px = frame.px(tx);
    out << "<line x1=\"" << num(px) << "\" y1=\"" << num(kCanvasH - kMarginY) << "\" x2=\""
        << num(px) << "\" y2=\"" << num(kCanvasH - kMarginY + 5) << "\" stroke=\"#333333\"/>\n"
        << "<text x=\"" << num(px) << "\" y=\"" << num(kCanvasH - kMarginY + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape_xml(tick_label(tx)) << "</text>\n";
    const double ty = frame.y.lo + (frame.y.hi - frame.y.lo) * i / 4.0;
    const double py = frame.py(ty);
    out << "<line x1=\"" << num(kMarginX - 5) << "\" y1=\"" << num(py) << "\" x2=\""
        << num(kMarginX) << "\" y2=\"" << num(py) << "\" stroke=\"#333333\"/>\n"
        << "<text x=\"" << num(kMarginX - 8) << "\" y=\"" << num(py + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape_xml(tick_label(ty)) << "</text>\n";
  }
}

void draw_polyline(std::ostringstream& out, const Frame& frame, const Series& s) {
  if (s.points.empty()) return;
  out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
  if (s.dashed) out << " stroke-dasharray=\"6 4\"";
  out << " points=\"";
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    if (i) out << ' ';
    out << num(frame.px(s.points[i].first)) << ',' << num(frame.py(s.points[i].second));
  }
  out << "\"/>\n";
}

void draw_marker(std::ostringstream& out, double px, double py, const std::string& marker,
                 const std::string& color) {
  if (marker == "star") {
    out << "<polygon fill=\"" << color << "\" points=\"";
    for (int s = 0; s < 10; ++s) {
      const double r = s % 2 == 0 ? 7.0 : 3.0;
      const double angle = -1.57079632679489662 + s * 0.62831853071795865;
      if (s) out << ' ';
      out << num(px + r * std::cos(angle)) << ',' << num(py + r * std::sin(angle));
    }
    out << "\"/>\n";
  } else {
    out << "<circle cx=\"" << num(px) << "\" cy=\"" << num(py)
        << "\" r=\"4\" fill=\"" << color << "\"/>\n";
  }
}

void legend(std::ostringstream& out, const std::vector<Series>& series) {
  double y = kMarginY + 14.0;
  for (const auto& s : series) {
    if (s.label.empty()) continue;
    out << "<rect x=\"" << num(kCanvasW - kMarginX - 150) << "\" y=\"" << num(y - 9)
        << "\" width=\"12\" height=\"12\" fill=\"" << s.color << "\"/>\n"
        << "<text x=\"" << num(kCanvasW - kMarginX - 132) << "\" y=\"" << num(y + 1)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(s.label)
        << "</text>\n";
    y += 18.0;
  }
}

// --- heatmap ---------------------------------------------------------------

void validate_heatmap(const ChartSpec& spec) {
  if (spec.grid.rows() == 0 || spec.grid.cols() == 0)
    throw std::invalid_argument("render_svg: heatmap grid is empty");
  if (static_cast<Eigen::Index>(spec.x_coords.size()) != spec.grid.rows() ||
      static_cast<Eigen::Index>(spec.y_coords.size()) != spec.grid.cols())
    throw std::invalid_argument("render_svg: heatmap axis size mismatch");
  if (!(spec.value_max > spec.value_min))
    throw std::invalid_argument("render_svg: heatmap value range is degenerate");
}

/// Marching-squares segments for one iso level on the cell-center lattice.
void contour_segments(std::ostringstream& out, const ChartSpec& spec, const Frame& frame,
                      double level, const std::string& color, double width) {
  const auto nx = spec.grid.rows();
  const auto ny = spec.grid.cols();
  std::ostringstream path;
  auto interp = [&](double va, double vb, double a, double b) {
    const double t = (level - va) / (vb - va);
    return a + t * (b - a);
  };
  for (Eigen::Index i = 0; i + 1 < nx; ++i) {
    for (Eigen::Index j = 0; j + 1 < ny; ++j) {
      const double x0 = spec.x_coords[static_cast<std::size_t>(i)];
      const double x1 = spec.x_coords[static_cast<std::size_t>(i + 1)];
      const double y0 = spec.y_coords[static_cast<std::size_t>(j)];
      const double y1 = spec.y_coords[static_cast<std::size_t>(j + 1)];
      const double v00 = spec.grid(i, j), v10 = spec.grid(i + 1, j);
      const double v01 = spec.grid(i, j + 1), v11 = spec.grid(i + 1, j + 1);
      int c = 0;
      if (v00 > level) c |= 1;
      if (v10 > level) c |= 2;
      if (v11 > level) c |= 4;
      if (v01 > level) c |= 8;
      if (c == 0 || c == 15) continue;
      // Edge midpoints with linear interpolation: bottom, right, top, left.
      double ex[4] = {0, 0, 0, 0}, ey[4] = {0, 0, 0, 0};
      bool has[4] = {false, false, false, false};
      if ((v00 > level) != (v10 > level)) {
        ex[0] = interp(v00, v10, x0, x1); ey[0] = y0; has[0] = true;
      }
      if ((v10 > level) != (v11 > level)) {
        ex[1] = x1; ey[1] = interp(v10, v11, y0, y1); has[1] = true;
      }
      if ((v01 > level) != (v11 > level)) {
        ex[2] = interp(v01, v11, x0, x1); ey[2] = y1; has[2] = true;
      }
      if ((v00 > level) != (v01 > level)) {
        ex[3] = x0; ey[3] = interp(v00, v01, y0, y1); has[3] = true;
      }
      int pts[4];
      int np = 0;
      for (int e = 0; e < 4; ++e)
        if (has[e]) pts[np++] = e;
      auto seg = [&](int a, int b) {
        path << "M" << num(frame.px(ex[a])) << ' ' << num(frame.py(ey[a])) << "L"
             << num(frame.px(ex[b])) << ' ' << num(frame.py(ey[b]));
      };
      if (np == 2) {
        seg(pts[0], pts[1]);
      } else if (np == 4) {
        // Saddle: split by the cell-center average.
        const double center = 0.25 * (v00 + v10 + v01 + v11);
        if ((center > level) == (v00 > level)) {
          seg(0, 1);
          seg(2, 3);
        } else {
          seg(3, 0);
          seg(1, 2);
        }
      }
    }
  }
  const std::string d = path.str();
  if (!d.empty())
    out << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
        << num(width) << "\"/>\n";
}

std::string render_heatmap(const ChartSpec& spec) {
  validate_heatmap(spec);
  std::ostringstream out;
  open_svg(out, spec);

  const auto nx = spec.grid.rows();
  const auto ny = spec.grid.cols();
  const double dx = nx > 1 ? spec.x_coords[1] - spec.x_coords[0] : 1.0;
  const double dy = ny > 1 ? spec.y_coords[1] - spec.y_coords[0] : 1.0;
  Frame frame;
  frame.x = Axis{spec.x_coords.front() - 0.5 * dx, spec.x_coords.back() + 0.5 * dx};
  frame.y = Axis{spec.y_coords.front() - 0.5 * dy, spec.y_coords.back() + 0.5 * dy};

  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j) {
      const double cx0 = spec.x_coords[static_cast<std::size_t>(i)] - 0.5 * dx;
      const double cy1 = spec.y_coords[static_cast<std::size_t>(j)] + 0.5 * dy;
      const double t = (spec.grid(i, j) - spec.value_min) / (spec.value_max - spec.value_min);
      out << "<rect class=\"cell\" x=\"" << num(frame.px(cx0)) << "\" y=\"" << num(frame.py(cy1))
          << "\" width=\"" << num(frame.px(cx0 + dx) - frame.px(cx0)) << "\" height=\""
          << num(frame.py(cy1 - dy) - frame.py(cy1)) << "\" fill=\"" << ramp_color(t) << "\"/>\n";
    }

  for (double level : spec.contour_levels) {
    const bool bold = std::abs(level - 0.5) < 1e-12;
    contour_segments(out, spec, frame, level, bold ? "#000000" : "#888888", bold ? 2.0 : 1.0);
  }
  for (const auto& s : spec.overlays) draw_polyline(out, frame, s);
  for (const auto& s : spec.series)
    for (const auto& [x, y] : s.points) draw_marker(out, frame.px(x), frame.py(y), s.marker, s.color);

  // Categorical tick labels when provided (similarity heatmaps), numeric ticks
  // otherwise.
  if (!spec.x_tick_labels.empty() || !spec.y_tick_labels.empty()) {
    for (std::size_t i = 0; i < spec.x_tick_labels.size(); ++i) {
      const double px = frame.px(spec.x_coords[i]);
      out << "<text x=\"" << num(px) << "\" y=\"" << num(kCanvasH - kMarginY + 18)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
          << escape_xml(spec.x_tick_labels[i]) << "</text>\n";
    }
    for (std::size_t j = 0; j < spec.y_tick_labels.size(); ++j) {
      const double py = frame.py(spec.y_coords[j]);
      out << "<text x=\"" << num(kMarginX - 8) << "\" y=\"" << num(py + 3)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
          << escape_xml(spec.y_tick_labels[j]) << "</text>\n";
    }
  } else {
    numeric_ticks(out, frame);
  }
  frame_box(out);
  axis_labels(out, spec);
  legend(out, spec.series);
  out << "</svg>\n";
  return out.str();
}

// --- line / scatter ----------------------------------------------------------

std::string render_xy(const ChartSpec& spec) {
  bool any = false;
  Axis ax{1e300, -1e300}, ay{1e300, -1e300};
  for (const auto* group : {&spec.series, &spec.overlays})
    for (const auto& s : *group)
      for (const auto& [x, y] : s.points) {
        expand(ax, x);
        expand(ay, y);
        any = true;
      }
  if (!any) throw std::invalid_argument("render_svg: chart has no points");

  std::ostringstream out;
  open_svg(out, spec);
  Frame frame{padded(ax.lo, ax.hi), padded(ay.lo, ay.hi)};
  numeric_ticks(out, frame);
  for (const auto& s : spec.overlays) {
    Series dashed_overlay = s;
    dashed_overlay.dashed = true;
    draw_polyline(out, frame, dashed_overlay);
  }
  if (spec.kind == ChartKind::Line) {
    for (const auto& s : spec.series) draw_polyline(out, frame, s);
  } else {
    for (const auto& s : spec.series)
      for (const auto& [x, y] : s.points)
        draw_marker(out, frame.px(x), frame.py(y), s.marker, s.color);
  }
  frame_box(out);
  axis_labels(out, spec);
  legend(out, spec.series);
  out << "</svg>\n";
  return out.str();
}

// --- violin ------------------------------------------------------------------

std::string render_violin(const ChartSpec& spec) {
  if (spec.violins.empty()) throw std::invalid_argument("render_svg: no violins");
  Axis ax{1e300, -1e300}, ay{1e300, -1e300};
  for (const auto& v : spec.violins) {
    if (v.bin_edges.size() != v.probs.size() + 1 || v.probs.size() < 1)
      throw std::invalid_argument("render_svg: violin payload dimensions inconsistent");
    expand(ax, v.center_x);
    expand(ay, v.bin_edges(0));
    expand(ay, v.bin_edges(v.bin_edges.size() - 1));
    if (v.truth) expand(ay, *v.truth);
    if (v.observed) expand(ay, *v.observed);
  }
  std::ostringstream out;
  open_svg(out, spec);
  Frame frame{padded(ax.lo - 0.5, ax.hi + 0.5), padded(ay.lo, ay.hi)};

  const double slot = (frame.px(1.0) - frame.px(0.0)) * 0.42;
  for (const auto& v : spec.violins) {
    double max_density = 0.0;
    for (Eigen::Index b = 0; b < v.probs.size(); ++b) {
      const double w = v.bin_edges(b + 1) - v.bin_edges(b);
      max_density = std::max(max_density, v.probs(b) / w);
    }
    const double cx = frame.px(v.center_x);
    std::ostringstream path;
    // Right profile bottom-to-top, then mirrored left profile top-to-bottom.
    for (Eigen::Index b = 0; b < v.probs.size(); ++b) {
      const double w = v.bin_edges(b + 1) - v.bin_edges(b);
      const double half = max_density > 0.0 ? (v.probs(b) / w) / max_density * slot : 0.0;
      const double y_lo = frame.py(v.bin_edges(b));
      const double y_hi = frame.py(v.bin_edges(b + 1));
      path << (b == 0 ? "M" : "L") << num(cx + half) << ' ' << num(y_lo);
      path << "L" << num(cx + half) << ' ' << num(y_hi);
    }
    for (Eigen::Index b = v.probs.size(); b-- > 0;) {
      const double w = v.bin_edges(b + 1) - v.bin_edges(b);
      const double half = max_density > 0.0 ? (v.probs(b) / w) / max_density * slot : 0.0;
      path << "L" << num(cx - half) << ' ' << num(frame.py(v.bin_edges(b + 1)));
      path << "L" << num(cx - half) << ' ' << num(frame.py(v.bin_edges(b)));
    }
    path << "Z";
    out << "<path class=\"violin\" d=\"" << path.str()
        << "\" fill=\"#9ecae1\" fill-opacity=\"0.8\" stroke=\"#3182bd\" stroke-width=\"0.8\"/>\n";

    if (v.median)
      out << "<line class=\"median\" x1=\"" << num(cx - slot * 0.6) << "\" y1=\""
          << num(frame.py(*v.median)) << "\" x2=\"" << num(cx + slot * 0.6) << "\" y2=\""
          << num(frame.py(*v.median)) << "\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
    if (v.truth)
      out << "<circle class=\"truth\" cx=\"" << num(cx) << "\" cy=\"" << num(frame.py(*v.truth))
          << "\" r=\"5\" fill=\"#ffd92f\" stroke=\"#000000\" stroke-width=\"0.8\"/>\n";
    if (v.observed)
      out << "<circle class=\"observed\" cx=\"" << num(cx) << "\" cy=\""
          << num(frame.py(*v.observed)) << "\" r=\"4\" fill=\"#000000\"/>\n";
    if (!v.label.empty())
      out << "<text x=\"" << num(cx) << "\" y=\"" << num(kCanvasH - kMarginY + 18)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
          << escape_xml(v.label) << "</text>\n";
  }

  for (int i = 0; i <= 4; ++i) {
    const double ty = frame.y.lo + (frame.y.hi - frame.y.lo) * i / 4.0;
    const double py = frame.py(ty);
    out << "<line x1=\"" << num(kMarginX - 5) << "\" y1=\"" << num(py) << "\" x2=\""
        << num(kMarginX) << "\" y2=\"" << num(py) << "\" stroke=\"#333333\"/>\n"
        << "<text x=\"" << num(kMarginX - 8) << "\" y=\"" << num(py + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape_xml(tick_label(ty)) << "</text>\n";
  }
  frame_box(out);
  axis_labels(out, spec);
  out << "</svg>\n";
  return out.str();
}

// --- bar ----------------------------------------------------------------------

std::string render_bar(const ChartSpec& spec) {
  if (spec.bar_values.empty()) throw std::invalid_argument("render_svg: no bars");
  if (!spec.bar_labels.empty() && spec.bar_labels.size() != spec.bar_values.size())
    throw std::invalid_argument("render_svg: bar label count mismatch");

  Axis ay{0.0, -1e300};
  for (double v : spec.bar_values) expand(ay, v);
  if (!(ay.hi > ay.lo)) ay.hi = ay.lo + 1.0;

  std::ostringstream out;
  open_svg(out, spec);
  Frame frame{Axis{-0.6, static_cast<double>(spec.bar_values.size()) - 0.4}, padded(ay.lo, ay.hi)};

  for (std::size_t i = 0; i < spec.bar_values.size(); ++i) {
    const bool highlight = i < spec.bar_highlight.size() && spec.bar_highlight[i];
    const double x0 = frame.px(static_cast<double>(i) - 0.35);
    const double x1 = frame.px(static_cast<double>(i) + 0.35);
    const double y0 = frame.py(0.0);
    const double y1 = frame.py(spec.bar_values[i]);
    out << "<rect class=\"bar\" x=\"" << num(x0) << "\" y=\"" << num(std::min(y0, y1))
        << "\" width=\"" << num(x1 - x0) << "\" height=\"" << num(std::abs(y0 - y1))
        << "\" fill=\"" << (highlight ? "#e66101" : "#2166ac") << "\"/>\n";
    if (i < spec.bar_labels.size())
      out << "<text x=\"" << num(frame.px(static_cast<double>(i))) << "\" y=\""
          << num(kCanvasH - kMarginY + 18)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
          << escape_xml(spec.bar_labels[i]) << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double ty = frame.y.lo + (frame.y.hi - frame.y.lo) * i / 4.0;
    out << "<text x=\"" << num(kMarginX - 8) << "\" y=\"" << num(frame.py(ty) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape_xml(tick_label(ty)) << "</text>\n";
  }
  frame_box(out);
  axis_labels(out, spec);
  out << "</svg>\n";
  return out.str();
}

}  // namespace

std::string render_svg(const ChartSpec& spec) {
  switch (spec.kind) {
    case ChartKind::Heatmap: return render_heatmap(spec);
    case ChartKind::Line:
    case ChartKind::Scatter: return render_xy(spec);
    case ChartKind::Violin: return render_violin(spec);
    case ChartKind::Bar: return render_bar(spec);
  }
  throw std::logic_error("render_svg: unknown chart kind");
}

ChartSpec violin_from_posterior(const DiscretePosterior& p, std::optional<double> truth,
                                std::optional<double> observed) {
  ChartSpec spec;
  spec.kind = ChartKind::Violin;
  ViolinSpec v;
  v.center_x = 0.0;
  v.bin_edges = p.bin_edges;
  v.probs = p.probs;
  v.median = posterior_quantile(p, 0.5);
  v.truth = truth;
  v.observed = observed;
  spec.violins.push_back(std::move(v));
  return spec;
}

std::string table_rmse(const ImputationRun& run) {
  if (!run.has_truth) throw std::invalid_argument("table_rmse: run has no truth");
  std::ostringstream out;
  out << "target,rmse_iter1,rmse_iter" << run.iterations_run << ",ratio\n";
  for (std::size_t t = 0; t < run.target_names.size(); ++t) {
    const auto& series = run.rmse_by_iteration[t];
    out << run.target_names[t] << ',';
    const std::optional<double> first = series.size() > 1 ? series[1] : std::optional<double>{};
    const std::optional<double> last = series.back();
    if (first) out << format_sig12(*first);
    out << ',';
    if (last) out << format_sig12(*last);
    out << ',';
    if (first && last && *first > 0.0) out << format_sig12(*last / *first);
    out << '\n';
  }
  return out.str();
}

}  // namespace geoinfer
