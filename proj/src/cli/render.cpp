#include "boclab/cli/render.hpp"

#include "boclab/error.hpp"
#include "boclab/matrix_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace boclab::cli {
namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo <= 0.0) {
      const double pad = std::abs(lo) > 0.0 ? 0.5 * std::abs(lo) : 0.5;
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  const double left = 70, right = 20, top = 40, bottom = 55;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;

  Range xr, yr;
  for (const auto& b : spec.bars) {
    for (std::size_t i = 0; i < b.lo.size(); ++i) {
      xr.add(b.lo[i]);
      xr.add(b.hi[i]);
      yr.add(b.height[i]);
    }
    yr.add(0.0);
  }
  for (const auto& c : spec.curves) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (std::isfinite(c.x[i]) && std::isfinite(c.y[i])) {
        xr.add(c.x[i]);
        yr.add(c.y[i]);
      }
    }
  }
  for (const auto& m : spec.markers) xr.add(m.x);
  xr.finish();
  yr.finish();
  yr.hi += 0.05 * (yr.hi - yr.lo);

  auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return top + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
    << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\"" << spec.height << "\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    o << "<text x=\"" << fmt(spec.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(spec.title) << "</text>\n";
  }

  std::size_t color = 0;
  auto next_color = [&](const std::string& c) { return c.empty() ? kPalette[color++ % 6] : c; };

  for (const auto& b : spec.bars) {
    const std::string c = next_color(b.color);
    o << "<g class=\"bars\" fill=\"" << c << "\" fill-opacity=\"0.45\" stroke=\"" << c << "\" stroke-width=\"0.5\">\n";
    for (std::size_t i = 0; i < b.lo.size(); ++i) {
      if (!std::isfinite(b.height[i])) continue;
      const double y0 = sy(std::max(b.height[i], yr.lo));
      o << "<rect class=\"bar\" x=\"" << fmt(sx(b.lo[i])) << "\" y=\"" << fmt(y0) << "\" width=\""
        << fmt(sx(b.hi[i]) - sx(b.lo[i])) << "\" height=\"" << fmt(sy(yr.lo) - y0) << "\"/>\n";
    }
    o << "</g>\n";
  }
  for (const auto& c : spec.curves) {
    const std::string col = next_color(c.color);
    o << "<polyline class=\"curve\" fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.8\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
      o << (first ? "" : " ") << fmt(sx(c.x[i])) << ',' << fmt(sy(c.y[i]));
      first = false;
    }
    o << "\"/>\n";
  }
  for (const auto& m : spec.markers) {
    const std::string col = m.color.empty() ? "black" : m.color;
    o << "<line class=\"marker\" x1=\"" << fmt(sx(m.x)) << "\" x2=\"" << fmt(sx(m.x)) << "\" y1=\"" << fmt(top)
      << "\" y2=\"" << fmt(top + ph) << "\" stroke=\"" << col << "\" stroke-dasharray=\"4 3\"/>\n";
    o << "<circle cx=\"" << fmt(sx(m.x)) << "\" cy=\"" << fmt(top + ph) << "\" r=\"4\" fill=\"" << col << "\"/>\n";
  }

  // Axes and ticks.
  o << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  o << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(left + pw) << "\" y2=\""
    << fmt(top + ph) << "\"/>\n";
  o << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(left) << "\" y2=\""
    << fmt(top + ph) << "\"/>\n";
  o << "</g>\n<g class=\"ticks\" fill=\"black\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = xr.lo + (xr.hi - xr.lo) * k / 5.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * k / 5.0;
    o << "<text x=\"" << fmt(sx(xv)) << "\" y=\"" << fmt(top + ph + 16) << "\" text-anchor=\"middle\">"
      << tick_label(xv) << "</text>\n";
    o << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(sy(yv) + 4) << "\" text-anchor=\"end\">"
      << tick_label(yv) << "</text>\n";
  }
  o << "</g>\n";
  o << "<text class=\"x-label\" x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(spec.height - 12.0)
    << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  o << "<text class=\"y-label\" x=\"16\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << fmt(top + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n";

  // Legend.
  double ly = top + 8;
  color = 0;
  auto legend = [&](const std::string& label, const std::string& c) {
    if (label.empty()) return;
    o << "<rect x=\"" << fmt(left + pw - 150) << "\" y=\"" << fmt(ly - 8) << "\" width=\"10\" height=\"10\" fill=\"" << c
      << "\"/><text x=\"" << fmt(left + pw - 135) << "\" y=\"" << fmt(ly + 1) << "\">" << escape(label)
      << "</text>\n";
    ly += 16;
  };
  for (const auto& b : spec.bars) legend(b.label, next_color(b.color));
  for (const auto& c : spec.curves) legend(c.label, next_color(c.color));
  o << "</svg>\n";
  return o.str();
}

namespace {

std::vector<double> column(const io::Table& t, const std::string& name) {
  const std::size_t c = t.column(name);
  std::vector<double> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) out.push_back(row[c]);
  return out;
}

std::vector<std::string> names(const Json& config, const std::string& key) {
  try {
    const Json& v = config.at(key);
    if (v.is_string()) return v.get<std::string>().empty() ? std::vector<std::string>{} : std::vector{v.get<std::string>()};
    return v.get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    throw InputError("render: '" + key + "' must be a column name or a list of names");
  }
}

}  // namespace

PlotSpec plot_from_config(const Json& config) {
  const std::string input = get_string(config, "input");
  if (input.empty()) throw InputError("render: 'input' CSV path is required");
  const io::Table table = io::read_table(input);
  if (table.rows.empty()) throw InputError("render: " + input + " has no data rows");

  PlotSpec spec;
  spec.title = get_string(config, "title");
  spec.x_label = get_string(config, "x_label");
  spec.y_label = get_string(config, "y_label");
  const std::string kind = get_string(config, "kind");
  std::vector<std::string> ys = names(config, "y");
  if (ys.empty()) {
    for (const auto& h : table.header) {
      if (h != get_string(config, "x") && h != get_string(config, "bin_lo") && h != get_string(config, "bin_hi")) {
        ys.push_back(h);
      }
    }
  }
  if (kind == "histogram") {
    const auto lo = column(table, get_string(config, "bin_lo"));
    const auto hi = column(table, get_string(config, "bin_hi"));
    for (const auto& y : ys) spec.bars.push_back({y, lo, hi, column(table, y), ""});
  } else if (kind == "line") {
    const auto x = column(table, get_string(config, "x"));
    for (const auto& y : ys) spec.curves.push_back({y, x, column(table, y), ""});
  } else {
    throw InputError("render: kind must be 'histogram' or 'line'");
  }

  const std::string overlay = get_string(config, "overlay");
  if (!overlay.empty()) {
    const io::Table ot = io::read_table(overlay);
    if (ot.rows.empty()) throw InputError("render: " + overlay + " has no data rows");
    const auto x = column(ot, get_string(config, "overlay_x"));
    for (const auto& y : names(config, "overlay_y")) spec.curves.push_back({y, x, column(ot, y), ""});
  }
  for (double m : get_doubles(config, "markers")) spec.markers.push_back({m, "", "black"});
  return spec;
}

}  // namespace boclab::cli
