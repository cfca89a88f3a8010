#include "lppo/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lppo/textio.hpp"

namespace lppo::svg {

namespace {

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Range {
  double lo = 0.0, hi = 1.0;
};

Range data_range(const std::vector<Series>& series, bool use_x) {
  Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : series)
    for (double v : use_x ? s.x : s.y) {
      if (!std::isfinite(v)) continue;
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  if (!(r.lo <= r.hi)) r = {0.0, 1.0};
  if (r.hi - r.lo < 1e-12) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  const double pad = 0.04 * (r.hi - r.lo);
  return {r.lo - pad, r.hi + pad};
}

}  // namespace

std::string render_chart(const std::vector<Panel>& panels, int width, int panel_height) {
  if (panels.empty()) throw std::invalid_argument("render_chart: no panels");
  const int margin_l = 70, margin_r = 160, margin_t = 36, margin_b = 44;
  const int total_h = panel_height * static_cast<int>(panels.size());

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << total_h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (size_t p = 0; p < panels.size(); ++p) {
    const Panel& panel = panels[p];
    const double top = static_cast<double>(p) * panel_height + margin_t;
    const double plot_w = width - margin_l - margin_r;
    const double plot_h = panel_height - margin_t - margin_b;
    const Range rx = data_range(panel.series, true);
    const Range ry = data_range(panel.series, false);

    auto sx = [&](double v) { return margin_l + (v - rx.lo) / (rx.hi - rx.lo) * plot_w; };
    auto sy = [&](double v) { return top + plot_h - (v - ry.lo) / (ry.hi - ry.lo) * plot_h; };

    os << "<text x=\"" << margin_l << "\" y=\"" << top - 14 << "\" font-weight=\"bold\">"
       << panel.title << "</text>\n";
    os << "<rect x=\"" << margin_l << "\" y=\"" << top << "\" width=\"" << plot_w
       << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#888\"/>\n";

    for (int i = 0; i <= 4; ++i) {
      const double fx = rx.lo + (rx.hi - rx.lo) * i / 4.0;
      const double fy = ry.lo + (ry.hi - ry.lo) * i / 4.0;
      os << "<line x1=\"" << sx(fx) << "\" y1=\"" << top + plot_h << "\" x2=\"" << sx(fx)
         << "\" y2=\"" << top + plot_h + 4 << "\" stroke=\"#888\"/>\n";
      os << "<text x=\"" << sx(fx) << "\" y=\"" << top + plot_h + 18
         << "\" text-anchor=\"middle\">" << fmt_tick(fx) << "</text>\n";
      os << "<line x1=\"" << margin_l - 4 << "\" y1=\"" << sy(fy) << "\" x2=\"" << margin_l
         << "\" y2=\"" << sy(fy) << "\" stroke=\"#888\"/>\n";
      os << "<text x=\"" << margin_l - 8 << "\" y=\"" << sy(fy) + 4
         << "\" text-anchor=\"end\">" << fmt_tick(fy) << "</text>\n";
    }
    os << "<text x=\"" << margin_l + plot_w / 2 << "\" y=\"" << top + plot_h + 34
       << "\" text-anchor=\"middle\">" << panel.x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(-90 16 "
       << top + plot_h / 2 << ")\" text-anchor=\"middle\">" << panel.y_label << "</text>\n";

    double legend_y = top + 8;
    for (const auto& s : panel.series) {
      if (s.x.empty()) continue;
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\""
         << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        os << fmt_tick(sx(s.x[i])) << "," << fmt_tick(sy(s.y[i])) << " ";
      }
      os << "\"/>\n";
      os << "<line x1=\"" << margin_l + plot_w + 10 << "\" y1=\"" << legend_y << "\" x2=\""
         << margin_l + plot_w + 34 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
         << "\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " stroke-width=\"1.5\"/>\n";
      os << "<text x=\"" << margin_l + plot_w + 40 << "\" y=\"" << legend_y + 4 << "\">"
         << s.label << "</text>\n";
      legend_y += 18;
    }
  }
  os << "</svg>\n";
  return os.str();
}

void write_chart(const std::string& path, const std::vector<Panel>& panels, int width,
                 int panel_height) {
  write_file(path, render_chart(panels, width, panel_height));
}

}  // namespace lppo::svg
