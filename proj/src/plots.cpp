#include "eegwl/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "eegwl/errors.hpp"

namespace eegwl {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 60;

const char* kPalette[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f",
                          "#956cb4", "#8c613c"};

std::string escape_xml(const std::string& s) {
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

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void open_svg(std::ostream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << escape_xml(title) << "</text>\n";
}

void draw_legend(std::ostream& out, const std::vector<std::string>& names) {
  int x = kMarginLeft;
  const int y = kHeight - 18;
  for (std::size_t s = 0; s < names.size(); ++s) {
    out << "<rect x=\"" << x << "\" y=\"" << y - 10
        << "\" width=\"12\" height=\"12\" fill=\""
        << kPalette[s % std::size(kPalette)] << "\"/>\n"
        << "<text x=\"" << x + 16 << "\" y=\"" << y
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape_xml(names[s]) << "</text>\n";
    x += 24 + 8 * static_cast<int>(names[s].size());
  }
}

}  // namespace

void write_grouped_bar_svg(const std::string& path, const std::string& title,
                           const std::vector<std::string>& series_names,
                           const std::vector<BarGroup>& groups) {
  if (groups.empty() || series_names.empty())
    throw ValidationError("empty plot data");
  for (const auto& g : groups)
    if (g.values.size() != series_names.size())
      throw ValidationError("bar group size does not match series count");

  double vmax = 0, vmin = 0;
  for (const auto& g : groups)
    for (double v : g.values) {
      vmax = std::max(vmax, v);
      vmin = std::min(vmin, v);
    }
  if (vmax == vmin) vmax = vmin + 1.0;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const double y0 = kMarginTop + plot_h * (vmax / (vmax - vmin));
  auto y_of = [&](double v) {
    return kMarginTop + plot_h * (vmax - v) / (vmax - vmin);
  };

  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  open_svg(out, title);
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << fmt(y0) << "\" x2=\""
      << kWidth - kMarginRight << "\" y2=\"" << fmt(y0)
      << "\" stroke=\"#333\"/>\n";

  const double group_w = plot_w / groups.size();
  const double bar_w = group_w * 0.8 / series_names.size();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double gx = kMarginLeft + g * group_w + group_w * 0.1;
    for (std::size_t s = 0; s < series_names.size(); ++s) {
      const double v = groups[g].values[s];
      const double top = y_of(std::max(v, 0.0));
      const double h = std::abs(y_of(v) - y0);
      out << "<rect x=\"" << fmt(gx + s * bar_w) << "\" y=\"" << fmt(top)
          << "\" width=\"" << fmt(bar_w * 0.9) << "\" height=\"" << fmt(h)
          << "\" fill=\"" << kPalette[s % std::size(kPalette)] << "\"/>\n";
    }
    out << "<text x=\"" << fmt(gx + group_w * 0.4) << "\" y=\""
        << kHeight - kMarginBottom + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << escape_xml(groups[g].name) << "</text>\n";
  }
  out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << fmt(y_of(vmax) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt(vmax) << "</text>\n"
      << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << fmt(y_of(vmin) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt(vmin) << "</text>\n";
  draw_legend(out, series_names);
  out << "</svg>\n";
}

void write_line_svg(const std::string& path, const std::string& title,
                    const std::vector<LineSeries>& series) {
  if (series.empty()) throw ValidationError("empty plot data");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty())
      throw ValidationError("line series empty or misaligned");
    for (double v : s.x) {
      xmin = std::min(xmin, v);
      xmax = std::max(xmax, v);
    }
    for (double v : s.y) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto px = [&](double x) {
    return kMarginLeft + plot_w * (x - xmin) / (xmax - xmin);
  };
  auto py = [&](double y) {
    return kMarginTop + plot_h * (ymax - y) / (ymax - ymin);
  };

  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  open_svg(out, title);
  out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop
      << "\" width=\"" << fmt(plot_w) << "\" height=\"" << fmt(plot_h)
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\""
        << kPalette[s % std::size(kPalette)] << "\" stroke-width=\"1.5\" "
           "points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i)
      out << fmt(px(series[s].x[i])) << ',' << fmt(py(series[s].y[i])) << ' ';
    out << "\"/>\n";
  }
  out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << fmt(py(ymax) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt(ymax) << "</text>\n"
      << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << fmt(py(ymin) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt(ymin) << "</text>\n"
      << "<text x=\"" << kMarginLeft << "\" y=\"" << kHeight - kMarginBottom + 16
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(xmin)
      << "</text>\n"
      << "<text x=\"" << kWidth - kMarginRight << "\" y=\""
      << kHeight - kMarginBottom + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt(xmax) << "</text>\n";
  std::vector<std::string> names;
  for (const auto& s : series) names.push_back(s.name);
  draw_legend(out, names);
  out << "</svg>\n";
}

}  // namespace eegwl
