#include "layerprobe/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "layerprobe/csv.hpp"
#include "layerprobe/errors.hpp"

namespace layerprobe {

namespace {

using text::format_fixed;

struct Rgb {
  double r, g, b;
};

std::string hex(const Rgb& c) {
  auto channel = [](double v) {
    return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", channel(c.r), channel(c.g), channel(c.b));
  return buf;
}

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

Rgb ramp(const std::vector<Rgb>& stops, double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * static_cast<double>(stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(pos), stops.size() - 2);
  return lerp(stops[i], stops[i + 1], pos - static_cast<double>(i));
}

// viridis, dark to bright
const std::vector<Rgb> kViridis = {{0.267, 0.005, 0.329},
                                   {0.231, 0.322, 0.545},
                                   {0.129, 0.569, 0.553},
                                   {0.369, 0.788, 0.384},
                                   {0.992, 0.906, 0.145}};

const std::vector<Rgb> kDiverging = {{0.230, 0.299, 0.754}, {0.865, 0.865, 0.865},
                                     {0.706, 0.016, 0.150}};

std::string num(double v) { return format_fixed(v, 2); }

}  // namespace

std::string xml_escape(const std::string& s) {
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

std::string render_heatmap(const Heatmap& map) {
  const std::size_t rows = map.row_labels.size();
  const std::size_t cols = map.columns.size();
  if (map.values.size() != rows || map.com.size() != rows || map.argmax.size() != rows)
    throw DataError("heatmap: row data does not match row labels");
  for (const auto& r : map.values)
    if (r.size() != cols) throw DataError("heatmap: row width does not match columns");

  const double label_w = 200.0, top = 40.0, cell_h = 18.0, plot_w = 600.0, bottom = 40.0;
  const double cell_w = cols ? plot_w / static_cast<double>(cols) : plot_w;
  const double width = label_w + plot_w + 20.0;
  const double height = top + cell_h * static_cast<double>(rows) + bottom;

  double vmax = 0.0;
  for (const auto& r : map.values)
    for (double v : r) vmax = std::max(vmax, v);

  auto x_of = [&](double lambda) {
    return label_w + (lambda * static_cast<double>(cols > 0 ? cols - 1 : 0) + 0.5) * cell_w;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  svg += "<title>" + xml_escape(map.title) + "</title>\n";
  svg += "<text x=\"" + num(label_w) + "\" y=\"20.00\" font-family=\"sans-serif\" font-size=\"14\">" +
         xml_escape(map.title) + "</text>\n";
  svg += "<g class=\"cells\">\n";
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = top + cell_h * static_cast<double>(r);
    for (std::size_t c = 0; c < cols; ++c) {
      const double t = vmax > 0.0 ? map.values[r][c] / vmax : 0.0;
      svg += "<rect class=\"cell\" x=\"" + num(label_w + cell_w * static_cast<double>(c)) +
             "\" y=\"" + num(y) + "\" width=\"" + num(cell_w) + "\" height=\"" + num(cell_h) +
             "\" fill=\"" + hex(ramp(kViridis, 1.0 - t)) + "\"/>\n";
    }
  }
  svg += "</g>\n<g class=\"labels\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = top + cell_h * (static_cast<double>(r) + 0.7);
    svg += "<text x=\"" + num(label_w - 6.0) + "\" y=\"" + num(y) + "\" text-anchor=\"end\">" +
           xml_escape(map.row_labels[r]) + "</text>\n";
  }
  const double axis_y = top + cell_h * static_cast<double>(rows) + 16.0;
  svg += "<text x=\"" + num(x_of(0.0)) + "\" y=\"" + num(axis_y) +
         "\" text-anchor=\"middle\">0</text>\n";
  svg += "<text x=\"" + num(x_of(1.0)) + "\" y=\"" + num(axis_y) +
         "\" text-anchor=\"middle\">1</text>\n";
  svg += "<text x=\"" + num(label_w + plot_w / 2.0) + "\" y=\"" + num(axis_y + 16.0) +
         "\" text-anchor=\"middle\">normalized layer</text>\n";
  svg += "</g>\n<g class=\"markers\">\n";
  const double radius = std::min(cell_h, cell_w) * 0.28;
  for (std::size_t r = 0; r < rows; ++r) {
    const double cy = top + cell_h * (static_cast<double>(r) + 0.5);
    if (map.com[r])
      svg += "<circle class=\"com\" cx=\"" + num(x_of(*map.com[r])) + "\" cy=\"" + num(cy) +
             "\" r=\"" + num(radius) + "\" fill=\"black\"/>\n";
    if (map.argmax[r])
      svg += "<circle class=\"argmax\" cx=\"" + num(x_of(*map.argmax[r])) + "\" cy=\"" +
             num(cy) + "\" r=\"" + num(radius) + "\" fill=\"red\"/>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string render_similarity(const SimilarityMatrix& m) {
  const std::size_t n = m.models.size();
  const double label_w = 160.0, top = 60.0, cell = 56.0;
  const double width = label_w + cell * static_cast<double>(n) + 20.0;
  const double height = top + cell * static_cast<double>(n) + label_w;
  std::string title = "Spearman correlation of COM vectors";
  if (!m.method.empty()) title += " (" + m.method + ")";

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  svg += "<title>" + xml_escape(title) + "</title>\n";
  svg += "<text x=\"10.00\" y=\"24.00\" font-family=\"sans-serif\" font-size=\"14\">" +
         xml_escape(title) + "</text>\n";
  svg += "<g class=\"cells\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = label_w + cell * static_cast<double>(j);
      const double y = top + cell * static_cast<double>(i);
      const double rho = m.rho[i][j];
      svg += "<rect class=\"cell\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" +
             num(cell) + "\" height=\"" + num(cell) + "\" fill=\"" +
             hex(ramp(kDiverging, (rho + 1.0) / 2.0)) + "\"/>\n";
      svg += "<text x=\"" + num(x + cell / 2.0) + "\" y=\"" + num(y + cell / 2.0 + 4.0) +
             "\" text-anchor=\"middle\">" + format_fixed(rho, 2) + "</text>\n";
    }
  }
  svg += "</g>\n<g class=\"labels\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double c = cell * (static_cast<double>(i) + 0.5);
    svg += "<text x=\"" + num(label_w - 6.0) + "\" y=\"" + num(top + c + 4.0) +
           "\" text-anchor=\"end\">" + xml_escape(m.models[i]) + "</text>\n";
    const double lx = label_w + c;
    const double ly = top + cell * static_cast<double>(n) + 10.0;
    svg += "<text x=\"" + num(lx) + "\" y=\"" + num(ly) + "\" transform=\"rotate(45 " + num(lx) +
           " " + num(ly) + ")\">" + xml_escape(m.models[i]) + "</text>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace layerprobe
