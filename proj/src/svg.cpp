#include "grainrisk/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace grainrisk {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string cell_color(double t) {
  // White -> dark red ramp.
  const int r = 255 - static_cast<int>(std::lround(75.0 * t));
  const int g = 255 - static_cast<int>(std::lround(215.0 * t));
  const int b = 255 - static_cast<int>(std::lround(215.0 * t));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string render_heatmap_svg(const std::vector<std::string>& labels,
                               const Eigen::MatrixXd& matrix) {
  const int k = static_cast<int>(matrix.rows());
  if (matrix.cols() != k) throw std::invalid_argument("heatmap: matrix not square");
  if (static_cast<int>(labels.size()) != k)
    throw std::invalid_argument("heatmap: label count mismatch");

  constexpr double cell = 24.0, margin = 90.0;
  const double size = margin + k * cell + 10.0;

  double lo = matrix.minCoeff(), hi = matrix.maxCoeff();
  if (hi <= lo) hi = lo + 1.0;

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(size)
     << "\" height=\"" << fmt(size) << "\" viewBox=\"0 0 " << fmt(size) << ' '
     << fmt(size) << "\">\n";
  os << "<rect width=\"" << fmt(size) << "\" height=\"" << fmt(size)
     << "\" fill=\"white\"/>\n";

  for (int i = 0; i < k; ++i) {
    const double y = margin + i * cell;
    os << "<text x=\"" << fmt(margin - 6.0) << "\" y=\"" << fmt(y + cell * 0.7)
       << "\" font-size=\"10\" text-anchor=\"end\" font-family=\"sans-serif\">"
       << labels[i] << "</text>\n";
    const double x = margin + i * cell;
    os << "<text x=\"" << fmt(x + cell * 0.5) << "\" y=\"" << fmt(margin - 6.0)
       << "\" font-size=\"10\" text-anchor=\"start\" font-family=\"sans-serif\""
       << " transform=\"rotate(-60 " << fmt(x + cell * 0.5) << ' ' << fmt(margin - 6.0)
       << ")\">" << labels[i] << "</text>\n";
  }

  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double t = (matrix(i, j) - lo) / (hi - lo);
      os << "<rect x=\"" << fmt(margin + j * cell) << "\" y=\"" << fmt(margin + i * cell)
         << "\" width=\"" << fmt(cell) << "\" height=\"" << fmt(cell) << "\" fill=\""
         << cell_color(t) << "\" stroke=\"#cccccc\" stroke-width=\"0.5\"><title>"
         << labels[i] << " &lt;- " << labels[j] << ": " << fmt(matrix(i, j))
         << "</title></rect>\n";
    }
  }

  // Per-row maxima markers.
  for (int i = 0; i < k; ++i) {
    int arg = 0;
    matrix.row(i).maxCoeff(&arg);
    os << "<circle cx=\"" << fmt(margin + arg * cell + cell * 0.5) << "\" cy=\""
       << fmt(margin + i * cell + cell * 0.5) << "\" r=\"" << fmt(cell * 0.22)
       << "\" fill=\"gold\" stroke=\"#806000\" stroke-width=\"0.8\"/>\n";
  }

  os << "</svg>\n";
  return os.str();
}

}  // namespace grainrisk
