#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace grainrisk {

/// Renders a labeled square matrix as an SVG heatmap: one shaded cell per
/// entry, row/column labels, and the per-row maximum marked with a solid
/// yellow circle. Output contains no timestamps so identical input yields
/// identical bytes.
std::string render_heatmap_svg(const std::vector<std::string>& labels,
                               const Eigen::MatrixXd& matrix);

}  // namespace grainrisk
