#pragma once

#include <span>
#include <vector>

namespace grainrisk {

/// Natural cubic spline through strictly increasing knots. Sites outside the
/// knot range are evaluated with the boundary polynomial piece.
class CubicSpline {
 public:
  CubicSpline(std::span<const double> x, std::span<const double> y);

  double operator()(double t) const;

  /// Evaluates at integer sites lo, lo+1, ..., hi-1 into out (walking the
  /// knot intervals once).
  void eval_integer_grid(int lo, int hi, double* out) const;

 private:
  std::vector<double> x_, y_, m_;  // m_ = second derivatives (natural ends)
  double piece(std::size_t i, double t) const;
};

}  // namespace grainrisk
