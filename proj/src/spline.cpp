#include "grainrisk/spline.hpp"

#include <algorithm>
#include <stdexcept>

namespace grainrisk {

CubicSpline::CubicSpline(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {
  const std::size_t n = x_.size();
  if (n < 2 || n != y_.size())
    throw std::invalid_argument("CubicSpline: need >= 2 knots");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1]))
      throw std::invalid_argument("CubicSpline: knots must be strictly increasing");

  m_.assign(n, 0.0);
  if (n == 2) return;  // linear

  // Thomas solve of the tridiagonal system for interior second derivatives.
  std::vector<double> diag(n - 2), upper(n - 2), rhs(n - 2);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    diag[i - 1] = (h0 + h1) / 3.0;
    upper[i - 1] = h1 / 6.0;
    rhs[i - 1] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
  }
  for (std::size_t i = 1; i < n - 2; ++i) {
    const double lower = upper[i - 1];  // symmetric system
    const double w = lower / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  for (std::size_t i = n - 2; i-- > 0;) {
    double v = rhs[i];
    if (i + 1 < n - 2) v -= upper[i] * m_[i + 2];
    m_[i + 1] = v / diag[i];
  }
}

double CubicSpline::piece(std::size_t i, double t) const {
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::operator()(double t) const {
  std::size_t i;
  if (t <= x_.front()) {
    i = 0;
  } else if (t >= x_.back()) {
    i = x_.size() - 2;
  } else {
    i = static_cast<std::size_t>(
            std::upper_bound(x_.begin(), x_.end(), t) - x_.begin()) - 1;
  }
  return piece(i, t);
}

void CubicSpline::eval_integer_grid(int lo, int hi, double* out) const {
  std::size_t i = 0;
  const std::size_t last = x_.size() - 2;
  for (int t = lo; t < hi; ++t) {
    const double td = static_cast<double>(t);
    while (i < last && td > x_[i + 1]) ++i;
    out[t - lo] = piece(i, td);
  }
}

}  // namespace grainrisk
