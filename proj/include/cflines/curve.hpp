#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cflines {

// One bounded-line curve (1 + a y^2) y = m x.  The cubic term keeps the
// dependent values inside |y| <= |m x|; a = 0 is the plain line y = m x and
// is served by linear_y, never by the cubic formulas below.
template <typename Scalar = double>
struct CurveParams {
  Scalar a;  // bound strength, a >= 0
  Scalar m;  // slope
};

// Real root of a y^3 + y = m x together with the Cardano intermediate t and
// the two additive components of the root.  comp_i is always negative and
// comp_ii always positive; their sum is the root.
template <typename Scalar = double>
struct CubicSolution {
  Scalar y;
  Scalar t;        // > 0 for every finite input
  Scalar comp_i;   // -t^{1/3} / 3
  Scalar comp_ii;  // t^{-1/3} / a
};

template <typename Scalar = double>
struct IntersectionResult {
  Scalar y_squared;
  bool exists;  // true only when y_squared > 0
};

template <typename Scalar>
Scalar linear_y(Scalar m, Scalar x) {
  return m * x;
}

// a y^3 + y - m x; zero exactly when (x, y) lies on the curve.
template <typename Scalar>
Scalar residual(const CurveParams<Scalar>& p, Scalar x, Scalar y) {
  return p.a * y * y * y + y - p.m * x;
}

// Closed-form real root of a y^3 + y = m x:
//
//   y = -t^{1/3}/3 + (1/a) t^{-1/3},
//   t = -(27 m x / 2a) + sqrt((27 m x / 2a)^2 + 27 / a^3).
//
// For m x > 0 the difference above cancels catastrophically once
// (27mx/2a)^2 dominates, so t is evaluated through its conjugate
// (27/a^3) / (27mx/2a + sqrt(...)), which is algebraically identical.
template <typename Scalar>
CubicSolution<Scalar> solve_y(const CurveParams<Scalar>& p, Scalar x) {
  using std::cbrt;
  using std::isfinite;
  using std::sqrt;
  if (!isfinite(p.a) || !(p.a > Scalar(0)))
    throw std::domain_error("solve_y: requires a > 0 (use linear_y for the a = 0 line)");
  if (!isfinite(p.m) || !isfinite(x))
    throw std::domain_error("solve_y: m and x must be finite");

  const Scalar mx = p.m * x;
  const Scalar half_term = Scalar(27) * mx / (Scalar(2) * p.a);
  const Scalar cube_term = Scalar(27) / (p.a * p.a * p.a);
  const Scalar disc = sqrt(half_term * half_term + cube_term);

  CubicSolution<Scalar> sol;
  sol.t = half_term > Scalar(0) ? cube_term / (half_term + disc) : disc - half_term;
  const Scalar tc = cbrt(sol.t);
  sol.comp_i = -tc / Scalar(3);
  sol.comp_ii = Scalar(1) / (p.a * tc);
  // the components cancel exactly at the origin; return a clean zero there
  sol.y = mx == Scalar(0) ? Scalar(0) : sol.comp_i + sol.comp_ii;
  return sol;
}

// Off-origin intersection of two curves: y^2 = (m2 - m1) / (m1 a2 - m2 a1).
// Equal slopes meet only at the origin.  A negative ratio means the curves
// never cross off-axis; a vanishing denominator with distinct slopes leaves
// y^2 undefined and is rejected.
template <typename Scalar>
IntersectionResult<Scalar> intersection(const CurveParams<Scalar>& p1,
                                        const CurveParams<Scalar>& p2) {
  using std::abs;
  if (!(p1.a > Scalar(0)) || !(p2.a > Scalar(0)))
    throw std::domain_error("intersection: both curves need a > 0");
  if (p1.m == p2.m) return {Scalar(0), false};
  const Scalar denom = p1.m * p2.a - p2.m * p1.a;
  if (abs(denom) < Scalar(1e-14))
    throw std::domain_error("intersection: m1*a2 - m2*a1 vanishes, y^2 undefined");
  const Scalar ratio = (p2.m - p1.m) / denom;
  return {ratio, ratio > Scalar(0)};
}

template <typename Scalar>
Scalar polar_residual(Scalar m, Scalar theta) {
  using std::sin;
  using std::tan;
  const Scalar s = sin(theta);
  return tan(theta) * (Scalar(1) + s * s) - m;
}

// Angle of the curve in polar form at radius 1/sqrt(a): the unique theta in
// (-pi/2, pi/2) with tan(theta) (1 + sin^2(theta)) = m.  The left-hand side
// is strictly increasing, so plain bisection converges; the bracket stops
// 1e-12 short of pi/2 where tan diverges (slopes beyond the reach of that
// bracket saturate at the endpoint).  Instantiate with long double when
// residuals at the 1e-12 scale matter for |m| in the hundreds; a double
// theta cannot represent the root finely enough there.
template <typename Scalar>
Scalar polar_theta(Scalar m) {
  using std::abs;
  using std::isfinite;
  if (!isfinite(m)) throw std::domain_error("polar_theta: m must be finite");
  if (m == Scalar(0)) return Scalar(0);
  if (m < Scalar(0)) return -polar_theta(-m);  // exact odd symmetry

  Scalar lo = Scalar(0);
  Scalar hi = std::numbers::pi_v<Scalar> / Scalar(2) - Scalar(1e-12);
  for (int it = 0; it < 400; ++it) {
    const Scalar mid = (lo + hi) / Scalar(2);
    if (mid <= lo || mid >= hi) break;  // bracket collapsed to adjacent values
    (polar_residual(m, mid) < Scalar(0) ? lo : hi) = mid;
  }
  return abs(polar_residual(m, lo)) <= abs(polar_residual(m, hi)) ? lo : hi;
}

// n evenly spaced samples of the curve over [x_min, x_max]; columns (x, y).
// a = 0 falls back to the plain line.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 2> sample_curve(const CurveParams<Scalar>& p,
                                                      Scalar x_min, Scalar x_max,
                                                      Eigen::Index n) {
  if (!(x_min < x_max)) throw std::domain_error("sample_curve: requires x_min < x_max");
  if (n < 2) throw std::domain_error("sample_curve: requires n >= 2");
  if (p.a < Scalar(0)) throw std::domain_error("sample_curve: requires a >= 0");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> out(n, 2);
  const Scalar step = (x_max - x_min) / Scalar(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar x = x_min + Scalar(i) * step;
    out(i, 0) = x;
    out(i, 1) = p.a == Scalar(0) ? linear_y(p.m, x) : solve_y(p, x).y;
  }
  return out;
}

// Root components at fixed a and x, one (comp_i, comp_ii) row per slope.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 2> sample_i_ii(Scalar a,
                                                     const std::vector<Scalar>& m_values,
                                                     Scalar x) {
  if (!(a > Scalar(0))) throw std::domain_error("sample_i_ii: requires a > 0");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> out(static_cast<Eigen::Index>(m_values.size()), 2);
  for (std::size_t k = 0; k < m_values.size(); ++k) {
    const CubicSolution<Scalar> s = solve_y<Scalar>({a, m_values[k]}, x);
    out(static_cast<Eigen::Index>(k), 0) = s.comp_i;
    out(static_cast<Eigen::Index>(k), 1) = s.comp_ii;
  }
  return out;
}

}  // namespace cflines
