#pragma once

#include "cflines/curve.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace cflines {

// Convergent of the continued fraction for y/(mx) in the scale-free
// variable a_hat = a m^2 x^2, kept in ratio form.  num is the numerator
// once the denominator is rescaled to one, so it coincides with ratio.
template <typename Scalar = double>
struct NormalizedConvergent {
  Scalar ratio;
  Scalar num;
  int index;
};

template <typename Scalar = double>
struct SeriesTerm {
  Scalar value;
  int index;
};

// The raw recurrence N_0 = 1, D_0 = 1 + a_hat, N_{j+1} = D_j^2,
// D_{j+1} = D_j^2 + a_hat N_j^2 squares every step and overflows within a
// handful of terms.  The ratio form r_0 = 1/(1+a_hat),
// r_{j+1} = 1/(1 + a_hat r_j^2) is the same sequence and stays in (0, 1].
template <typename Scalar>
std::vector<NormalizedConvergent<Scalar>> convergents(Scalar a_hat, int k) {
  if (!(a_hat >= Scalar(0))) throw std::domain_error("convergents: requires a_hat >= 0");
  if (k < 1) throw std::domain_error("convergents: requires k >= 1");
  std::vector<NormalizedConvergent<Scalar>> out;
  out.reserve(static_cast<std::size_t>(k));
  Scalar r = Scalar(1) / (Scalar(1) + a_hat);
  out.push_back({r, r, 0});
  for (int j = 1; j < k; ++j) {
    r = Scalar(1) / (Scalar(1) + a_hat * r * r);
    out.push_back({r, r, j});
  }
  return out;
}

// y_0 = m x, y_{j+1} = m x / (1 + a y_j^2).  Each iterate equals m x times
// the previous convergent ratio: y_{j+1} = m x * r_j.
template <typename Scalar>
std::vector<Scalar> fixed_point_iterates(const CurveParams<Scalar>& p, Scalar x, int k) {
  if (!(p.a > Scalar(0))) throw std::domain_error("fixed_point_iterates: requires a > 0");
  if (k < 1) throw std::domain_error("fixed_point_iterates: requires k >= 1");
  std::vector<Scalar> ys;
  ys.reserve(static_cast<std::size_t>(k));
  const Scalar mx = p.m * x;
  Scalar y = mx;
  ys.push_back(y);
  for (int j = 1; j < k; ++j) {
    y = mx / (Scalar(1) + p.a * y * y);
    ys.push_back(y);
  }
  return ys;
}

// Telescoped series for y/(mx): term 0 is 1/(1+a_hat), term j >= 1 the
// difference of consecutive convergent ratios, so partial sums reproduce
// the convergents.  Differences of the ratio form replace the expanded
// polynomial terms, which overflow just like the raw recurrence.
template <typename Scalar>
std::vector<SeriesTerm<Scalar>> series_terms(Scalar a_hat, int k) {
  const auto conv = convergents(a_hat, k);
  std::vector<SeriesTerm<Scalar>> out;
  out.reserve(conv.size());
  out.push_back({conv[0].ratio, 0});
  for (std::size_t j = 1; j < conv.size(); ++j)
    out.push_back({conv[j].ratio - conv[j - 1].ratio, static_cast<int>(j)});
  return out;
}

template <typename Scalar = double>
struct ConvergenceReport {
  bool converged = false;
  bool bounded = true;       // |y_j| <= |m x| held for every iterate
  bool oscillating = false;  // stopped by the stalled-progress rule
  int iterations = 0;        // steps taken when converged
  Scalar y_star = Scalar(0); // closed-form root
  Scalar final_error = Scalar(0);
  std::vector<Scalar> history;  // y_0 .. y_last
};

// Runs the fixed-point iteration against the closed-form root.  Convergence
// is an observed outcome, not a guarantee: when the step size |y_{j+1}-y_j|
// makes no new low over a 50-step window the iteration is declared stalled
// (bounded oscillation) and reported as non-convergent, without error.
template <typename Scalar>
ConvergenceReport<Scalar> convergence_report(const CurveParams<Scalar>& p, Scalar x,
                                             int max_iter, Scalar tol) {
  using std::abs;
  if (max_iter < 0) throw std::domain_error("convergence_report: requires max_iter >= 0");
  ConvergenceReport<Scalar> rep;
  rep.y_star = solve_y(p, x).y;
  const Scalar mx = p.m * x;
  const Scalar bound = abs(mx);

  Scalar y = mx;
  rep.history.push_back(y);
  rep.final_error = abs(y - rep.y_star);
  if (rep.final_error <= tol) {
    rep.converged = true;
    return rep;
  }

  Scalar best_step = std::numeric_limits<Scalar>::infinity();
  int stalled = 0;
  for (int j = 1; j <= max_iter; ++j) {
    const Scalar y_next = mx / (Scalar(1) + p.a * y * y);
    const Scalar step = abs(y_next - y);
    y = y_next;
    rep.history.push_back(y);
    if (abs(y) > bound) rep.bounded = false;
    rep.final_error = abs(y - rep.y_star);
    rep.iterations = j;
    if (rep.final_error <= tol) {
      rep.converged = true;
      break;
    }
    if (step < best_step) {
      best_step = step;
      stalled = 0;
    } else if (++stalled >= 50) {
      rep.oscillating = true;
      break;
    }
  }
  return rep;
}

}  // namespace cflines
