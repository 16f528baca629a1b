#pragma once

// Bounded scalar maximization: golden-section search with parabolic
// interpolation steps (Brent), preceded by a coarse grid scan so that the
// bracket contains the best grid point of a possibly multimodal profile.

#include "spconv/common.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace spconv {

template <typename Scalar>
struct ScalarOptimum {
  Scalar x{0};
  Scalar value{0};
  int iterations{0};
  Scalar lower{0};  // final bracket
  Scalar upper{0};
};

/// Maximizes `f` on [lower, upper] with Brent's method. Throws NumericalError
/// when `max_iter` is exhausted before the bracket shrinks below `tol`.
template <typename Scalar, typename F>
ScalarOptimum<Scalar> brent_maximize(F&& f, Scalar lower, Scalar upper, Scalar tol,
                                     int max_iter = 500) {
  using std::abs;
  using std::sqrt;
  if (!(lower < upper)) throw DataError("brent_maximize: empty interval");

  const Scalar golden = (3 - sqrt(Scalar(5))) / 2;
  const Scalar tiny = Scalar(1e-3) * tol;
  auto g = [&](Scalar t) { return -f(t); };

  Scalar a = lower, b = upper;
  Scalar x = a + golden * (b - a);
  Scalar w = x, v = x;
  Scalar fx = g(x), fw = fx, fv = fx;
  Scalar d = 0, e = 0;

  for (int iter = 1; iter <= max_iter; ++iter) {
    const Scalar mid = (a + b) / 2;
    const Scalar tol1 = tol / 2 + tiny * abs(x);
    const Scalar tol2 = 2 * tol1;
    if (abs(x - mid) <= tol2 - (b - a) / 2) return {x, -fx, iter, a, b};

    bool golden_step = true;
    if (abs(e) > tol1) {
      Scalar r = (x - w) * (fx - fv);
      Scalar q = (x - v) * (fx - fw);
      Scalar p = (x - v) * q - (x - w) * r;
      q = 2 * (q - r);
      if (q > 0) p = -p;
      q = abs(q);
      const Scalar e_prev = e;
      e = d;
      if (abs(p) < abs(q * e_prev / 2) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const Scalar u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (mid >= x) ? tol1 : -tol1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = (x >= mid) ? a - x : b - x;
      d = golden * e;
    }

    const Scalar u = abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
    const Scalar fu = g(u);
    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  std::ostringstream msg;
  msg << "scalar optimizer did not converge in " << max_iter << " iterations; last bracket ["
      << a << ", " << b << "]";
  throw NumericalError(msg.str());
}

/// Grid scan over `grid_points` equally spaced nodes, then Brent on the two
/// cells adjacent to the best node.
template <typename Scalar, typename F>
ScalarOptimum<Scalar> maximize_on_interval(F&& f, Scalar lower, Scalar upper, Scalar tol,
                                           int grid_points = 41) {
  const Scalar step = (upper - lower) / (grid_points - 1);
  int best = 0;
  Scalar best_value = f(lower);
  for (int i = 1; i < grid_points; ++i) {
    const Scalar t = (i == grid_points - 1) ? upper : lower + i * step;
    const Scalar value = f(t);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  const Scalar a = best == 0 ? lower : lower + (best - 1) * step;
  const Scalar b = best == grid_points - 1 ? upper : lower + (best + 1) * step;
  auto result = brent_maximize<Scalar>(f, a, b, tol);
  if (result.value < best_value) {
    const Scalar t = best == grid_points - 1 ? upper : lower + best * step;
    result.x = t;
    result.value = best_value;
  }
  return result;
}

}  // namespace spconv
