#pragma once

// Upper-tail probabilities for the reference distributions used by the
// diagnostics: chi-square, standard normal and Student t.

#include "spconv/common.hpp"

#include <cmath>
#include <limits>

namespace spconv {

namespace detail {

template <typename Scalar>
constexpr int kSpecialMaxIter = 1000;

template <typename Scalar>
Scalar special_eps() {
  return std::numeric_limits<Scalar>::epsilon();
}

// Series for the lower regularized gamma P(a, x); converges for x < a + 1.
template <typename Scalar>
Scalar gamma_p_series(Scalar a, Scalar x) {
  using std::abs;
  using std::exp;
  using std::log;
  Scalar ap = a;
  Scalar sum = Scalar(1) / a;
  Scalar del = sum;
  for (int n = 0; n < kSpecialMaxIter<Scalar>; ++n) {
    ap += 1;
    del *= x / ap;
    sum += del;
    if (abs(del) < abs(sum) * special_eps<Scalar>()) break;
  }
  return sum * exp(-x + a * log(x) - std::lgamma(a));
}

// Continued fraction for the upper regularized gamma Q(a, x), modified Lentz.
template <typename Scalar>
Scalar gamma_q_fraction(Scalar a, Scalar x) {
  using std::abs;
  using std::exp;
  using std::log;
  const Scalar tiny = std::numeric_limits<Scalar>::min() / special_eps<Scalar>();
  Scalar b = x + 1 - a;
  Scalar c = Scalar(1) / tiny;
  Scalar d = Scalar(1) / b;
  Scalar h = d;
  for (int i = 1; i <= kSpecialMaxIter<Scalar>; ++i) {
    const Scalar an = -i * (i - a);
    b += 2;
    d = an * d + b;
    if (abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (abs(c) < tiny) c = tiny;
    d = Scalar(1) / d;
    const Scalar del = d * c;
    h *= del;
    if (abs(del - 1) < special_eps<Scalar>()) break;
  }
  return exp(-x + a * log(x) - std::lgamma(a)) * h;
}

template <typename Scalar>
Scalar beta_fraction(Scalar a, Scalar b, Scalar x) {
  using std::abs;
  const Scalar tiny = std::numeric_limits<Scalar>::min() / special_eps<Scalar>();
  const Scalar qab = a + b;
  const Scalar qap = a + 1;
  const Scalar qam = a - 1;
  Scalar c = 1;
  Scalar d = 1 - qab * x / qap;
  if (abs(d) < tiny) d = tiny;
  d = Scalar(1) / d;
  Scalar h = d;
  for (int m = 1; m <= kSpecialMaxIter<Scalar>; ++m) {
    const int m2 = 2 * m;
    Scalar aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (abs(c) < tiny) c = tiny;
    d = Scalar(1) / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (abs(c) < tiny) c = tiny;
    d = Scalar(1) / d;
    const Scalar del = d * c;
    h *= del;
    if (abs(del - 1) < special_eps<Scalar>()) break;
  }
  return h;
}

}  // namespace detail

/// Upper regularized incomplete gamma Q(a, x) = Γ(a, x) / Γ(a).
template <typename Scalar>
Scalar gamma_q(Scalar a, Scalar x) {
  if (!(a > 0)) throw DataError("gamma_q: shape must be positive");
  if (x <= 0) return Scalar(1);
  if (x < a + 1) return Scalar(1) - detail::gamma_p_series(a, x);
  return detail::gamma_q_fraction(a, x);
}

/// Regularized incomplete beta I_x(a, b).
template <typename Scalar>
Scalar incomplete_beta(Scalar a, Scalar b, Scalar x) {
  using std::exp;
  using std::log;
  if (x <= 0) return Scalar(0);
  if (x >= 1) return Scalar(1);
  const Scalar front = exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * log(x) + b * log(1 - x));
  if (x < (a + 1) / (a + b + 2)) return front * detail::beta_fraction(a, b, x) / a;
  return Scalar(1) - front * detail::beta_fraction(b, a, Scalar(1) - x) / b;
}

/// P(X ≥ x) for X ~ χ²(df).
template <typename Scalar>
Scalar chi2_sf(Scalar x, Scalar df) {
  if (!(x > 0)) return Scalar(1);
  return gamma_q(df / 2, x / 2);
}

/// P(Z ≥ z) for a standard normal Z.
template <typename Scalar>
Scalar normal_sf(Scalar z) {
  using std::erfc;
  using std::sqrt;
  return erfc(z / sqrt(Scalar(2))) / 2;
}

/// P(|Z| ≥ |z|) for a standard normal Z.
template <typename Scalar>
Scalar normal_two_sided(Scalar z) {
  using std::abs;
  using std::erfc;
  using std::sqrt;
  return erfc(abs(z) / sqrt(Scalar(2)));
}

/// P(|T| ≥ |t|) for T ~ Student t(df).
template <typename Scalar>
Scalar student_t_two_sided(Scalar t, Scalar df) {
  if (!(df > 0)) throw DataError("student_t_two_sided: df must be positive");
  const Scalar x = df / (df + t * t);
  return incomplete_beta(df / 2, Scalar(0.5), x);
}

template <typename Scalar>
TestResult<Scalar> chi2_test(Scalar statistic, Scalar df) {
  return {statistic, chi2_sf(statistic, df), df};
}

}  // namespace spconv
