#pragma once

// Ordinary least squares with the cross-section diagnostic battery:
// Jarque–Bera, Breusch–Pagan, Koenker–Bassett, Moran's I on residuals and
// the Lagrange multiplier tests (plain and robust) for spatial lag and
// spatial error dependence.

#include "spconv/common.hpp"
#include "spconv/distributions.hpp"
#include "spconv/weights.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace spconv {

/// Relative rank tolerance of the column-pivoting QR used for every solve.
inline constexpr double kRankTolerance = 1e-10;

template <typename Scalar = double>
struct OlsFit {
  VectorX<Scalar> beta;
  VectorX<Scalar> se;
  VectorX<Scalar> t_stats;
  VectorX<Scalar> p_values;  // two-sided Student t, n − k df
  Scalar sigma2{0};           // SSE / n
  Scalar sigma2_unbiased{0};  // SSE / (n − k)
  VectorX<Scalar> residuals;
  VectorX<Scalar> fitted;
  Scalar r2{0};
  Scalar adj_r2{0};
  Scalar log_likelihood{0};  // Gaussian, at the ML variance
  Index n{0};
  Index k{0};
  MatrixX<Scalar> xtx_inverse;
};

namespace detail {

template <typename Scalar>
Eigen::ColPivHouseholderQR<MatrixX<Scalar>> pivoted_qr(const MatrixX<Scalar>& x) {
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr;
  qr.setThreshold(Scalar(kRankTolerance));
  qr.compute(x);
  return qr;
}

// First column that is linearly dependent on the columns before it.
template <typename Scalar>
Index first_dependent_column(const MatrixX<Scalar>& x) {
  for (Index j = 0; j < x.cols(); ++j) {
    const MatrixX<Scalar> head = x.leftCols(j + 1);
    if (pivoted_qr(head).rank() < j + 1) return j;
  }
  return x.cols() - 1;
}

template <typename Scalar>
bool has_constant_column(const MatrixX<Scalar>& x) {
  for (Index j = 0; j < x.cols(); ++j) {
    const Scalar first = x(0, j);
    if (first != 0 && (x.col(j).array() == first).all()) return true;
  }
  return false;
}

// Fitted values of the least-squares regression of `target` on `x`.
template <typename Scalar>
VectorX<Scalar> project(const Eigen::ColPivHouseholderQR<MatrixX<Scalar>>& qr, const MatrixX<Scalar>& x,
                        const VectorX<Scalar>& target) {
  return x * qr.solve(target);
}

}  // namespace detail

/// Least-squares fit of y on the columns of X.
///
/// Throws DataError when n ≤ k or when X is rank deficient, naming the
/// first column that depends on earlier ones.
template <typename Scalar = double, typename DerivedX, typename DerivedY>
OlsFit<Scalar> ols_fit(const Eigen::MatrixBase<DerivedX>& x_in, const Eigen::MatrixBase<DerivedY>& y_in,
                       const std::vector<std::string>& column_names = {}) {
  using std::log;
  using std::sqrt;
  const MatrixX<Scalar> x = x_in.derived().template cast<Scalar>();
  const VectorX<Scalar> y = y_in.derived().template cast<Scalar>();
  const Index n = x.rows(), k = x.cols();
  if (y.size() != n) throw DataError("design has " + std::to_string(n) + " rows but y has " +
                                     std::to_string(y.size()) + " entries");
  if (k == 0) throw DataError("design matrix has no columns");
  if (n <= k)
    throw DataError("need more observations than regressors (n = " + std::to_string(n) +
                    ", k = " + std::to_string(k) + ")");
  if (!x.allFinite() || !y.allFinite()) throw DataError("regression inputs contain non-finite values");

  const auto qr = detail::pivoted_qr(x);
  if (qr.rank() < k) {
    const Index j = detail::first_dependent_column(x);
    const std::string name = j < static_cast<Index>(column_names.size())
                                 ? "'" + column_names[static_cast<std::size_t>(j)] + "'"
                                 : std::to_string(j);
    throw DataError("design matrix is rank deficient: column " + name +
                    " is linearly dependent on the preceding columns");
  }

  OlsFit<Scalar> fit;
  fit.n = n;
  fit.k = k;
  fit.beta = qr.solve(y);
  fit.fitted = x * fit.beta;
  fit.residuals = y - fit.fitted;

  const MatrixX<Scalar> r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  const MatrixX<Scalar> r_inv =
      r.template triangularView<Eigen::Upper>().solve(MatrixX<Scalar>::Identity(k, k));
  const MatrixX<Scalar> permuted = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  fit.xtx_inverse = perm * permuted * perm.transpose();

  const Scalar sse = fit.residuals.squaredNorm();
  fit.sigma2 = sse / Scalar(n);
  fit.sigma2_unbiased = sse / Scalar(n - k);
  fit.se = (fit.sigma2_unbiased * fit.xtx_inverse.diagonal().array()).sqrt().matrix();
  fit.t_stats = fit.beta.cwiseQuotient(fit.se);
  fit.p_values.resize(k);
  for (Index j = 0; j < k; ++j)
    fit.p_values[j] = student_t_two_sided(fit.t_stats[j], Scalar(n - k));

  const bool intercept = detail::has_constant_column(x);
  const Scalar sst = intercept ? (y.array() - y.mean()).matrix().squaredNorm() : y.squaredNorm();
  fit.r2 = sst > 0 ? std::clamp(Scalar(1) - sse / sst, Scalar(0), Scalar(1)) : Scalar(0);
  const Scalar dof_ratio = intercept ? Scalar(n - 1) / Scalar(n - k) : Scalar(n) / Scalar(n - k);
  fit.adj_r2 = Scalar(1) - (Scalar(1) - fit.r2) * dof_ratio;
  fit.log_likelihood =
      -Scalar(n) / 2 * (log(2 * std::numbers::pi_v<Scalar>) + log(fit.sigma2) + 1);
  return fit;
}

/// JB = (n/6)·(S² + (K − 3)²/4) from the central moments of `residuals`;
/// p-value from χ²(2).
template <typename Scalar = double, typename Derived>
TestResult<Scalar> jarque_bera(const Eigen::MatrixBase<Derived>& residuals) {
  using std::pow;
  const Index n = residuals.size();
  if (n < 4) throw DataError("Jarque-Bera needs at least 4 residuals");
  const Eigen::Array<Scalar, Eigen::Dynamic, 1> e =
      residuals.derived().template cast<Scalar>().array() - residuals.derived().template cast<Scalar>().mean();
  const Scalar m2 = e.square().mean();
  if (!(m2 > 0)) throw DataError("Jarque-Bera: residuals have zero variance");
  const Scalar m3 = e.cube().mean();
  const Scalar m4 = e.square().square().mean();
  const Scalar skew = m3 / pow(m2, Scalar(1.5));
  const Scalar kurt = m4 / (m2 * m2);
  const Scalar jb = Scalar(n) / 6 * (skew * skew + (kurt - 3) * (kurt - 3) / 4);
  return chi2_test(jb, Scalar(2));
}

namespace detail {

template <typename Scalar>
bool degenerate_squares(const VectorX<Scalar>& e2) {
  using std::abs;
  const Scalar mean = e2.mean();
  if (!(mean > 0)) return true;
  const Scalar spread = (e2.array() - mean).abs().maxCoeff();
  return spread <= Scalar(1e-12) * mean;
}

}  // namespace detail

/// Breusch–Pagan: half the explained sum of squares of the regression of
/// e²/σ̂² − 1 on X, with σ̂² = e'e/n; χ²(k − 1). Constant e² gives 0, p = 1.
template <typename Scalar = double, typename DerivedE, typename DerivedX>
TestResult<Scalar> breusch_pagan(const Eigen::MatrixBase<DerivedE>& residuals,
                                 const Eigen::MatrixBase<DerivedX>& x_in) {
  const MatrixX<Scalar> x = x_in.derived().template cast<Scalar>();
  const VectorX<Scalar> e = residuals.derived().template cast<Scalar>();
  if (e.size() != x.rows()) throw DataError("breusch_pagan: residuals and design differ in length");
  const Scalar df = Scalar(x.cols() - 1);
  const VectorX<Scalar> e2 = e.array().square().matrix();
  if (detail::degenerate_squares(e2) || df < 1) return {Scalar(0), Scalar(1), df};
  const Scalar sigma2 = e2.mean();
  const VectorX<Scalar> g = (e2.array() / sigma2 - 1).matrix();
  const auto qr = detail::pivoted_qr(x);
  const VectorX<Scalar> fitted = detail::project(qr, x, g);
  const Scalar ess = (fitted.array() - g.mean()).matrix().squaredNorm();
  return chi2_test(ess / 2, df);
}

/// Koenker–Bassett studentized variant: n·R² of e² regressed on X; χ²(k − 1).
template <typename Scalar = double, typename DerivedE, typename DerivedX>
TestResult<Scalar> koenker_bassett(const Eigen::MatrixBase<DerivedE>& residuals,
                                   const Eigen::MatrixBase<DerivedX>& x_in) {
  const MatrixX<Scalar> x = x_in.derived().template cast<Scalar>();
  const VectorX<Scalar> e = residuals.derived().template cast<Scalar>();
  if (e.size() != x.rows()) throw DataError("koenker_bassett: residuals and design differ in length");
  const Scalar df = Scalar(x.cols() - 1);
  const VectorX<Scalar> e2 = e.array().square().matrix();
  if (detail::degenerate_squares(e2) || df < 1) return {Scalar(0), Scalar(1), df};
  const auto qr = detail::pivoted_qr(x);
  const VectorX<Scalar> fitted = detail::project(qr, x, e2);
  const Scalar sst = (e2.array() - e2.mean()).matrix().squaredNorm();
  const Scalar sse = (e2 - fitted).squaredNorm();
  const Scalar r2 = std::clamp(Scalar(1) - sse / sst, Scalar(0), Scalar(1));
  return chi2_test(Scalar(e.size()) * r2, df);
}

namespace detail {

// Residuals at rounding level relative to the fit count as an exact fit.
template <typename Scalar>
bool exact_fit(const OlsFit<Scalar>& fit) {
  const Scalar scale = std::max(fit.fitted.norm(), fit.residuals.norm());
  return fit.residuals.norm() <= Scalar(1e-12) * scale;
}

}  // namespace detail

template <typename Scalar = double>
TestResult<Scalar> breusch_pagan(const OlsFit<Scalar>& fit, const MatrixX<Scalar>& x) {
  if (detail::exact_fit(fit)) return {Scalar(0), Scalar(1), Scalar(x.cols() - 1)};
  return breusch_pagan<Scalar>(fit.residuals, x);
}

template <typename Scalar = double>
TestResult<Scalar> koenker_bassett(const OlsFit<Scalar>& fit, const MatrixX<Scalar>& x) {
  if (detail::exact_fit(fit)) return {Scalar(0), Scalar(1), Scalar(x.cols() - 1)};
  return koenker_bassett<Scalar>(fit.residuals, x);
}

template <typename Scalar = double>
struct ResidualMoran {
  Scalar i_value{0};
  Scalar expected{0};
  Scalar variance{0};
  Scalar z{0};
  Scalar p_value{1};  // two-sided, standard normal
};

/// Moran's I of OLS residuals with moments that account for the projection
/// M = I − X(X'X)⁻¹X':
///   E[I]   = (n/S0)·tr(MW)/(n − k)
///   Var[I] = (n/S0)²·[tr(MWMW') + tr(MWMW) + tr(MW)²]/((n − k)(n − k + 2)) − E[I]²
/// The traces are expanded so only n×k products are formed.
template <typename Scalar = double>
ResidualMoran<Scalar> residual_moran(const WeightMatrix<Scalar>& w, const OlsFit<Scalar>& fit,
                                     const MatrixX<Scalar>& x) {
  using std::sqrt;
  using Sparse = typename WeightMatrix<Scalar>::Sparse;
  const Index n = fit.n, k = fit.k;
  if (w.size() != n) throw DataError("residual_moran: weights dimension does not match the sample");
  if (w.nonzeros() == 0) throw DataError("residual_moran: weight matrix is empty");
  const VectorX<Scalar>& e = fit.residuals;
  const Scalar ee = e.squaredNorm();
  if (!(ee > 0)) throw DataError("residual_moran: residual vector is zero");
  const Sparse& wm = w.matrix();
  const Scalar scale = Scalar(n) / w.s0();

  ResidualMoran<Scalar> r;
  r.i_value = scale * e.dot(wm * e) / ee;

  const MatrixX<Scalar>& a = fit.xtx_inverse;
  const MatrixX<Scalar> wx = wm * x;
  const MatrixX<Scalar> wtx = wm.transpose() * x;
  const MatrixX<Scalar> c = x.transpose() * wx;  // X'WX

  const Sparse wt = wm.transpose();
  const Scalar tr_wwt = wm.squaredNorm();
  const Scalar tr_ww = wm.cwiseProduct(wt).sum();
  const Scalar tr_mw = -(a * c).trace();
  const Scalar tr_mwmwt = tr_wwt - (a * (wtx.transpose() * wtx)).trace() -
                          (a * (wx.transpose() * wx)).trace() + (a * c * a * c.transpose()).trace();
  const Scalar tr_mwmw = tr_ww - 2 * (a * (wtx.transpose() * wx)).trace() + (a * c * a * c).trace();

  const Scalar dof = Scalar(n - k);
  r.expected = scale * tr_mw / dof;
  const Scalar second = scale * scale * (tr_mwmwt + tr_mwmw + tr_mw * tr_mw) / (dof * (dof + 2));
  r.variance = second - r.expected * r.expected;
  r.z = (r.i_value - r.expected) / sqrt(r.variance);
  r.p_value = normal_two_sided(r.z);
  return r;
}

template <typename Scalar = double>
struct LmTests {
  TestResult<Scalar> lag;
  TestResult<Scalar> lag_robust;
  TestResult<Scalar> error;
  TestResult<Scalar> error_robust;
};

/// Anselin's LM tests on OLS residuals, each χ²(1). With σ̂² = e'e/n,
/// T = tr(W'W + WW) and J = [(WXβ̂)'M(WXβ̂) + T·σ̂²]/σ̂²:
///   LM_lag  = (e'Wy/σ̂²)²/J
///   LM_err  = (e'We/σ̂²)²/T
///   RLM_lag = (e'Wy/σ̂² − e'We/σ̂²)²/(J − T)
///   RLM_err = (e'We/σ̂² − (T/J)·e'Wy/σ̂²)²/(T·(1 − T/J))
template <typename Scalar = double>
LmTests<Scalar> lm_tests(const WeightMatrix<Scalar>& w, const OlsFit<Scalar>& fit, const MatrixX<Scalar>& x,
                         const VectorX<Scalar>& y) {
  using Sparse = typename WeightMatrix<Scalar>::Sparse;
  const Index n = fit.n;
  if (w.size() != n || x.rows() != n || y.size() != n)
    throw DataError("lm_tests: dimensions of weights, design and response disagree");
  const Sparse& wm = w.matrix();
  const Sparse wt = wm.transpose();
  const Scalar t = wm.squaredNorm() + wm.cwiseProduct(wt).sum();
  if (!(t > 0)) throw DataError("lm_tests: tr(W'W + WW) is zero (empty weight matrix)");
  const VectorX<Scalar>& e = fit.residuals;
  const Scalar sigma2 = fit.sigma2;
  if (!(sigma2 > 0)) throw NumericalError("lm_tests: residual variance is zero");

  const VectorX<Scalar> wxb = wm * (x * fit.beta);
  const auto qr = detail::pivoted_qr(x);
  const VectorX<Scalar> m_wxb = wxb - detail::project(qr, x, wxb);
  const Scalar j = (m_wxb.squaredNorm() + t * sigma2) / sigma2;

  const Scalar d_lag = e.dot(wm * y) / sigma2;
  const Scalar d_err = e.dot(wm * e) / sigma2;
  if (!(j - t > Scalar(1e-12) * j))
    throw NumericalError("lm_tests: WXβ lies in the column space of X; robust tests undefined");

  LmTests<Scalar> r;
  r.lag = chi2_test(d_lag * d_lag / j, Scalar(1));
  r.error = chi2_test(d_err * d_err / t, Scalar(1));
  const Scalar rl = d_lag - d_err;
  r.lag_robust = chi2_test(rl * rl / (j - t), Scalar(1));
  const Scalar re = d_err - t / j * d_lag;
  r.error_robust = chi2_test(re * re / (t * (1 - t / j)), Scalar(1));
  return r;
}

template <typename Scalar = double>
struct DiagnosticsBundle {
  TestResult<Scalar> jb;
  TestResult<Scalar> bp;
  TestResult<Scalar> kb;
  ResidualMoran<Scalar> moran_residual;
  LmTests<Scalar> lm;
};

template <typename Scalar = double>
DiagnosticsBundle<Scalar> diagnostics(const WeightMatrix<Scalar>& w, const OlsFit<Scalar>& fit,
                                      const MatrixX<Scalar>& x, const VectorX<Scalar>& y) {
  DiagnosticsBundle<Scalar> d;
  d.jb = jarque_bera<Scalar>(fit.residuals);
  d.bp = breusch_pagan(fit, x);
  d.kb = koenker_bassett(fit, x);
  d.moran_residual = residual_moran(w, fit, x);
  d.lm = lm_tests(w, fit, x, y);
  return d;
}

}  // namespace spconv
