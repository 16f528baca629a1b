#pragma once

// Maximum-likelihood estimation of the spatial lag model
//   y = ρWy + Xβ + ε
// and the spatial error model
//   y = Xβ + u,  u = λWu + ξ
// through the concentrated log-likelihood, with log|I − cW| evaluated from
// the eigenvalues of W.

#include "spconv/common.hpp"
#include "spconv/distributions.hpp"
#include "spconv/linreg.hpp"
#include "spconv/optimize.hpp"
#include "spconv/weights.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

namespace spconv {

namespace detail {

// D^{1/2} W D^{-1/2} for a W = D^{-1}B with B symmetric. The diagonal D is
// recovered by propagating w_ij / w_ji = d_j / d_i over each connected
// component, then checked on every edge.
template <typename Scalar>
MatrixX<Scalar> symmetrize_similar(const WeightMatrix<Scalar>& w) {
  using Sparse = typename WeightMatrix<Scalar>::Sparse;
  using std::abs;
  using std::sqrt;
  const Sparse& m = w.matrix();
  const Index n = w.size();
  if (w.is_symmetric()) return MatrixX<Scalar>(m);

  const Sparse mt = m.transpose();
  VectorX<Scalar> d = VectorX<Scalar>::Zero(n);
  std::deque<Index> queue;
  for (Index root = 0; root < n; ++root) {
    if (d[root] != 0) continue;
    d[root] = 1;
    queue.push_back(root);
    while (!queue.empty()) {
      const Index i = queue.front();
      queue.pop_front();
      for (typename Sparse::InnerIterator it(m, i); it; ++it) {
        const Index j = it.col();
        const Scalar back = mt.coeff(i, j);  // w_ji
        if (!(back > 0))
          throw NumericalError("weight matrix is not similar to a symmetric matrix (asymmetric pattern)");
        if (d[j] == 0) {
          d[j] = d[i] * it.value() / back;
          queue.push_back(j);
        }
      }
    }
  }
  MatrixX<Scalar> s = MatrixX<Scalar>::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (typename Sparse::InnerIterator it(m, i); it; ++it) {
      const Index j = it.col();
      const Scalar back = mt.coeff(i, j);
      const Scalar ratio = it.value() / back;
      if (abs(ratio - d[j] / d[i]) > Scalar(1e-10) * ratio)
        throw NumericalError("weight matrix is not similar to a symmetric matrix");
      s(i, j) = sqrt(d[i] / d[j]) * it.value();
    }
  }
  return (s + s.transpose()) / 2;
}

}  // namespace detail

/// Eigenvalues of W and the admissible interval (1/ω_min, 1/ω_max) of the
/// spatial coefficient. Built once per W; evaluation of log|I − cW| is O(n).
template <typename Scalar = double>
class LogDetGrid {
public:
  explicit LogDetGrid(const WeightMatrix<Scalar>& w) {
    const MatrixX<Scalar> s = detail::symmetrize_similar(w);
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(s, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("eigen-decomposition of W failed");
    VectorX<Scalar> omega = solver.eigenvalues();
    // A row-stochastic W has ω_max = 1 exactly; remove the rounding so the
    // domain ends at 1.
    using std::abs;
    if (w.standardized() && !w.has_islands() && abs(omega[omega.size() - 1] - 1) < Scalar(1e-10))
      omega[omega.size() - 1] = 1;
    set_eigenvalues(std::move(omega));
  }

  explicit LogDetGrid(VectorX<Scalar> eigenvalues) { set_eigenvalues(std::move(eigenvalues)); }

  const VectorX<Scalar>& eigenvalues() const { return omega_; }
  Index size() const { return omega_.size(); }

  // Open interval of admissible coefficients.
  Scalar lower() const { return lower_; }
  Scalar upper() const { return upper_; }
  bool contains(Scalar c) const { return c > lower_ && c < upper_; }

  /// log|I − cW| = Σ ln(1 − c·ω_i).
  Scalar log_det(Scalar c) const {
    check(c);
    Scalar sum = 0;
    for (Index i = 0; i < omega_.size(); ++i) sum += std::log1p(-c * omega_[i]);
    return sum;
  }

  /// tr(W(I − cW)⁻¹) and tr([W(I − cW)⁻¹]²).
  Scalar trace_resolvent(Scalar c) const {
    check(c);
    return (omega_.array() / (1 - c * omega_.array())).sum();
  }
  Scalar trace_resolvent_squared(Scalar c) const {
    check(c);
    return (omega_.array() / (1 - c * omega_.array())).square().sum();
  }

private:
  void set_eigenvalues(VectorX<Scalar> omega) {
    omega_ = std::move(omega);
    const Scalar lo = omega_.minCoeff(), hi = omega_.maxCoeff();
    lower_ = lo < 0 ? Scalar(1) / lo : -std::numeric_limits<Scalar>::infinity();
    upper_ = hi > 0 ? Scalar(1) / hi : std::numeric_limits<Scalar>::infinity();
  }

  void check(Scalar c) const {
    if (!contains(c)) {
      std::ostringstream msg;
      msg << "spatial coefficient " << c << " outside the admissible interval (" << lower_ << ", "
          << upper_ << "); I - cW is singular or not positive";
      throw NumericalError(msg.str());
    }
  }

  VectorX<Scalar> omega_;
  Scalar lower_{0};
  Scalar upper_{0};
};

/// Free-function form of LogDetGrid::log_det.
template <typename Scalar>
Scalar log_det(const LogDetGrid<Scalar>& grid, Scalar c) {
  return grid.log_det(c);
}

enum class SpatialKind { Lag, Error };

inline std::string_view to_string(SpatialKind k) { return k == SpatialKind::Lag ? "lag" : "error"; }

template <typename Scalar = double>
struct SpatialFit {
  SpatialKind kind = SpatialKind::Lag;
  Scalar spatial_coef{0};  // ρ for Lag, λ for Error
  Scalar se_spatial{0};
  Scalar z_spatial{0};
  Scalar p_spatial{1};
  VectorX<Scalar> beta;
  VectorX<Scalar> se_beta;
  VectorX<Scalar> z_beta;
  VectorX<Scalar> p_beta;  // two-sided, asymptotic normal
  Scalar sigma2{0};
  Scalar log_likelihood{0};
  Scalar log_likelihood_at_zero{0};  // concentrated likelihood at coefficient 0 (= OLS)
  Scalar pseudo_r2{0};               // squared correlation of fitted and observed y
  TestResult<Scalar> bp_test;
  VectorX<Scalar> innovations;  // ε̂ for Lag, ξ̂ for Error
  VectorX<Scalar> fitted;       // ρ̂Wy + Xβ̂ for Lag, Xβ̂ for Error
  MatrixX<Scalar> information;  // analytic Fisher information, order (β, coef, σ²)
  MatrixX<Scalar> covariance;   // its inverse
  Scalar domain_lower{0};
  Scalar domain_upper{0};
  int iterations{0};
  Index n{0};
};

/// Interior margin kept from each end of the admissible interval.
inline constexpr double kDomainMargin = 1e-6;
/// Convergence tolerance on the spatial coefficient.
inline constexpr double kCoefTolerance = 1e-8;

namespace detail {

template <typename Scalar>
Scalar concentrated(Scalar n, Scalar sse, Scalar logdet) {
  using std::log;
  return -n / 2 * (log(2 * std::numbers::pi_v<Scalar>) + 1) - n / 2 * log(sse / n) + logdet;
}

template <typename Scalar>
void check_ml_inputs(const WeightMatrix<Scalar>& w, const MatrixX<Scalar>& x, const VectorX<Scalar>& y) {
  if (w.has_islands())
    throw DataError("ML estimation requires a weight matrix without islands (" +
                    std::to_string(w.islands().size()) + " found)");
  if (!w.standardized()) throw DataError("ML estimation requires a row-standardized weight matrix");
  if (w.size() != x.rows() || y.size() != x.rows())
    throw DataError("dimensions of weights, design and response disagree");
}

template <typename Scalar>
Scalar squared_correlation(const VectorX<Scalar>& a, const VectorX<Scalar>& b) {
  const VectorX<Scalar> ac = (a.array() - a.mean()).matrix();
  const VectorX<Scalar> bc = (b.array() - b.mean()).matrix();
  const Scalar denom = ac.squaredNorm() * bc.squaredNorm();
  if (!(denom > 0)) return Scalar(0);
  const Scalar c = ac.dot(bc);
  return c * c / denom;
}

template <typename Scalar>
ScalarOptimum<Scalar> maximize_profile(const std::function<Scalar(Scalar)>& profile,
                                       const LogDetGrid<Scalar>& grid) {
  const Scalar margin = Scalar(kDomainMargin);
  const Scalar lo = std::isfinite(static_cast<double>(grid.lower())) ? grid.lower() + margin : Scalar(-1e6);
  const Scalar hi = std::isfinite(static_cast<double>(grid.upper())) ? grid.upper() - margin : Scalar(1e6);
  auto best = maximize_on_interval<Scalar>(profile, lo, hi, Scalar(kCoefTolerance));
  const Scalar at_zero = profile(Scalar(0));
  if (at_zero > best.value) {
    const Scalar width = (hi - lo) / 40;
    auto local = brent_maximize<Scalar>(profile, std::max(lo, -width), std::min(hi, width),
                                        Scalar(kCoefTolerance));
    if (local.value >= at_zero) best = local;
    else best = {Scalar(0), at_zero, local.iterations, local.lower, local.upper};
  }
  return best;
}

template <typename Scalar>
void finish_inference(SpatialFit<Scalar>& fit, const MatrixX<Scalar>& info) {
  using std::sqrt;
  const Index k = fit.beta.size();
  fit.information = info;
  fit.covariance = info.inverse();
  fit.se_beta = fit.covariance.diagonal().head(k).array().sqrt().matrix();
  fit.z_beta = fit.beta.cwiseQuotient(fit.se_beta);
  fit.p_beta.resize(k);
  for (Index j = 0; j < k; ++j) fit.p_beta[j] = normal_two_sided(fit.z_beta[j]);
  fit.se_spatial = sqrt(fit.covariance(k, k));
  fit.z_spatial = fit.spatial_coef / fit.se_spatial;
  fit.p_spatial = normal_two_sided(fit.z_spatial);
}

}  // namespace detail

/// Concentrated log-likelihood of the lag model,
///   L(ρ) = −(n/2)(ln 2π + 1) − (n/2)·ln(SSE(ρ)/n) + log|I − ρW|,
/// where SSE(ρ) is the residual sum of squares of (y − ρWy) on X. Since the
/// residual is e0 − ρ·eL, each evaluation is O(n) after setup.
template <typename Scalar = double>
class LagProfile {
public:
  LagProfile(const WeightMatrix<Scalar>& w, const LogDetGrid<Scalar>& grid, const MatrixX<Scalar>& x,
             const VectorX<Scalar>& y)
      : grid_(grid), wy_(w.matrix() * y), qr_(detail::pivoted_qr(x)) {
    b0_ = qr_.solve(y);
    bl_ = qr_.solve(wy_);
    e0_ = y - x * b0_;
    el_ = wy_ - x * bl_;
  }

  Scalar sse(Scalar rho) const { return (e0_ - rho * el_).squaredNorm(); }
  Scalar operator()(Scalar rho) const {
    return detail::concentrated(Scalar(e0_.size()), sse(rho), grid_.log_det(rho));
  }
  VectorX<Scalar> beta(Scalar rho) const { return b0_ - rho * bl_; }
  const VectorX<Scalar>& wy() const { return wy_; }

private:
  const LogDetGrid<Scalar>& grid_;
  VectorX<Scalar> wy_;
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr_;
  VectorX<Scalar> b0_, bl_, e0_, el_;
};

/// Concentrated log-likelihood of the error model; SSE(λ) comes from the
/// regression of (I − λW)y on (I − λW)X.
template <typename Scalar = double>
class ErrorProfile {
public:
  ErrorProfile(const WeightMatrix<Scalar>& w, const LogDetGrid<Scalar>& grid, const MatrixX<Scalar>& x,
               const VectorX<Scalar>& y)
      : grid_(grid), x_(x), y_(y), wx_(w.matrix() * x), wy_(w.matrix() * y) {}

  VectorX<Scalar> beta(Scalar lambda) const {
    const MatrixX<Scalar> fx = x_ - lambda * wx_;
    return detail::pivoted_qr(fx).solve(VectorX<Scalar>(y_ - lambda * wy_));
  }
  Scalar sse(Scalar lambda) const {
    const MatrixX<Scalar> fx = x_ - lambda * wx_;
    const VectorX<Scalar> fy = y_ - lambda * wy_;
    const VectorX<Scalar> b = detail::pivoted_qr(fx).solve(fy);
    return (fy - fx * b).squaredNorm();
  }
  Scalar operator()(Scalar lambda) const {
    return detail::concentrated(Scalar(y_.size()), sse(lambda), grid_.log_det(lambda));
  }

private:
  const LogDetGrid<Scalar>& grid_;
  const MatrixX<Scalar>& x_;
  const VectorX<Scalar>& y_;
  MatrixX<Scalar> wx_;
  VectorX<Scalar> wy_;
};

/// Full Gaussian log-likelihood of the lag model at (β, ρ, σ²).
template <typename Scalar = double>
Scalar lag_log_likelihood(const WeightMatrix<Scalar>& w, const LogDetGrid<Scalar>& grid,
                          const MatrixX<Scalar>& x, const VectorX<Scalar>& y, const VectorX<Scalar>& beta,
                          Scalar rho, Scalar sigma2) {
  using std::log;
  const Scalar n = Scalar(y.size());
  const VectorX<Scalar> e = y - rho * (w.matrix() * y) - x * beta;
  return -n / 2 * log(2 * std::numbers::pi_v<Scalar> * sigma2) + grid.log_det(rho) -
         e.squaredNorm() / (2 * sigma2);
}

/// Full Gaussian log-likelihood of the error model at (β, λ, σ²).
template <typename Scalar = double>
Scalar error_log_likelihood(const WeightMatrix<Scalar>& w, const LogDetGrid<Scalar>& grid,
                            const MatrixX<Scalar>& x, const VectorX<Scalar>& y, const VectorX<Scalar>& beta,
                            Scalar lambda, Scalar sigma2) {
  using std::log;
  const Scalar n = Scalar(y.size());
  const VectorX<Scalar> u = y - x * beta;
  const VectorX<Scalar> xi = u - lambda * (w.matrix() * u);
  return -n / 2 * log(2 * std::numbers::pi_v<Scalar> * sigma2) + grid.log_det(lambda) -
         xi.squaredNorm() / (2 * sigma2);
}

/// ML fit of the spatial lag model. Standard errors come from the inverse of
/// the analytical information matrix in (β, ρ, σ²):
///   I_ββ = X'X/σ²,  I_βρ = X'(W_A Xβ)/σ²,  I_ρσ = tr(W_A)/σ²,  I_σσ = n/(2σ⁴),
///   I_ρρ = tr(W_A²) + tr(W_A'W_A) + (W_A Xβ)'(W_A Xβ)/σ²,
/// with W_A = W(I − ρW)⁻¹.
template <typename Scalar = double>
SpatialFit<Scalar> fit_sar(const WeightMatrix<Scalar>& w, const LogDetGrid<Scalar>& grid,
                           const MatrixX<Scalar>& x, const VectorX<Scalar>& y) {
  detail::check_ml_inputs(w, x, y);
  ols_fit<Scalar>(x, y);  // rank and size checks
  if (grid.size() != w.size()) throw DataError("log-det grid does not match the weight matrix");
  const Index n = y.size(), k = x.cols();
  const LagProfile<Scalar> profile(w, grid, x, y);
  const std::function<Scalar(Scalar)> f = [&](Scalar rho) { return profile(rho); };
  const auto opt = detail::maximize_profile(f, grid);

  SpatialFit<Scalar> fit;
  fit.kind = SpatialKind::Lag;
  fit.n = n;
  fit.spatial_coef = opt.x;
  fit.iterations = opt.iterations;
  fit.domain_lower = grid.lower();
  fit.domain_upper = grid.upper();
  fit.beta = profile.beta(opt.x);
  fit.fitted = opt.x * profile.wy() + x * fit.beta;
  fit.innovations = y - fit.fitted;
  fit.sigma2 = fit.innovations.squaredNorm() / Scalar(n);
  if (!(fit.sigma2 > 0)) throw NumericalError("lag model fits exactly; variance is zero");
  fit.log_likelihood = opt.value;
  fit.log_likelihood_at_zero = profile(Scalar(0));
  fit.pseudo_r2 = detail::squared_correlation(fit.fitted, y);
  fit.bp_test = breusch_pagan<Scalar>(fit.innovations, x);

  const Scalar rho = fit.spatial_coef, s2 = fit.sigma2;
  MatrixX<Scalar> a = -rho * MatrixX<Scalar>(w.matrix());
  a.diagonal().array() += 1;
  const Eigen::PartialPivLU<MatrixX<Scalar>> lu(a);
  const MatrixX<Scalar> wa = w.matrix() * lu.inverse();
  const VectorX<Scalar> waxb = wa * (x * fit.beta);

  MatrixX<Scalar> info = MatrixX<Scalar>::Zero(k + 2, k + 2);
  info.topLeftCorner(k, k) = x.transpose() * x / s2;
  info.block(0, k, k, 1) = x.transpose() * waxb / s2;
  info.block(k, 0, 1, k) = info.block(0, k, k, 1).transpose();
  info(k, k) = grid.trace_resolvent_squared(rho) + wa.squaredNorm() + waxb.squaredNorm() / s2;
  info(k, k + 1) = info(k + 1, k) = grid.trace_resolvent(rho) / s2;
  info(k + 1, k + 1) = Scalar(n) / (2 * s2 * s2);
  detail::finish_inference(fit, info);
  return fit;
}

template <typename Scalar = double>
SpatialFit<Scalar> fit_sar(const WeightMatrix<Scalar>& w, const MatrixX<Scalar>& x, const VectorX<Scalar>& y) {
  detail::check_ml_inputs(w, x, y);
  const LogDetGrid<Scalar> grid(w);
  return fit_sar(w, grid, x, y);
}

/// ML fit of the spatial error model. Information matrix in (β, λ, σ²):
///   I_ββ = (BX)'(BX)/σ²,  I_λλ = tr(W_B²) + tr(W_B'W_B),
///   I_λσ = tr(W_B)/σ²,  I_σσ = n/(2σ⁴),  I_βλ = 0,
/// with B = I − λW and W_B = W B⁻¹.
template <typename Scalar = double>
SpatialFit<Scalar> fit_sem(const WeightMatrix<Scalar>& w, const LogDetGrid<Scalar>& grid,
                           const MatrixX<Scalar>& x, const VectorX<Scalar>& y) {
  detail::check_ml_inputs(w, x, y);
  ols_fit<Scalar>(x, y);
  if (grid.size() != w.size()) throw DataError("log-det grid does not match the weight matrix");
  const Index n = y.size(), k = x.cols();
  const ErrorProfile<Scalar> profile(w, grid, x, y);
  const std::function<Scalar(Scalar)> f = [&](Scalar lambda) { return profile(lambda); };
  const auto opt = detail::maximize_profile(f, grid);

  SpatialFit<Scalar> fit;
  fit.kind = SpatialKind::Error;
  fit.n = n;
  fit.spatial_coef = opt.x;
  fit.iterations = opt.iterations;
  fit.domain_lower = grid.lower();
  fit.domain_upper = grid.upper();
  fit.beta = profile.beta(opt.x);
  fit.fitted = x * fit.beta;
  const VectorX<Scalar> u = y - fit.fitted;
  fit.innovations = u - opt.x * (w.matrix() * u);
  fit.sigma2 = fit.innovations.squaredNorm() / Scalar(n);
  if (!(fit.sigma2 > 0)) throw NumericalError("error model fits exactly; variance is zero");
  fit.log_likelihood = opt.value;
  fit.log_likelihood_at_zero = profile(Scalar(0));
  fit.pseudo_r2 = detail::squared_correlation(fit.fitted, y);
  fit.bp_test = breusch_pagan<Scalar>(fit.innovations, x);

  const Scalar lambda = fit.spatial_coef, s2 = fit.sigma2;
  MatrixX<Scalar> b = -lambda * MatrixX<Scalar>(w.matrix());
  b.diagonal().array() += 1;
  const Eigen::PartialPivLU<MatrixX<Scalar>> lu(b);
  const MatrixX<Scalar> wb = w.matrix() * lu.inverse();
  const MatrixX<Scalar> bx = x - lambda * (w.matrix() * x);

  MatrixX<Scalar> info = MatrixX<Scalar>::Zero(k + 2, k + 2);
  info.topLeftCorner(k, k) = bx.transpose() * bx / s2;
  info(k, k) = grid.trace_resolvent_squared(lambda) + wb.squaredNorm();
  info(k, k + 1) = info(k + 1, k) = grid.trace_resolvent(lambda) / s2;
  info(k + 1, k + 1) = Scalar(n) / (2 * s2 * s2);
  detail::finish_inference(fit, info);
  return fit;
}

template <typename Scalar = double>
SpatialFit<Scalar> fit_sem(const WeightMatrix<Scalar>& w, const MatrixX<Scalar>& x, const VectorX<Scalar>& y) {
  detail::check_ml_inputs(w, x, y);
  const LogDetGrid<Scalar> grid(w);
  return fit_sem(w, grid, x, y);
}

/// Breusch–Pagan on the innovations of a spatial fit against X.
template <typename Scalar = double>
TestResult<Scalar> spatial_bp(const SpatialFit<Scalar>& fit, const MatrixX<Scalar>& x) {
  if (fit.innovations.size() == 0) throw DataError("spatial_bp: fit carries no innovations");
  return breusch_pagan<Scalar>(fit.innovations, x);
}

}  // namespace spconv
