#pragma once

// Matrix functions of E + mu*A used by the time-scale to ODE embedding:
//   log_one_plus(mu, A) = Ln(E + mu A)              (principal branch)
//   log_ratio(mu, A)    = Ln(E + mu A) / ln(1 + mu)
//   phi_fun(mu, A)      = A^{-1} Ln(E + mu A)       (extended to singular A)
//
// The real variants refuse inputs whose logarithm is not real (an eigenvalue of
// E + mu A on the closed negative axis) with BranchError. The *_complex
// variants return the principal value, approaching the negative axis from the
// upper half-plane: log(-x) = ln x + i pi.

#include "tsdyn/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>

namespace tsdyn {

enum class LogMode { Real, ComplexAllowed };

namespace detail {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using CMat = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

/// Operator 2-norm estimate by power iteration on A^T A.
template <typename Derived>
typename Derived::RealScalar norm2_estimate(const Eigen::MatrixBase<Derived>& A, int iters = 30) {
  using Real = typename Derived::RealScalar;
  using Scalar = typename Derived::Scalar;
  const auto n = A.cols();
  if (n == 0) return Real(0);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = Scalar(Real(1) + Real(i) / Real(n + 1));
  v.normalize();
  Real est = 0;
  for (int k = 0; k < iters; ++k) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w = A.adjoint() * (A * v);
    const Real nw = w.norm();
    if (nw == Real(0)) return Real(0);
    est = std::sqrt(nw);
    v = w / nw;
  }
  return std::max(est, (A * v).norm());
}

/// Gauss-Legendre nodes and weights on [0, 1] (Golub-Welsch).
template <typename Scalar>
void gauss_legendre_01(int m, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& nodes,
                       Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights) {
  Mat<double> J = Mat<double>::Zero(m, m);
  for (int k = 1; k < m; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat<double>> es(J);
  nodes.resize(m);
  weights.resize(m);
  for (int k = 0; k < m; ++k) {
    nodes(k) = Scalar(0.5 * (es.eigenvalues()(k) + 1.0));
    weights(k) = Scalar(es.eigenvectors()(0, k) * es.eigenvectors()(0, k));
  }
}

/// Principal square root of an upper-triangular matrix (Bjorck-Hammarling).
template <typename Scalar>
CMat<Scalar> sqrtm_triangular(const CMat<Scalar>& T) {
  const auto n = T.rows();
  CMat<Scalar> R = CMat<Scalar>::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    R(j, j) = std::sqrt(T(j, j));
    for (Eigen::Index i = j - 1; i >= 0; --i) {
      std::complex<Scalar> s = 0;
      for (Eigen::Index k = i + 1; k < j; ++k) s += R(i, k) * R(k, j);
      R(i, j) = (T(i, j) - s) / (R(i, i) + R(j, j));
    }
  }
  return R;
}

/// Inverse scaling and squaring on a triangular factor: take square roots until
/// ||T - I||_1 <= 0.25, then a degree-8 Gauss-Legendre (Pade) evaluation of log(I + X).
template <typename Scalar>
CMat<Scalar> logm_triangular(CMat<Scalar> T) {
  const auto n = T.rows();
  const CMat<Scalar> I = CMat<Scalar>::Identity(n, n);
  int k = 0;
  while ((T - I).cwiseAbs().colwise().sum().maxCoeff() > Scalar(0.25) && k < 100) {
    T = sqrtm_triangular<Scalar>(T);
    ++k;
  }
  const CMat<Scalar> X = T - I;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes, weights;
  gauss_legendre_01<Scalar>(8, nodes, weights);
  CMat<Scalar> L = CMat<Scalar>::Zero(n, n);
  for (Eigen::Index j = 0; j < nodes.size(); ++j) {
    const CMat<Scalar> D = I + std::complex<Scalar>(nodes(j)) * X;
    // X (I + tX)^{-1}; the factors commute, and D is triangular.
    L += std::complex<Scalar>(weights(j)) *
         D.template triangularView<Eigen::Upper>().solve(X);
  }
  return std::ldexp(Scalar(1), k) * L;
}

template <typename Scalar>
void check_regressive(const Mat<Scalar>& M) {
  Eigen::JacobiSVD<Mat<Scalar>> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return;
  if (!(sv(sv.size() - 1) > Scalar(1e-13) * std::max(Scalar(1), sv(0))))
    throw RegressivityError("E + mu*A is singular (not regressive)");
}

/// Principal logarithm of a general square matrix via complex Schur form.
/// Negative real eigenvalues are placed on the upper side of the branch cut.
template <typename Scalar>
CMat<Scalar> logm_schur(const CMat<Scalar>& M) {
  Eigen::ComplexSchur<CMat<Scalar>> schur(M);
  CMat<Scalar> T = schur.matrixT();
  for (Eigen::Index i = 0; i < T.rows(); ++i) {
    auto& l = T(i, i);
    if (l.real() < 0 && std::abs(l.imag()) <= Scalar(1e-12) * std::abs(l))
      l = std::complex<Scalar>(l.real(), Scalar(+0.0));
  }
  const CMat<Scalar>& U = schur.matrixU();
  return U * logm_triangular<Scalar>(T) * U.adjoint();
}

/// Throws BranchError if E + mu A has an eigenvalue on (-inf, 0].
template <typename Scalar>
void check_real_branch(const Mat<Scalar>& M) {
  Eigen::ComplexEigenSolver<CMat<Scalar>> es(M.template cast<std::complex<Scalar>>(), false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto l = es.eigenvalues()(i);
    if (l.real() <= 0 && std::abs(l.imag()) <= Scalar(1e-12) * std::max(Scalar(1), std::abs(l)))
      throw BranchError("E + mu*A has an eigenvalue on the negative real axis; the real "
                        "logarithm does not exist (use complex-allowed mode)");
  }
}

/// Taylor series sum_{k>=1} (-1)^{k+1} (mu A)^k / k. Valid for mu ||A|| < 1.
template <typename Derived>
Mat<typename Derived::Scalar> log_one_plus_series(typename Derived::Scalar mu,
                                                  const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  const auto n = A.rows();
  const Mat<Scalar> X = mu * A;
  Mat<Scalar> power = X;
  Mat<Scalar> sum = Mat<Scalar>::Zero(n, n);
  for (int k = 1; k <= 200; ++k) {
    const Mat<Scalar> term = power / Scalar(k);
    if (k % 2 == 1) sum += term; else sum -= term;
    if (term.norm() < Scalar(1e-16) * std::max(Scalar(1), sum.norm())) break;
    power = power * X;
  }
  return sum;
}

template <typename Derived>
CMat<typename Derived::Scalar> log_one_plus_schur(typename Derived::Scalar mu,
                                                  const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  const Mat<Scalar> M = Mat<Scalar>::Identity(A.rows(), A.cols()) + mu * A;
  check_regressive<Scalar>(M);
  return logm_schur<Scalar>(M.template cast<std::complex<Scalar>>());
}

/// sum_{k>=0} (-1)^k A^k mu^{k+1} / (k+1); finite for nilpotent A.
template <typename Derived>
Mat<typename Derived::Scalar> phi_fun_series(typename Derived::Scalar mu,
                                             const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  const auto n = A.rows();
  Mat<Scalar> power = Mat<Scalar>::Identity(n, n);
  Mat<Scalar> sum = Mat<Scalar>::Zero(n, n);
  Scalar mu_pow = mu;
  for (int k = 0; k <= 200; ++k) {
    const Mat<Scalar> term = power * (mu_pow / Scalar(k + 1));
    if (k % 2 == 0) sum += term; else sum -= term;
    if (term.norm() < Scalar(1e-16) * std::max(Scalar(1), sum.norm())) break;
    power = power * A;
    mu_pow *= mu;
  }
  return sum;
}

/// h(A) with h(x) = ln(1 + mu x)/x through the block identity
///   log(E + mu [[A, E], [0, 0]]) = [[Ln(E + mu A), phi(A)], [0, 0]],
/// whose upper-right block is the divided difference (g(A) - g(0)) A^{-1}.
template <typename Derived>
CMat<typename Derived::Scalar> phi_fun_schur(typename Derived::Scalar mu,
                                             const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  const auto n = A.rows();
  Mat<Scalar> big = Mat<Scalar>::Zero(2 * n, 2 * n);
  big.topLeftCorner(n, n) = A;
  big.topRightCorner(n, n) = Mat<Scalar>::Identity(n, n);
  const CMat<Scalar> L = log_one_plus_schur(mu, big);
  return L.topRightCorner(n, n);
}

template <typename Derived>
void check_square(const Eigen::MatrixBase<Derived>& A, typename Derived::Scalar mu) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw DomainError("matrix function requires a nonempty square matrix");
  if (!A.allFinite()) throw DomainError("matrix has non-finite entries");
  if (!(mu > 0) || !std::isfinite(double(mu))) throw DomainError("mu must be positive and finite");
}

// Series route threshold on mu ||A||_2. The log series needs about 50 terms here.
constexpr double kSeriesRadius = 0.5;

}  // namespace detail

/// Principal Ln(E + mu A), complex-allowed.
template <typename Derived>
detail::CMat<typename Derived::Scalar> log_one_plus_complex(typename Derived::Scalar mu,
                                                            const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  detail::check_square(A, mu);
  if (mu * detail::norm2_estimate(A) < Scalar(detail::kSeriesRadius))
    return detail::log_one_plus_series(mu, A).template cast<std::complex<Scalar>>();
  return detail::log_one_plus_schur(mu, A);
}

/// Real Ln(E + mu A); BranchError when no real principal logarithm exists.
template <typename Derived>
detail::Mat<typename Derived::Scalar> log_one_plus(typename Derived::Scalar mu,
                                                   const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  detail::check_square(A, mu);
  if (mu * detail::norm2_estimate(A) < Scalar(detail::kSeriesRadius))
    return detail::log_one_plus_series(mu, A);
  const detail::Mat<Scalar> M = detail::Mat<Scalar>::Identity(A.rows(), A.cols()) + mu * A;
  detail::check_regressive<Scalar>(M);
  detail::check_real_branch<Scalar>(M);
  return detail::log_one_plus_schur(mu, A).real();
}

template <typename Derived>
detail::Mat<typename Derived::Scalar> log_ratio(typename Derived::Scalar mu,
                                                const Eigen::MatrixBase<Derived>& A) {
  return log_one_plus(mu, A) / std::log1p(mu);
}

template <typename Derived>
detail::CMat<typename Derived::Scalar> log_ratio_complex(typename Derived::Scalar mu,
                                                         const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  return log_one_plus_complex(mu, A) / std::complex<Scalar>(std::log1p(mu));
}

namespace detail {

template <typename Derived>
bool well_conditioned(const Eigen::MatrixBase<Derived>& A, double max_cond = 1e8) {
  using Scalar = typename Derived::Scalar;
  Eigen::JacobiSVD<Mat<Scalar>> svd(A.eval());
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 1) > Scalar(0) && sv(0) / sv(sv.size() - 1) < Scalar(max_cond);
}

}  // namespace detail

/// A^{-1} Ln(E + mu A) with the removable singularity at A = 0 filled in.
/// Invertible, well-conditioned A: solve A X = Ln. Otherwise the power series
/// (small mu ||A||) or the block Schur evaluation.
template <typename Derived>
detail::Mat<typename Derived::Scalar> phi_fun(typename Derived::Scalar mu,
                                              const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  detail::check_square(A, mu);
  if (detail::well_conditioned(A)) return A.colPivHouseholderQr().solve(log_one_plus(mu, A));
  if (mu * detail::norm2_estimate(A) < Scalar(detail::kSeriesRadius))
    return detail::phi_fun_series(mu, A);
  const detail::Mat<Scalar> M = detail::Mat<Scalar>::Identity(A.rows(), A.cols()) + mu * A;
  detail::check_regressive<Scalar>(M);
  detail::check_real_branch<Scalar>(M);
  return detail::phi_fun_schur(mu, A).real();
}

template <typename Derived>
detail::CMat<typename Derived::Scalar> phi_fun_complex(typename Derived::Scalar mu,
                                                       const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  using C = std::complex<Scalar>;
  detail::check_square(A, mu);
  if (detail::well_conditioned(A))
    return A.template cast<C>().colPivHouseholderQr().solve(log_one_plus_complex(mu, A));
  if (mu * detail::norm2_estimate(A) < Scalar(detail::kSeriesRadius))
    return detail::phi_fun_series(mu, A).template cast<C>();
  return detail::phi_fun_schur(mu, A);
}

}  // namespace tsdyn
