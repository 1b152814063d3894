#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace gbias {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline CMat random_complex_gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CMat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(i, j) = cplx(re, im);
    }
  return m;
}

/// Haar-ish random unitary from the QR factorization of a complex Gaussian.
inline CMat random_unitary(Eigen::Index d, std::mt19937_64& rng) {
  const CMat g = random_complex_gaussian(d, d, rng);
  Eigen::HouseholderQR<CMat> qr(g);
  CMat q = qr.householderQ() * CMat::Identity(d, d);
  const CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double a = std::abs(r(i, i));
    if (a > 0) q.col(i) *= r(i, i) / a;
  }
  return q;
}

inline Vec random_gaussian_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

/// Singular values of a square complex block, descending.
inline Vec singular_values(const CMat& a) {
  if (a.size() == 0) return Vec();
  if (a.rows() == 1 && a.cols() == 1) return Vec::Constant(1, std::abs(a(0, 0)));
  Eigen::JacobiSVD<CMat> svd(a);
  return svd.singularValues();
}

/// Hermitian matrix power sqrt(A)^p of a positive semidefinite A, with
/// eigenvalues below `floor` treated as zero.
inline CMat psd_power(const CMat& a, double p, double floor = 0.0) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (a + a.adjoint()));
  Vec ev = eig.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    ev(i) = ev(i) > floor ? std::pow(ev(i), p) : 0.0;
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace gbias
