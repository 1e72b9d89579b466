#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace annulus {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cd kI{0.0, 1.0};

/// Hermitian part (A + A*) / 2.
inline CMatrix hermitian_part(const CMatrix& a) { return (a + a.adjoint()) / 2.0; }

/// Smallest eigenvalue of the Hermitian part of `a`.
double min_eigenvalue(const CMatrix& a);

/// Largest eigenvalue of the Hermitian part of `a`.
double max_eigenvalue(const CMatrix& a);

/// Spectral norm.
double spectral_norm(const CMatrix& a);

/// Singular values in decreasing order.
RVector singular_values(const CMatrix& a);

}  // namespace annulus
