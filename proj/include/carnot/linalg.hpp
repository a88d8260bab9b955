#pragma once

// Dense linear algebra on small runtime-sized matrices (dim <= kMaxDim).
// Inversion is templated on the scalar so jets flow through it; symmetric
// eigenproblems and Cholesky tests are double-only and delegate to Eigen.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>

namespace carnot {

inline constexpr int kMaxDim = 8;

template <class T>
inline double pivot_mag(const T& x) { return std::abs(x.v); }
inline double pivot_mag(double x) { return std::abs(x); }

// Gauss-Jordan inverse with partial pivoting; A and out are n*n row-major.
template <class T>
inline void mat_inverse(const T* A, T* out, int n) {
  std::array<T, kMaxDim * kMaxDim> w;
  for (int i = 0; i < n * n; ++i) w[i] = A[i];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i * n + j] = T(i == j ? 1.0 : 0.0);

  std::array<int, kMaxDim> perm;
  for (int i = 0; i < n; ++i) perm[i] = i;

  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = pivot_mag(w[col * n + col]);
    for (int r = col + 1; r < n; ++r) {
      const double m = pivot_mag(w[r * n + col]);
      if (m > best) { best = m; piv = r; }
    }
    if (best == 0.0) throw std::runtime_error("mat_inverse: singular matrix");
    if (piv != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(w[piv * n + j], w[col * n + j]);
        std::swap(out[piv * n + j], out[col * n + j]);
      }
    }
    const T ipiv = inverse(w[col * n + col]);
    for (int j = 0; j < n; ++j) {
      w[col * n + j] = w[col * n + j] * ipiv;
      out[col * n + j] = out[col * n + j] * ipiv;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      // no zero-value skip: jet entries can carry derivatives at value 0
      const T f = w[r * n + col];
      for (int j = 0; j < n; ++j) {
        w[r * n + j] = w[r * n + j] - f * w[col * n + j];
        out[r * n + j] = out[r * n + j] - f * out[col * n + j];
      }
    }
  }
}

// Positive definiteness via Cholesky.
inline bool cholesky_pd(const double* A, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = A[i * n + j];
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

// Eigenvalues (ascending) and optional eigenvectors of a symmetric matrix.
// Eigenvectors are returned as columns of evecs (n*n row-major).
inline void sym_eigen(const double* A, int n, double* evals, double* evecs = nullptr) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = A[i * n + j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, evecs ? Eigen::ComputeEigenvectors
                                                             : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("sym_eigen: did not converge");
  for (int i = 0; i < n; ++i) evals[i] = es.eigenvalues()(i);
  if (evecs)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) evecs[i * n + j] = es.eigenvectors()(i, j);
}

// General (non-symmetric) eigenvalues, real parts sorted ascending.
inline void real_eigenvalues(const double* A, int n, double* re) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = A[i * n + j];
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  std::array<double, kMaxDim> tmp;
  for (int i = 0; i < n; ++i) tmp[i] = es.eigenvalues()(i).real();
  std::sort(tmp.begin(), tmp.begin() + n);
  for (int i = 0; i < n; ++i) re[i] = tmp[i];
}

}  // namespace carnot
