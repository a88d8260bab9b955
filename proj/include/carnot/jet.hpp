#pragma once

// Second-order forward-mode scalar: value, gradient and Hessian with respect
// to N chart coordinates. Model components are written once as templated
// functions of the scalar type; instantiating them on Jet<N> yields exact
// first and second derivatives without hand-differentiated formulas.

#include <array>
#include <cmath>
#include <cstddef>

namespace carnot {

template <int N>
struct Jet {
  static constexpr int nvar = N;
  static constexpr int nhess = N * (N + 1) / 2;

  double v = 0.0;
  std::array<double, N> g{};      // dv/dx_i
  std::array<double, nhess> h{};  // d2v/dx_i dx_j, packed upper triangle

  constexpr Jet() = default;
  constexpr Jet(double value) : v(value) {}

  static constexpr int hidx(int i, int j) {
    if (i > j) std::swap(i, j);
    return i * N - i * (i - 1) / 2 + (j - i);
  }

  static Jet variable(double value, int index) {
    Jet out(value);
    out.g[index] = 1.0;
    return out;
  }

  double grad(int i) const { return g[i]; }
  double hess(int i, int j) const { return h[hidx(i, j)]; }
};

template <int N>
inline Jet<N> operator+(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> o(a.v + b.v);
  for (int i = 0; i < N; ++i) o.g[i] = a.g[i] + b.g[i];
  for (int k = 0; k < Jet<N>::nhess; ++k) o.h[k] = a.h[k] + b.h[k];
  return o;
}

template <int N>
inline Jet<N> operator-(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> o(a.v - b.v);
  for (int i = 0; i < N; ++i) o.g[i] = a.g[i] - b.g[i];
  for (int k = 0; k < Jet<N>::nhess; ++k) o.h[k] = a.h[k] - b.h[k];
  return o;
}

template <int N>
inline Jet<N> operator-(const Jet<N>& a) {
  Jet<N> o(-a.v);
  for (int i = 0; i < N; ++i) o.g[i] = -a.g[i];
  for (int k = 0; k < Jet<N>::nhess; ++k) o.h[k] = -a.h[k];
  return o;
}

template <int N>
inline Jet<N> operator*(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> o(a.v * b.v);
  for (int i = 0; i < N; ++i) o.g[i] = a.g[i] * b.v + a.v * b.g[i];
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) {
      const int k = Jet<N>::hidx(i, j);
      o.h[k] = a.h[k] * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] + a.v * b.h[k];
    }
  return o;
}

// Composition with a scalar function given f(v), f'(v), f''(v).
template <int N>
inline Jet<N> compose(const Jet<N>& a, double f, double fp, double fpp) {
  Jet<N> o(f);
  for (int i = 0; i < N; ++i) o.g[i] = fp * a.g[i];
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) {
      const int k = Jet<N>::hidx(i, j);
      o.h[k] = fpp * a.g[i] * a.g[j] + fp * a.h[k];
    }
  return o;
}

template <int N>
inline Jet<N> inverse(const Jet<N>& a) {
  const double iv = 1.0 / a.v;
  return compose(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}

template <int N>
inline Jet<N> operator/(const Jet<N>& a, const Jet<N>& b) {
  return a * inverse(b);
}

template <int N> inline Jet<N> operator+(const Jet<N>& a, double c) { Jet<N> o = a; o.v += c; return o; }
template <int N> inline Jet<N> operator+(double c, const Jet<N>& a) { return a + c; }
template <int N> inline Jet<N> operator-(const Jet<N>& a, double c) { return a + (-c); }
template <int N> inline Jet<N> operator-(double c, const Jet<N>& a) { return (-a) + c; }

template <int N>
inline Jet<N> operator*(const Jet<N>& a, double c) {
  Jet<N> o(a.v * c);
  for (int i = 0; i < N; ++i) o.g[i] = a.g[i] * c;
  for (int k = 0; k < Jet<N>::nhess; ++k) o.h[k] = a.h[k] * c;
  return o;
}
template <int N> inline Jet<N> operator*(double c, const Jet<N>& a) { return a * c; }
template <int N> inline Jet<N> operator/(const Jet<N>& a, double c) { return a * (1.0 / c); }
template <int N> inline Jet<N> operator/(double c, const Jet<N>& a) { return inverse(a) * c; }

template <int N> inline Jet<N> exp(const Jet<N>& a) {
  const double e = std::exp(a.v);
  return compose(a, e, e, e);
}
template <int N> inline Jet<N> sin(const Jet<N>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return compose(a, s, c, -s);
}
template <int N> inline Jet<N> cos(const Jet<N>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return compose(a, c, -s, -c);
}
template <int N> inline Jet<N> sinh(const Jet<N>& a) {
  const double s = std::sinh(a.v), c = std::cosh(a.v);
  return compose(a, s, c, s);
}
template <int N> inline Jet<N> cosh(const Jet<N>& a) {
  const double s = std::sinh(a.v), c = std::cosh(a.v);
  return compose(a, c, s, c);
}
template <int N> inline Jet<N> sqrt(const Jet<N>& a) {
  const double s = std::sqrt(a.v);
  return compose(a, s, 0.5 / s, -0.25 / (s * a.v));
}

// Scalar fallbacks so templated model code works on plain doubles too.
inline double compose(double, double f, double, double) { return f; }
inline double inverse(double a) { return 1.0 / a; }

using Jet4 = Jet<4>;

}  // namespace carnot
