#pragma once

// Tensor fields sampled on a chart grid, the metric algebra used by every
// estimate (full contractions against g and its inverse), and grid finite
// differencing with 4th-order central stencils.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "carnot/chart.hpp"
#include "carnot/linalg.hpp"

namespace carnot {

enum class Sym : std::uint8_t { none, symmetric_pairs, riemann_type };

constexpr std::int8_t kCov = -1;  // covariant (lower) slot
constexpr std::int8_t kCon = +1;  // contravariant (upper) slot

struct TensorField {
  Grid grid;
  int dim = 0;                       // tangent dimension of each index slot
  std::vector<std::int8_t> variance; // per slot, kCov or kCon
  Sym sym = Sym::none;
  std::vector<double> data;          // [point][component], ncomp = dim^rank
  std::vector<std::uint8_t> flags;   // per point; nonzero = low accuracy

  TensorField() = default;
  TensorField(Grid g, int d, std::vector<std::int8_t> var, Sym s = Sym::none)
      : grid(std::move(g)), dim(d), variance(std::move(var)), sym(s) {
    data.assign(grid.size() * ncomp(), 0.0);
    flags.assign(grid.size(), 0);
  }

  int rank() const { return static_cast<int>(variance.size()); }
  std::size_t ncomp() const {
    std::size_t c = 1;
    for (int k = 0; k < rank(); ++k) c *= dim;
    return c;
  }
  std::size_t npoints() const { return grid.size(); }

  double* at(std::size_t pt) { return data.data() + pt * ncomp(); }
  const double* at(std::size_t pt) const { return data.data() + pt * ncomp(); }

  // component offset of an index tuple (row-major over slots)
  std::size_t comp(std::initializer_list<int> idx) const {
    std::size_t c = 0;
    for (int i : idx) c = c * dim + i;
    return c;
  }
  double& operator()(std::size_t pt, std::initializer_list<int> idx) {
    return at(pt)[comp(idx)];
  }
  double operator()(std::size_t pt, std::initializer_list<int> idx) const {
    return at(pt)[comp(idx)];
  }
};

namespace detail {

// out[..., i, ...] = sum_j M[i*dim+j] * T[..., j, ...] on the given slot.
inline void contract_slot(const double* T, double* out, int rank, int dim,
                          int slot, const double* M) {
  std::size_t inner = 1;
  for (int k = slot + 1; k < rank; ++k) inner *= dim;
  std::size_t outer = 1;
  for (int k = 0; k < slot; ++k) outer *= dim;
  for (std::size_t o = 0; o < outer; ++o)
    for (int i = 0; i < dim; ++i)
      for (std::size_t in = 0; in < inner; ++in) {
        double s = 0.0;
        for (int j = 0; j < dim; ++j)
          s += M[i * dim + j] * T[(o * dim + j) * inner + in];
        out[(o * dim + i) * inner + in] = s;
      }
}

// Raise covariant slots with gi and lower contravariant slots with g, so the
// result pairs with the original components in a plain dot product.
inline void metric_dual(const double* T, double* out, int rank, int dim,
                        const std::int8_t* variance, const double* g,
                        const double* gi, double* scratch) {
  std::size_t n = 1;
  for (int k = 0; k < rank; ++k) n *= dim;
  for (std::size_t c = 0; c < n; ++c) out[c] = T[c];
  for (int s = 0; s < rank; ++s) {
    const double* M = (variance[s] == kCov) ? gi : g;
    for (std::size_t c = 0; c < n; ++c) scratch[c] = out[c];
    contract_slot(scratch, out, rank, dim, s, M);
  }
}

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// Pointwise full contraction of two equal-valence tensors against g / g^{-1}.
inline double metric_inner_point(const double* T1, const double* T2, int rank,
                                 int dim, const std::int8_t* variance,
                                 const double* g, const double* gi) {
  if (rank == 0) return T1[0] * T2[0];
  std::size_t n = 1;
  for (int k = 0; k < rank; ++k) n *= dim;
  std::vector<double> dual(n), scratch(n);
  detail::metric_dual(T1, dual.data(), rank, dim, variance, g, gi, scratch.data());
  return detail::dot(dual.data(), T2, n);
}

inline double g_norm_point(const double* T, int rank, int dim,
                           const std::int8_t* variance, const double* g,
                           const double* gi) {
  const double q = metric_inner_point(T, T, rank, dim, variance, g, gi);
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

/// Riemannian metric on a chart grid: symmetric, positive definite, with the
/// inverse cached per point. gauss_form marks g = dr (x) dr + g_r exactly.
struct Metric {
  TensorField g;     // valence (2 covariant)
  TensorField ginv;  // valence (2 contravariant)
  bool gauss_form = false;

  int dim() const { return g.dim; }

  static Metric build(TensorField field, bool expect_gauss_form = false) {
    if (field.rank() != 2 || field.variance[0] != kCov || field.variance[1] != kCov)
      throw std::invalid_argument("Metric: field must be twice covariant");
    const int d = field.dim;
    Metric m;
    m.ginv = TensorField(field.grid, d, {kCon, kCon});
    for (std::size_t p = 0; p < field.npoints(); ++p) {
      const double* gp = field.at(p);
      double scale = 0.0;
      for (int c = 0; c < d * d; ++c) scale = std::max(scale, std::abs(gp[c]));
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
          if (std::abs(gp[i * d + j] - gp[j * d + i]) > 1e-12 * std::max(scale, 1.0))
            throw std::runtime_error("Metric: components not symmetric");
      if (!cholesky_pd(gp, d))
        throw std::runtime_error("Metric: not positive definite at a grid point");
      if (expect_gauss_form) {
        if (gp[0] != 1.0)
          throw std::runtime_error("Metric: gauss form requires g(dr,dr) = 1");
        for (int j = 1; j < d; ++j)
          if (gp[j] != 0.0 || gp[j * d] != 0.0)
            throw std::runtime_error("Metric: gauss form requires g(dr,dx) = 0");
      }
      mat_inverse(gp, m.ginv.at(p), d);
    }
    field.sym = Sym::symmetric_pairs;
    m.g = std::move(field);
    m.gauss_form = expect_gauss_form;
    return m;
  }
};

/// Pointwise full contraction <T1,T2>_g over the whole grid.
inline TensorField metric_inner(const Metric& m, const TensorField& t1,
                                const TensorField& t2) {
  if (t1.variance != t2.variance) throw std::invalid_argument("metric_inner: valence mismatch");
  if (!t1.grid.same_as(t2.grid) || !t1.grid.same_as(m.g.grid))
    throw std::invalid_argument("metric_inner: chart mismatch");
  if (t1.dim != t2.dim || t1.dim != m.dim())
    throw std::invalid_argument("metric_inner: dimension mismatch");
  TensorField out(t1.grid, t1.dim, {});
  const std::size_t n = t1.ncomp();
  std::vector<double> dual(n), scratch(n);
  for (std::size_t p = 0; p < t1.npoints(); ++p) {
    if (t1.rank() == 0) {
      out.at(p)[0] = t1.at(p)[0] * t2.at(p)[0];
      continue;
    }
    detail::metric_dual(t1.at(p), dual.data(), t1.rank(), t1.dim,
                        t1.variance.data(), m.g.at(p), m.ginv.at(p), scratch.data());
    out.at(p)[0] = detail::dot(dual.data(), t2.at(p), n);
  }
  return out;
}

/// Pointwise ||T||_g over the whole grid.
inline TensorField g_norm(const Metric& m, const TensorField& t) {
  TensorField q = metric_inner(m, t, t);
  for (std::size_t p = 0; p < q.npoints(); ++p)
    q.at(p)[0] = q.at(p)[0] > 0.0 ? std::sqrt(q.at(p)[0]) : 0.0;
  return q;
}

// 4th-order central stencils; near edges fall back to 2nd-order one-sided
// stencils and flag the point as low accuracy.
inline TensorField partial_fd(const TensorField& t, int axis, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("partial_fd: order must be 1 or 2");
  if (axis < 0 || axis >= t.grid.naxes()) throw std::invalid_argument("partial_fd: bad axis");
  const int n = t.grid.axes[axis].count;
  if (n < 5) throw std::invalid_argument("partial_fd: grid too small for stencil");
  const double h = t.grid.axes[axis].step();

  TensorField out(t.grid, t.dim, t.variance);
  out.flags = t.flags;

  std::size_t stride = 1;
  for (int k = axis + 1; k < t.grid.naxes(); ++k)
    stride *= static_cast<std::size_t>(t.grid.axes[k].count);
  const std::size_t nc = t.ncomp();
  const std::size_t total = t.npoints();

  for (std::size_t p = 0; p < total; ++p) {
    const int i = static_cast<int>((p / stride) % n);
    const double* f0 = t.at(p);
    double* o = out.at(p);
    auto f = [&](int off) { return t.at(p + static_cast<std::ptrdiff_t>(off) * stride); };
    if (i >= 2 && i <= n - 3) {
      const double *m2 = f(-2), *m1 = f(-1), *p1 = f(1), *p2 = f(2);
      if (order == 1) {
        for (std::size_t c = 0; c < nc; ++c)
          o[c] = (m2[c] - 8.0 * m1[c] + 8.0 * p1[c] - p2[c]) / (12.0 * h);
      } else {
        for (std::size_t c = 0; c < nc; ++c)
          o[c] = (-m2[c] + 16.0 * m1[c] - 30.0 * f0[c] + 16.0 * p1[c] - p2[c]) / (12.0 * h * h);
      }
    } else {
      const int s = (i < 2) ? 1 : -1;  // one-sided direction
      const double *f1 = f(s), *f2 = f(2 * s), *f3 = f(3 * s);
      if (order == 1) {
        for (std::size_t c = 0; c < nc; ++c)
          o[c] = s * (-3.0 * f0[c] + 4.0 * f1[c] - f2[c]) / (2.0 * h);
      } else {
        for (std::size_t c = 0; c < nc; ++c)
          o[c] = (2.0 * f0[c] - 5.0 * f1[c] + 4.0 * f2[c] - f3[c]) / (h * h);
      }
      out.flags[p] |= 1;
    }
  }
  return out;
}

}  // namespace carnot
