#pragma once

// Pointwise curvature algebra in the coordinate frame. Sign convention:
// R(X,Y)Z = -(nabla^2_{X,Y} - nabla^2_{Y,X})Z, so sec(u,v) = R(u,v,u,v) for
// orthonormal u, v and the unit 2-sphere has sec = +1.
//
// Derivative data for g and J comes from the model: exact jets when the model
// has analytic derivatives, mesh-free central stencils of step h_x otherwise.

#include <cstring>
#include <functional>
#include <vector>

#include "carnot/chart.hpp"
#include "carnot/model.hpp"
#include "carnot/tensor.hpp"

namespace carnot {

enum : unsigned {
  kGeomMetric = 1u << 0,   // g, gi
  kGeomConn = 1u << 1,     // dg, Gamma
  kGeomCurv = 1u << 2,     // d2g, dGamma, riem (Besse, fully covariant)
  kGeomJ = 1u << 3,        // J
  kGeomR0 = 1u << 4,       // r0 (needs J)
  kGeomNablaJ = 1u << 5,   // dJ, nablaJ
  kGeomNabla2J = 1u << 6,  // d2J, nabla2J
  kGeomNablaR = 1u << 7,   // nablaR (finite differences of riem)
};

struct PointGeometry {
  int dim = 0;
  std::vector<double> g, gi;        // [i*d+j]
  std::vector<double> dg;           // [a][i*d+j]
  std::vector<double> d2g;          // [a][b][i*d+j]
  std::vector<double> Jm, dJ, d2J;  // same layouts as g, dg, d2g
  std::vector<double> Gamma;        // [k][i][j] = Gamma^k_ij
  std::vector<double> dGamma;       // [a][k][i][j]
  std::vector<double> riem, r0;     // [i][j][k][l], fully covariant
  std::vector<double> nablaJ;       // [i][k][j] = (nabla_i J)^k_j
  std::vector<double> nabla2J;      // [a][i][k][j] = (nabla^2_{a,i} J)^k_j
  std::vector<double> nablaR;       // [m][i][j][k][l]
};

namespace detail {

using EvalFn = std::function<void(const double*, double*)>;

// 4th-order mesh-free stencils for gradient and Hessian of an ncomp-valued
// map; the Hessian cross terms use one Richardson step on the 2x2 cross.
inline void fd_jets(const EvalFn& f, int dim, int ncomp, const double* P, double h,
                    double* val, double* grad, double* hess) {
  std::vector<double> buf(static_cast<std::size_t>(ncomp) * 4);
  std::vector<double> Q(dim);
  auto eval_at = [&](int axis_a, double da, int axis_b, double db, double* out) {
    for (int i = 0; i < dim; ++i) Q[i] = P[i];
    Q[axis_a] += da;
    if (axis_b >= 0) Q[axis_b] += db;
    f(Q.data(), out);
  };
  f(P, val);
  for (int a = 0; a < dim; ++a) {
    double* m2 = buf.data();
    double* m1 = buf.data() + ncomp;
    double* p1 = buf.data() + 2 * ncomp;
    double* p2 = buf.data() + 3 * ncomp;
    eval_at(a, -2 * h, -1, 0, m2);
    eval_at(a, -h, -1, 0, m1);
    eval_at(a, h, -1, 0, p1);
    eval_at(a, 2 * h, -1, 0, p2);
    for (int c = 0; c < ncomp; ++c) {
      grad[a * ncomp + c] = (m2[c] - 8.0 * m1[c] + 8.0 * p1[c] - p2[c]) / (12.0 * h);
      hess[(a * dim + a) * ncomp + c] =
          (-m2[c] + 16.0 * m1[c] - 30.0 * val[c] + 16.0 * p1[c] - p2[c]) / (12.0 * h * h);
    }
  }
  std::vector<double> q(static_cast<std::size_t>(ncomp) * 4);
  for (int a = 0; a < dim; ++a)
    for (int b = a + 1; b < dim; ++b) {
      auto cross = [&](double hh, int c) {
        return (q[0 * ncomp + c] - q[1 * ncomp + c] - q[2 * ncomp + c] + q[3 * ncomp + c]) /
               (4.0 * hh * hh);
      };
      for (int scale = 1; scale <= 2; ++scale) {
        const double hh = scale * h;
        eval_at(a, hh, b, hh, q.data());
        eval_at(a, hh, b, -hh, q.data() + ncomp);
        eval_at(a, -hh, b, hh, q.data() + 2 * ncomp);
        eval_at(a, -hh, b, -hh, q.data() + 3 * ncomp);
        for (int c = 0; c < ncomp; ++c) {
          double& H = hess[(a * dim + b) * ncomp + c];
          if (scale == 1)
            H = cross(hh, c);
          else
            H = (4.0 * H - cross(hh, c)) / 3.0;  // Richardson: O(h^2) -> O(h^4)
        }
      }
      for (int c = 0; c < ncomp; ++c)
        hess[(b * dim + a) * ncomp + c] = hess[(a * dim + b) * ncomp + c];
    }
}

inline void unpack_jets(const Jet4* jets, int dim, int ncomp, double* val, double* grad,
                        double* hess) {
  for (int c = 0; c < ncomp; ++c) {
    val[c] = jets[c].v;
    for (int a = 0; a < dim; ++a) {
      grad[a * ncomp + c] = jets[c].g[a];
      for (int b = 0; b < dim; ++b) hess[(a * dim + b) * ncomp + c] = jets[c].hess(a, b);
    }
  }
}

}  // namespace detail

/// Evaluates the requested geometric data at a point. Reusable: buffers are
/// resized once and overwritten on each call.
class GeometryEvaluator {
 public:
  explicit GeometryEvaluator(const MetricSource& src) : src_(src), d_(src.dim()) {}

  const MetricSource& source() const { return src_; }
  int dim() const { return d_; }

  void eval(const double* P, PointGeometry& out, unsigned what) const {
    const int d = d_;
    const int n2 = d * d, n3 = n2 * d, n4 = n3 * d;
    out.dim = d;
    const bool need_curv = what & (kGeomCurv | kGeomNabla2J | kGeomNablaR);
    const bool need_conn =
        need_curv || (what & (kGeomConn | kGeomNablaJ | kGeomNabla2J | kGeomNablaR));
    const bool need_d2J = what & kGeomNabla2J;
    const bool need_dJ = need_d2J || (what & kGeomNablaJ);
    const bool need_J = need_dJ || (what & (kGeomJ | kGeomR0));

    out.g.resize(n2);
    out.gi.resize(n2);
    if (need_conn) { out.dg.resize(n3); out.d2g.resize(n4); }
    if (need_J) out.Jm.resize(n2);
    if (need_dJ) { out.dJ.resize(n3); out.d2J.resize(n4); }

    const bool jets = src_.analytic() && d == 4;
    if (need_conn) {
      if (jets) {
        Jet4 gj[16];
        src_.metric_jet(P, gj);
        detail::unpack_jets(gj, d, n2, out.g.data(), out.dg.data(), out.d2g.data());
      } else {
        detail::fd_jets([this](const double* Q, double* o) { src_.metric(Q, o); }, d, n2, P,
                        src_.fd_step(), out.g.data(), out.dg.data(), out.d2g.data());
      }
    } else {
      src_.metric(P, out.g.data());
    }
    mat_inverse(out.g.data(), out.gi.data(), d);

    if (need_dJ) {
      if (jets) {
        Jet4 Jj[16];
        src_.cstruct_jet(P, Jj);
        detail::unpack_jets(Jj, d, n2, out.Jm.data(), out.dJ.data(), out.d2J.data());
      } else {
        detail::fd_jets([this](const double* Q, double* o) { src_.cstruct(Q, o); }, d, n2, P,
                        src_.fd_step(), out.Jm.data(), out.dJ.data(), out.d2J.data());
      }
    } else if (need_J) {
      src_.cstruct(P, out.Jm.data());
    }

    if (need_conn) christoffel_point(out);
    if (need_curv) riemann_point(out);
    if (what & kGeomR0) r0_point(out);
    if (need_dJ) nabla_j_point(out);
    if (need_d2J) nabla2_j_point(out);
    if (what & kGeomNablaR) nabla_r_point(P, out);
  }

  // || T ||_g at an already evaluated point.
  double norm_g(const PointGeometry& pg, const double* T, int rank,
                const std::int8_t* variance) const {
    return g_norm_point(T, rank, pg.dim, variance, pg.g.data(), pg.gi.data());
  }

 private:
  // The exponentially large metric blocks make the curvature assembly cancel
  // heavily at large r; extended precision in the intermediates keeps the
  // stored double components clean.
  void christoffel_point(PointGeometry& o) const {
    const int d = d_;
    o.Gamma.resize(static_cast<std::size_t>(d) * d * d);
    o.dGamma.resize(static_cast<std::size_t>(d) * d * d * d);
    auto dgv = [&](int a, int i, int j) -> long double { return o.dg[(a * d + i) * d + j]; };
    auto d2gv = [&](int a, int b, int i, int j) -> long double {
      return o.d2g[((a * d + b) * d + i) * d + j];
    };
    work_.resize(3 * static_cast<std::size_t>(d) * d * d + static_cast<std::size_t>(d) * d * d * d);
    long double* low = work_.data();
    long double* dgi = low + d * d * d;
    long double* G = dgi + d * d * d;
    long double* dG = G + d * d * d;
    // Gamma^k_ij = g^{kl}(d_i g_jl + d_j g_il - d_l g_ij)/2
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l)
          low[(l * d + i) * d + j] = 0.5L * (dgv(i, j, l) + dgv(j, i, l) - dgv(l, i, j));
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          long double s = 0.0L;
          for (int l = 0; l < d; ++l) s += (long double)o.gi[k * d + l] * low[(l * d + i) * d + j];
          G[(k * d + i) * d + j] = s;
          o.Gamma[(k * d + i) * d + j] = static_cast<double>(s);
        }
    // d_a g^{kl} = -g^{km} d_a g_mn g^{nl}
    for (int a = 0; a < d; ++a)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          long double s = 0.0L;
          for (int m = 0; m < d; ++m)
            for (int n = 0; n < d; ++n)
              s -= (long double)o.gi[k * d + m] * dgv(a, m, n) * (long double)o.gi[n * d + l];
          dgi[(a * d + k) * d + l] = s;
        }
    for (int a = 0; a < d; ++a)
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            long double s = 0.0L;
            for (int l = 0; l < d; ++l) {
              s += dgi[(a * d + k) * d + l] * low[(l * d + i) * d + j];
              s += 0.5L * (long double)o.gi[k * d + l] *
                   (d2gv(a, i, j, l) + d2gv(a, j, i, l) - d2gv(a, l, i, j));
            }
            dG[((a * d + k) * d + i) * d + j] = s;
            o.dGamma[((a * d + k) * d + i) * d + j] = static_cast<double>(s);
          }
  }

  void riemann_point(PointGeometry& o) const {
    const int d = d_;
    o.riem.assign(static_cast<std::size_t>(d) * d * d * d, 0.0);
    const long double* G = work_.data() + 2 * static_cast<std::size_t>(d) * d * d;
    const long double* dG = G + d * d * d;
    auto Gv = [&](int k, int i, int j) { return G[(k * d + i) * d + j]; };
    auto dGv = [&](int a, int k, int i, int j) { return dG[((a * d + k) * d + i) * d + j]; };
    // standard curvature R^l_kij = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          for (int t = 0; t < d; ++t) {
            long double acc = 0.0L;
            for (int l = 0; l < d; ++l) {
              long double s = dGv(i, l, j, k) - dGv(j, l, i, k);
              for (int m = 0; m < d; ++m)
                s += Gv(l, i, m) * Gv(m, j, k) - Gv(l, j, m) * Gv(m, i, k);
              acc += (long double)o.g[t * d + l] * s;
            }
            // Besse sign, lowered: R(i,j,k,.) = -g(R_std(i,j)k, .)
            const double v = static_cast<double>(-acc);
            o.riem[((i * d + j) * d + k) * d + t] = v;
            o.riem[((j * d + i) * d + k) * d + t] = -v;
          }
        }
  }

  void r0_point(PointGeometry& o) const {
    const int d = d_;
    o.r0.resize(static_cast<std::size_t>(d) * d * d * d);
    // K_ij = g(J e_i, e_j)
    std::array<long double, kMaxDim * kMaxDim> K;
    std::array<long double, kMaxDim * kMaxDim> gl;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        gl[i * d + j] = o.g[i * d + j];
        long double s = 0.0L;
        for (int m = 0; m < d; ++m) s += (long double)o.Jm[m * d + i] * (long double)o.g[m * d + j];
        K[i * d + j] = s;
      }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l)
            o.r0[((i * d + j) * d + k) * d + l] = static_cast<double>(
                0.25L * (gl[j * d + k] * gl[i * d + l] - gl[i * d + k] * gl[j * d + l] +
                         K[j * d + k] * K[i * d + l] - K[i * d + k] * K[j * d + l] +
                         2.0L * K[j * d + i] * K[k * d + l]));
  }

  void nabla_j_point(PointGeometry& o) const {
    const int d = d_;
    o.nablaJ.assign(static_cast<std::size_t>(d) * d * d, 0.0);
    auto G = [&](int k, int i, int j) { return o.Gamma[(k * d + i) * d + j]; };
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j) {
          double s = o.dJ[(i * d + k) * d + j];
          for (int m = 0; m < d; ++m)
            s += G(k, i, m) * o.Jm[m * d + j] - G(m, i, j) * o.Jm[k * d + m];
          o.nablaJ[(i * d + k) * d + j] = s;
        }
  }

  void nabla2_j_point(PointGeometry& o) const {
    const int d = d_;
    o.nabla2J.assign(static_cast<std::size_t>(d) * d * d * d, 0.0);
    auto G = [&](int k, int i, int j) { return o.Gamma[(k * d + i) * d + j]; };
    auto dG = [&](int a, int k, int i, int j) { return o.dGamma[((a * d + k) * d + i) * d + j]; };
    auto T = [&](int i, int k, int j) { return o.nablaJ[(i * d + k) * d + j]; };
    for (int a = 0; a < d; ++a)
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k)
          for (int j = 0; j < d; ++j) {
            // d_a T^k_ij with T = nabla J
            double s = o.d2J[((a * d + i) * d + k) * d + j];
            for (int m = 0; m < d; ++m) {
              s += dG(a, k, i, m) * o.Jm[m * d + j] + G(k, i, m) * o.dJ[(a * d + m) * d + j];
              s -= dG(a, m, i, j) * o.Jm[k * d + m] + G(m, i, j) * o.dJ[(a * d + k) * d + m];
            }
            // covariant correction slots of nabla T
            for (int m = 0; m < d; ++m) {
              s += G(k, a, m) * T(i, m, j);
              s -= G(m, a, i) * T(m, k, j);
              s -= G(m, a, j) * T(i, k, m);
            }
            o.nabla2J[((a * d + i) * d + k) * d + j] = s;
          }
  }

  void nabla_r_point(const double* P, PointGeometry& o) const {
    const int d = d_;
    const std::size_t n4 = static_cast<std::size_t>(d) * d * d * d;
    o.nablaR.assign(static_cast<std::size_t>(d) * n4, 0.0);
    const double h = src_.fd_step();
    PointGeometry tmp;
    std::vector<double> Q(d), dR(static_cast<std::size_t>(d) * n4);
    for (int a = 0; a < d; ++a) {
      static const double w[4] = {1.0, -8.0, 8.0, -1.0};
      static const double off[4] = {-2.0, -1.0, 1.0, 2.0};
      std::vector<double> acc(n4, 0.0);
      for (int s = 0; s < 4; ++s) {
        for (int i = 0; i < d; ++i) Q[i] = P[i];
        Q[a] += off[s] * h;
        eval(Q.data(), tmp, kGeomCurv);
        for (std::size_t c = 0; c < n4; ++c) acc[c] += w[s] * tmp.riem[c];
      }
      for (std::size_t c = 0; c < n4; ++c) dR[a * n4 + c] = acc[c] / (12.0 * h);
    }
    auto G = [&](int k, int i, int j) { return o.Gamma[(k * d + i) * d + j]; };
    auto R = [&](int i, int j, int k, int l) { return o.riem[((i * d + j) * d + k) * d + l]; };
    for (int m = 0; m < d; ++m)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
              double s = dR[m * n4 + ((static_cast<std::size_t>(i) * d + j) * d + k) * d + l];
              for (int p = 0; p < d; ++p) {
                s -= G(p, m, i) * R(p, j, k, l);
                s -= G(p, m, j) * R(i, p, k, l);
                s -= G(p, m, k) * R(i, j, p, l);
                s -= G(p, m, l) * R(i, j, k, p);
              }
              o.nablaR[(((static_cast<std::size_t>(m) * d + i) * d + j) * d + k) * d + l] = s;
            }
  }

  const MetricSource& src_;
  int d_;
  mutable std::vector<long double> work_;  // connection intermediates (extended precision)
};

// ---------------------------------------------------------------------------
// Grid-sampled curvature fields (thin wrappers over the pointwise evaluator).

inline TensorField christoffel(const MetricSource& src, const Grid& grid) {
  GeometryEvaluator ev(src);
  const int d = src.dim();
  TensorField out(grid, d, {kCon, kCov, kCov});
  PointGeometry pg;
  std::vector<double> P(grid.naxes());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.point(p, P.data());
    ev.eval(P.data(), pg, kGeomConn);
    std::memcpy(out.at(p), pg.Gamma.data(), sizeof(double) * pg.Gamma.size());
  }
  return out;
}

inline TensorField riemann(const MetricSource& src, const Grid& grid) {
  GeometryEvaluator ev(src);
  const int d = src.dim();
  TensorField out(grid, d, {kCov, kCov, kCov, kCov}, Sym::riemann_type);
  PointGeometry pg;
  std::vector<double> P(grid.naxes());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.point(p, P.data());
    ev.eval(P.data(), pg, kGeomCurv);
    std::memcpy(out.at(p), pg.riem.data(), sizeof(double) * pg.riem.size());
  }
  return out;
}

inline TensorField r0_tensor(const MetricSource& src, const Grid& grid) {
  GeometryEvaluator ev(src);
  const int d = src.dim();
  TensorField out(grid, d, {kCov, kCov, kCov, kCov}, Sym::riemann_type);
  PointGeometry pg;
  std::vector<double> P(grid.naxes());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.point(p, P.data());
    ev.eval(P.data(), pg, kGeomMetric | kGeomJ | kGeomR0);
    std::memcpy(out.at(p), pg.r0.data(), sizeof(double) * pg.r0.size());
  }
  return out;
}

inline TensorField covariant_deriv_J(const MetricSource& src, const Grid& grid, int order) {
  if (order != 1 && order != 2)
    throw std::invalid_argument("covariant_deriv_J: order must be 1 or 2");
  GeometryEvaluator ev(src);
  const int d = src.dim();
  TensorField out = (order == 1) ? TensorField(grid, d, {kCov, kCon, kCov})
                                 : TensorField(grid, d, {kCov, kCov, kCon, kCov});
  PointGeometry pg;
  std::vector<double> P(grid.naxes());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.point(p, P.data());
    ev.eval(P.data(), pg, order == 1 ? kGeomNablaJ : kGeomNabla2J);
    const auto& srcv = (order == 1) ? pg.nablaJ : pg.nabla2J;
    std::memcpy(out.at(p), srcv.data(), sizeof(double) * srcv.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Deficit series: per-r-slice maxima of the (ALCH)/(AK)/(ALCH+)/(AK+) norms.

struct DeficitSeries {
  std::vector<double> r;
  std::vector<double> alch;       // ||R - R0||_g
  std::vector<double> ak;         // ||nabla J||_g
  std::vector<double> alch_plus;  // ||nabla R||_g (empty unless requested)
  std::vector<double> ak_plus;    // ||nabla^2 J||_g (empty unless requested)
  std::vector<double> sec_min, sec_max;  // radial sectional curvature range
};

struct DeficitOptions {
  int r_samples = 0;        // 0: use chart grid count along r
  bool with_alch_plus = false;
  bool with_ak_plus = false;
};

inline DeficitSeries deficits(const MetricSource& src, const Chart& chart,
                              const DeficitOptions& opt = {}) {
  const int d = src.dim();
  GeometryEvaluator ev(src);
  Grid base = chart.base_grid();
  const int nr = opt.r_samples > 0 ? opt.r_samples : chart.grid_counts[0];
  GridAxis raxis{chart.r_min, chart.r_max, nr};

  DeficitSeries out;
  out.r.resize(nr);
  out.alch.assign(nr, 0.0);
  out.ak.assign(nr, 0.0);
  if (opt.with_alch_plus) out.alch_plus.assign(nr, 0.0);
  if (opt.with_ak_plus) out.ak_plus.assign(nr, 0.0);
  out.sec_min.assign(nr, 1e300);
  out.sec_max.assign(nr, -1e300);

  unsigned what = kGeomCurv | kGeomR0 | kGeomNablaJ;
  if (opt.with_ak_plus) what |= kGeomNabla2J;
  if (opt.with_alch_plus) what |= kGeomNablaR;

  static const std::int8_t var4[5] = {kCov, kCov, kCov, kCov, kCov};
  static const std::int8_t var21[3] = {kCov, kCon, kCov};
  static const std::int8_t var31[4] = {kCov, kCov, kCon, kCov};

  PointGeometry pg;
  std::vector<double> P(d), diff(static_cast<std::size_t>(d) * d * d * d);
  std::vector<double> onb(static_cast<std::size_t>(d) * d);
  for (int ir = 0; ir < nr; ++ir) {
    out.r[ir] = raxis.coord(ir);
    P[0] = out.r[ir];
    for (std::size_t bp = 0; bp < base.size(); ++bp) {
      base.point(bp, P.data() + 1);
      ev.eval(P.data(), pg, what);
      for (std::size_t c = 0; c < pg.riem.size(); ++c) diff[c] = pg.riem[c] - pg.r0[c];
      out.alch[ir] = std::max(out.alch[ir], ev.norm_g(pg, diff.data(), 4, var4));
      out.ak[ir] = std::max(out.ak[ir], ev.norm_g(pg, pg.nablaJ.data(), 3, var21));
      if (opt.with_alch_plus)
        out.alch_plus[ir] = std::max(out.alch_plus[ir], ev.norm_g(pg, pg.nablaR.data(), 5, var4));
      if (opt.with_ak_plus)
        out.ak_plus[ir] = std::max(out.ak_plus[ir], ev.norm_g(pg, pg.nabla2J.data(), 4, var31));
      // radial sectional curvatures against a g-orthonormalized tangential frame
      for (int j = 1; j < d; ++j) {
        for (int m = 0; m < d; ++m) onb[j * d + m] = (m == j) ? 1.0 : 0.0;
        for (int k = 1; k < j; ++k) {
          double ip = 0.0;
          for (int mi = 0; mi < d; ++mi)
            for (int mj = 0; mj < d; ++mj)
              ip += pg.g[mi * d + mj] * onb[j * d + mi] * onb[k * d + mj];
          for (int m = 0; m < d; ++m) onb[j * d + m] -= ip * onb[k * d + m];
        }
        double nrm = 0.0;
        for (int mi = 0; mi < d; ++mi)
          for (int mj = 0; mj < d; ++mj)
            nrm += pg.g[mi * d + mj] * onb[j * d + mi] * onb[j * d + mj];
        nrm = std::sqrt(nrm);
        for (int m = 0; m < d; ++m) onb[j * d + m] /= nrm;
        double sec = 0.0;
        for (int mi = 0; mi < d; ++mi)
          for (int mj = 0; mj < d; ++mj)
            sec += pg.riem[((0 * d + mi) * d + 0) * d + mj] * onb[j * d + mi] * onb[j * d + mj];
        out.sec_min[ir] = std::min(out.sec_min[ir], sec);
        out.sec_max[ir] = std::max(out.sec_max[ir], sec);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model oracle: for exact kinds both ||R - R0||_g and ||nabla J||_g must
// vanish; the maxima over the chart grid are the acceptance measure.

struct OracleReport {
  double max_r_minus_r0 = 0.0;
  double max_nabla_j = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline OracleReport model_oracle(const ModelSpec& spec, const Chart& chart,
                                 double tolerance = 0.0) {
  spec.validate();
  if (!spec.exact_kind())
    throw std::invalid_argument("model_oracle: oracle only for exact kinds");
  if (tolerance <= 0.0) tolerance = spec.analytic_derivatives ? 1e-9 : 1e-5;
  Model model(spec, chart.h_x);
  DeficitOptions opt;
  DeficitSeries ds = deficits(model, chart, opt);
  OracleReport rep;
  rep.tolerance = tolerance;
  for (std::size_t i = 0; i < ds.r.size(); ++i) {
    rep.max_r_minus_r0 = std::max(rep.max_r_minus_r0, ds.alch[i]);
    rep.max_nabla_j = std::max(rep.max_nabla_j, ds.ak[i]);
  }
  rep.pass = rep.max_r_minus_r0 < tolerance && rep.max_nabla_j < tolerance;
  return rep;
}

}  // namespace carnot
