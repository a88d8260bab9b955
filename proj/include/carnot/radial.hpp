#pragma once

// Radial ODE integration along the coordinate lines r -> (r, x): parallel
// transport of frames with a classical 4th-order stepper, shape operator
// extraction, and the Riccati / Jacobi consistency residuals.
//
// Transported tangential vectors keep a vanishing dr-component in Gauss form,
// so frames are stored as (2n+1)-column matrices of boundary components.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "carnot/curvature.hpp"
#include "carnot/model.hpp"

namespace carnot {

struct RadialOptions {
  double h_r = 1e-2;             // stepper step
  double drift_tol = 1e-8;       // allowed orthonormality drift per unit r
  double sample_dr = 0.1;        // spacing of recorded samples
};

/// State of one radial line at radius r: the transported orthonormal frame
/// and named scalar channels recorded by higher modules.
struct RadialState {
  std::vector<double> base_point;     // boundary coordinates
  double r = 0.0;
  int dim = 0;
  // frame vectors as columns: column 0 is dr (exactly), columns 1..2n+1 are
  // the transported E_j with vanishing r-component.
  std::vector<double> frame;
  std::vector<std::pair<std::string, double>> extras;
};

namespace detail {

// Mixed radial connection block: S^i_j = Gamma^i_{j r} on tangential indices,
// equal to (g_r^{-1} d_r g_r)/2 in Gauss form. Requires an exact Gauss-form
// metric (checked).
inline void radial_shape_block(const MetricSource& src, const double* P, double* S,
                               double* g_full = nullptr) {
  const int d = src.dim();
  const int db = d - 1;
  std::array<double, kMaxDim * kMaxDim> g, drg;
  if (src.analytic() && d == 4) {
    Jet4 gj[16];
    src.metric_jet(P, gj);
    for (int c = 0; c < d * d; ++c) { g[c] = gj[c].v; drg[c] = gj[c].g[0]; }
  } else {
    const double h = src.fd_step();
    std::array<double, kMaxDim * kMaxDim> m2, m1, p1, p2;
    std::vector<double> Q(P, P + d);
    src.metric(P, g.data());
    Q[0] = P[0] - 2 * h; src.metric(Q.data(), m2.data());
    Q[0] = P[0] - h;     src.metric(Q.data(), m1.data());
    Q[0] = P[0] + h;     src.metric(Q.data(), p1.data());
    Q[0] = P[0] + 2 * h; src.metric(Q.data(), p2.data());
    for (int c = 0; c < d * d; ++c)
      drg[c] = (m2[c] - 8.0 * m1[c] + 8.0 * p1[c] - p2[c]) / (12.0 * h);
  }
  if (g[0] != 1.0) throw std::runtime_error("radial: metric not in Gauss form (g_rr != 1)");
  for (int j = 1; j < d; ++j)
    if (g[j] != 0.0) throw std::runtime_error("radial: metric not in Gauss form (g_r,x != 0)");
  if (g_full)
    for (int c = 0; c < d * d; ++c) g_full[c] = g[c];
  // tangential blocks
  std::array<double, kMaxDim * kMaxDim> gt, gti;
  for (int i = 0; i < db; ++i)
    for (int j = 0; j < db; ++j) gt[i * db + j] = g[(i + 1) * d + (j + 1)];
  mat_inverse(gt.data(), gti.data(), db);
  for (int i = 0; i < db; ++i)
    for (int j = 0; j < db; ++j) {
      long double s = 0.0L;
      for (int m = 0; m < db; ++m)
        s += (long double)gti[i * db + m] * (long double)drg[(m + 1) * d + (j + 1)];
      S[i * db + j] = static_cast<double>(0.5L * s);
    }
}

}  // namespace detail

/// Parallel transport d V^i / dr = -S^i_j V^j of ncols tangential vectors
/// (columns of V, size (d-1) x ncols) from r0 to r1 with RK4 steps of width
/// ~h_r. The callback, when given, is invoked at every accepted step.
inline void transport_columns(const MetricSource& src, const std::vector<double>& base,
                              double r0, double r1, double h_r, double* V, int ncols) {
  const int db = src.dim() - 1;
  const int n = db * ncols;
  if (r1 == r0) return;
  const int nsteps = std::max(1, static_cast<int>(std::lround(std::abs(r1 - r0) / h_r)));
  const double h = (r1 - r0) / nsteps;
  std::vector<double> P(src.dim());
  for (int k = 0; k < db; ++k) P[k + 1] = base[k];
  std::vector<double> S0(db * db), Sh(db * db), S1(db * db);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  auto mul = [&](const std::vector<double>& S, const double* W, std::vector<double>& out) {
    for (int i = 0; i < db; ++i)
      for (int c = 0; c < ncols; ++c) {
        double s = 0.0;
        for (int j = 0; j < db; ++j) s += S[i * db + j] * W[j * ncols + c];
        out[i * ncols + c] = -s;
      }
  };
  double r = r0;
  P[0] = r;
  detail::radial_shape_block(src, P.data(), S0.data());
  for (int step = 0; step < nsteps; ++step) {
    P[0] = r + 0.5 * h;
    detail::radial_shape_block(src, P.data(), Sh.data());
    P[0] = r + h;
    detail::radial_shape_block(src, P.data(), S1.data());
    mul(S0, V, k1);
    for (int i = 0; i < n; ++i) tmp[i] = V[i] + 0.5 * h * k1[i];
    mul(Sh, tmp.data(), k2);
    for (int i = 0; i < n; ++i) tmp[i] = V[i] + 0.5 * h * k2[i];
    mul(Sh, tmp.data(), k3);
    for (int i = 0; i < n; ++i) tmp[i] = V[i] + h * k3[i];
    mul(S1, tmp.data(), k4);
    for (int i = 0; i < n; ++i)
      V[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    r += h;
    S0.swap(S1);
  }
}

/// Parallel transport of a RadialState to r_target; orthonormality drift
/// beyond drift_tol * |r_target - r| is an error, never silently repaired.
inline RadialState transport_parallel(const MetricSource& src, const Chart& chart,
                                      const RadialState& state, double r_target,
                                      const RadialOptions& opt = {}) {
  if (r_target < chart.r_min - 1e-12 || r_target > chart.r_max + 1e-12)
    throw std::invalid_argument("transport_parallel: r_target outside chart");
  const int d = src.dim();
  const int db = d - 1;
  RadialState out = state;
  out.r = r_target;
  // extract tangential columns 1..db
  std::vector<double> V(static_cast<std::size_t>(db) * db);
  for (int i = 0; i < db; ++i)
    for (int c = 0; c < db; ++c) V[i * db + c] = state.frame[(i + 1) * d + (c + 1)];
  transport_columns(src, state.base_point, state.r, r_target, opt.h_r, V.data(), db);
  for (int i = 0; i < d; ++i)
    for (int c = 0; c < d; ++c)
      out.frame[i * d + c] = (i == 0 || c == 0) ? (i == c ? 1.0 : 0.0) : V[(i - 1) * db + (c - 1)];
  // drift check against g at the target point
  std::vector<double> P(d);
  P[0] = r_target;
  for (int k = 0; k < db; ++k) P[k + 1] = state.base_point[k];
  std::vector<double> g(static_cast<std::size_t>(d) * d);
  src.metric(P.data(), g.data());
  double drift = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      double ip = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          ip += g[i * d + j] * out.frame[i * d + a] * out.frame[j * d + b];
      drift = std::max(drift, std::abs(ip - (a == b ? 1.0 : 0.0)));
    }
  const double budget = opt.drift_tol * std::max(1.0, std::abs(r_target - state.r));
  if (drift > budget)
    throw std::runtime_error("transport_parallel: orthonormality drift " +
                             std::to_string(drift) + " exceeds tolerance");
  return out;
}

// ---------------------------------------------------------------------------
// Shape operator field and its eigenvalues.

struct ShapeField {
  Grid grid;              // full (r, x) grid
  int dim_boundary = 0;
  std::vector<double> S;  // per point, (2n+1)^2 tangential components
  std::vector<double> eigenvalues;  // per point, ascending

  const double* at(std::size_t p) const { return S.data() + p * dim_boundary * dim_boundary; }
};

inline ShapeField shape_operator(const MetricSource& src, const Grid& grid) {
  const int db = src.dim() - 1;
  ShapeField out;
  out.grid = grid;
  out.dim_boundary = db;
  out.S.assign(grid.size() * db * db, 0.0);
  out.eigenvalues.assign(grid.size() * db, 0.0);
  std::vector<double> P(grid.naxes()), g(static_cast<std::size_t>(src.dim()) * src.dim());
  std::vector<double> gs(static_cast<std::size_t>(db) * db);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.point(p, P.data());
    double* S = out.S.data() + p * db * db;
    detail::radial_shape_block(src, P.data(), S, g.data());
    // eigenvalues of the g_r-self-adjoint operator via the symmetric form
    // g_r S (solve as generalized problem through Cholesky of g_r)
    Eigen::MatrixXd gt(db, db), m(db, db);
    for (int i = 0; i < db; ++i)
      for (int j = 0; j < db; ++j) {
        gt(i, j) = g[(i + 1) * src.dim() + (j + 1)];
        m(i, j) = S[i * db + j];
      }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (gt * m + m.transpose() * gt), gt);
    for (int i = 0; i < db; ++i) out.eigenvalues[p * db + i] = es.eigenvalues()(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Riccati residual: d_r S + S^2 + R(dr, .)dr per r-slice (max g-norm over the
// base grid). d_r S uses a 4th-order stencil of width h_r, so the residual
// scale tracks the stepper's accuracy order.

struct ResidualSeries {
  std::vector<double> r;
  std::vector<double> value;  // per-slice max norm
  bool pass = false;
  double tolerance = 0.0;
};

inline ResidualSeries riccati_residual(const MetricSource& src, const Chart& chart,
                                       double h_r = 1e-2, int r_samples = 0,
                                       double tol_scale = 1e-2) {
  const int d = src.dim();
  const int db = d - 1;
  GeometryEvaluator ev(src);
  Grid base = chart.base_grid();
  const int nr = r_samples > 0 ? r_samples : chart.grid_counts[0];
  // keep the FD stencil of S inside the chart
  GridAxis raxis{chart.r_min + 2 * h_r, chart.r_max - 2 * h_r, nr};

  ResidualSeries out;
  out.r.resize(nr);
  out.value.assign(nr, 0.0);
  static const std::int8_t var11[2] = {kCon, kCov};

  PointGeometry pg;
  std::vector<double> P(d);
  std::vector<double> Sm2(db * db), Sm1(db * db), S0(db * db), Sp1(db * db), Sp2(db * db);
  std::vector<double> res(static_cast<std::size_t>(d) * d);
  for (int ir = 0; ir < nr; ++ir) {
    out.r[ir] = raxis.coord(ir);
    for (std::size_t bp = 0; bp < base.size(); ++bp) {
      base.point(bp, P.data() + 1);
      P[0] = out.r[ir] - 2 * h_r; detail::radial_shape_block(src, P.data(), Sm2.data());
      P[0] = out.r[ir] - h_r;     detail::radial_shape_block(src, P.data(), Sm1.data());
      P[0] = out.r[ir];           detail::radial_shape_block(src, P.data(), S0.data());
      P[0] = out.r[ir] + h_r;     detail::radial_shape_block(src, P.data(), Sp1.data());
      P[0] = out.r[ir] + 2 * h_r; detail::radial_shape_block(src, P.data(), Sp2.data());
      ev.eval(P.data(), pg, kGeomCurv);
      std::fill(res.begin(), res.end(), 0.0);
      for (int i = 0; i < db; ++i)
        for (int j = 0; j < db; ++j) {
          double drS = (Sm2[i * db + j] - 8.0 * Sm1[i * db + j] + 8.0 * Sp1[i * db + j] -
                        Sp2[i * db + j]) / (12.0 * h_r);
          double s2 = 0.0;
          for (int m = 0; m < db; ++m) s2 += S0[i * db + m] * S0[m * db + j];
          // R_B(dr, e_j)dr raised on the first slot
          double rterm = 0.0;
          for (int l = 0; l < d; ++l)
            rterm += pg.gi[(i + 1) * d + l] * pg.riem[((0 * d + (j + 1)) * d + 0) * d + l];
          res[(i + 1) * d + (j + 1)] = drS + s2 + rterm;
        }
      out.value[ir] = std::max(out.value[ir], ev.norm_g(pg, res.data(), 2, var11));
    }
  }
  out.tolerance = tol_scale * h_r * h_r;
  out.pass = true;
  for (double v : out.value) out.pass = out.pass && (v < out.tolerance);
  return out;
}

// ---------------------------------------------------------------------------
// Jacobi residual for the normal field Y_v (constant coordinate components):
// the first-order relation nabla_r Y = S Y and the full Jacobi equation
// nabla_r nabla_r Y = -R(dr, Y)dr, evaluated pointwise along a line.

struct JacobiReport {
  std::vector<double> r;
  std::vector<double> first_order;   // ||nabla_r Y - S Y||_g
  std::vector<double> second_order;  // ||nabla_r nabla_r Y + R_B(dr,Y)dr||_g
  std::vector<double> norm_y;        // ||Y||_g
};

inline JacobiReport jacobi_residual(const MetricSource& src, const Chart& chart,
                                    const std::vector<double>& base_point,
                                    const std::vector<double>& v, int r_samples = 40) {
  const int d = src.dim();
  const int db = d - 1;
  double vnorm = 0.0;
  for (double c : v) vnorm += c * c;
  if (vnorm == 0.0) throw std::invalid_argument("jacobi_residual: v must be nonzero");
  GeometryEvaluator ev(src);
  GridAxis raxis{chart.r_min, chart.r_max, r_samples};
  JacobiReport out;
  static const std::int8_t var1[1] = {kCon};
  PointGeometry pg;
  std::vector<double> P(d), Y(d, 0.0), W(d, 0.0), W2(d, 0.0), SY(d, 0.0);
  std::vector<double> S0(db * db);
  for (int k = 0; k < db; ++k) Y[k + 1] = v[k];
  for (int ir = 0; ir < r_samples; ++ir) {
    const double r = raxis.coord(ir);
    P[0] = r;
    for (int k = 0; k < db; ++k) P[k + 1] = base_point[k];
    ev.eval(P.data(), pg, kGeomCurv);
    detail::radial_shape_block(src, P.data(), S0.data());
    // W = nabla_r Y = Gamma(dr) Y  (full Gamma contraction, r row included)
    for (int m = 0; m < d; ++m) {
      double s = 0.0;
      for (int nu = 0; nu < d; ++nu) s += pg.Gamma[(m * d + 0) * d + nu] * Y[nu];
      W[m] = s;
    }
    for (int i = 0; i < d; ++i) {
      SY[i] = 0.0;
      if (i >= 1)
        for (int j = 0; j < db; ++j) SY[i] += S0[(i - 1) * db + j] * Y[j + 1];
    }
    double fo[kMaxDim];
    for (int i = 0; i < d; ++i) fo[i] = W[i] - SY[i];
    // nabla_r W = d_r W + Gamma(dr) W, with d_r W from d_r Gamma
    for (int m = 0; m < d; ++m) {
      double s = 0.0;
      for (int nu = 0; nu < d; ++nu) {
        s += pg.dGamma[((0 * d + m) * d + 0) * d + nu] * Y[nu];
        s += pg.Gamma[(m * d + 0) * d + nu] * W[nu];
      }
      W2[m] = s;
    }
    double so[kMaxDim];
    for (int m = 0; m < d; ++m) {
      double rterm = 0.0;
      for (int nu = 0; nu < d; ++nu)
        for (int l = 0; l < d; ++l)
          rterm += pg.gi[m * d + l] * pg.riem[((0 * d + nu) * d + 0) * d + l] * Y[nu];
      so[m] = W2[m] + rterm;
    }
    out.r.push_back(r);
    out.first_order.push_back(ev.norm_g(pg, fo, 1, var1));
    out.second_order.push_back(ev.norm_g(pg, so, 1, var1));
    out.norm_y.push_back(ev.norm_g(pg, Y.data(), 1, var1));
  }
  return out;
}

}  // namespace carnot
