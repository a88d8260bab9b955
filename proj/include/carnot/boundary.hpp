#pragma once

// Rescaled coframes eta^j_r, the Carnot candidate gamma_r, xi_0^r, phi_r, and
// their r -> infinity extrapolation into BoundaryData.
//
// eta^j_r are evaluated directly on the transported frame (the frame already
// solves the radial ODE system); the second-order eta ODE with curvature
// coefficients u^j_k is evaluated as a residual check, never integrated.
// gamma_r uses the frame expansion sum_j eta^j_r (x) eta^j_r, algebraically
// identical to e^{-r}(g_r - e^{2r} eta^0_r (x) eta^0_r) for an orthonormal
// frame but without the exponential cancellation; the reconstruction identity
// ties the two forms together and is reported per sample.

#include <cstdint>
#include <random>

#include "carnot/curvature.hpp"
#include "carnot/extrapolate.hpp"
#include "carnot/frames.hpp"
#include "carnot/parallel.hpp"
#include "carnot/rates.hpp"

namespace carnot {

struct CoframeSeries {
  std::vector<double> r;
  int db = 0;
  std::vector<double> eta;      // [k][j][i] = eta^j_r(d_i)
  std::vector<double> gamma_r;  // [k][i][j]
  std::vector<double> xi0r;     // [k][i]
  std::vector<double> phi_r;    // [k][i][j] (endomorphism, row i = output)
  std::vector<double> Sr;       // [k][i][j]
  std::vector<double> psi_r;    // [k][i][j]
  std::vector<double> recon_rel;     // per sample: reconstruction identity misfit
  std::vector<double> ode_residual;  // per sample: eta ODE system residual
  std::vector<double> u_max;         // per sample: max |u^j_k|

  std::size_t nsamples() const { return r.size(); }
  const double* eta_at(std::size_t k) const { return eta.data() + k * db * db; }
  const double* gamma_at(std::size_t k) const { return gamma_r.data() + k * db * db; }
  const double* xi0_at(std::size_t k) const { return xi0r.data() + k * db; }
  const double* phi_at(std::size_t k) const { return phi_r.data() + k * db * db; }
  const double* S_at(std::size_t k) const { return Sr.data() + k * db * db; }
  const double* psi_at(std::size_t k) const { return psi_r.data() + k * db * db; }
};

/// Evaluates the coframe series along one line. When ode_check is set, the
/// curvature coefficients u^j_k are computed at every sample and the residual
/// of the second-order eta system is recorded.
inline CoframeSeries coframe_series(const MetricSource& src, const LineRecord& line,
                                    const AdmissibleFrame& frame, bool ode_check = true) {
  const int d = line.dim, db = line.db();
  const std::size_t ns = line.nsamples();
  CoframeSeries cs;
  cs.r = line.r;
  cs.db = db;
  cs.eta.assign(ns * db * db, 0.0);
  cs.gamma_r.assign(ns * db * db, 0.0);
  cs.xi0r.assign(ns * db, 0.0);
  cs.phi_r.assign(ns * db * db, 0.0);
  cs.Sr.assign(line.S.begin(), line.S.end());
  cs.psi_r.assign(line.psi.begin(), line.psi.end());
  cs.recon_rel.assign(ns, 0.0);

  std::vector<double> E(static_cast<std::size_t>(db) * db);
  for (std::size_t k = 0; k < ns; ++k) {
    const double r = line.r[k];
    const double* g = line.g_at(k);
    const double* J = line.J_at(k);
    frame.frame_at(line, k, E.data());
    double* eta = cs.eta.data() + k * db * db;
    for (int j = 0; j < db; ++j) {
      const double scale = (j == 0) ? std::exp(-r) : std::exp(-0.5 * r);
      for (int i = 0; i < db; ++i) {
        double s = 0.0;
        for (int m = 0; m < db; ++m) s += g[(i + 1) * d + (m + 1)] * E[m * db + j];
        eta[j * db + i] = scale * s;
      }
    }
    double* ga = cs.gamma_r.data() + k * db * db;
    for (int i = 0; i < db; ++i)
      for (int j2 = 0; j2 < db; ++j2) {
        long double s = 0.0L;
        for (int j = 1; j < db; ++j)
          s += (long double)eta[j * db + i] * (long double)eta[j * db + j2];
        ga[i * db + j2] = static_cast<double>(s);
      }
    for (int i = 0; i < db; ++i) cs.xi0r[k * db + i] = std::exp(r) * E[i * db + 0];
    for (int i = 0; i < db; ++i)
      for (int j = 0; j < db; ++j) cs.phi_r[k * db * db + i * db + j] = J[(i + 1) * d + (j + 1)];
    // reconstruction identity: g_r = e^{2r} eta0 (x) eta0 + e^r gamma_r
    double scale_g = 0.0, mis = 0.0;
    for (int i = 0; i < db; ++i)
      for (int j = 0; j < db; ++j) {
        const double gij = g[(i + 1) * d + (j + 1)];
        const double rec = std::exp(2 * r) * eta[0 * db + i] * eta[0 * db + j] +
                           std::exp(r) * ga[i * db + j];
        scale_g = std::max(scale_g, std::abs(gij));
        mis = std::max(mis, std::abs(gij - rec));
      }
    cs.recon_rel[k] = mis / std::max(scale_g, 1e-300);
  }

  if (ode_check) {
    cs.u_max.assign(ns, 0.0);
    cs.ode_residual.assign(ns, 0.0);
    GeometryEvaluator ev(src);
    PointGeometry pg;
    std::vector<double> P(d), u(static_cast<std::size_t>(db) * db);
    std::vector<double> fullE(static_cast<std::size_t>(d) * db);
    for (std::size_t k = 0; k < ns; ++k) {
      P[0] = line.r[k];
      for (int i = 0; i < db; ++i) P[i + 1] = line.base[i];
      ev.eval(P.data(), pg, kGeomCurv);
      frame.frame_at(line, k, E.data());
      for (int j = 0; j < db; ++j) {
        fullE[0 * db + j] = 0.0;
        for (int i = 0; i < db; ++i) fullE[(i + 1) * db + j] = E[i * db + j];
      }
      auto Rframe = [&](int j, int kk) {
        // R(dr, E_j, dr, E_k), Besse convention
        double s = 0.0;
        for (int mu = 0; mu < d; ++mu)
          for (int nu = 0; nu < d; ++nu)
            s += pg.riem[((0 * d + mu) * d + 0) * d + nu] * fullE[mu * db + j] *
                 fullE[nu * db + kk];
        return s;
      };
      const double erh = std::exp(0.5 * line.r[k]);
      for (int j = 0; j < db; ++j)
        for (int kk = 0; kk < db; ++kk) {
          double v;
          if (j == 0 && kk == 0) v = Rframe(0, 0) + 1.0;
          else if (j == 0) v = Rframe(0, kk) / erh;
          else if (kk == 0) v = Rframe(j, 0) * erh;
          else if (j == kk) v = Rframe(j, j) + 0.25;
          else v = Rframe(j, kk);
          u[j * db + kk] = -v;
          cs.u_max[k] = std::max(cs.u_max[k], std::abs(u[j * db + kk]));
        }
      // second-order residual via 4th-order stencils on the sample grid
      if (k >= 2 && k + 2 < ns) {
        const double h = line.r[1] - line.r[0];
        double worst = 0.0;
        for (int j = 0; j < db; ++j)
          for (int i = 0; i < db; ++i) {
            auto etav = [&](std::size_t kk2) { return cs.eta[kk2 * db * db + j * db + i]; };
            const double d1 = (etav(k - 2) - 8 * etav(k - 1) + 8 * etav(k + 1) - etav(k + 2)) /
                              (12 * h);
            const double d2 = (-etav(k - 2) + 16 * etav(k - 1) - 30 * etav(k) +
                               16 * etav(k + 1) - etav(k + 2)) / (12 * h * h);
            double rhs = 0.0;
            for (int kk = 0; kk < db; ++kk) rhs += u[j * db + kk] * cs.eta[k * db * db + kk * db + i];
            const double c = (j == 0) ? 2.0 : 1.0;
            worst = std::max(worst, std::abs(d2 + c * d1 - rhs));
          }
        cs.ode_residual[k] = worst;
      }
    }
  }
  return cs;
}

// ---------------------------------------------------------------------------

struct FieldExtrap {
  std::vector<double> limit;     // components
  double residual = 0.0;         // worst component rms misfit
  double slope = 0.0;            // median-ish (worst informative) decay rate
  bool degenerate = false;
};

/// componentwise limits of a matrix-valued series [k][c]
inline FieldExtrap extrapolate_components(const std::vector<double>& r,
                                          const std::vector<double>& series, int ncomp) {
  FieldExtrap out;
  out.limit.assign(ncomp, 0.0);
  std::vector<double> comp(r.size());
  double best_slope = 0.0, best_amp = -1.0;
  for (int c = 0; c < ncomp; ++c) {
    for (std::size_t k = 0; k < r.size(); ++k) comp[k] = series[k * ncomp + c];
    ExtrapResult ex = extrapolate_limit(r, comp, ExtrapMode::exp_fit);
    out.limit[c] = ex.limit;
    out.residual = std::max(out.residual, ex.residual);
    out.degenerate = out.degenerate || ex.fallback;
    const double amp = std::abs(comp.front() - ex.limit);
    if (ex.slope_valid && amp > best_amp) { best_amp = amp; best_slope = ex.slope; }
  }
  out.slope = best_slope;
  return out;
}

/// Boundary data at one base point.
struct BoundaryPoint {
  std::vector<double> eta0;        // db covector
  std::vector<double> gamma;       // db*db symmetric
  std::vector<double> xi0;         // db vector (extrapolated route)
  std::vector<double> xi0_kernel;  // db vector (gamma-kernel route)
  std::vector<double> phi;         // db*db endomorphism
  std::vector<double> g0;          // db*db tangential metric at r_min
  double xi0_route_gap = 0.0;
  double eta0_of_xi0 = 0.0;
  double gamma_xi0_xi0 = 0.0;
  double extrap_residual = 0.0;
  bool degenerate_flag = false;
};

namespace detail {

inline void sym_solve_kernel(const std::vector<double>& gamma, const std::vector<double>& eta0,
                             int db, std::vector<double>& xi, double& gap_gamma) {
  // kernel direction of gamma: eigenvector of the smallest eigenvalue
  std::vector<double> evals(db), evecs(static_cast<std::size_t>(db) * db);
  sym_eigen(gamma.data(), db, evals.data(), evecs.data());
  xi.assign(db, 0.0);
  double e0x = 0.0;
  for (int i = 0; i < db; ++i) e0x += eta0[i] * evecs[i * db + 0];
  for (int i = 0; i < db; ++i) xi[i] = evecs[i * db + 0] / e0x;
  gap_gamma = evals[0];
}

}  // namespace detail

/// Full boundary recovery at one base point from its line record.
inline BoundaryPoint boundary_point(const CoframeSeries& cs, const LineRecord& line) {
  const int db = cs.db;
  const std::size_t ns = cs.nsamples();
  BoundaryPoint bp;
  // eta0 components: row j=0 of eta
  std::vector<double> eta0_series(ns * db), phi_series_(ns * db * db);
  for (std::size_t k = 0; k < ns; ++k)
    for (int i = 0; i < db; ++i) eta0_series[k * db + i] = cs.eta_at(k)[0 * db + i];
  FieldExtrap e0x = extrapolate_components(cs.r, eta0_series, db);
  FieldExtrap gax = extrapolate_components(cs.r, cs.gamma_r, db * db);
  FieldExtrap xix = extrapolate_components(cs.r, cs.xi0r, db);
  FieldExtrap phx = extrapolate_components(cs.r, cs.phi_r, db * db);
  bp.eta0 = e0x.limit;
  bp.gamma = gax.limit;
  bp.xi0 = xix.limit;
  bp.phi = phx.limit;
  bp.extrap_residual = std::max({e0x.residual, gax.residual, xix.residual, phx.residual});
  bp.degenerate_flag = e0x.degenerate || gax.degenerate || xix.degenerate || phx.degenerate;
  // symmetrize gamma (frame expansion is symmetric up to rounding)
  for (int i = 0; i < db; ++i)
    for (int j = i + 1; j < db; ++j) {
      const double s = 0.5 * (bp.gamma[i * db + j] + bp.gamma[j * db + i]);
      bp.gamma[i * db + j] = bp.gamma[j * db + i] = s;
    }
  double gap = 0.0;
  detail::sym_solve_kernel(bp.gamma, bp.eta0, db, bp.xi0_kernel, gap);
  bp.gamma_xi0_xi0 = 0.0;
  for (int i = 0; i < db; ++i)
    for (int j = 0; j < db; ++j) bp.gamma_xi0_xi0 += bp.gamma[i * db + j] * bp.xi0[i] * bp.xi0[j];
  bp.eta0_of_xi0 = 0.0;
  for (int i = 0; i < db; ++i) bp.eta0_of_xi0 += bp.eta0[i] * bp.xi0[i];
  bp.xi0_route_gap = 0.0;
  for (int i = 0; i < db; ++i)
    bp.xi0_route_gap = std::max(bp.xi0_route_gap, std::abs(bp.xi0[i] - bp.xi0_kernel[i]));
  // tangential metric at r_min
  bp.g0.assign(static_cast<std::size_t>(db) * db, 0.0);
  const double* g = line.g_at(0);
  for (int i = 0; i < db; ++i)
    for (int j = 0; j < db; ++j) bp.g0[i * db + j] = g[(i + 1) * line.dim + (j + 1)];
  return bp;
}

// ---------------------------------------------------------------------------

/// Boundary data over the base grid plus the per-slice deviation series used
/// by the rate checks.
struct BoundaryData {
  Grid base_grid;
  int db = 0;
  TensorField eta0;   // covector field
  TensorField gamma;  // symmetric 2-tensor field
  TensorField xi0;    // vector field
  TensorField phi;    // endomorphism field
  TensorField g0;     // tangential metric at r_min (norms and H0 bases)

  std::vector<double> r;               // sample radii
  std::vector<double> dev_eta0;        // max_x ||eta0_r - eta0||_{g0}
  std::vector<double> dev_gamma;       // max_x ||gamma_r - gamma||_{g0}
  std::vector<double> dev_xi0;         // max_x ||xi0_r - xi0||_{g0}
  std::vector<double> dev_phi;         // max_x ||phi_r - phi||_{g0}
  std::vector<double> dev_shape;       // max_x ||S_r - (Id + eta0_r (x) xi0_r)/2||_{g0}
  std::vector<double> evolution_residual;  // max_x ||d_r phi_r - (phi_r S_r - S_r phi_r + psi_r)||
  std::vector<double> recon_rel;       // max_x reconstruction misfit
  std::vector<double> ode_residual;    // max_x eta ODE residual
  std::vector<double> beta_dev;        // max_x |beta_r - beta|

  // scalar diagnostics
  double max_beta_norm_gap = 0.0;        // | ||beta||_{g0} - 1 |
  double max_beta_sum_gap = 0.0;         // | sum_j beta_r(e_j)^2 - 1 |
  double max_eta0_of_xi0_gap = 0.0;      // | eta0(xi0) - 1 |
  double max_gamma_xi0 = 0.0;            // gamma(xi0, xi0)
  double max_xi0_route_gap = 0.0;        // limit route vs kernel route
  double max_phi_sq_identity = 0.0;      // || phi^2 + Id - eta0 (x) xi0 ||
  double max_phi_cube_identity = 0.0;    // || phi^3 + phi ||
  double max_eta0_phi = 0.0;             // || eta0 o phi ||
  double max_gamma_phi_invariance = 0.0; // || gamma(phi.,phi.) - gamma ||
  double max_extrap_residual = 0.0;
  double min_gamma_second_eigenvalue = 0.0;  // smallest nonkernel eigenvalue
  double max_gamma_kernel_eigenvalue = 0.0;  // |smallest| eigenvalue
  double min_coframe_sigma = 0.0;        // smallest singular value of the limit coframe
  double pinching_lambda = 0.0;
  bool pinching_pass = false;
  double max_drift = 0.0;
  bool degenerate_flag = false;

  DecayFit fit_eta0, fit_gamma, fit_xi0, fit_phi, fit_shape, fit_beta;
};

struct BoundaryOptions {
  RadialOptions radial;
  unsigned seed_perm = 0;
  bool ode_check = true;
  bool j_admissible = true;
  int workers = 0;
  double fit_r_lo = 6.0, fit_r_hi = 12.0;
};

namespace detail {

inline double covector_norm_g0(const double* w, const double* g0i, int db) {
  double s = 0.0;
  for (int i = 0; i < db; ++i)
    for (int j = 0; j < db; ++j) s += g0i[i * db + j] * w[i] * w[j];
  return s > 0 ? std::sqrt(s) : 0.0;
}
inline double vector_norm_g0(const double* v, const double* g0, int db) {
  double s = 0.0;
  for (int i = 0; i < db; ++i)
    for (int j = 0; j < db; ++j) s += g0[i * db + j] * v[i] * v[j];
  return s > 0 ? std::sqrt(s) : 0.0;
}
inline double twocov_norm_g0(const double* T, const double* g0i, int db) {
  double s = 0.0;
  for (int i = 0; i < db; ++i)
    for (int j = 0; j < db; ++j)
      for (int k = 0; k < db; ++k)
        for (int l = 0; l < db; ++l) s += g0i[i * db + k] * g0i[j * db + l] * T[i * db + j] * T[k * db + l];
  return s > 0 ? std::sqrt(s) : 0.0;
}
inline double endo_norm_g0(const double* A, const double* g0, const double* g0i, int db) {
  // ||A||^2 = g0_{ik} g0^{jl} A^i_j A^k_l
  double s = 0.0;
  for (int i = 0; i < db; ++i)
    for (int j = 0; j < db; ++j)
      for (int k = 0; k < db; ++k)
        for (int l = 0; l < db; ++l) s += g0[i * db + k] * g0i[j * db + l] * A[i * db + j] * A[k * db + l];
  return s > 0 ? std::sqrt(s) : 0.0;
}

}  // namespace detail

inline BoundaryData boundary_data(const MetricSource& src, const Chart& chart,
                                  const BoundaryOptions& opt = {}) {
  chart.validate();
  const int d = src.dim(), db = d - 1;
  if (chart.dim() != d) throw std::invalid_argument("boundary_data: chart/model dimension mismatch");
  Grid base = chart.base_grid();
  const std::size_t np = base.size();

  struct PerPoint {
    LineRecord line;
    CoframeSeries cs;
    BoundaryPoint bp;
    BetaSeries beta;
  };
  std::vector<PerPoint> pts(np);
  parallel_for(np, [&](std::size_t p) {
    std::vector<double> x(db);
    std::vector<int> idx = base.unflat(p);
    for (int k = 0; k < db; ++k) x[k] = base.axes[k].coord(idx[k]);
    PerPoint& pp = pts[p];
    pp.line = sample_line(src, chart, x, opt.radial, opt.seed_perm);
    pp.beta = beta_series(pp.line);
    AdmissibleFrame af = admissible_frame(pp.line, pp.beta, opt.seed_perm);
    if (opt.j_admissible) af = j_admissible_frame(pp.line, af);
    pp.cs = coframe_series(src, pp.line, af, opt.ode_check);
    pp.bp = boundary_point(pp.cs, pp.line);
  }, opt.workers);

  const std::size_t ns = pts[0].cs.nsamples();
  BoundaryData out;
  out.base_grid = base;
  out.db = db;
  out.eta0 = TensorField(base, db, {kCov});
  out.gamma = TensorField(base, db, {kCov, kCov}, Sym::symmetric_pairs);
  out.xi0 = TensorField(base, db, {kCon});
  out.phi = TensorField(base, db, {kCon, kCov});
  out.g0 = TensorField(base, db, {kCov, kCov}, Sym::symmetric_pairs);
  out.r = pts[0].cs.r;
  out.dev_eta0.assign(ns, 0.0);
  out.dev_gamma.assign(ns, 0.0);
  out.dev_xi0.assign(ns, 0.0);
  out.dev_phi.assign(ns, 0.0);
  out.dev_shape.assign(ns, 0.0);
  out.evolution_residual.assign(ns, 0.0);
  out.recon_rel.assign(ns, 0.0);
  out.ode_residual.assign(ns, 0.0);
  out.beta_dev.assign(ns, 0.0);
  out.min_gamma_second_eigenvalue = 1e300;
  out.min_coframe_sigma = 1e300;

  std::vector<double> g0i(static_cast<std::size_t>(db) * db);
  std::vector<double> tmp(static_cast<std::size_t>(db) * db), tmp2(static_cast<std::size_t>(db) * db);
  std::vector<double> evals(db);
  const double sample_h = out.r.size() > 1 ? out.r[1] - out.r[0] : 1.0;

  for (std::size_t p = 0; p < np; ++p) {
    PerPoint& pp = pts[p];
    const BoundaryPoint& bp = pp.bp;
    std::copy(bp.eta0.begin(), bp.eta0.end(), out.eta0.at(p));
    std::copy(bp.gamma.begin(), bp.gamma.end(), out.gamma.at(p));
    std::copy(bp.xi0.begin(), bp.xi0.end(), out.xi0.at(p));
    std::copy(bp.phi.begin(), bp.phi.end(), out.phi.at(p));
    std::copy(bp.g0.begin(), bp.g0.end(), out.g0.at(p));
    mat_inverse(bp.g0.data(), g0i.data(), db);

    out.max_drift = std::max(out.max_drift, pp.line.drift);
    out.max_eta0_of_xi0_gap = std::max(out.max_eta0_of_xi0_gap, std::abs(bp.eta0_of_xi0 - 1.0));
    out.max_gamma_xi0 = std::max(out.max_gamma_xi0, std::abs(bp.gamma_xi0_xi0));
    out.max_xi0_route_gap = std::max(out.max_xi0_route_gap, bp.xi0_route_gap);
    out.max_extrap_residual = std::max(out.max_extrap_residual, bp.extrap_residual);
    out.max_beta_norm_gap = std::max(out.max_beta_norm_gap, std::abs(pp.beta.limit_norm - 1.0));
    out.degenerate_flag = out.degenerate_flag || bp.degenerate_flag;

    // beta partition of unity: sum_j beta_r(e_j)^2 = 1 on the candidate frame
    for (std::size_t k = 0; k < ns; ++k) {
      double s = 0.0;
      for (int j = 0; j < db; ++j) s += pp.beta.value(k, j) * pp.beta.value(k, j);
      out.max_beta_sum_gap = std::max(out.max_beta_sum_gap, std::abs(s - 1.0));
      out.beta_dev[k] = std::max(out.beta_dev[k], pp.beta.decay[k]);
    }

    // gamma spectrum: exactly one kernel direction
    sym_eigen(bp.gamma.data(), db, evals.data());
    out.max_gamma_kernel_eigenvalue = std::max(out.max_gamma_kernel_eigenvalue, std::abs(evals[0]));
    out.min_gamma_second_eigenvalue = std::min(out.min_gamma_second_eigenvalue, evals[1]);

    // smallest singular value of the limit coframe {eta0, eta^j as rows}
    {
      Eigen::MatrixXd cof(db, db);
      for (int i = 0; i < db; ++i) cof(0, i) = bp.eta0[i];
      // limit rows of eta^j from the series tail
      for (int j = 1; j < db; ++j)
        for (int i = 0; i < db; ++i) cof(j, i) = pp.cs.eta_at(ns - 1)[j * db + i];
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(cof);
      out.min_coframe_sigma = std::min(out.min_coframe_sigma, svd.singularValues()(db - 1));
    }

    // phi identities at the limit
    {
      const double* phi = bp.phi.data();
      double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
      for (int i = 0; i < db; ++i)
        for (int j = 0; j < db; ++j) {
          double p2 = 0.0, p3 = 0.0;
          for (int m = 0; m < db; ++m) {
            p2 += phi[i * db + m] * phi[m * db + j];
            for (int l = 0; l < db; ++l)
              p3 += phi[i * db + m] * phi[m * db + l] * phi[l * db + j];
          }
          m1 = std::max(m1, std::abs(p2 + (i == j ? 1.0 : 0.0) - bp.xi0[i] * bp.eta0[j]));
          m2 = std::max(m2, std::abs(p3 + phi[i * db + j]));
        }
      for (int j = 0; j < db; ++j) {
        double s = 0.0;
        for (int i = 0; i < db; ++i) s += bp.eta0[i] * phi[i * db + j];
        m3 = std::max(m3, std::abs(s));
      }
      for (int i = 0; i < db; ++i)
        for (int j = 0; j < db; ++j) {
          double s = 0.0;
          for (int m = 0; m < db; ++m)
            for (int l = 0; l < db; ++l)
              s += bp.gamma[m * db + l] * phi[m * db + i] * phi[l * db + j];
          m4 = std::max(m4, std::abs(s - bp.gamma[i * db + j]));
        }
      out.max_phi_sq_identity = std::max(out.max_phi_sq_identity, m1);
      out.max_phi_cube_identity = std::max(out.max_phi_cube_identity, m2);
      out.max_eta0_phi = std::max(out.max_eta0_phi, m3);
      out.max_gamma_phi_invariance = std::max(out.max_gamma_phi_invariance, m4);
    }

    // per-sample deviations in g0-norms
    for (std::size_t k = 0; k < ns; ++k) {
      const double* eta = pp.cs.eta_at(k);
      for (int i = 0; i < db; ++i) tmp[i] = eta[0 * db + i] - bp.eta0[i];
      out.dev_eta0[k] = std::max(out.dev_eta0[k], detail::covector_norm_g0(tmp.data(), g0i.data(), db));
      for (int c = 0; c < db * db; ++c) tmp[c] = pp.cs.gamma_at(k)[c] - bp.gamma[c];
      out.dev_gamma[k] = std::max(out.dev_gamma[k], detail::twocov_norm_g0(tmp.data(), g0i.data(), db));
      for (int i = 0; i < db; ++i) tmp[i] = pp.cs.xi0_at(k)[i] - bp.xi0[i];
      out.dev_xi0[k] = std::max(out.dev_xi0[k], detail::vector_norm_g0(tmp.data(), bp.g0.data(), db));
      for (int c = 0; c < db * db; ++c) tmp[c] = pp.cs.phi_at(k)[c] - bp.phi[c];
      out.dev_phi[k] = std::max(out.dev_phi[k], detail::endo_norm_g0(tmp.data(), bp.g0.data(), g0i.data(), db));
      // S_r - (Id + eta0_r (x) xi0_r)/2
      const double* eta0r = eta;  // row 0
      const double* xi0r = pp.cs.xi0_at(k);
      for (int i = 0; i < db; ++i)
        for (int j = 0; j < db; ++j)
          tmp[i * db + j] = pp.cs.S_at(k)[i * db + j] -
                            0.5 * ((i == j ? 1.0 : 0.0) + xi0r[i] * eta0r[0 * db + j]);
      out.dev_shape[k] = std::max(out.dev_shape[k], detail::endo_norm_g0(tmp.data(), bp.g0.data(), g0i.data(), db));
      out.recon_rel[k] = std::max(out.recon_rel[k], pp.cs.recon_rel[k]);
      if (!pp.cs.ode_residual.empty())
        out.ode_residual[k] = std::max(out.ode_residual[k], pp.cs.ode_residual[k]);
      // evolution identity d_r phi_r = phi_r S_r - S_r phi_r + psi_r
      if (k >= 2 && k + 2 < ns) {
        double worst = 0.0;
        for (int i = 0; i < db; ++i)
          for (int j = 0; j < db; ++j) {
            auto phiv = [&](std::size_t kk) { return pp.cs.phi_r[kk * db * db + i * db + j]; };
            const double dphid = (phiv(k - 2) - 8 * phiv(k - 1) + 8 * phiv(k + 1) - phiv(k + 2)) /
                                 (12 * sample_h);
            double comm = 0.0;
            for (int m = 0; m < db; ++m)
              comm += pp.cs.phi_at(k)[i * db + m] * pp.cs.S_at(k)[m * db + j] -
                      pp.cs.S_at(k)[i * db + m] * pp.cs.phi_at(k)[m * db + j];
            worst = std::max(worst, std::abs(dphid - comm - pp.cs.psi_at(k)[i * db + j]));
          }
        out.evolution_residual[k] = std::max(out.evolution_residual[k], worst);
      }
    }
  }

  // pinching of quadratic forms against q_r = eta0_r (x) eta0_r + gamma_r at
  // 100 deterministic directions on the g0 unit sphere
  {
    std::mt19937 rng(0x5eed0u);
    std::normal_distribution<double> N(0.0, 1.0);
    double qmin = 1e300, qmax = 0.0;
    bool ok = true;
    std::vector<double> v(db);
    for (int dir = 0; dir < 100; ++dir) {
      const std::size_t p = dir % np;
      for (int i = 0; i < db; ++i) v[i] = N(rng);
      const double* g0 = pts[p].bp.g0.data();
      double n2 = detail::vector_norm_g0(v.data(), g0, db);
      for (int i = 0; i < db; ++i) v[i] /= n2;
      for (std::size_t k = 0; k < ns; k += std::max<std::size_t>(1, ns / 8)) {
        const double* eta = pts[p].cs.eta_at(k);
        const double* ga = pts[p].cs.gamma_at(k);
        double e0v = 0.0, gav = 0.0;
        for (int i = 0; i < db; ++i) e0v += eta[0 * db + i] * v[i];
        for (int i = 0; i < db; ++i)
          for (int j = 0; j < db; ++j) gav += ga[i * db + j] * v[i] * v[j];
        const double q = e0v * e0v + gav;
        qmin = std::min(qmin, q);
        qmax = std::max(qmax, q);
        // exact identity g_r(v,v) = e^{2r} eta0^2 + e^r gamma: check pinching
        const double r = pts[p].cs.r[k];
        const double grv = std::exp(2 * r) * e0v * e0v + std::exp(r) * gav;
        ok = ok && (grv >= std::exp(r) * q * (1 - 1e-9)) && (grv <= std::exp(2 * r) * q * (1 + 1e-9));
      }
    }
    out.pinching_lambda = std::max(qmax, 1.0 / std::max(qmin, 1e-300));
    out.pinching_pass = ok && qmin > 0.0;
  }

  // decay fits over the configured window
  const bool allow_log = true;
  auto fit = [&](const std::vector<double>& s) {
    return fit_decay(out.r, s, allow_log, opt.fit_r_lo, opt.fit_r_hi);
  };
  out.fit_eta0 = fit(out.dev_eta0);
  out.fit_gamma = fit(out.dev_gamma);
  out.fit_xi0 = fit(out.dev_xi0);
  out.fit_phi = fit(out.dev_phi);
  out.fit_shape = fit(out.dev_shape);
  out.fit_beta = fit(out.beta_dev);
  return out;
}

}  // namespace carnot
