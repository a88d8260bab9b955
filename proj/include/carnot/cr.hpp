#pragma once

// CR-structure verification on recovered boundary data: exterior derivative
// of eta^0, contact nondegeneracy, Levi form against the Carnot metric, the
// Reeb property of xi_0, and the Nijenhuis integrability criterion
// N_phi|_{H0 x H0} = d eta^0|_{H0 x H0} (x) xi_0.

#include <algorithm>
#include <cmath>
#include <vector>

#include "carnot/boundary.hpp"
#include "carnot/rates.hpp"
#include "carnot/tensor.hpp"

namespace carnot {

/// (d omega)_ij = d_i omega_j - d_j omega_i on the base grid.
inline TensorField exterior_d(const TensorField& omega) {
  if (omega.rank() != 1 || omega.variance[0] != kCov)
    throw std::invalid_argument("exterior_d: needs a covector field");
  const int db = omega.dim;
  TensorField out(omega.grid, db, {kCov, kCov});
  std::vector<TensorField> d(db);
  for (int a = 0; a < db; ++a) d[a] = partial_fd(omega, a, 1);
  for (std::size_t p = 0; p < omega.npoints(); ++p) {
    for (int a = 0; a < db; ++a) out.flags[p] |= d[a].flags[p];
    for (int i = 0; i < db; ++i)
      for (int j = 0; j < db; ++j)
        out.at(p)[i * db + j] = d[i].at(p)[j] - d[j].at(p)[i];
  }
  return out;
}

namespace detail {

// top-form coefficient of eta ^ (d eta)^n, normalized by 2^n n!
inline double contact_coefficient(const double* eta, const double* deta, int db) {
  const int n = (db - 1) / 2;
  std::vector<int> perm(db);
  for (int i = 0; i < db; ++i) perm[i] = i;
  double acc = 0.0;
  // enumerate permutations with explicit parity
  std::sort(perm.begin(), perm.end());
  do {
    int inv = 0;
    for (int i = 0; i < db; ++i)
      for (int j = i + 1; j < db; ++j)
        if (perm[i] > perm[j]) ++inv;
    double term = (inv % 2 == 0 ? 1.0 : -1.0) * eta[perm[0]];
    for (int k = 0; k < n; ++k) term *= deta[perm[1 + 2 * k] * db + perm[2 + 2 * k]];
    acc += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  double norm = 1.0;
  for (int k = 1; k <= n; ++k) norm *= 2.0 * k;
  return acc / norm;
}

// gamma-orthonormal basis of ker(eta0), seeded from coordinate axes
// projected along xi0; returns 2n columns (db rows each).
inline bool h0_basis(const double* eta0, const double* xi0, const double* gamma, int db,
                     std::vector<double>& H) {
  const int nh = db - 1;
  H.assign(static_cast<std::size_t>(db) * nh, 0.0);
  auto gam = [&](const double* u, const double* v) {
    double s = 0.0;
    for (int i = 0; i < db; ++i)
      for (int j = 0; j < db; ++j) s += gamma[i * db + j] * u[i] * v[j];
    return s;
  };
  int have = 0;
  std::vector<double> cand(db), col(db);
  for (int axis = 0; axis < db && have < nh; ++axis) {
    for (int i = 0; i < db; ++i) cand[i] = (i == axis ? 1.0 : 0.0);
    double ev = 0.0;
    for (int i = 0; i < db; ++i) ev += eta0[i] * cand[i];
    for (int i = 0; i < db; ++i) cand[i] -= ev * xi0[i];  // now eta0(cand) ~ 0
    for (int c = 0; c < have; ++c) {
      for (int i = 0; i < db; ++i) col[i] = H[i * nh + c];
      const double p = gam(cand.data(), col.data());
      for (int i = 0; i < db; ++i) cand[i] -= p * col[i];
    }
    const double n2 = gam(cand.data(), cand.data());
    if (n2 < 1e-10) continue;
    const double inv = 1.0 / std::sqrt(n2);
    for (int i = 0; i < db; ++i) H[i * nh + have] = cand[i] * inv;
    ++have;
  }
  return have == nh;
}

}  // namespace detail

struct CRReport {
  TensorField d_eta0;                 // 2-form field
  std::vector<double> contact_coef;   // per interior point, normalized coefficient
  double contact_min_abs = 0.0;       // min |coefficient| / q0-volume
  bool contact_pass = false;
  double levi_gap = 0.0;              // max |d eta0(., phi .) - gamma|
  double reeb_gap = 0.0;              // max |d eta0(xi0, H0)|
  double nijenhuis_gap = 0.0;
  double levi_eigen_min = 1e300;
  double phi_first_diff = 0.0;  // largest first difference of phi across the grid
  bool phi_smooth = true;       // first differences within the smoothness budget
  bool verdict = false;
  double tol_gap = 1e-3;
  double tol_levi_min = 0.5;
  double tol_contact = 0.1;
};

struct CROptions {
  double tol_gap = 1e-3;
  double tol_levi_min = 0.5;
  double tol_contact = 0.1;
  double phi_smooth_budget = 0.1;  // max first difference before flagging noise
};

/// Contact / Levi / Reeb / Nijenhuis battery on recovered boundary data.
/// All H0-restricted quantities use the gamma-orthonormalized basis of
/// ker(eta0) built pointwise from coordinate axis seeds.
inline CRReport cr_checks(const BoundaryData& bd, const CROptions& opt = {}) {
  const int db = bd.db;
  const int nh = db - 1;
  CRReport rep;
  rep.tol_gap = opt.tol_gap;
  rep.tol_levi_min = opt.tol_levi_min;
  rep.tol_contact = opt.tol_contact;
  rep.d_eta0 = exterior_d(bd.eta0);

  std::vector<TensorField> dphi(db);
  for (int a = 0; a < db; ++a) dphi[a] = partial_fd(bd.phi, a, 1);

  // first differences of phi across the grid: C^1-consistency budget guarding
  // the derivative-hungry Nijenhuis evaluation against extrapolation noise
  for (int a = 0; a < db; ++a) {
    for (std::size_t p = 0; p < dphi[a].npoints(); ++p) {
      if (dphi[a].flags[p]) continue;
      for (std::size_t c = 0; c < dphi[a].ncomp(); ++c)
        rep.phi_first_diff = std::max(rep.phi_first_diff, std::abs(dphi[a].at(p)[c]) *
                                          dphi[a].grid.axes[a].step());
    }
  }
  rep.phi_smooth = rep.phi_first_diff <= opt.phi_smooth_budget;

  rep.contact_min_abs = 1e300;
  std::vector<double> H;
  const Grid& base = bd.base_grid;

  // contact nondegeneracy first: the Levi / Reeb / Nijenhuis battery assumes
  // a contact form, and degenerate data would only produce noise there
  for (std::size_t p = 0; p < base.size(); ++p) {
    if (!base.interior(base.unflat(p), 2)) continue;
    const double* eta0 = bd.eta0.at(p);
    const double* gamma = bd.gamma.at(p);
    const double coef = detail::contact_coefficient(eta0, rep.d_eta0.at(p), db);
    Eigen::MatrixXd q0(db, db);
    for (int i = 0; i < db; ++i)
      for (int j = 0; j < db; ++j) q0(i, j) = eta0[i] * eta0[j] + gamma[i * db + j];
    const double vol = std::sqrt(std::max(q0.determinant(), 1e-300));
    rep.contact_coef.push_back(coef);
    rep.contact_min_abs = std::min(rep.contact_min_abs, std::abs(coef) / vol);
  }
  rep.contact_pass = rep.contact_min_abs > opt.tol_contact;
  if (!rep.contact_pass) {
    rep.verdict = false;
    rep.levi_eigen_min = 0.0;
    return rep;
  }

  for (std::size_t p = 0; p < base.size(); ++p) {
    const bool interior = base.interior(base.unflat(p), 2);
    const double* eta0 = bd.eta0.at(p);
    const double* gamma = bd.gamma.at(p);
    const double* xi0 = bd.xi0.at(p);
    const double* phi = bd.phi.at(p);
    const double* de = rep.d_eta0.at(p);
    if (!interior) continue;  // FD-backed checks stay inside stencil margins

    if (!detail::h0_basis(eta0, xi0, gamma, db, H))
      throw std::runtime_error("cr_checks: H0 basis extraction failed (degenerate eta0)");

    auto de_of = [&](const double* u, const double* v) {
      double s = 0.0;
      for (int i = 0; i < db; ++i)
        for (int j = 0; j < db; ++j) s += de[i * db + j] * u[i] * v[j];
      return s;
    };
    auto gam_of = [&](const double* u, const double* v) {
      double s = 0.0;
      for (int i = 0; i < db; ++i)
        for (int j = 0; j < db; ++j) s += gamma[i * db + j] * u[i] * v[j];
      return s;
    };
    std::vector<double> ha(db), hb(db), pha(db), phb(db);
    Eigen::MatrixXd L(nh, nh);
    for (int a = 0; a < nh; ++a) {
      for (int i = 0; i < db; ++i) ha[i] = H[i * nh + a];
      rep.reeb_gap = std::max(rep.reeb_gap, std::abs(de_of(xi0, ha.data())));
      for (int b = 0; b < nh; ++b) {
        for (int i = 0; i < db; ++i) hb[i] = H[i * nh + b];
        for (int i = 0; i < db; ++i) {
          phb[i] = 0.0;
          for (int j = 0; j < db; ++j) phb[i] += phi[i * db + j] * hb[j];
        }
        const double lv = de_of(ha.data(), phb.data());
        L(a, b) = lv;
        rep.levi_gap = std::max(rep.levi_gap, std::abs(lv - gam_of(ha.data(), hb.data())));
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (L + L.transpose()));
    rep.levi_eigen_min = std::min(rep.levi_eigen_min, es.eigenvalues()(0));

    // Nijenhuis tensor on coordinate pairs, then contracted with the H0 basis
    // N(d_i, d_j)^m = -[phi d_i, phi d_j]^m + phi[phi d_i, d_j]^m + phi[d_i, phi d_j]^m
    std::vector<double> N(static_cast<std::size_t>(db) * db * db, 0.0);
    for (int i = 0; i < db; ++i)
      for (int j = 0; j < db; ++j) {
        for (int m = 0; m < db; ++m) {
          double br = 0.0;  // [phi d_i, phi d_j]^m
          for (int k = 0; k < db; ++k)
            br += phi[k * db + i] * dphi[k].at(p)[m * db + j] -
                  phi[k * db + j] * dphi[k].at(p)[m * db + i];
          double t2 = 0.0;  // phi [phi d_i, d_j]^m = -phi d_j(phi d_i)
          for (int k = 0; k < db; ++k)
            t2 += phi[m * db + k] * (-dphi[j].at(p)[k * db + i]);
          double t3 = 0.0;  // phi [d_i, phi d_j]^m = phi d_i(phi d_j)
          for (int k = 0; k < db; ++k)
            t3 += phi[m * db + k] * dphi[i].at(p)[k * db + j];
          N[(i * db + j) * db + m] = -br + t2 + t3;
        }
      }
    for (int a = 0; a < nh; ++a)
      for (int b = 0; b < nh; ++b) {
        for (int i = 0; i < db; ++i) {
          ha[i] = H[i * nh + a];
          hb[i] = H[i * nh + b];
        }
        const double dev = de_of(ha.data(), hb.data());
        for (int m = 0; m < db; ++m) {
          double nm = 0.0;
          for (int i = 0; i < db; ++i)
            for (int j = 0; j < db; ++j) nm += ha[i] * hb[j] * N[(i * db + j) * db + m];
          rep.nijenhuis_gap = std::max(rep.nijenhuis_gap, std::abs(nm - dev * xi0[m]));
        }
      }
  }
  rep.verdict = rep.contact_pass && rep.levi_gap <= opt.tol_gap && rep.reeb_gap <= opt.tol_gap &&
                rep.nijenhuis_gap <= opt.tol_gap && rep.levi_eigen_min > opt.tol_levi_min;
  return rep;
}

// ---------------------------------------------------------------------------
// Metric expansion residual: ghat = dr^2 + e^{2r} eta0 (x) eta0 + e^r gamma
// against g, per-slice max g-norm plus a decay fit.

struct ExpansionResidual {
  std::vector<double> r;
  std::vector<double> value;
  DecayFit fit;
  double floor = 1e-7;  // series below this is reported as converged
  bool below_floor = false;
};

inline ExpansionResidual expansion_residual(const MetricSource& src, const Chart& chart,
                                            const BoundaryData& bd, int r_samples = 0,
                                            double fit_r_lo = 6.0, double fit_r_hi = 12.0) {
  const int d = src.dim(), db = d - 1;
  GeometryEvaluator ev(src);
  const Grid base = bd.base_grid;
  const int nr = r_samples > 0 ? r_samples : chart.grid_counts[0];
  GridAxis raxis{chart.r_min, chart.r_max, nr};
  ExpansionResidual out;
  out.r.resize(nr);
  out.value.assign(nr, 0.0);
  static const std::int8_t var2[2] = {kCov, kCov};
  PointGeometry pg;
  std::vector<double> P(d), diff(static_cast<std::size_t>(d) * d);
  for (int ir = 0; ir < nr; ++ir) {
    out.r[ir] = raxis.coord(ir);
    const double e2r = std::exp(2.0 * out.r[ir]);
    const double er = std::exp(out.r[ir]);
    for (std::size_t p = 0; p < base.size(); ++p) {
      base.point(p, P.data() + 1);
      P[0] = out.r[ir];
      ev.eval(P.data(), pg, kGeomMetric);
      const double* eta0 = bd.eta0.at(p);
      const double* gamma = bd.gamma.at(p);
      diff[0] = pg.g[0] - 1.0;
      for (int i = 0; i < db; ++i) {
        diff[0 * d + (i + 1)] = pg.g[0 * d + (i + 1)];
        diff[(i + 1) * d + 0] = pg.g[(i + 1) * d + 0];
      }
      for (int i = 0; i < db; ++i)
        for (int j = 0; j < db; ++j)
          diff[(i + 1) * d + (j + 1)] = pg.g[(i + 1) * d + (j + 1)] -
                                        (e2r * eta0[i] * eta0[j] + er * gamma[i * db + j]);
      out.value[ir] = std::max(out.value[ir],
                               g_norm_point(diff.data(), 2, d, var2, pg.g.data(), pg.gi.data()));
    }
  }
  double vmax = 0.0;
  for (double v : out.value) vmax = std::max(vmax, v);
  out.below_floor = vmax < out.floor;
  if (!out.below_floor) out.fit = fit_decay(out.r, out.value, true, fit_r_lo, fit_r_hi);
  return out;
}

}  // namespace carnot
