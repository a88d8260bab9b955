#pragma once

// Admissible frames: the 1-form beta_r(v) = g(J dr, V), extraction of its
// limit direction e_0, Gram-Schmidt completion inside ker(beta), and the
// J-pairing refinement. All per-base-point state lives in a LineRecord so a
// single transport pass feeds every later construction.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "carnot/extrapolate.hpp"
#include "carnot/model.hpp"
#include "carnot/radial.hpp"

namespace carnot {

/// One radial line, sampled: transported candidate frame plus the pointwise
/// data every downstream construction needs. Candidate vectors are the
/// columns of C (boundary components; the dr-component vanishes identically).
struct LineRecord {
  int dim = 0;                 // 2n+2
  std::vector<double> base;    // boundary coordinates
  std::vector<double> r;       // sample radii
  // per sample (db = dim-1):
  std::vector<double> C;       // db*db, transported candidates as columns
  std::vector<double> g;       // dim*dim metric
  std::vector<double> J;       // dim*dim almost complex structure
  std::vector<double> S;       // db*db shape block
  std::vector<double> psi;     // db*db tangential block of nabla_r J
  double drift = 0.0;          // orthonormality drift at r_max

  int db() const { return dim - 1; }
  std::size_t nsamples() const { return r.size(); }
  const double* C_at(std::size_t k) const { return C.data() + k * db() * db(); }
  const double* g_at(std::size_t k) const { return g.data() + k * dim * dim; }
  const double* J_at(std::size_t k) const { return J.data() + k * dim * dim; }
  const double* S_at(std::size_t k) const { return S.data() + k * db() * db(); }
  const double* psi_at(std::size_t k) const { return psi.data() + k * db() * db(); }
};

namespace detail {

// g0-orthonormal frame from permuted coordinate axis seeds (modified
// Gram-Schmidt). pre[npre] columns, when given, are kept as the leading
// vectors and the completion is orthogonal to them.
inline std::vector<double> gram_schmidt_frame(const double* g0, int db, unsigned seed_perm,
                                              const double* pre = nullptr, int npre = 0) {
  std::vector<int> order(db);
  std::iota(order.begin(), order.end(), 0);
  for (unsigned s = 0; s < seed_perm; ++s) std::next_permutation(order.begin(), order.end());
  std::vector<double> F(static_cast<std::size_t>(db) * db, 0.0);
  for (int c = 0; c < npre; ++c)
    for (int i = 0; i < db; ++i) F[i * db + c] = pre[i * npre + c];
  auto ip = [&](const double* u, const double* v) {
    double s = 0.0;
    for (int i = 0; i < db; ++i)
      for (int j = 0; j < db; ++j) s += g0[i * db + j] * u[i] * v[j];
    return s;
  };
  int have = npre;
  std::vector<double> cand(db), col(db);
  for (int pass = 0; pass < db && have < db; ++pass) {
    for (int s : order) {
      if (have == db) break;
      std::fill(cand.begin(), cand.end(), 0.0);
      cand[s] = 1.0;
      for (int c = 0; c < have; ++c) {
        for (int i = 0; i < db; ++i) col[i] = F[i * db + c];
        const double p = ip(cand.data(), col.data());
        for (int i = 0; i < db; ++i) cand[i] -= p * col[i];
      }
      const double n2 = ip(cand.data(), cand.data());
      if (n2 < 1e-12) continue;  // near-dependent seed: try next axis
      const double inv = 1.0 / std::sqrt(n2);
      for (int i = 0; i < db; ++i) F[i * db + have] = cand[i] * inv;
      ++have;
    }
  }
  if (have < db) throw std::runtime_error("gram_schmidt_frame: seeds degenerate");
  return F;
}

}  // namespace detail

/// Transports a g0-orthonormal candidate frame (seeded from coordinate axes,
/// order set by seed_perm) along the radial line over base_point, recording
/// samples every opt.sample_dr.
inline LineRecord sample_line(const MetricSource& src, const Chart& chart,
                              const std::vector<double>& base_point,
                              const RadialOptions& opt = {}, unsigned seed_perm = 0) {
  const int d = src.dim();
  const int db = d - 1;
  LineRecord line;
  line.dim = d;
  line.base = base_point;

  const int nseg = std::max(1, static_cast<int>(std::lround((chart.r_max - chart.r_min) / opt.sample_dr)));
  const double seg = (chart.r_max - chart.r_min) / nseg;
  line.r.resize(nseg + 1);
  line.C.resize(static_cast<std::size_t>(nseg + 1) * db * db);
  line.g.resize(static_cast<std::size_t>(nseg + 1) * d * d);
  line.J.resize(static_cast<std::size_t>(nseg + 1) * d * d);
  line.S.resize(static_cast<std::size_t>(nseg + 1) * db * db);
  line.psi.resize(static_cast<std::size_t>(nseg + 1) * db * db);

  std::vector<double> P(d);
  for (int k = 0; k < db; ++k) P[k + 1] = base_point[k];

  auto record = [&](int k, const double* V) {
    const double r = chart.r_min + seg * k;
    line.r[k] = r;
    P[0] = r;
    double* gk = line.g.data() + static_cast<std::size_t>(k) * d * d;
    double* Jk = line.J.data() + static_cast<std::size_t>(k) * d * d;
    double* Sk = line.S.data() + static_cast<std::size_t>(k) * db * db;
    double* Pk = line.psi.data() + static_cast<std::size_t>(k) * db * db;
    std::array<double, kMaxDim * kMaxDim> drJ;
    if (src.analytic() && d == 4) {
      Jet4 gj[16], Jj[16];
      src.metric_jet(P.data(), gj);
      src.cstruct_jet(P.data(), Jj);
      for (int c = 0; c < d * d; ++c) {
        gk[c] = gj[c].v;
        Jk[c] = Jj[c].v;
        drJ[c] = Jj[c].g[0];
      }
    } else {
      src.metric(P.data(), gk);
      src.cstruct(P.data(), Jk);
      const double h = src.fd_step();
      std::array<double, kMaxDim * kMaxDim> m2, m1, p1, p2;
      std::vector<double> Q(P);
      Q[0] = P[0] - 2 * h; src.cstruct(Q.data(), m2.data());
      Q[0] = P[0] - h;     src.cstruct(Q.data(), m1.data());
      Q[0] = P[0] + h;     src.cstruct(Q.data(), p1.data());
      Q[0] = P[0] + 2 * h; src.cstruct(Q.data(), p2.data());
      for (int c = 0; c < d * d; ++c)
        drJ[c] = (m2[c] - 8.0 * m1[c] + 8.0 * p1[c] - p2[c]) / (12.0 * h);
    }
    detail::radial_shape_block(src, P.data(), Sk);
    // psi = tangential block of nabla_r J: d_r J + [S, J] on tangential slots
    for (int i = 0; i < db; ++i)
      for (int j = 0; j < db; ++j) {
        double s = drJ[(i + 1) * d + (j + 1)];
        for (int m = 0; m < db; ++m)
          s += Sk[i * db + m] * Jk[(m + 1) * d + (j + 1)] -
               Sk[m * db + j] * Jk[(i + 1) * d + (m + 1)];
        Pk[i * db + j] = s;
      }
    std::copy(V, V + db * db, line.C.data() + static_cast<std::size_t>(k) * db * db);
  };

  // initial candidates: g0-orthonormal from permuted coordinate axes
  P[0] = chart.r_min;
  std::vector<double> g0(static_cast<std::size_t>(d) * d), g0t(static_cast<std::size_t>(db) * db);
  src.metric(P.data(), g0.data());
  for (int i = 0; i < db; ++i)
    for (int j = 0; j < db; ++j) g0t[i * db + j] = g0[(i + 1) * d + (j + 1)];
  std::vector<double> V = detail::gram_schmidt_frame(g0t.data(), db, seed_perm);

  record(0, V.data());
  for (int k = 1; k <= nseg; ++k) {
    const double ra = chart.r_min + seg * (k - 1);
    const double rb = chart.r_min + seg * k;
    transport_columns(src, base_point, ra, rb, opt.h_r, V.data(), db);
    record(k, V.data());
  }

  // orthonormality drift at the far end
  const double* gk = line.g_at(line.nsamples() - 1);
  double drift = 0.0;
  for (int a = 0; a < db; ++a)
    for (int b = 0; b < db; ++b) {
      double ip = 0.0;
      for (int i = 0; i < db; ++i)
        for (int j = 0; j < db; ++j)
          ip += gk[(i + 1) * d + (j + 1)] * V[i * db + a] * V[j * db + b];
      drift = std::max(drift, std::abs(ip - (a == b ? 1.0 : 0.0)));
    }
  line.drift = drift;
  if (drift > opt.drift_tol * std::max(1.0, chart.r_max - chart.r_min))
    throw std::runtime_error("sample_line: frame drift " + std::to_string(drift) +
                             " exceeds tolerance at r_max");
  return line;
}

// ---------------------------------------------------------------------------

/// beta_r(c_j) = g(J dr, C_j) for every candidate, with extrapolated limits.
struct BetaSeries {
  std::vector<double> r;
  std::vector<double> values;  // nsamples x db, row-major
  std::vector<double> limit;   // db
  double limit_norm = 0.0;     // ||beta||_{g0} = sqrt(sum limit^2)
  std::vector<double> decay;   // |beta_r - beta| per sample (max over candidates)

  int db() const { return static_cast<int>(limit.size()); }
  double value(std::size_t k, int j) const { return values[k * limit.size() + j]; }
};

inline BetaSeries beta_series(const LineRecord& line) {
  const int d = line.dim, db = line.db();
  BetaSeries out;
  out.r = line.r;
  out.values.assign(line.nsamples() * db, 0.0);
  for (std::size_t k = 0; k < line.nsamples(); ++k) {
    const double* g = line.g_at(k);
    const double* J = line.J_at(k);
    const double* C = line.C_at(k);
    // J dr = column 0 of J
    for (int j = 0; j < db; ++j) {
      double s = 0.0;
      for (int mu = 0; mu < d; ++mu)
        for (int i = 0; i < db; ++i)
          s += g[mu * d + (i + 1)] * J[mu * d + 0] * C[i * db + j];
      out.values[k * db + j] = s;
    }
  }
  out.limit.assign(db, 0.0);
  std::vector<double> comp(line.nsamples());
  for (int j = 0; j < db; ++j) {
    for (std::size_t k = 0; k < line.nsamples(); ++k) comp[k] = out.values[k * db + j];
    out.limit[j] = extrapolate_limit(out.r, comp, ExtrapMode::exp_fit).limit;
  }
  double n2 = 0.0;
  for (double v : out.limit) n2 += v * v;
  out.limit_norm = std::sqrt(n2);
  out.decay.assign(line.nsamples(), 0.0);
  for (std::size_t k = 0; k < line.nsamples(); ++k) {
    double m = 0.0;
    for (int j = 0; j < db; ++j)
      m = std::max(m, std::abs(out.values[k * db + j] - out.limit[j]));
    out.decay[k] = m;
  }
  return out;
}

/// e_0 = g0-dual of beta in the candidate basis: coefficients beta(c_j) on an
/// orthonormal frame. Fails when ||beta|| strays from 1.
inline std::vector<double> extract_e0(const BetaSeries& beta, double norm_tol = 1e-4) {
  if (beta.limit_norm < 1e-8)
    throw std::runtime_error("extract_e0: beta vanishes (degenerate input)");
  if (std::abs(beta.limit_norm - 1.0) > norm_tol)
    throw std::runtime_error("extract_e0: ||beta||_{g0} = " +
                             std::to_string(beta.limit_norm) + " deviates from 1");
  std::vector<double> coeff(beta.limit);
  for (double& c : coeff) c /= beta.limit_norm;
  return coeff;  // coefficients in the candidate basis; beta(e_0) > 0 by construction
}

// ---------------------------------------------------------------------------

/// Admissible frame over one base point: initial vectors {e_0,...,e_{2n}} and
/// the coefficient matrix M against the transported candidates, so that the
/// transported frame at sample k is E(k) = C(k) * M.
struct AdmissibleFrame {
  std::vector<double> base;
  std::vector<double> M;      // db x db, column j = e_j in candidate basis
  std::vector<double> init;   // db x db, coordinate components at r_min
  bool j_admissible = false;
  unsigned seed_perm = 0;

  int db = 0;
  /// coordinate components of E_j at sample k (columns)
  void frame_at(const LineRecord& line, std::size_t k, double* E) const {
    const double* C = line.C_at(k);
    for (int i = 0; i < db; ++i)
      for (int j = 0; j < db; ++j) {
        double s = 0.0;
        for (int m = 0; m < db; ++m) s += C[i * db + m] * M[m * db + j];
        E[i * db + j] = s;
      }
  }
};

/// Completes e_0 to a g0-orthonormal frame with e_j in ker(beta), j >= 1.
inline AdmissibleFrame admissible_frame(const LineRecord& line, const BetaSeries& beta,
                                        unsigned seed_perm = 0) {
  const int d = line.dim, db = line.db();
  const std::vector<double> e0c = extract_e0(beta);
  AdmissibleFrame out;
  out.base = line.base;
  out.db = db;
  out.seed_perm = seed_perm;
  // candidate-basis Gram-Schmidt is Euclidean: candidates are g0-orthonormal
  std::vector<double> eye(static_cast<std::size_t>(db) * db, 0.0);
  for (int i = 0; i < db; ++i) eye[i * db + i] = 1.0;
  out.M = detail::gram_schmidt_frame(eye.data(), db, seed_perm, e0c.data(), 1);
  // coordinate components at r_min
  out.init.assign(static_cast<std::size_t>(db) * db, 0.0);
  const double* C0 = line.C_at(0);
  for (int i = 0; i < db; ++i)
    for (int j = 0; j < db; ++j) {
      double s = 0.0;
      for (int m = 0; m < db; ++m) s += C0[i * db + m] * out.M[m * db + j];
      out.init[i * db + j] = s;
    }
  (void)d;
  return out;
}

/// Rebuilds the e_{j>=1} part so that consecutive pairs satisfy the J-pairing
/// estimate: e_{2k} is extracted from the limit of beta^{2k-1}_r(v) =
/// g(V, J E_{2k-1}) over the remaining ker(beta) subspace.
inline AdmissibleFrame j_admissible_frame(const LineRecord& line, const AdmissibleFrame& frame) {
  const int d = line.dim, db = line.db();
  const int n = (db - 1) / 2;
  AdmissibleFrame out = frame;
  // work in the candidate basis; column 0 (e_0) stays
  std::vector<double> M = frame.M;
  std::vector<std::vector<double>> taken;  // accepted columns 1..; candidate basis
  auto col = [&](std::vector<double>& m, int j) { return m.data() + 0 + j; };  // stride db
  (void)col;
  for (int pair = 0; pair < n; ++pair) {
    const int i1 = 1 + 2 * pair, i2 = i1 + 1;
    // re-orthonormalize column i1 against e_0 and accepted vectors (Euclidean
    // in the candidate basis)
    std::vector<double> u(db);
    for (int i = 0; i < db; ++i) u[i] = M[i * db + i1];
    auto project_out = [&](const double* w) {
      double p = 0.0;
      for (int i = 0; i < db; ++i) p += u[i] * w[i];
      for (int i = 0; i < db; ++i) u[i] -= p * w[i];
    };
    {
      std::vector<double> w(db);
      for (int i = 0; i < db; ++i) w[i] = M[i * db + 0];
      project_out(w.data());
      for (const auto& t : taken) project_out(t.data());
    }
    double n2 = 0.0;
    for (double c : u) n2 += c * c;
    if (n2 < 1e-12) throw std::runtime_error("j_admissible_frame: pairing degenerate at index " +
                                             std::to_string(i1));
    for (double& c : u) c /= std::sqrt(n2);
    for (int i = 0; i < db; ++i) M[i * db + i1] = u[i];
    taken.push_back(u);

    // beta^1-series against J E_{i1}: b_m(r) = g(C_m, J E_{i1})
    std::vector<double> series(line.nsamples());
    std::vector<double> limit(db, 0.0);
    for (int m = 0; m < db; ++m) {
      for (std::size_t k = 0; k < line.nsamples(); ++k) {
        const double* g = line.g_at(k);
        const double* J = line.J_at(k);
        const double* C = line.C_at(k);
        // E = C * u ; JE tangential and radial rows both enter g(C_m, JE)
        double JE[kMaxDim] = {0};
        for (int mu = 0; mu < d; ++mu) {
          double e = 0.0;
          for (int i = 0; i < db; ++i) {
            double Ei = 0.0;
            for (int mm = 0; mm < db; ++mm) Ei += C[i * db + mm] * u[mm];
            e += J[mu * d + (i + 1)] * Ei;
          }
          JE[mu] = e;
        }
        double s = 0.0;
        for (int mu = 0; mu < d; ++mu)
          for (int i = 0; i < db; ++i)
            s += g[mu * d + (i + 1)] * JE[mu] * C[i * db + m];
        series[k] = s;
      }
      limit[m] = extrapolate_limit(line.r, series, ExtrapMode::exp_fit).limit;
    }
    // e_{i2}: dual of the beta^1 limit within the remaining subspace
    std::vector<double> v(limit);
    {
      std::vector<double> w(db);
      for (int i = 0; i < db; ++i) w[i] = M[i * db + 0];
      double p = 0.0;
      for (int i = 0; i < db; ++i) p += v[i] * w[i];
      for (int i = 0; i < db; ++i) v[i] -= p * w[i];
      for (const auto& t : taken) {
        p = 0.0;
        for (int i = 0; i < db; ++i) p += v[i] * t[i];
        for (int i = 0; i < db; ++i) v[i] -= p * t[i];
      }
    }
    double vn2 = 0.0;
    for (double c : v) vn2 += c * c;
    if (vn2 < 1e-10)
      throw std::runtime_error("j_admissible_frame: beta^1 limit vanishes at index " +
                               std::to_string(i2));
    for (double& c : v) c /= std::sqrt(vn2);
    for (int i = 0; i < db; ++i) M[i * db + i2] = v[i];
    taken.push_back(v);
  }
  out.M = std::move(M);
  out.j_admissible = true;
  // refresh coordinate components
  const double* C0 = line.C_at(0);
  for (int i = 0; i < db; ++i)
    for (int j = 0; j < db; ++j) {
      double s = 0.0;
      for (int m = 0; m < db; ++m) s += C0[i * db + m] * out.M[m * db + j];
      out.init[i * db + j] = s;
    }
  return out;
}

}  // namespace carnot
