#pragma once

// Built-in metric / almost-complex-structure families.
//
// Exact complex hyperbolic models (n = 1, holomorphic sectional curvature -1,
// so sectional curvature ranges over [-1, -1/4]):
//   cph_horo : g = dr^2 + e^{2r} theta (x) theta + e^r (dx^2 + dy^2) on
//              coordinates (r, t, x, y), theta = dt + (x dy - y dx)/2.
//   cph_polar: g = dr^2 + sinh^2(r) s1 (x) s1 + 4 sinh^2(r/2)(s2^2 + s3^2)
//              over an exponential chart of the unit 3-sphere with
//              left-invariant coframe normalized so d s1 = 2 s2 ^ s3.
// Perturbation families with tunable decay exponent a:
//   perturbed_metric: cph_horo tangential blocks scaled by
//              1 + eps e^{-ar} w(x^1), J rescaled to stay compatible.
//   rotated_J: cph_horo metric, J conjugated by the isometry rotating the
//              orthonormal plane field (f_1, f_2) by eps e^{-ar}.
//
// Every component is written once as a template over the scalar type; jets
// give exact first and second derivatives for the analytic path, and plain
// doubles feed the mesh-free finite-difference fallback.

#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "carnot/chart.hpp"
#include "carnot/jet.hpp"
#include "carnot/linalg.hpp"
#include "carnot/tensor.hpp"

namespace carnot {

enum class ModelKind { cph_polar, cph_horo, perturbed_metric, rotated_J };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::cph_polar: return "cph_polar";
    case ModelKind::cph_horo: return "cph_horo";
    case ModelKind::perturbed_metric: return "perturbed_metric";
    case ModelKind::rotated_J: return "rotated_J";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "cph_polar") return ModelKind::cph_polar;
  if (s == "cph_horo") return ModelKind::cph_horo;
  if (s == "perturbed_metric") return ModelKind::perturbed_metric;
  if (s == "rotated_J") return ModelKind::rotated_J;
  throw std::invalid_argument("model.kind unknown: " + s);
}

struct ModelSpec {
  ModelKind kind = ModelKind::cph_horo;
  int n = 1;            // complex boundary dimension; real dimension 2n+2
  double a = 0.0;       // decay exponent (perturbation kinds)
  double eps = 0.0;     // perturbation amplitude
  double bump = 0.5;    // w(x^1) = 1 + bump*sin(x^1)
  bool analytic_derivatives = true;

  bool exact_kind() const {
    return kind == ModelKind::cph_horo || kind == ModelKind::cph_polar;
  }
  void validate() const {
    if (n < 1) throw std::invalid_argument("model.n must be >= 1");
    if (exact_kind()) {
      if (eps != 0.0) throw std::invalid_argument("model.eps must be 0 for cph_* kinds");
    } else {
      if (a <= 0.0) throw std::invalid_argument("model.a must be > 0 for perturbation kinds");
      if (std::abs(eps) >= 0.5) throw std::invalid_argument("model.|eps| must be < 0.5");
    }
    if (n != 1) throw std::invalid_argument("model: only n = 1 models ship");
  }
};

namespace detail {

template <int N> inline double value_of(const Jet<N>& x) { return x.v; }
inline double value_of(double x) { return x; }

// ---- cph_horo ------------------------------------------------------------
// coords (r, t, x, y); theta = dt + (x dy - y dx)/2

template <class S>
inline void horo_theta(const S* P, S* th) {
  th[0] = S(0.0);
  th[1] = S(1.0);
  th[2] = -0.5 * P[3];
  th[3] = 0.5 * P[2];
}

template <class S>
inline void horo_metric(const S* P, S* g) {
  using std::exp;
  const S er = exp(P[0]);
  const S e2r = er * er;
  S th[4];
  horo_theta(P, th);
  for (int i = 0; i < 16; ++i) g[i] = S(0.0);
  g[0] = S(1.0);
  for (int a = 1; a < 4; ++a)
    for (int b = 1; b < 4; ++b) {
      g[a * 4 + b] = e2r * (th[a] * th[b]);
      if (a == b && a >= 2) g[a * 4 + b] = g[a * 4 + b] + er;
    }
}

template <class S>
inline void horo_cstruct(const S* P, S* J) {
  using std::exp;
  const S er = exp(P[0]);
  const S emr = exp(-P[0]);
  const S x = P[2], y = P[3];
  for (int i = 0; i < 16; ++i) J[i] = S(0.0);
  // columns are images of (dr, dt, dx, dy) coordinate vectors
  J[1 * 4 + 0] = emr;             // J dr = e^{-r} dt
  J[0 * 4 + 1] = -er;             // J dt = -e^{r} dr
  J[0 * 4 + 2] = 0.5 * (y * er);  // J dx = (y/2)e^r dr - (x/2) dt + dy
  J[1 * 4 + 2] = -0.5 * x;
  J[3 * 4 + 2] = S(1.0);
  J[0 * 4 + 3] = -0.5 * (x * er); // J dy = -(x/2)e^r dr - (y/2) dt - dx
  J[1 * 4 + 3] = -0.5 * y;
  J[2 * 4 + 3] = S(-1.0);
}

// ---- perturbed_metric ------------------------------------------------------

template <class S>
inline S perturb_factor(const S* P, double a, double eps, double bump) {
  using std::exp;
  using std::sin;
  return 1.0 + (eps * exp(-a * P[0])) * (1.0 + bump * sin(P[1]));
}

template <class S>
inline void perturbed_metric_eval(const S* P, double a, double eps, double bump, S* g) {
  horo_metric(P, g);
  const S F = perturb_factor(P, a, eps, bump);
  for (int aa = 1; aa < 4; ++aa)
    for (int b = 1; b < 4; ++b) g[aa * 4 + b] = g[aa * 4 + b] * F;
}

template <class S>
inline void perturbed_cstruct_eval(const S* P, double a, double eps, double bump, S* J) {
  using std::sqrt;
  horo_cstruct(P, J);
  const S sF = sqrt(perturb_factor(P, a, eps, bump));
  // row r rescales by sqrt(F) on tangential columns, column r by 1/sqrt(F);
  // this keeps J orthogonal for the scaled tangential block.
  for (int c = 1; c < 4; ++c) J[0 * 4 + c] = J[0 * 4 + c] * sF;
  J[1 * 4 + 0] = J[1 * 4 + 0] / sF;
}

// ---- rotated_J -------------------------------------------------------------

template <class S>
inline void rotated_cstruct_eval(const S* P, double a, double eps, S* J) {
  using std::cos;
  using std::exp;
  using std::sin;
  S Jh[16];
  horo_cstruct(P, Jh);
  const S al = eps * exp(-a * P[0]);
  const S sa = sin(al), ca1 = 1.0 - cos(al);
  // generator of the rotation in the plane (f1, f2):
  // A = f2 (x) e^r theta - f1 (x) e^{r/2} dx
  const S erh = exp(0.5 * P[0]);
  const S emrh = exp(-0.5 * P[0]);
  S th[4];
  horo_theta(P, th);
  const S f2[4] = {S(0.0), 0.5 * P[3], S(1.0), S(0.0)};  // e^{r/2} f2 components
  S A[16];
  for (int m = 0; m < 4; ++m)
    for (int nu = 0; nu < 4; ++nu) A[m * 4 + nu] = erh * th[nu] * f2[m];
  A[1 * 4 + 2] = A[1 * 4 + 2] - emrh;  // -e^{r/2} dx (x) f1, f1 = e^{-r} dt
  S A2[16];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      S s = S(0.0);
      for (int k = 0; k < 4; ++k) s = s + A[i * 4 + k] * A[k * 4 + j];
      A2[i * 4 + j] = s;
    }
  S R[16], Ri[16];
  for (int i = 0; i < 16; ++i) {
    const double id = (i % 5 == 0) ? 1.0 : 0.0;
    R[i] = id + sa * A[i] + ca1 * A2[i];
    Ri[i] = id - sa * A[i] + ca1 * A2[i];
  }
  S T[16];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      S s = S(0.0);
      for (int k = 0; k < 4; ++k) s = s + Jh[i * 4 + k] * Ri[k * 4 + j];
      T[i * 4 + j] = s;
    }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      S s = S(0.0);
      for (int k = 0; k < 4; ++k) s = s + R[i * 4 + k] * T[k * 4 + j];
      J[i * 4 + j] = s;
    }
}

// ---- cph_polar -------------------------------------------------------------
// Exponential chart of S^3 at the identity quaternion. With s = |x|^2 the
// coframe is sigma^i = B'_{ij} dx^j, B' = -(I - a(s) K + b(s) K^2), K = [x]_x,
// normalized so that d sigma^1 = 2 sigma^2 ^ sigma^3 (cyclic).

inline void polar_ab(double s, double& A, double& Ap, double& App,
                     double& B, double& Bp, double& Bpp) {
  if (s < 1e-2) {
    A = 1 - s / 3 + 2 * s * s / 45 - s * s * s / 315 + 2 * s * s * s * s / 14175 -
        2 * s * s * s * s * s / 467775;
    Ap = -1.0 / 3 + 4 * s / 45 - s * s / 105 + 8 * s * s * s / 14175 -
         2 * s * s * s * s / 93555;
    App = 4.0 / 45 - 2 * s / 105 + 24 * s * s / 14175 - 8 * s * s * s / 93555;
    B = 2.0 / 3 - 2 * s / 15 + 4 * s * s / 315 - 2 * s * s * s / 2835 +
        4 * s * s * s * s / 155925 - 4 * s * s * s * s * s / 6081075;
    Bp = -2.0 / 15 + 8 * s / 315 - 2 * s * s / 945 + 16 * s * s * s / 155925 -
         4 * s * s * s * s / 1216215;
    Bpp = 8.0 / 315 - 4 * s / 945 + 48 * s * s / 155925 - 16 * s * s * s / 1216215;
    return;
  }
  const double rs = std::sqrt(s);
  const double c = std::cos(2 * rs), si = std::sin(2 * rs);
  const double s2 = s * s, s3 = s2 * s;
  A = (1 - c) / (2 * s);
  Ap = (rs * si + c - 1) / (2 * s2);
  App = (c - si / (2 * rs)) / (2 * s2) - (rs * si + c - 1) / s3;
  B = 1 / s - si / (2 * s * rs);
  Bp = -1 / s2 - c / (2 * s2) + 3 * si / (4 * s2 * rs);
  Bpp = 2 / s3 + si / (2 * s2 * rs) + 7 * c / (4 * s3) - 15 * si / (8 * s3 * rs);
}

template <class S>
inline void polar_coframe(const S* P, S* B) {
  const S x1 = P[1], x2 = P[2], x3 = P[3];
  const S s = x1 * x1 + x2 * x2 + x3 * x3;
  double av, apv, appv, bv, bpv, bppv;
  polar_ab(value_of(s), av, apv, appv, bv, bpv, bppv);
  const S a = compose(s, av, apv, appv);
  const S b = compose(s, bv, bpv, bppv);
  S K[9] = {S(0.0), -x3, x2, x3, S(0.0), -x1, -x2, x1, S(0.0)};
  S K2[9];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      S t = S(0.0);
      for (int k = 0; k < 3; ++k) t = t + K[i * 3 + k] * K[k * 3 + j];
      K2[i * 3 + j] = t;
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double id = (i == j) ? 1.0 : 0.0;
      B[i * 3 + j] = -(id - a * K[i * 3 + j] + b * K2[i * 3 + j]);
    }
}

template <class S>
inline void polar_metric(const S* P, S* g) {
  using std::sinh;
  const S shr = sinh(P[0]);
  const S shh = 2.0 * sinh(0.5 * P[0]);
  const S w1 = shr * shr, w2 = shh * shh;
  S B[9];
  polar_coframe(P, B);
  for (int i = 0; i < 16; ++i) g[i] = S(0.0);
  g[0] = S(1.0);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      g[(a + 1) * 4 + (b + 1)] = w1 * (B[0 + a] * B[0 + b]) +
                                 w2 * (B[3 + a] * B[3 + b] + B[6 + a] * B[6 + b]);
}

template <class S>
inline void polar_cstruct(const S* P, S* J) {
  using std::sinh;
  const S shr = sinh(P[0]);
  S B[9], C[9];
  polar_coframe(P, B);
  mat_inverse(B, C, 3);  // dual frame X_k = C[:,k]
  for (int i = 0; i < 16; ++i) J[i] = S(0.0);
  // J dr = X1 / sinh r ; J X1 = -sinh r dr ; J X2 = X3 ; J X3 = -X2
  for (int m = 0; m < 3; ++m) J[(m + 1) * 4 + 0] = C[m * 3 + 0] / shr;
  for (int a = 0; a < 3; ++a) {
    J[0 * 4 + (a + 1)] = -(shr * B[0 + a]);
    for (int m = 0; m < 3; ++m)
      J[(m + 1) * 4 + (a + 1)] = B[3 + a] * C[m * 3 + 2] - B[6 + a] * C[m * 3 + 1];
  }
}

}  // namespace detail

/// Pointwise source of metric and almost-complex-structure components.
/// Points are given in chart coordinates P = (r, x^1, ..., x^{2n+1}).
class MetricSource {
 public:
  virtual ~MetricSource() = default;
  virtual int dim() const = 0;
  virtual void metric(const double* P, double* g) const = 0;
  virtual void cstruct(const double*, double*) const {
    throw std::runtime_error("MetricSource: no almost complex structure");
  }
  virtual bool analytic() const { return false; }
  virtual void metric_jet(const double*, Jet4*) const {
    throw std::runtime_error("MetricSource: analytic derivatives unavailable");
  }
  virtual void cstruct_jet(const double*, Jet4*) const {
    throw std::runtime_error("MetricSource: analytic derivatives unavailable");
  }
  virtual double fd_step() const { return 1e-3; }
};

class Model final : public MetricSource {
 public:
  Model(ModelSpec spec, double h_x = 1e-3) : spec_(spec), h_x_(h_x) { spec_.validate(); }

  const ModelSpec& spec() const { return spec_; }
  int dim() const override { return 2 * spec_.n + 2; }
  bool analytic() const override { return spec_.analytic_derivatives; }
  double fd_step() const override { return h_x_; }

  void metric(const double* P, double* g) const override { eval_metric(P, g); }
  void cstruct(const double* P, double* J) const override { eval_cstruct(P, J); }
  void metric_jet(const double* P, Jet4* g) const override {
    Jet4 Pj[4];
    for (int i = 0; i < 4; ++i) Pj[i] = Jet4::variable(P[i], i);
    eval_metric(Pj, g);
  }
  void cstruct_jet(const double* P, Jet4* J) const override {
    Jet4 Pj[4];
    for (int i = 0; i < 4; ++i) Pj[i] = Jet4::variable(P[i], i);
    eval_cstruct(Pj, J);
  }

 private:
  template <class S>
  void eval_metric(const S* P, S* g) const {
    switch (spec_.kind) {
      case ModelKind::cph_horo:
      case ModelKind::rotated_J: detail::horo_metric(P, g); break;
      case ModelKind::perturbed_metric:
        detail::perturbed_metric_eval(P, spec_.a, spec_.eps, spec_.bump, g);
        break;
      case ModelKind::cph_polar: detail::polar_metric(P, g); break;
    }
  }
  template <class S>
  void eval_cstruct(const S* P, S* J) const {
    switch (spec_.kind) {
      case ModelKind::cph_horo: detail::horo_cstruct(P, J); break;
      case ModelKind::perturbed_metric:
        detail::perturbed_cstruct_eval(P, spec_.a, spec_.eps, spec_.bump, J);
        break;
      case ModelKind::rotated_J: detail::rotated_cstruct_eval(P, spec_.a, spec_.eps, J); break;
      case ModelKind::cph_polar: detail::polar_cstruct(P, J); break;
    }
  }

  ModelSpec spec_;
  double h_x_;
};

/// Samples g and J on the chart grid. Checks chart consistency, positive
/// definiteness (through Metric::build) and the compatibility identities
/// J^2 = -Id, g(J.,J.) = g to 1e-12.
inline std::pair<Metric, TensorField> build_model(const ModelSpec& spec, const Chart& chart) {
  spec.validate();
  chart.validate();
  const int d = 2 * spec.n + 2;
  if (chart.dim() != d)
    throw std::invalid_argument("build_model: chart.dim_boundary inconsistent with model.n");
  if (spec.kind == ModelKind::cph_polar) {
    for (const auto& b : chart.base_box)
      if (std::max(std::abs(b[0]), std::abs(b[1])) > 0.5)
        throw std::invalid_argument("build_model: cph_polar base_box radius must be <= 0.5");
  }
  Model model(spec, chart.h_x);
  const Grid grid = chart.grid4();
  TensorField gf(grid, d, {kCov, kCov}, Sym::symmetric_pairs);
  TensorField Jf(grid, d, {kCon, kCov});
  std::vector<double> P(static_cast<std::size_t>(grid.naxes()));
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.point(p, P.data());
    model.metric(P.data(), gf.at(p));
    model.cstruct(P.data(), Jf.at(p));
  }
  Metric m = Metric::build(std::move(gf), /*expect_gauss_form=*/true);
  // compatibility checks
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double* g = m.g.at(p);
    const double* J = Jf.at(p);
    double scale = 0.0;
    for (int c = 0; c < d * d; ++c) scale = std::max(scale, std::abs(g[c]));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double j2 = 0.0, comp = 0.0;
        for (int k = 0; k < d; ++k) {
          j2 += J[i * d + k] * J[k * d + j];
          for (int l = 0; l < d; ++l) comp += g[k * d + l] * J[k * d + i] * J[l * d + j];
        }
        if (std::abs(j2 + (i == j ? 1.0 : 0.0)) > 1e-11)
          throw std::runtime_error("build_model: J^2 + Id exceeds tolerance");
        if (std::abs(comp - g[i * d + j]) > 1e-11 * std::max(1.0, scale))
          throw std::runtime_error("build_model: g(J.,J.) != g beyond tolerance");
      }
  }
  return {std::move(m), std::move(Jf)};
}

}  // namespace carnot
