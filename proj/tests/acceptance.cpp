// Acceptance suite: every criterion prints one PASS/FAIL line; the process
// exits nonzero if any criterion fails. argv[1] is the CLI binary (used by
// the exit-code criterion).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "carnot/cr.hpp"
#include "carnot/run.hpp"

using namespace carnot;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("CRITERION %d %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

Chart chart7() {
  Chart c;
  c.dim_boundary = 3;
  c.r_min = 0.5;
  c.r_max = 12.0;
  c.base_box = {{-0.25, 0.25}, {-0.25, 0.25}, {-0.25, 0.25}};
  c.grid_counts = {24, 7, 7, 7};
  return c;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

BoundaryData boundary_for(ModelKind kind, double a, double eps, unsigned seed = 0,
                          bool ode = false) {
  ModelSpec s;
  s.kind = kind;
  s.a = a;
  s.eps = eps;
  Model m(s);
  Chart c = chart7();
  BoundaryOptions opt;
  opt.seed_perm = seed;
  opt.ode_check = ode;
  return boundary_data(m, c, opt);
}

// --- criterion 1: exact-model oracle --------------------------------------

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (auto kind : {ModelKind::cph_horo, ModelKind::cph_polar}) {
    for (bool analytic : {true, false}) {
      ModelSpec s;
      s.kind = kind;
      s.analytic_derivatives = analytic;
      const double tol = analytic ? 1e-8 : 1e-4;
      OracleReport rep = model_oracle(s, chart7(), tol);
      pass = pass && rep.pass;
      detail += std::string(to_string(kind)) + (analytic ? "/analytic " : "/fd ") +
                fmt(rep.max_r_minus_r0) + "," + fmt(rep.max_nabla_j) + "  ";
    }
  }
  const double secs =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
          .count() / 1000.0;
  pass = pass && secs < 60.0;
  report(1, pass, detail + "(" + fmt(secs) + " s)");
}

// --- criterion 2: R0 special values ----------------------------------------

void criterion2() {
  ModelSpec s;
  s.kind = ModelKind::cph_horo;
  Model m(s);
  GeometryEvaluator ev(m);
  PointGeometry pg;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> U(-0.2, 0.2);
  double worst_holo = 0.0, worst_real = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    double P[4] = {0.5 + 11.0 * (trial / 99.0), U(rng), U(rng), U(rng)};
    ev.eval(P, pg, kGeomMetric | kGeomJ | kGeomR0);
    auto ip = [&](const double* a, const double* b) {
      double t = 0;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) t += pg.g[i * 4 + j] * a[i] * b[j];
      return t;
    };
    auto r0_of = [&](const double* a, const double* b) {
      double t = 0;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          for (int k = 0; k < 4; ++k)
            for (int l = 0; l < 4; ++l)
              t += pg.r0[((i * 4 + j) * 4 + k) * 4 + l] * a[i] * b[j] * a[k] * b[l];
      return t;
    };
    double u[4] = {U(rng) + 0.4, U(rng), U(rng), U(rng)};
    const double nu = std::sqrt(ip(u, u));
    for (auto& c : u) c /= nu;
    double v[4];
    for (int i = 0; i < 4; ++i) {
      v[i] = 0;
      for (int j = 0; j < 4; ++j) v[i] += pg.Jm[i * 4 + j] * u[j];
    }
    worst_holo = std::max(worst_holo, std::abs(r0_of(u, v) + 1.0));
    double w[4] = {U(rng), U(rng), U(rng) + 0.5, U(rng)};
    const double pu = ip(w, u), pv = ip(w, v);
    for (int i = 0; i < 4; ++i) w[i] -= pu * u[i] + pv * v[i];
    const double nw = std::sqrt(ip(w, w));
    for (auto& c : w) c /= nw;
    worst_real = std::max(worst_real, std::abs(r0_of(u, w) + 0.25));
  }
  report(2, worst_holo <= 1e-12 && worst_real <= 1e-12,
         "holomorphic " + fmt(worst_holo) + ", totally real " + fmt(worst_real));
}

// --- criterion 3: shape operator and Riccati -------------------------------

void criterion3() {
  bool pass = true;
  std::string detail;
  {
    ModelSpec s;
    s.kind = ModelKind::cph_polar;
    Model m(s);
    double worst = 0.0;
    for (double r : {1.0, 2.0, 4.0}) {
      Grid g;
      g.axes = {{r, r + 0.5, 5}, {-0.2, 0.2, 5}, {-0.2, 0.2, 5}, {-0.2, 0.2, 5}};
      ShapeField sf = shape_operator(m, g);
      const double big = 1.0 / std::tanh(r), sml = 0.5 / std::tanh(0.5 * r);
      for (std::size_t p = 0; p < 125; ++p) {
        worst = std::max(worst, std::abs(sf.eigenvalues[p * 3 + 2] - big));
        worst = std::max(worst, std::abs(sf.eigenvalues[p * 3 + 0] - sml));
        worst = std::max(worst, std::abs(sf.eigenvalues[p * 3 + 1] - sml));
      }
    }
    pass = pass && worst < 1e-6;
    detail += "polar eig " + fmt(worst) + "  ";
  }
  {
    ModelSpec s;
    s.kind = ModelKind::cph_horo;
    Model m(s);
    Chart c = chart7();
    c.grid_counts = {7, 5, 5, 5};
    ShapeField sf = shape_operator(m, c.grid4());
    double worst = 0.0;
    for (std::size_t p = 0; p < sf.grid.size(); ++p) {
      worst = std::max(worst, std::abs(sf.eigenvalues[p * 3 + 2] - 1.0));
      worst = std::max(worst, std::abs(sf.eigenvalues[p * 3 + 0] - 0.5));
    }
    pass = pass && worst < 1e-8;
    detail += "horo eig " + fmt(worst) + "  ";

    ResidualSeries res = riccati_residual(m, c, 1e-2, 7);
    double m0 = 0;
    for (double v : res.value) m0 = std::max(m0, v);
    // convergence order measured on cph_polar (r-dependent shape components)
    // at coarse steps where the stencil truncation dominates
    ModelSpec sp;
    sp.kind = ModelKind::cph_polar;
    Model mp(sp);
    ResidualSeries coarse = riccati_residual(mp, c, 0.2, 7);
    ResidualSeries fine = riccati_residual(mp, c, 0.1, 7);
    // compare at the midpoint sample: its radius is the same for both step
    // sizes, while the first samples sit at r_min + 2h and move with h into
    // the large-derivative region near the core
    const std::size_t mid = coarse.value.size() / 2;
    const double ratio = coarse.value[mid] / fine.value[mid];
    pass = pass && m0 < 1e-6 && ratio > 8.0 && ratio < 32.0;
    detail += "riccati " + fmt(m0) + " ratio " + fmt(ratio);
  }
  report(3, pass, detail);
}

// --- criterion 4: boundary recovery -----------------------------------------

void criterion4() {
  bool pass = true;
  std::string detail;
  {
    BoundaryData bd = boundary_for(ModelKind::cph_horo, 0, 0);
    double e = 0;
    for (std::size_t p = 0; p < bd.base_grid.size(); ++p) {
      double x[3];
      bd.base_grid.point(p, x);
      const double th[3] = {1.0, -0.5 * x[2], 0.5 * x[1]};
      for (int i = 0; i < 3; ++i) e = std::max(e, std::abs(bd.eta0.at(p)[i] - th[i]));
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          e = std::max(e, std::abs(bd.gamma.at(p)[i * 3 + j] -
                                   ((i == j && i >= 1) ? 1.0 : 0.0)));
      e = std::max(e, std::abs(bd.xi0.at(p)[0] - 1.0));
      e = std::max(e, std::abs(bd.xi0.at(p)[1]));
      e = std::max(e, std::abs(bd.xi0.at(p)[2]));
    }
    pass = pass && e < 1e-6;
    detail += "horo " + fmt(e) + "  ";
  }
  {
    BoundaryData bd = boundary_for(ModelKind::cph_polar, 0, 0);
    double e = 0;
    for (std::size_t p = 0; p < bd.base_grid.size(); ++p) {
      double P[4] = {0, 0, 0, 0};
      bd.base_grid.point(p, P + 1);
      double B[9];
      detail::polar_coframe(P, B);
      for (int i = 0; i < 3; ++i)
        e = std::max(e, std::abs(bd.eta0.at(p)[i] - 0.5 * B[0 + i]));
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          e = std::max(e, std::abs(bd.gamma.at(p)[i * 3 + j] -
                                   (B[3 + i] * B[3 + j] + B[6 + i] * B[6 + j])));
    }
    pass = pass && e < 1e-5;
    detail += "polar " + fmt(e);
  }
  report(4, pass, detail);
}

// --- criterion 5: phi identities --------------------------------------------

void criterion5() {
  bool pass = true;
  std::string detail;
  struct Cfg { ModelKind kind; double a, eps; const char* name; };
  for (const Cfg& c : {Cfg{ModelKind::cph_horo, 0, 0, "horo"},
                       Cfg{ModelKind::cph_polar, 0, 0, "polar"},
                       Cfg{ModelKind::perturbed_metric, 1.25, 0.1, "pert"},
                       Cfg{ModelKind::rotated_J, 1.25, 0.1, "rot"}}) {
    BoundaryData bd = boundary_for(c.kind, c.a, c.eps);
    const double worst =
        std::max({bd.max_phi_sq_identity, bd.max_phi_cube_identity, bd.max_eta0_phi,
                  bd.max_gamma_phi_invariance});
    const double evol =
        *std::max_element(bd.evolution_residual.begin(), bd.evolution_residual.end());
    pass = pass && worst <= 1e-5 && evol <= 1e-5;
    detail += std::string(c.name) + " " + fmt(worst) + "/" + fmt(evol) + "  ";
  }
  report(5, pass, detail);
}

// --- criterion 6: CR verdict -------------------------------------------------

void criterion6() {
  bool pass = true;
  std::string detail;
  struct Cfg { ModelKind kind; double a, eps; const char* name; };
  for (const Cfg& c : {Cfg{ModelKind::cph_horo, 0, 0, "horo"},
                       Cfg{ModelKind::cph_polar, 0, 0, "polar"},
                       Cfg{ModelKind::rotated_J, 1.25, 0.1, "rot"}}) {
    BoundaryData bd = boundary_for(c.kind, c.a, c.eps);
    CRReport rep = cr_checks(bd);
    const bool ok = rep.contact_pass && rep.levi_gap <= 1e-3 && rep.reeb_gap <= 1e-3 &&
                    rep.nijenhuis_gap <= 1e-3 && rep.levi_eigen_min > 0.5;
    pass = pass && ok;
    detail += std::string(c.name) + (ok ? " ok(" : " BAD(") + fmt(rep.levi_gap) + "," +
              fmt(rep.nijenhuis_gap) + "," + fmt(rep.levi_eigen_min) + ")  ";
  }
  report(6, pass, detail);
}

// --- criterion 7: rate reproduction ------------------------------------------

void criterion7() {
  bool pass = true;
  std::string detail;
  struct Probe { ModelKind kind; double a; const char* name; };
  for (const Probe& pr : {Probe{ModelKind::perturbed_metric, 1.25, "pert1.25"},
                          Probe{ModelKind::perturbed_metric, 2.0, "pert2.0"},
                          Probe{ModelKind::rotated_J, 1.25, "rot1.25"},
                          Probe{ModelKind::rotated_J, 2.0, "rot2.0"}}) {
    ModelSpec s;
    s.kind = pr.kind;
    s.a = pr.a;
    s.eps = 0.1;
    Model m(s);
    Chart c = chart7();
    c.grid_counts = {24, 5, 5, 5};  // rate fits do not need spatial stencil margins
    DeficitOptions dopt;
    dopt.r_samples = 47;
    DeficitSeries ds = deficits(m, c, dopt);
    BoundaryOptions bopt;
    bopt.ode_check = false;
    BoundaryData bd = boundary_data(m, c, bopt);
    ExpansionResidual er = expansion_residual(m, c, bd, 47);

    auto check = [&](const char* q, const std::vector<double>& r,
                     const std::vector<double>& v) {
      double vmax = 0;
      for (std::size_t i = 0; i < r.size(); ++i)
        if (r[i] >= 6.0 && r[i] <= 12.0) vmax = std::max(vmax, v[i]);
      if (vmax < 1e-7) return true;  // converged below the measurement floor
      DecayFit fit = fit_decay(r, v, true, 6.0, 12.0);
      RegimeVerdict ver = classify_regime(pr.a, fit, q);
      if (!ver.pass)
        detail += std::string(pr.name) + ":" + q + " slope " + fmt(fit.slope) + " vs " +
                  fmt(ver.predicted) + "  ";
      return ver.pass;
    };
    bool ok = check("alch", ds.r, ds.alch);
    ok = check("eta0", bd.r, bd.dev_eta0) && ok;
    ok = check("gamma", bd.r, bd.dev_gamma) && ok;
    ok = check("shape_limit", bd.r, bd.dev_shape) && ok;
    if (!er.below_floor) {
      RegimeVerdict ver = classify_regime(pr.a, er.fit, "g_ghat");
      if (!ver.pass)
        detail += std::string(pr.name) + ":g_ghat slope " + fmt(er.fit.slope) + "  ";
      ok = ok && ver.pass;
    }
    pass = pass && ok;
    if (ok) detail += std::string(pr.name) + " ok  ";
  }
  report(7, pass, detail);
}

// --- criterion 8: frame independence ------------------------------------------

void criterion8() {
  BoundaryData a = boundary_for(ModelKind::cph_polar, 0, 0, 0);
  BoundaryData b = boundary_for(ModelKind::cph_polar, 0, 0, 1);
  double diff = 0.0;
  auto acc = [&](const TensorField& fa, const TensorField& fb) {
    for (std::size_t i = 0; i < fa.data.size(); ++i)
      diff = std::max(diff, std::abs(fa.data[i] - fb.data[i]));
  };
  acc(a.eta0, b.eta0);
  acc(a.gamma, b.gamma);
  acc(a.xi0, b.xi0);
  acc(a.phi, b.phi);
  report(8, diff <= 1e-6, "seed 0 vs 1 max component diff " + fmt(diff));
}

// --- criterion 9: fault injection ----------------------------------------------

void criterion9(const char* cli) {
  namespace fs = std::filesystem;
  fs::create_directories("acc_tmp");
  Json j;
  j["model"] = {{"kind", "cph_horo"}};
  j["chart"] = {{"r_min", 0.5},
                {"r_max", 12.0},
                {"base_box", {{-0.25, 0.25}, {-0.25, 0.25}, {-0.25, 0.25}}},
                {"grid", {5, 5, 5, 5}},
                {"h_x", 1e-3},
                {"h_r", 1e-2}};
  j["output"] = {{"directory", "acc_tmp/fault"}};
  bool pass = true;
  std::string detail;
  {
    Json f = j;
    f["pipeline"] = {{"stages", {"boundary", "cr"}}, {"inject", {{"scale_gamma", 2.0}}}};
    std::ofstream("acc_tmp/fault_gamma.json") << f.dump();
    const int rc = std::system((std::string(cli) +
                                " cr-check --config acc_tmp/fault_gamma.json"
                                " > acc_tmp/out1.txt 2>&1").c_str());
    pass = pass && WEXITSTATUS(rc) == 2;
    detail += "scale_gamma exit " + std::to_string(WEXITSTATUS(rc)) + "  ";
  }
  {
    Json f = j;
    f["pipeline"] = {{"stages", {"boundary", "cr"}}, {"inject", {{"flip_phi", true}}}};
    f["output"] = {{"directory", "acc_tmp/fault2"}};
    std::ofstream("acc_tmp/fault_phi.json") << f.dump();
    const int rc = std::system((std::string(cli) +
                                " cr-check --config acc_tmp/fault_phi.json"
                                " > acc_tmp/out2.txt 2>&1").c_str());
    pass = pass && WEXITSTATUS(rc) == 2;
    detail += "flip_phi exit " + std::to_string(WEXITSTATUS(rc));
  }
  report(9, pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  if (argc > 1) criterion9(argv[1]);
  else report(9, false, "CLI binary path not supplied");
  std::printf("%s (%d failure%s)\n", g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures == 0 ? 0 : 1;
}
