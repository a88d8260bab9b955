#pragma once

// Pipeline orchestration: executes the configured stages in dependency
// order, persists report.json / series CSVs / boundary_data.json, and rolls
// the per-stage verdicts into a single exit status.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "carnot/config.hpp"
#include "carnot/cr.hpp"

namespace carnot {

inline constexpr int kReportSchemaVersion = 1;

struct StageResult {
  bool ran = false;
  bool pass = true;
  double wall_ms = 0.0;
  Json detail;
};

struct RunReport {
  Json config_echo;
  StageResult oracle, boundary, cr, rates;
  bool pass = false;
  std::string error;

  Json to_json() const {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["config"] = config_echo;
    auto stage = [](const StageResult& s) {
      Json o;
      o["ran"] = s.ran;
      o["pass"] = s.pass;
      o["wall_ms"] = s.wall_ms;
      o["detail"] = s.detail;
      return o;
    };
    j["stages"]["oracle"] = stage(oracle);
    j["stages"]["boundary"] = stage(boundary);
    j["stages"]["cr"] = stage(cr);
    j["stages"]["rates"] = stage(rates);
    j["verdict"] = pass ? "PASS" : "FAIL";
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

namespace detail {

inline std::string fmt17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_series_csv(const std::string& dir, const std::string& name,
                             const std::vector<double>& r, const std::vector<double>& v) {
  std::ofstream out(dir + "/series_" + name + ".csv");
  out << "r,value\n";
  for (std::size_t i = 0; i < r.size(); ++i)
    out << fmt17(r[i]) << "," << fmt17(v[i]) << "\n";
}

inline Json field_to_json(const TensorField& f) {
  Json j;
  j["shape"] = Json::array();
  for (const auto& ax : f.grid.axes) {
    j["shape"].push_back(ax.count);
    j["axes"].push_back({{"lo", ax.lo}, {"hi", ax.hi}, {"count", ax.count}});
  }
  j["rank"] = f.rank();
  j["dim"] = f.dim;
  j["components"] = f.data;
  return j;
}

inline Json fit_to_json(const DecayFit& f) {
  return Json{{"slope", f.slope},
              {"intercept", f.intercept},
              {"r_window", {f.r_lo, f.r_hi}},
              {"rms_residual", f.rms_residual},
              {"log_corrected", f.log_corrected},
              {"regime", to_string(f.regime)}};
}

inline Json verdict_to_json(const RegimeVerdict& v, const DecayFit& fit, bool below_floor) {
  Json j;
  j["pass"] = v.pass || below_floor;
  j["below_floor"] = below_floor;
  j["predicted"] = v.predicted;
  j["band"] = v.band;
  j["measured"] = below_floor ? Json() : Json(fit.slope);
  j["note"] = below_floor ? "series below measurement floor (decays faster than predicted)"
                          : v.note;
  return j;
}

inline double series_max(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

// grid-corner component tables for the report summary
inline Json corner_table(const BoundaryData& bd) {
  Json out = Json::array();
  const Grid& g = bd.base_grid;
  const int db = bd.db;
  const std::size_t ncorners = std::size_t(1) << db;
  for (std::size_t c = 0; c < ncorners; ++c) {
    std::vector<int> idx(db);
    for (int k = 0; k < db; ++k) idx[k] = (c >> k) & 1 ? g.axes[k].count - 1 : 0;
    const std::size_t p = g.flat(idx);
    Json row;
    std::vector<double> x(db);
    for (int k = 0; k < db; ++k) x[k] = g.axes[k].coord(idx[k]);
    row["x"] = x;
    row["eta0"] = std::vector<double>(bd.eta0.at(p), bd.eta0.at(p) + db);
    row["gamma"] = std::vector<double>(bd.gamma.at(p), bd.gamma.at(p) + db * db);
    row["xi0"] = std::vector<double>(bd.xi0.at(p), bd.xi0.at(p) + db);
    row["phi"] = std::vector<double>(bd.phi.at(p), bd.phi.at(p) + db * db);
    out.push_back(row);
  }
  return out;
}

}  // namespace detail

/// Executes the configured pipeline. Writes artifacts into cfg.out_dir when
/// requested and returns the in-memory report.
inline RunReport run(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  cfg.validate();
  RunReport rep;
  rep.config_echo = cfg.echo.is_null() ? Json::object() : cfg.echo;
  if (cfg.write_json || cfg.write_csv) fs::create_directories(cfg.out_dir);

  Model model(cfg.model, cfg.chart.h_x);
  auto clock = []() { return std::chrono::steady_clock::now(); };
  auto ms = [](auto a, auto b) {
    return std::chrono::duration_cast<std::chrono::microseconds>(b - a).count() / 1000.0;
  };

  BoundaryData bd;
  bool have_bd = false;

  if (cfg.stages.count(Stage::oracle)) {
    auto t0 = clock();
    StageResult& st = rep.oracle;
    st.ran = true;
    // grid sampling enforces positive definiteness and the J identities
    build_model(cfg.model, cfg.chart);
    st.detail["model_invariants"] = "pass";
    if (cfg.model.exact_kind()) {
      const double tol = cfg.model.analytic_derivatives ? cfg.tol.oracle_analytic
                                                        : cfg.tol.oracle_fd;
      OracleReport orep = model_oracle(cfg.model, cfg.chart, tol);
      st.detail["max_r_minus_r0"] = orep.max_r_minus_r0;
      st.detail["max_nabla_j"] = orep.max_nabla_j;
      st.detail["tolerance"] = orep.tolerance;
      st.pass = orep.pass;
    } else {
      st.detail["note"] = "exactness oracle applies to cph_* kinds only";
    }
    st.wall_ms = ms(t0, clock());
  }

  if (cfg.stages.count(Stage::boundary)) {
    auto t0 = clock();
    StageResult& st = rep.boundary;
    st.ran = true;
    BoundaryOptions bopt;
    bopt.radial.h_r = cfg.h_r;
    bopt.radial.sample_dr = cfg.sample_dr;
    bopt.radial.drift_tol = cfg.tol.drift;
    bopt.seed_perm = cfg.seed_perm;
    bopt.ode_check = cfg.ode_check;
    bopt.workers = cfg.workers;
    bopt.fit_r_lo = cfg.rate_r_lo;
    bopt.fit_r_hi = cfg.rate_r_hi;
    bd = boundary_data(model, cfg.chart, bopt);
    have_bd = true;
    if (cfg.inject.any()) {
      for (std::size_t p = 0; p < bd.gamma.npoints(); ++p) {
        for (std::size_t c = 0; c < bd.gamma.ncomp(); ++c)
          bd.gamma.at(p)[c] *= cfg.inject.scale_gamma;
        if (cfg.inject.flip_phi)
          for (std::size_t c = 0; c < bd.phi.ncomp(); ++c) bd.phi.at(p)[c] = -bd.phi.at(p)[c];
      }
      st.detail["inject"] = {{"scale_gamma", cfg.inject.scale_gamma},
                             {"flip_phi", cfg.inject.flip_phi}};
    }
    // gamma must stay positive semi-definite with a single kernel direction
    if (bd.max_gamma_kernel_eigenvalue > cfg.tol.boundary_invariants ||
        bd.min_gamma_second_eigenvalue < -cfg.tol.boundary_invariants)
      throw std::runtime_error("boundary: gamma violates positive semi-definiteness");
    st.detail["eta0_of_xi0_gap"] = bd.max_eta0_of_xi0_gap;
    st.detail["gamma_xi0_xi0"] = bd.max_gamma_xi0;
    st.detail["xi0_route_gap"] = bd.max_xi0_route_gap;
    st.detail["phi_sq_identity"] = bd.max_phi_sq_identity;
    st.detail["phi_cube_identity"] = bd.max_phi_cube_identity;
    st.detail["eta0_phi"] = bd.max_eta0_phi;
    st.detail["gamma_phi_invariance"] = bd.max_gamma_phi_invariance;
    st.detail["evolution_residual"] = detail::series_max(bd.evolution_residual);
    st.detail["recon_rel"] = detail::series_max(bd.recon_rel);
    st.detail["ode_residual"] = detail::series_max(bd.ode_residual);
    st.detail["beta_norm_gap"] = bd.max_beta_norm_gap;
    st.detail["beta_sum_gap"] = bd.max_beta_sum_gap;
    st.detail["max_drift"] = bd.max_drift;
    st.detail["gamma_kernel_eigenvalue"] = bd.max_gamma_kernel_eigenvalue;
    st.detail["gamma_second_eigenvalue"] = bd.min_gamma_second_eigenvalue;
    st.detail["min_coframe_sigma"] = bd.min_coframe_sigma;
    st.detail["pinching_lambda"] = bd.pinching_lambda;
    st.detail["pinching_pass"] = bd.pinching_pass;
    st.detail["extrap_residual"] = bd.max_extrap_residual;
    st.detail["corner_table"] = detail::corner_table(bd);
    st.pass = bd.max_eta0_of_xi0_gap <= cfg.tol.boundary_invariants &&
              bd.max_beta_norm_gap <= cfg.tol.boundary_invariants &&
              bd.max_gamma_xi0 <= cfg.tol.boundary_invariants &&
              bd.max_phi_sq_identity <= cfg.tol.phi_identity &&
              bd.max_phi_cube_identity <= cfg.tol.phi_identity &&
              bd.max_eta0_phi <= cfg.tol.phi_identity &&
              bd.max_gamma_phi_invariance <= cfg.tol.phi_identity &&
              detail::series_max(bd.evolution_residual) <= cfg.tol.evolution &&
              detail::series_max(bd.recon_rel) <= cfg.tol.recon_rel &&
              bd.pinching_pass;
    st.wall_ms = ms(t0, clock());

    if (cfg.write_csv) {
      detail::write_series_csv(cfg.out_dir, "eta0_dev", bd.r, bd.dev_eta0);
      detail::write_series_csv(cfg.out_dir, "gamma_dev", bd.r, bd.dev_gamma);
      detail::write_series_csv(cfg.out_dir, "xi0_dev", bd.r, bd.dev_xi0);
      detail::write_series_csv(cfg.out_dir, "phi_dev", bd.r, bd.dev_phi);
      detail::write_series_csv(cfg.out_dir, "shape_limit_dev", bd.r, bd.dev_shape);
      detail::write_series_csv(cfg.out_dir, "beta_dev", bd.r, bd.beta_dev);
      detail::write_series_csv(cfg.out_dir, "evolution_residual", bd.r, bd.evolution_residual);
    }
    if (cfg.write_json) {
      Json bj;
      bj["schema_version"] = kReportSchemaVersion;
      bj["eta0"] = detail::field_to_json(bd.eta0);
      bj["gamma"] = detail::field_to_json(bd.gamma);
      bj["xi0"] = detail::field_to_json(bd.xi0);
      bj["phi"] = detail::field_to_json(bd.phi);
      bj["g0"] = detail::field_to_json(bd.g0);
      std::ofstream out(cfg.out_dir + "/boundary_data.json");
      out << bj.dump(2) << "\n";
    }
  }

  if (cfg.stages.count(Stage::cr)) {
    auto t0 = clock();
    StageResult& st = rep.cr;
    st.ran = true;
    CROptions copt;
    copt.tol_gap = cfg.tol.cr_gap;
    copt.tol_levi_min = cfg.tol.levi_min;
    copt.tol_contact = cfg.tol.contact;
    CRReport cr = cr_checks(bd, copt);
    st.detail["contact_min_abs"] = cr.contact_min_abs;
    st.detail["contact_pass"] = cr.contact_pass;
    st.detail["levi_gap"] = cr.levi_gap;
    st.detail["reeb_gap"] = cr.reeb_gap;
    st.detail["nijenhuis_gap"] = cr.nijenhuis_gap;
    st.detail["levi_eigen_min"] = cr.levi_eigen_min;
    st.detail["phi_first_diff"] = cr.phi_first_diff;
    st.detail["phi_smooth"] = cr.phi_smooth;
    st.detail["regularity"] =
        cr.phi_smooth ? "C1-consistent (bounded first differences)"
                      : "first differences exceed the smoothness budget";
    st.pass = cr.verdict;

    ExpansionResidual er = expansion_residual(model, cfg.chart, bd,
                                              std::max(cfg.chart.grid_counts[0], 47),
                                              cfg.rate_r_lo, cfg.rate_r_hi);
    st.detail["g_ghat_max"] = detail::series_max(er.value);
    st.detail["g_ghat_below_floor"] = er.below_floor;
    if (!er.below_floor) st.detail["g_ghat_fit"] = detail::fit_to_json(er.fit);
    if (cfg.write_csv) detail::write_series_csv(cfg.out_dir, "g_ghat", er.r, er.value);
    if (!cfg.model.exact_kind() && !er.below_floor) {
      RegimeVerdict v = classify_regime(cfg.model.a, er.fit, "g_ghat", cfg.tol.rate_band_rel,
                                        cfg.tol.rate_band_abs);
      st.detail["g_ghat_verdict"] = detail::verdict_to_json(v, er.fit, false);
      st.pass = st.pass && v.pass;
    }
    st.wall_ms = ms(t0, clock());
  }

  if (cfg.stages.count(Stage::rates)) {
    auto t0 = clock();
    StageResult& st = rep.rates;
    st.ran = true;
    DeficitOptions dopt;
    dopt.r_samples = std::max(cfg.chart.grid_counts[0],
                              static_cast<int>((cfg.chart.r_max - cfg.chart.r_min) / 0.25) + 1);
    dopt.with_alch_plus = true;
    dopt.with_ak_plus = true;
    DeficitSeries ds = deficits(model, cfg.chart, dopt);
    if (cfg.write_csv) {
      detail::write_series_csv(cfg.out_dir, "alch", ds.r, ds.alch);
      detail::write_series_csv(cfg.out_dir, "ak", ds.r, ds.ak);
      detail::write_series_csv(cfg.out_dir, "alch_plus", ds.r, ds.alch_plus);
      detail::write_series_csv(cfg.out_dir, "ak_plus", ds.r, ds.ak_plus);
    }
    double sec_lo = 1e300, sec_hi = -1e300;
    for (std::size_t i = 0; i < ds.r.size(); ++i) {
      sec_lo = std::min(sec_lo, ds.sec_min[i]);
      sec_hi = std::max(sec_hi, ds.sec_max[i]);
    }
    st.detail["radial_sec_range"] = {sec_lo, sec_hi};

    auto table = Json::object();
    auto fit_series = [&](const std::string& name, const std::vector<double>& rr,
                          const std::vector<double>& vv) {
      Json entry;
      const double vmax_window = [&]() {
        double m = 0.0;
        for (std::size_t i = 0; i < rr.size(); ++i)
          if (rr[i] >= cfg.rate_r_lo && rr[i] <= cfg.rate_r_hi) m = std::max(m, vv[i]);
        return m;
      }();
      const bool below = vmax_window < cfg.tol.series_floor;
      entry["max_in_window"] = vmax_window;
      entry["below_floor"] = below;
      if (!below) {
        DecayFit fit = fit_decay(rr, vv, true, cfg.rate_r_lo, cfg.rate_r_hi);
        entry["fit"] = detail::fit_to_json(fit);
        if (!cfg.model.exact_kind()) {
          RegimeVerdict v = classify_regime(cfg.model.a, fit, name, cfg.tol.rate_band_rel,
                                            cfg.tol.rate_band_abs);
          entry["verdict"] = detail::verdict_to_json(v, fit, false);
          st.pass = st.pass && v.pass;
        }
      } else if (!cfg.model.exact_kind()) {
        DecayFit dummy;
        RegimeVerdict v;
        v.predicted = predicted_rate(name, cfg.model.a);
        entry["verdict"] = detail::verdict_to_json(v, dummy, true);
      }
      table[name] = entry;
    };
    fit_series("alch", ds.r, ds.alch);
    fit_series("ak", ds.r, ds.ak);
    if (have_bd) {
      fit_series("eta0", bd.r, bd.dev_eta0);
      fit_series("gamma", bd.r, bd.dev_gamma);
      fit_series("xi0", bd.r, bd.dev_xi0);
      fit_series("phi", bd.r, bd.dev_phi);
      fit_series("shape_limit", bd.r, bd.dev_shape);
      fit_series("beta", bd.r, bd.beta_dev);
    }
    st.detail["fits"] = table;
    st.wall_ms = ms(t0, clock());
  }

  rep.pass = (!rep.oracle.ran || rep.oracle.pass) && (!rep.boundary.ran || rep.boundary.pass) &&
             (!rep.cr.ran || rep.cr.pass) && (!rep.rates.ran || rep.rates.pass);

  if (cfg.write_json) {
    std::ofstream out(cfg.out_dir + "/report.json");
    out << rep.to_json().dump(2) << "\n";
  }
  return rep;
}

// ---------------------------------------------------------------------------

struct CompareSummary {
  double eta0 = 0.0, gamma = 0.0, xi0 = 0.0, phi = 0.0;
  double cr_gaps = 0.0;
  double max_diff() const { return std::max({eta0, gamma, xi0, phi}); }
  Json to_json() const {
    return Json{{"eta0", eta0}, {"gamma", gamma}, {"xi0", xi0},
                {"phi", phi},   {"cr_gaps", cr_gaps}};
  }
};

/// Componentwise max differences of BoundaryData fields and CR gaps between
/// two run directories. Model and chart blocks must agree (seed may differ).
inline CompareSummary compare_runs(const std::string& dir_a, const std::string& dir_b) {
  auto load = [](const std::string& dir, const char* name) {
    std::ifstream in(dir + "/" + name);
    if (!in) throw std::invalid_argument("compare: cannot open " + dir + "/" + name);
    return Json::parse(in);
  };
  Json ra = load(dir_a, "report.json"), rb = load(dir_b, "report.json");
  Json ca = ra.at("config"), cb = rb.at("config");
  for (const char* block : {"model", "chart"}) {
    if (ca.value(block, Json::object()) != cb.value(block, Json::object()))
      throw std::invalid_argument(std::string("compare: incomparable configs (") + block +
                                  " blocks differ)");
  }
  Json ba = load(dir_a, "boundary_data.json"), bb = load(dir_b, "boundary_data.json");
  CompareSummary out;
  auto diff_field = [&](const char* name) {
    const auto& va = ba.at(name).at("components");
    const auto& vb = bb.at(name).at("components");
    if (va.size() != vb.size()) throw std::invalid_argument("compare: field shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i)
      m = std::max(m, std::abs(va[i].get<double>() - vb[i].get<double>()));
    return m;
  };
  out.eta0 = diff_field("eta0");
  out.gamma = diff_field("gamma");
  out.xi0 = diff_field("xi0");
  out.phi = diff_field("phi");
  for (const char* gap : {"levi_gap", "reeb_gap", "nijenhuis_gap"}) {
    const Json& da = ra.at("stages").at("cr").at("detail");
    const Json& db_ = rb.at("stages").at("cr").at("detail");
    if (da.contains(gap) && db_.contains(gap))
      out.cr_gaps = std::max(out.cr_gaps,
                             std::abs(da.at(gap).get<double>() - db_.at(gap).get<double>()));
  }
  return out;
}

}  // namespace carnot
