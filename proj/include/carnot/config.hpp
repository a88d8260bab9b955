#pragma once

// Run configuration: a single JSON document, echoed verbatim into every
// report so a run can be reproduced from its own output.

#include <json.hpp>

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "carnot/chart.hpp"
#include "carnot/model.hpp"

namespace carnot {

using Json = nlohmann::json;

enum class Stage { oracle, boundary, cr, rates };

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::oracle: return "oracle";
    case Stage::boundary: return "boundary";
    case Stage::cr: return "cr";
    case Stage::rates: return "rates";
  }
  return "?";
}

struct Tolerances {
  double oracle_analytic = 1e-8;
  double oracle_fd = 1e-4;
  double cr_gap = 1e-3;
  double levi_min = 0.5;
  double contact = 0.1;
  double phi_identity = 1e-5;
  double evolution = 1e-5;
  double boundary_invariants = 1e-6;  // eta0(xi0), gamma(xi0,xi0), kernel eigenvalue
  double recon_rel = 1e-8;
  double drift = 1e-8;
  double rate_band_rel = 0.15;
  double rate_band_abs = 0.05;
  double series_floor = 1e-7;  // below this a deviation series counts as converged
};

struct FaultInjection {
  double scale_gamma = 1.0;
  bool flip_phi = false;
  bool any() const { return scale_gamma != 1.0 || flip_phi; }
};

struct RunConfig {
  ModelSpec model;
  Chart chart;
  double h_r = 1e-2;
  double sample_dr = 0.1;
  std::set<Stage> stages = {Stage::oracle, Stage::boundary, Stage::cr, Stage::rates};
  bool ode_check = true;
  int workers = 0;
  FaultInjection inject;
  Tolerances tol;
  std::string out_dir = ".";
  bool write_json = true;
  bool write_csv = true;
  unsigned seed_perm = 0;
  double rate_r_lo = 6.0;
  double rate_r_hi = 12.0;
  Json echo;  // original document

  void validate() const {
    model.validate();
    chart.validate();
    if (h_r <= 0.0) throw std::invalid_argument("chart.h_r must be positive");
    if (sample_dr < h_r) throw std::invalid_argument("pipeline.sample_dr must be >= chart.h_r");
    if (stages.count(Stage::cr) && !stages.count(Stage::boundary))
      throw std::invalid_argument("pipeline.stages: cr requires boundary");
    if (rate_r_hi <= rate_r_lo) throw std::invalid_argument("rates.r_hi must exceed rates.r_lo");
    if (tol.cr_gap <= 0 || tol.phi_identity <= 0 || tol.drift <= 0)
      throw std::invalid_argument("tolerances must be positive");
  }
};

namespace detail {

template <class T>
inline void maybe(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline RunConfig parse_config(const Json& j) {
  RunConfig cfg;
  cfg.echo = j;
  if (!j.contains("model") || !j.contains("chart"))
    throw std::invalid_argument("config: model and chart blocks are required");

  const Json& jm = j.at("model");
  cfg.model.kind = model_kind_from_string(jm.at("kind").get<std::string>());
  detail::maybe(jm, "n", cfg.model.n);
  detail::maybe(jm, "a", cfg.model.a);
  detail::maybe(jm, "eps", cfg.model.eps);
  detail::maybe(jm, "bump", cfg.model.bump);
  detail::maybe(jm, "analytic_derivatives", cfg.model.analytic_derivatives);

  const Json& jc = j.at("chart");
  cfg.chart.dim_boundary = 2 * cfg.model.n + 1;
  detail::maybe(jc, "r_min", cfg.chart.r_min);
  detail::maybe(jc, "r_max", cfg.chart.r_max);
  if (jc.contains("base_box")) {
    cfg.chart.base_box.clear();
    for (const auto& b : jc.at("base_box"))
      cfg.chart.base_box.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  } else {
    cfg.chart.base_box.assign(cfg.chart.dim_boundary, {-0.25, 0.25});
  }
  if (jc.contains("grid")) {
    cfg.chart.grid_counts = jc.at("grid").get<std::vector<int>>();
  } else {
    cfg.chart.grid_counts.assign(cfg.chart.dim(), 5);
  }
  detail::maybe(jc, "h_x", cfg.chart.h_x);
  detail::maybe(jc, "h_r", cfg.h_r);

  if (j.contains("pipeline")) {
    const Json& jp = j.at("pipeline");
    if (jp.contains("stages")) {
      cfg.stages.clear();
      for (const auto& s : jp.at("stages")) {
        const std::string name = s.get<std::string>();
        if (name == "all") {
          cfg.stages = {Stage::oracle, Stage::boundary, Stage::cr, Stage::rates};
        } else if (name == "oracle") cfg.stages.insert(Stage::oracle);
        else if (name == "boundary") cfg.stages.insert(Stage::boundary);
        else if (name == "cr") cfg.stages.insert(Stage::cr);
        else if (name == "rates") cfg.stages.insert(Stage::rates);
        else throw std::invalid_argument("pipeline.stages: unknown stage " + name);
      }
    }
    detail::maybe(jp, "sample_dr", cfg.sample_dr);
    detail::maybe(jp, "ode_check", cfg.ode_check);
    detail::maybe(jp, "workers", cfg.workers);
    if (jp.contains("inject")) {
      detail::maybe(jp.at("inject"), "scale_gamma", cfg.inject.scale_gamma);
      detail::maybe(jp.at("inject"), "flip_phi", cfg.inject.flip_phi);
    }
  }
  if (j.contains("tolerances")) {
    const Json& jt = j.at("tolerances");
    detail::maybe(jt, "oracle_analytic", cfg.tol.oracle_analytic);
    detail::maybe(jt, "oracle_fd", cfg.tol.oracle_fd);
    detail::maybe(jt, "cr_gap", cfg.tol.cr_gap);
    detail::maybe(jt, "levi_min", cfg.tol.levi_min);
    detail::maybe(jt, "contact", cfg.tol.contact);
    detail::maybe(jt, "phi_identity", cfg.tol.phi_identity);
    detail::maybe(jt, "evolution", cfg.tol.evolution);
    detail::maybe(jt, "boundary_invariants", cfg.tol.boundary_invariants);
    detail::maybe(jt, "recon_rel", cfg.tol.recon_rel);
    detail::maybe(jt, "drift", cfg.tol.drift);
    detail::maybe(jt, "rate_band_rel", cfg.tol.rate_band_rel);
    detail::maybe(jt, "rate_band_abs", cfg.tol.rate_band_abs);
    detail::maybe(jt, "series_floor", cfg.tol.series_floor);
  }
  if (j.contains("output")) {
    const Json& jo = j.at("output");
    detail::maybe(jo, "directory", cfg.out_dir);
    if (jo.contains("formats")) {
      cfg.write_json = cfg.write_csv = false;
      for (const auto& f : jo.at("formats")) {
        const std::string name = f.get<std::string>();
        if (name == "json") cfg.write_json = true;
        else if (name == "csv") cfg.write_csv = true;
        else if (name == "both") cfg.write_json = cfg.write_csv = true;
        else throw std::invalid_argument("output.formats: unknown format " + name);
      }
    }
  }
  if (j.contains("seed")) detail::maybe(j.at("seed"), "frame_permutation", cfg.seed_perm);
  if (j.contains("rates")) {
    detail::maybe(j.at("rates"), "r_lo", cfg.rate_r_lo);
    detail::maybe(j.at("rates"), "r_hi", cfg.rate_r_hi);
  }
  cfg.validate();
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  Json j = Json::parse(in);
  return parse_config(j);
}

}  // namespace carnot
