// carnot: boundary-at-infinity analysis of asymptotically complex hyperbolic
// metrics. Subcommands select which pipeline stages run; every run reads a
// JSON config and writes report.json plus plot-ready CSV series.
//
// Exit codes: 0 all enabled checks pass, 2 at least one check fails,
// 1 configuration or execution error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "carnot/run.hpp"

namespace {

int run_stages(const std::string& config_path, const std::string& out_dir, int seed,
               std::set<carnot::Stage> stages) {
  carnot::RunConfig cfg;
  try {
    cfg = carnot::parse_config_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  if (!stages.empty()) cfg.stages = std::move(stages);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seed >= 0) cfg.seed_perm = static_cast<unsigned>(seed);
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  carnot::RunReport rep;
  try {
    rep = carnot::run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "run error: " << e.what() << "\n";
    return 1;
  }
  for (const auto& [name, st] :
       {std::pair<const char*, const carnot::StageResult*>{"oracle", &rep.oracle},
        {"boundary", &rep.boundary},
        {"cr", &rep.cr},
        {"rates", &rep.rates}}) {
    if (st->ran)
      std::printf("%-8s %s  (%.1f ms)\n", name, st->pass ? "PASS" : "FAIL", st->wall_ms);
  }
  std::printf("verdict  %s\n", rep.pass ? "PASS" : "FAIL");
  return rep.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asymptotically complex hyperbolic boundary analysis"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  int seed = -1;
  app.add_option("--config", config_path, "path to the JSON run configuration");
  app.add_option("--out", out_dir, "output directory (overrides output.directory)");
  app.add_option("--seed", seed, "Gram-Schmidt seed permutation (overrides seed block)");

  auto* validate = app.add_subcommand("validate-model", "model invariants and exactness oracle");
  auto* boundary = app.add_subcommand("boundary", "recover eta0, gamma, xi0, phi");
  auto* crcheck = app.add_subcommand("cr-check", "contact, Levi, Reeb and Nijenhuis checks");
  auto* rates = app.add_subcommand("rates", "decay-rate fits against the predicted rate map");
  auto* runall = app.add_subcommand("run-all", "all stages");
  auto* compare = app.add_subcommand("compare", "componentwise diff of two run directories");
  std::string dir_a, dir_b;
  compare->add_option("dir_a", dir_a, "first run directory")->required();
  compare->add_option("dir_b", dir_b, "second run directory")->required();

  CLI11_PARSE(app, argc, argv);

  using carnot::Stage;
  try {
    if (compare->parsed()) {
      carnot::CompareSummary s = carnot::compare_runs(dir_a, dir_b);
      std::cout << s.to_json().dump(2) << "\n";
      return 0;
    }
    if (config_path.empty()) {
      std::cerr << "config error: --config is required\n";
      return 1;
    }
    if (validate->parsed()) return run_stages(config_path, out_dir, seed, {Stage::oracle});
    if (boundary->parsed()) return run_stages(config_path, out_dir, seed, {Stage::boundary});
    if (crcheck->parsed())
      return run_stages(config_path, out_dir, seed, {Stage::boundary, Stage::cr});
    if (rates->parsed())
      return run_stages(config_path, out_dir, seed, {Stage::boundary, Stage::rates});
    if (runall->parsed())
      return run_stages(config_path, out_dir, seed,
                        {Stage::oracle, Stage::boundary, Stage::cr, Stage::rates});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
