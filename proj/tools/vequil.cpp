// vequil: vector equilibrium problems on the real line.
//   check  — run the assumption checks of a problem config
//   solve  — check, discretize, minimize, certify, write artifacts
//   oracle — print a closed-form reference value

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <vequil/oracles.hpp>
#include <vequil/run.hpp>

int main(int argc, char** argv) {
  CLI::App app{"vector equilibrium problems: assumption checks, discretized solves, certification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::vector<int>> nodes;
  std::optional<double> gap_tol;
  std::optional<double> eq_tol;
  std::optional<unsigned> seed;
  bool force = false;
  bool overwrite = false;

  auto add_common = [&](CLI::App* sub, bool solver_flags) {
    sub->add_option("--config", config_path, "problem config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory for artifacts")->required();
    sub->add_flag("--overwrite", overwrite, "replace existing artifacts");
    if (solver_flags) {
      sub->add_option("--nodes", nodes, "grid cells: one value or one per component")
          ->delimiter(',');
      sub->add_option("--gap-tol", gap_tol, "relative Frank-Wolfe gap tolerance");
      sub->add_option("--eq-tol", eq_tol, "equilibrium certification tolerance");
      sub->add_option("--seed", seed, "recorded solver seed");
      sub->add_flag("--force", force, "run the pipeline even when assumptions fail");
    }
  };

  CLI::App* check = app.add_subcommand("check", "assumption report only");
  add_common(check, false);
  CLI::App* solve = app.add_subcommand("solve", "full pipeline");
  add_common(solve, true);

  CLI::App* oracle = app.add_subcommand("oracle", "closed-form reference values");
  oracle->require_subcommand(1);
  double oa = -1.0, ob = 1.0, ok = 0.5;
  int on = 4;
  bool oprime = false;
  CLI::App* o_interval =
      oracle->add_subcommand("interval", "minimal logarithmic energy of [a,b]");
  o_interval->add_option("--a", oa, "left endpoint")->required();
  o_interval->add_option("--b", ob, "right endpoint")->required();
  CLI::App* o_condenser = oracle->add_subcommand(
      "condenser", "energy of the condenser with plates [-1/2,-1/n] and [1/n,1/2]");
  o_condenser->add_option("--n", on, "geometry parameter (> 2)")->required();
  CLI::App* o_elliptic = oracle->add_subcommand("elliptic", "complete elliptic integral K(k)");
  o_elliptic->add_option("--k", ok, "modulus in [0, 1)")->required();
  o_elliptic->add_flag("--prime", oprime, "print K'(k) = K(sqrt(1 - k^2)) instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : vequil::kExitInputError;
  }

  try {
    if (*o_interval) {
      std::printf("%.17g\n", vequil::oracles::interval_energy(oa, ob));
      return 0;
    }
    if (*o_condenser) {
      std::printf("%.17g\n", vequil::oracles::condenser_energy(on));
      return 0;
    }
    if (*o_elliptic) {
      std::printf("%.17g\n", oprime ? vequil::oracles::elliptic_Kprime(ok)
                                    : vequil::oracles::elliptic_K(ok));
      return 0;
    }

    vequil::RunConfig cfg = vequil::parse_config(config_path);
    vequil::RunOverrides ov;
    ov.nodes = nodes;
    ov.gap_tol = gap_tol;
    ov.eq_tol = eq_tol;
    ov.seed = seed;
    ov.force = force;
    ov.overwrite = overwrite;
    if (*check) return vequil::run_check(std::move(cfg), out_dir, ov, std::cout);
    return vequil::run_solve(std::move(cfg), out_dir, ov, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return vequil::kExitInputError;
  }
}
