// Command line front end: convergence tables, simulations and diagnostics.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tfac/caputo_kernels.hpp"
#include "tfac/experiments.hpp"
#include "tfac/soe.hpp"

namespace fs = std::filesystem;
using namespace tfac;

namespace {

struct Overrides {
  std::string config_path;
  double alpha = 0, sigma = 0, T = 0, T0 = 0, eps_soe = 0;
  std::vector<double> gamma;
  std::vector<std::size_t> bigN;
  std::size_t bigM = 0, N0 = 0;
  std::string mode, kind, out;
  bool adaptive = false;
  std::uint64_t seed = 0;
  int table = 0;
  std::string forcing, forcing_point;
};

struct Flags {
  CLI::Option *alpha{}, *sigma{}, *gamma{}, *bigN{}, *bigM{}, *T{}, *T0{}, *N0{}, *eps{}, *mode{},
      *adaptive{}, *seed{}, *out{}, *table{}, *kind{}, *forcing{}, *forcing_point{};
};

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidParameter("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentConfig resolve(const std::string& default_kind, const Overrides& o, const Flags& f) {
  ExperimentConfig c = default_config(f.kind && f.kind->count() ? o.kind : default_kind);
  if (!o.config_path.empty()) c = parse_config(read_file(o.config_path), c);
  if (f.table && f.table->count()) {
    const auto preset = table_preset(o.table);
    c.table = o.table;
    c.sigma = preset.sigma;
    c.gammas = preset.gammas;
  }
  if (f.alpha->count()) c.alpha = o.alpha;
  if (f.sigma && f.sigma->count()) c.sigma = o.sigma;
  if (f.gamma->count()) {
    c.gamma = o.gamma.front();
    c.gammas = o.gamma;
  }
  if (f.bigN->count()) {
    c.n = o.bigN.front();
    c.ns = o.bigN;
  }
  if (f.bigM->count()) c.m = o.bigM;
  if (f.T->count()) c.final_time = o.T;
  if (f.T0->count()) c.t0 = o.T0;
  if (f.N0->count()) c.n0 = o.N0;
  if (f.eps->count()) c.soe_eps = o.eps_soe;
  if (f.mode->count()) c.mode = o.mode == "fast" ? HistoryMode::fast : HistoryMode::direct;
  if (f.adaptive && f.adaptive->count()) c.adaptive = o.adaptive;
  if (f.seed->count()) c.seed = o.seed;
  if (f.out->count()) c.out = o.out;
  if (f.forcing && f.forcing->count()) c.forcing = o.forcing;
  if (f.forcing_point && f.forcing_point->count()) c.forcing_point = o.forcing_point;
  validate(c);
  return c;
}

void add_common(CLI::App* cmd, Overrides& o, Flags& f) {
  cmd->add_option("--config", o.config_path, "JSON config file (flags override it)");
  f.alpha = cmd->add_option("--alpha", o.alpha, "fractional order in (0,1)");
  f.gamma = cmd->add_option("--gamma", o.gamma, "grading parameter(s)");
  f.bigN = cmd->add_option("--bigN", o.bigN, "number of time cells (list for converge)");
  f.bigM = cmd->add_option("--bigM", o.bigM, "grid points per direction");
  f.T = cmd->add_option("--T", o.T, "final time");
  f.T0 = cmd->add_option("--T0", o.T0, "end of the graded start");
  f.N0 = cmd->add_option("--N0", o.N0, "cells in the graded start");
  f.eps = cmd->add_option("--eps-soe", o.eps_soe, "SOE tolerance");
  f.mode = cmd->add_option("--mode", o.mode, "history back end")->check(CLI::IsMember({"direct", "fast"}));
  f.seed = cmd->add_option("--seed", o.seed, "random seed");
  f.out = cmd->add_option("--out", o.out, "output directory");
}

void print_table(const ConvergenceTable& t) {
  std::cout << std::setw(6) << "gamma" << std::setw(6) << "N" << std::setw(12) << "tau"
            << std::setw(12) << "e(N)" << std::setw(8) << "order" << '\n';
  for (const auto& r : t.rows) {
    std::cout << std::setw(6) << r.gamma << std::setw(6) << r.n << std::scientific
              << std::setprecision(2) << std::setw(12) << r.tau << std::setw(12) << r.error
              << std::fixed << std::setw(8);
    if (std::isnan(r.order))
      std::cout << "-";
    else
      std::cout << r.order;
    std::cout << std::defaultfloat << std::setprecision(6) << '\n';
  }
  for (std::size_t g = 0; g < t.ls_order.size(); ++g)
    std::cout << "gamma " << t.config.gammas[g] << ": least-squares order " << std::fixed
              << std::setprecision(2) << t.ls_order[g] << ", expected " << t.expected[g]
              << std::defaultfloat << std::setprecision(6) << '\n';
}

int cmd_converge(const ExperimentConfig& c) {
  auto cc = to_convergence(c);
  const auto table = convergence_study(cc, [](const ConvergenceRow& r) {
    std::cerr << "gamma " << r.gamma << " N " << r.n << " error " << r.error << '\n';
  });
  fs::create_directories(c.out);
  std::ofstream f(fs::path(c.out) / "orders.csv");
  write_config_header(f, c);
  write_orders_csv(f, table);
  print_table(table);
  return 0;
}

int cmd_simulate(const ExperimentConfig& c) {
  const auto s = run_simulation(c, c.out);
  std::cout << "steps " << s.steps << " (adaptive " << s.adaptive_steps << "), t = " << s.final_time
            << ", max norm " << s.final_maxnorm << ", energy " << s.final_energy
            << ", largest max norm " << s.max_maxnorm << '\n';
  if (s.bound_violations > 0)
    std::cout << s.bound_violations << " steps exceeded the sufficient step bound\n";
  return 0;
}

int cmd_kernels(const std::vector<double>& alphas, std::size_t meshes, std::size_t max_n,
                std::uint64_t seed, const std::string& out) {
  bool all_ok = true;
  for (double alpha : alphas) {
    std::size_t failures = 0;
    double worst_lower = 1e300, worst_upper = 1e300, worst_mono = 1e300, worst_gap = 1e300;
    for (std::size_t i = 0; i < meshes; ++i) {
      const std::size_t n = 2 + (seed + i) % (max_n - 1);
      const TimeMesh mesh = random_ratio_mesh(1.0, n, seed * 7919 + i);
      const auto kernels = all_alikhanov_kernels(mesh, alpha);
      const auto rep = check_kernel_properties(kernels, mesh);
      if (!rep.all_ok()) ++failures;
      worst_lower = std::min(worst_lower, rep.lower.worst_margin);
      worst_upper = std::min(worst_upper, rep.upper.worst_margin);
      worst_mono = std::min(worst_mono, rep.monotone.worst_margin);
      worst_gap = std::min(worst_gap, rep.theta_gap.worst_margin);
      if (i == 0 && !out.empty()) {
        fs::create_directories(out);
        std::ofstream f(fs::path(out) / "kernels.csv");
        write_kernels_csv(f, kernels);
      }
    }
    std::cout << "alpha " << alpha << ": " << meshes << " meshes, " << failures
              << " with violations; worst margins lower " << worst_lower << ", upper "
              << worst_upper << ", monotone " << worst_mono << ", theta-gap " << worst_gap << '\n';
    all_ok = all_ok && failures == 0;
  }
  return all_ok ? 0 : 1;
}

int cmd_soe(double alpha, double eps, double dt, double T, std::size_t samples, const std::string& out) {
  const SoeModel m = build_soe(alpha, eps, dt, T);
  const double err = soe_max_error(m, samples);
  std::cout << "terms " << m.size() << ", max error " << err << " on " << samples
            << " points, tolerance " << eps << '\n';
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream f(fs::path(out) / "soe.csv");
    write_soe_csv(f, m);
  }
  return err <= eps ? 0 : 1;
}

int cmd_mesh(const ExperimentConfig& c) {
  const TimeMesh mesh = simulation_mesh(c);
  const auto rep = check_m2(mesh, c.gamma);
  std::cout << "cells " << mesh.size() << ", max step " << rep.max_step << ", max ratio "
            << rep.max_ratio << ", M1 " << (rep.m1_ok ? "ok" : "violated") << " ("
            << rep.m1_violations << " violations), M2 constants C1 " << rep.m2_c1 << " C2 "
            << rep.m2_c2 << '\n';
  fs::create_directories(c.out);
  std::ofstream f(fs::path(c.out) / "mesh.csv");
  write_config_header(f, c);
  write_mesh_csv(f, mesh);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-fractional Allen-Cahn solver"};
  app.require_subcommand(1);

  Overrides conv_o, sim_o, mesh_o;
  Flags conv_f, sim_f, mesh_f;

  auto* converge = app.add_subcommand("converge", "temporal convergence table for the smooth test problem");
  add_common(converge, conv_o, conv_f);
  conv_f.sigma = converge->add_option("--sigma", conv_o.sigma, "regularity of the exact solution");
  conv_f.table = converge->add_option("--table", conv_o.table, "preset 1 or 2")->check(CLI::IsMember({1, 2}));
  conv_f.forcing = converge->add_option("--forcing", conv_o.forcing, "discrete or continuous forcing")
                       ->check(CLI::IsMember({"discrete", "continuous"}));
  conv_f.forcing_point = converge->add_option("--forcing-point", conv_o.forcing_point,
                                              "collocation or weighted")
                             ->check(CLI::IsMember({"collocation", "weighted"}));

  auto* simulate = app.add_subcommand("simulate", "four-drop or random initial data run");
  add_common(simulate, sim_o, sim_f);
  sim_f.adaptive = simulate->add_flag("--adaptive", sim_o.adaptive, "adaptive steps after T0");
  sim_f.kind = simulate->add_option("--kind", sim_o.kind, "fourdrops or random_ic")
                   ->check(CLI::IsMember({"fourdrops", "random_ic"}));

  auto* kernels = app.add_subcommand("kernels-check", "kernel property checks on random meshes");
  std::vector<double> k_alpha{0.1, 0.4, 0.7, 0.9};
  std::size_t k_meshes = 1000, k_maxn = 64;
  std::uint64_t k_seed = 7;
  std::string k_out;
  kernels->add_option("--alpha", k_alpha, "fractional order(s)");
  kernels->add_option("--meshes", k_meshes, "number of random meshes");
  kernels->add_option("--bigN", k_maxn, "largest number of cells")->check(CLI::Range(2, 100000));
  kernels->add_option("--seed", k_seed, "random seed");
  kernels->add_option("--out", k_out, "directory for kernels.csv of the first mesh");

  auto* soe = app.add_subcommand("soe-check", "build and verify a sum-of-exponentials model");
  double s_alpha = 0.5, s_eps = 1e-8, s_dt = 1e-4, s_T = 1.0;
  std::size_t s_samples = 100000;
  std::string s_out;
  soe->add_option("--alpha", s_alpha, "fractional order");
  soe->add_option("--eps-soe", s_eps, "absolute tolerance");
  soe->add_option("--dt", s_dt, "cutoff time");
  soe->add_option("--T", s_T, "horizon");
  soe->add_option("--samples", s_samples, "log-spaced check points");
  soe->add_option("--out", s_out, "directory for soe.csv");

  auto* meshcheck = app.add_subcommand("mesh-check", "build a mesh and report its step ratios");
  add_common(meshcheck, mesh_o, mesh_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? code : 2;
  }

  try {
    if (*converge) return cmd_converge(resolve("convergence", conv_o, conv_f));
    if (*simulate) return cmd_simulate(resolve("fourdrops", sim_o, sim_f));
    if (*kernels) return cmd_kernels(k_alpha, k_meshes, k_maxn, k_seed, k_out);
    if (*soe) return cmd_soe(s_alpha, s_eps, s_dt, s_T, s_samples, s_out);
    if (*meshcheck) return cmd_mesh(resolve("fourdrops", mesh_o, mesh_f));
  } catch (const InvalidParameter& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
