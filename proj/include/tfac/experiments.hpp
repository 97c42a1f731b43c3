#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tfac/adaptive_control.hpp"
#include "tfac/stepper.hpp"

namespace tfac {

enum class ForcingModel {
  continuous,  // uses the Laplacian eigenvalue -8 pi^2 of the exact solution
  discrete     // uses the D_h eigenvalue, so the grid function is exact in space
};

/// Smooth test problem on (0,1)^2 with exact solution
/// u = omega_{1+sigma}(t) sin(2 pi x) sin(2 pi y) and epsilon = sqrt(2)/(4 pi).
Problem manufactured_problem(double alpha, double sigma, std::size_t m,
                             ForcingModel model = ForcingModel::discrete);
double manufactured_epsilon();
Field manufactured_exact(double sigma, std::size_t m, double t);

/// Four drops on (-1,1)^2; grid points x_i = -1 + i h with M = 2/h.
Problem fourdrops_problem(double alpha, double epsilon = 0.02, double h = 0.02);

/// u0 = 0.95 rand + 0.05 on (0,1)^2 with M points per direction.
Problem random_ic_problem(double alpha, double epsilon, std::size_t m, std::uint64_t seed);

double observed_order(double e_coarse, double e_fine, double tau_coarse, double tau_fine);
/// Least-squares slope of log(error) against log(tau).
double least_squares_order(const std::vector<double>& taus, const std::vector<double>& errors);

struct ConvergenceConfig {
  double alpha = 0.8;
  double sigma = 0.8;
  std::vector<double> gammas{1.0, 2.5, 4.0};
  std::vector<std::size_t> Ns{32, 64, 128, 256};
  std::size_t m = 256;
  double final_time = 1.0;
  double t0 = 0.0;      // <= 0: min(1/gamma, T)
  std::size_t n0 = 0;   // 0: N/2
  std::uint64_t seed = 2024;
  HistoryMode mode = HistoryMode::fast;
  double soe_eps = 1e-12;
  ForcingModel forcing = ForcingModel::discrete;
  ForcingPoint forcing_point = ForcingPoint::collocation;
};

/// Presets for the two order tables: 1 (sigma = 0.8, gamma 1, 2.5, 4) and
/// 2 (sigma = 0.4, gamma 3, 5, 6).
ConvergenceConfig table_preset(int table);

struct ConvergenceRow {
  double gamma = 0.0;
  std::size_t n = 0;
  double tau = 0.0;    // realized max step
  double error = 0.0;  // max over time levels of the max-norm error
  double order = 0.0;  // NaN on the first row of each gamma
};

struct ConvergenceTable {
  ConvergenceConfig config;
  std::vector<ConvergenceRow> rows;
  std::vector<double> ls_order;  // one per gamma
  std::vector<double> expected;  // min(gamma sigma, 2)
};

/// Runs every (gamma, N) cell; the mesh of each cell uses seed + N.
ConvergenceTable convergence_study(const ConvergenceConfig& config,
                                   const std::function<void(const ConvergenceRow&)>& progress = {});

/// CSV `gamma,N,tau,error,order,ls_order,expected`.
void write_orders_csv(std::ostream& os, const ConvergenceTable& table);

/// Fully resolved description of a run, read from and echoed as JSON.
struct ExperimentConfig {
  std::string kind = "fourdrops";  // convergence | fourdrops | random_ic
  double alpha = 0.7;
  double sigma = 0.8;
  double gamma = 3.0;
  std::vector<double> gammas;
  double epsilon = 0.02;
  double length = 2.0;
  std::size_t m = 100;
  std::size_t n = 1000;
  std::vector<std::size_t> ns;
  double final_time = 10.0;
  double t0 = 0.01;
  std::size_t n0 = 30;
  std::string mesh = "graded_uniform";  // graded_uniform | two_part | uniform
  bool adaptive = false;
  StepControl controller;
  double soe_eps = 1e-12;
  HistoryMode mode = HistoryMode::direct;
  std::string forcing = "discrete";
  std::string forcing_point = "collocation";
  std::string step_bound = "warn";
  std::uint64_t seed = 2024;
  int table = 0;
  std::vector<double> snapshots{1.0, 10.0, 50.0, 100.0};
  std::string out = "out";
};

/// Defaults for a kind; the JSON only needs to override what differs.
ExperimentConfig default_config(const std::string& kind);
/// Throws InvalidParameter on unknown keys or invalid values.
ExperimentConfig parse_config(const std::string& json_text, ExperimentConfig base);
std::string config_json(const ExperimentConfig& config);
void validate(const ExperimentConfig& config);

/// Writes `# config: {...}` ahead of a CSV header.
void write_config_header(std::ostream& os, const ExperimentConfig& config);

ConvergenceConfig to_convergence(const ExperimentConfig& config);

/// Initial mesh of a simulation run: graded start, then a uniform or random
/// tail. For adaptive runs only the graded start is returned.
TimeMesh simulation_mesh(const ExperimentConfig& config);
Problem simulation_problem(const ExperimentConfig& config);

struct SimulationSummary {
  std::size_t steps = 0;
  std::size_t adaptive_steps = 0;
  double final_time = 0.0;
  double final_maxnorm = 0.0;
  double final_energy = 0.0;
  double max_maxnorm = 0.0;
  double max_energy_rise = 0.0;  // max_n E_n - E_0
  std::size_t bound_violations = 0;
  std::vector<MonitorRow> monitors;
  std::vector<double> nodes;
};

/// Runs a fourdrops or random_ic experiment. When `out_dir` is non-empty the
/// monitor trace, mesh, SOE model, controller trace and snapshots are written.
SimulationSummary run_simulation(const ExperimentConfig& config, const std::string& out_dir = "");

}  // namespace tfac
