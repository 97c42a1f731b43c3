#include "tfac/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "tfac/caputo_kernels.hpp"

namespace tfac {

using nlohmann::json;

double manufactured_epsilon() { return std::sqrt(2.0) / (4.0 * M_PI); }

namespace {

Field sine_mode(std::size_t m) {
  Field s(m, 1.0);
  const double h = s.spacing();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      s(i, j) = std::sin(2.0 * M_PI * i * h) * std::sin(2.0 * M_PI * j * h);
  return s;
}

double amplitude(double mu, double t) { return t > 0.0 ? omega(mu, t) : 0.0; }

}  // namespace

Field manufactured_exact(double sigma, std::size_t m, double t) {
  Field s = sine_mode(m);
  const double a = amplitude(1.0 + sigma, t);
  for (auto& v : s.values()) v *= a;
  return s;
}

Problem manufactured_problem(double alpha, double sigma, std::size_t m, ForcingModel model) {
  if (!(sigma > 0.0 && sigma <= 1.0)) throw InvalidParameter("sigma must lie in (0, 1]");
  Problem p;
  p.alpha = alpha;
  p.epsilon = manufactured_epsilon();
  p.initial = Field(m, 1.0);
  const double e2 = p.epsilon * p.epsilon;
  const double h = 1.0 / static_cast<double>(m);
  // -Laplacian eigenvalue of sin(2 pi x) sin(2 pi y), continuous or for D_h
  const double lambda = model == ForcingModel::continuous
                            ? 8.0 * M_PI * M_PI
                            : 8.0 / (h * h) * std::pow(std::sin(M_PI * h), 2);
  const Field shape = sine_mode(m);
  p.forcing = [=](double t, Field& out) {
    const double w = amplitude(1.0 + sigma, t);
    const double lin = omega(1.0 + sigma - alpha, t) + (e2 * lambda - 1.0) * w;
    const double cub = w * w * w;
    if (!out.same_shape(shape)) out = Field(shape.m(), shape.length());
    for (std::size_t k = 0; k < shape.size(); ++k) {
      const double s = shape[k];
      out[k] = lin * s + cub * s * s * s;
    }
  };
  return p;
}

Problem fourdrops_problem(double alpha, double epsilon, double h) {
  const auto m = static_cast<std::size_t>(std::llround(2.0 / h));
  Problem p;
  p.alpha = alpha;
  p.epsilon = epsilon;
  p.initial = Field(m, 2.0);
  const double dx = p.initial.spacing();
  auto bump = [epsilon](double x, double y, double cx, double cy) {
    return std::tanh(((x - cx) * (x - cx) + (y - cy) * (y - cy) - 0.04) / epsilon);
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double x = -1.0 + i * dx, y = -1.0 + j * dx;
      p.initial(i, j) = -0.9 * bump(x, y, 0.3, 0.0) * bump(x, y, -0.3, 0.0) *
                        bump(x, y, 0.0, 0.3) * bump(x, y, 0.0, -0.3);
    }
  return p;
}

Problem random_ic_problem(double alpha, double epsilon, std::size_t m, std::uint64_t seed) {
  Problem p;
  p.alpha = alpha;
  p.epsilon = epsilon;
  p.initial = Field(m, 1.0);
  Rng rng(seed);
  for (auto& v : p.initial.values()) v = 0.95 * rng.uniform_open() + 0.05;
  return p;
}

double observed_order(double e_coarse, double e_fine, double tau_coarse, double tau_fine) {
  return std::log(e_coarse / e_fine) / std::log(tau_coarse / tau_fine);
}

double least_squares_order(const std::vector<double>& taus, const std::vector<double>& errors) {
  if (taus.size() != errors.size() || taus.size() < 2)
    throw InvalidParameter("least-squares order needs two or more matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(taus.size());
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double x = std::log(taus[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceConfig table_preset(int table) {
  ConvergenceConfig c;
  if (table == 1) {
    c.sigma = 0.8;
    c.gammas = {1.0, 2.5, 4.0};
  } else if (table == 2) {
    c.sigma = 0.4;
    c.gammas = {3.0, 5.0, 6.0};
  } else {
    throw InvalidParameter("table must be 1 or 2");
  }
  return c;
}

ConvergenceTable convergence_study(const ConvergenceConfig& config,
                                   const std::function<void(const ConvergenceRow&)>& progress) {
  if (config.gammas.empty() || config.Ns.empty()) throw InvalidParameter("empty convergence sweep");
  ConvergenceTable table;
  table.config = config;
  SolverOptions opt;
  opt.mode = config.mode;
  opt.soe_eps = config.soe_eps;
  opt.forcing_point = config.forcing_point;
  opt.step_bound = StepBoundPolicy::ignore;

  for (double gamma : config.gammas) {
    std::vector<double> taus, errors;
    for (std::size_t n : config.Ns) {
      const TimeMesh mesh =
          build_two_part(config.final_time, n, gamma, config.t0, config.n0, config.seed + n);
      Simulation sim(manufactured_problem(config.alpha, config.sigma, config.m, config.forcing), opt,
                     soe_range_for(mesh));
      const Field shape = sine_mode(config.m);
      double err = 0.0;
      sim.run(mesh, [&](const Simulation& s) {
        const double a = amplitude(1.0 + config.sigma, s.time());
        const Field& u = s.solution();
        for (std::size_t k = 0; k < u.size(); ++k) err = std::max(err, std::abs(u[k] - a * shape[k]));
      });
      ConvergenceRow row{gamma, n, mesh.max_step(), err, std::numeric_limits<double>::quiet_NaN()};
      if (!taus.empty()) row.order = observed_order(errors.back(), err, taus.back(), row.tau);
      taus.push_back(row.tau);
      errors.push_back(err);
      table.rows.push_back(row);
      if (progress) progress(row);
    }
    table.ls_order.push_back(taus.size() >= 2 ? least_squares_order(taus, errors)
                                              : std::numeric_limits<double>::quiet_NaN());
    table.expected.push_back(std::min(gamma * config.sigma, 2.0));
  }
  return table;
}

void write_orders_csv(std::ostream& os, const ConvergenceTable& table) {
  os << "gamma,N,tau,error,order,ls_order,expected\n" << std::setprecision(6);
  std::size_t g = 0;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (i > 0 && r.gamma != table.rows[i - 1].gamma) ++g;
    os << r.gamma << ',' << r.n << ',' << r.tau << ',' << r.error << ',';
    if (std::isnan(r.order))
      os << "-";
    else
      os << r.order;
    os << ',' << table.ls_order[g] << ',' << table.expected[g] << '\n';
  }
}

// ---------------------------------------------------------------------------

ExperimentConfig default_config(const std::string& kind) {
  ExperimentConfig c;
  c.kind = kind;
  if (kind == "fourdrops") return c;
  if (kind == "random_ic") {
    c.alpha = 0.7;
    c.epsilon = 0.02;
    c.length = 1.0;
    c.m = 50;
    c.final_time = 40.0;
    c.mesh = "uniform";
    c.n = 300;
    c.t0 = 0.0;
    c.n0 = 0;
    c.gamma = 1.0;
    c.snapshots = {1.0, 10.0, 40.0};
    return c;
  }
  if (kind == "convergence") {
    c.alpha = 0.8;
    c.sigma = 0.8;
    c.epsilon = manufactured_epsilon();
    c.length = 1.0;
    c.m = 256;
    c.final_time = 1.0;
    c.t0 = 0.0;
    c.n0 = 0;
    c.mesh = "two_part";
    c.gammas = {1.0, 2.5, 4.0};
    c.ns = {32, 64, 128, 256};
    c.mode = HistoryMode::fast;
    c.table = 1;
    c.snapshots.clear();
    return c;
  }
  throw InvalidParameter("unknown experiment kind '" + kind + "'");
}

namespace {

HistoryMode parse_mode(const std::string& s) {
  if (s == "direct") return HistoryMode::direct;
  if (s == "fast") return HistoryMode::fast;
  throw InvalidParameter("mode must be direct or fast");
}

std::string mode_name(HistoryMode m) { return m == HistoryMode::direct ? "direct" : "fast"; }

json to_json(const ExperimentConfig& c) {
  return json{{"kind", c.kind},
              {"alpha", c.alpha},
              {"sigma", c.sigma},
              {"gamma", c.gamma},
              {"gammas", c.gammas},
              {"epsilon", c.epsilon},
              {"L", c.length},
              {"M", c.m},
              {"N", c.n},
              {"Ns", c.ns},
              {"T", c.final_time},
              {"T0", c.t0},
              {"N0", c.n0},
              {"mesh", c.mesh},
              {"adaptive", c.adaptive},
              {"controller",
               {{"safety", c.controller.safety},
                {"tol", c.controller.tol},
                {"tau_min", c.controller.tau_min},
                {"tau_max", c.controller.tau_max},
                {"max_recompute", c.controller.max_recompute},
                {"norm", c.controller.norm == ErrorNorm::max ? "max" : "l2"}}},
              {"eps_soe", c.soe_eps},
              {"mode", mode_name(c.mode)},
              {"forcing", c.forcing},
              {"forcing_point", c.forcing_point},
              {"step_bound", c.step_bound},
              {"seed", c.seed},
              {"table", c.table},
              {"snapshots", c.snapshots},
              {"out", c.out}};
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, ExperimentConfig c) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidParameter("config must be a JSON object");
  if (j.contains("kind")) {
    ExperimentConfig base = default_config(j.at("kind").get<std::string>());
    base.out = c.out;
    c = base;
  }
  try {
    for (auto& [key, v] : j.items()) {
      if (key == "kind") continue;
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "sigma") c.sigma = v.get<double>();
      else if (key == "gamma") c.gamma = v.get<double>();
      else if (key == "gammas") c.gammas = v.get<std::vector<double>>();
      else if (key == "epsilon") c.epsilon = v.get<double>();
      else if (key == "L") c.length = v.get<double>();
      else if (key == "M") c.m = v.get<std::size_t>();
      else if (key == "N") c.n = v.get<std::size_t>();
      else if (key == "Ns") c.ns = v.get<std::vector<std::size_t>>();
      else if (key == "T") c.final_time = v.get<double>();
      else if (key == "T0") c.t0 = v.get<double>();
      else if (key == "N0") c.n0 = v.get<std::size_t>();
      else if (key == "mesh") c.mesh = v.get<std::string>();
      else if (key == "adaptive") c.adaptive = v.get<bool>();
      else if (key == "eps_soe") c.soe_eps = v.get<double>();
      else if (key == "mode") c.mode = parse_mode(v.get<std::string>());
      else if (key == "forcing") c.forcing = v.get<std::string>();
      else if (key == "forcing_point") c.forcing_point = v.get<std::string>();
      else if (key == "step_bound") c.step_bound = v.get<std::string>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "table") c.table = v.get<int>();
      else if (key == "snapshots") c.snapshots = v.get<std::vector<double>>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "controller") {
        for (auto& [ck, cv] : v.items()) {
          if (ck == "safety") c.controller.safety = cv.get<double>();
          else if (ck == "tol") c.controller.tol = cv.get<double>();
          else if (ck == "tau_min") c.controller.tau_min = cv.get<double>();
          else if (ck == "tau_max") c.controller.tau_max = cv.get<double>();
          else if (ck == "max_recompute") c.controller.max_recompute = cv.get<int>();
          else if (ck == "norm") {
            const auto s = cv.get<std::string>();
            if (s != "max" && s != "l2") throw InvalidParameter("controller norm must be max or l2");
            c.controller.norm = s == "max" ? ErrorNorm::max : ErrorNorm::l2;
          } else {
            throw InvalidParameter("unknown controller key '" + ck + "'");
          }
        }
      } else {
        throw InvalidParameter("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("config has a value of the wrong type: ") + e.what());
  }
  validate(c);
  return c;
}

std::string config_json(const ExperimentConfig& config) {
  std::ostringstream os;
  os << std::setprecision(17) << to_json(config).dump();
  return os.str();
}

void validate(const ExperimentConfig& c) {
  if (c.kind != "convergence" && c.kind != "fourdrops" && c.kind != "random_ic")
    throw InvalidParameter("unknown experiment kind '" + c.kind + "'");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
  if (!(c.sigma > 0.0 && c.sigma <= 1.0)) throw InvalidParameter("sigma must lie in (0, 1]");
  if (!(c.epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
  if (!(c.final_time > 0.0)) throw InvalidParameter("T must be positive");
  if (c.m < 4) throw InvalidParameter("M must be at least 4");
  if (!(c.soe_eps > 0.0 && c.soe_eps < 1.0)) throw InvalidParameter("eps_soe must lie in (0, 1)");
  if (c.mesh != "graded_uniform" && c.mesh != "two_part" && c.mesh != "uniform")
    throw InvalidParameter("mesh must be graded_uniform, two_part or uniform");
  if (c.forcing != "discrete" && c.forcing != "continuous")
    throw InvalidParameter("forcing must be discrete or continuous");
  if (c.forcing_point != "collocation" && c.forcing_point != "weighted")
    throw InvalidParameter("forcing_point must be collocation or weighted");
  if (c.step_bound != "ignore" && c.step_bound != "warn" && c.step_bound != "strict")
    throw InvalidParameter("step_bound must be ignore, warn or strict");
  if (!(c.gamma >= 1.0)) throw InvalidParameter("gamma must be >= 1");
  for (double g : c.gammas)
    if (!(g >= 1.0)) throw InvalidParameter("gamma must be >= 1");
  c.controller.validate();
}

void write_config_header(std::ostream& os, const ExperimentConfig& config) {
  os << "# config: " << config_json(config) << '\n';
}

ConvergenceConfig to_convergence(const ExperimentConfig& c) {
  ConvergenceConfig cc;
  cc.alpha = c.alpha;
  cc.sigma = c.sigma;
  cc.gammas = c.gammas.empty() ? std::vector<double>{c.gamma} : c.gammas;
  cc.Ns = c.ns.empty() ? std::vector<std::size_t>{c.n} : c.ns;
  cc.m = c.m;
  cc.final_time = c.final_time;
  cc.t0 = c.t0;
  cc.n0 = c.n0;
  cc.seed = c.seed;
  cc.mode = c.mode;
  cc.soe_eps = c.soe_eps;
  cc.forcing = c.forcing == "discrete" ? ForcingModel::discrete : ForcingModel::continuous;
  cc.forcing_point = c.forcing_point == "weighted" ? ForcingPoint::weighted : ForcingPoint::collocation;
  return cc;
}

TimeMesh simulation_mesh(const ExperimentConfig& c) {
  if (c.mesh == "uniform") {
    if (c.adaptive) throw InvalidParameter("adaptive runs need a graded start (mesh graded_uniform)");
    return build_uniform(c.final_time, c.n);
  }
  if (c.mesh == "two_part") return build_two_part(c.final_time, c.n, c.gamma, c.t0, c.n0, c.seed);
  if (!(c.t0 > 0.0 && c.t0 < c.final_time) || c.n0 == 0)
    throw InvalidParameter("graded start needs 0 < T0 < T and N0 >= 1");
  TimeMesh start = build_graded(c.t0, c.n0, c.gamma);
  if (c.adaptive) return start;
  if (c.n <= c.n0) throw InvalidParameter("N must exceed N0");
  return append_uniform_tail(start, c.final_time, c.n - c.n0);
}

Problem simulation_problem(const ExperimentConfig& c) {
  if (c.kind == "fourdrops") {
    if (c.length != 2.0) throw InvalidParameter("fourdrops runs on (-1,1)^2 (L = 2)");
    return fourdrops_problem(c.alpha, c.epsilon, c.length / static_cast<double>(c.m));
  }
  if (c.kind == "random_ic") {
    if (c.length != 1.0) throw InvalidParameter("random_ic runs on (0,1)^2 (L = 1)");
    return random_ic_problem(c.alpha, c.epsilon, c.m, c.seed);
  }
  throw InvalidParameter("kind '" + c.kind + "' is not a simulation");
}

SimulationSummary run_simulation(const ExperimentConfig& c, const std::string& out_dir) {
  validate(c);
  const TimeMesh mesh0 = simulation_mesh(c);
  SolverOptions opt;
  opt.mode = c.mode;
  opt.soe_eps = c.soe_eps;
  opt.l1_companion = c.adaptive;
  opt.step_bound = c.step_bound == "strict"   ? StepBoundPolicy::strict
                   : c.step_bound == "ignore" ? StepBoundPolicy::ignore
                                              : StepBoundPolicy::warn;
  SoeRange range = soe_range_for(mesh0);
  range.horizon = c.final_time;
  if (c.adaptive) range.min_step = std::min(range.min_step, 0.5 * c.controller.tau_min);

  Simulation sim(simulation_problem(c), opt, range);

  namespace fs = std::filesystem;
  if (!out_dir.empty()) fs::create_directories(out_dir);
  std::vector<double> pending = c.snapshots;
  std::sort(pending.begin(), pending.end());
  std::size_t snap_index = 0;
  auto observer = [&](const Simulation& s) {
    while (!pending.empty() && s.time() >= pending.front() * (1.0 - 1e-12)) {
      if (!out_dir.empty()) {
        std::ostringstream name;
        name << "snapshot_" << std::setw(3) << std::setfill('0') << snap_index << ".bin";
        write_field_binary((fs::path(out_dir) / name.str()).string(), s.solution(), s.time());
      }
      ++snap_index;
      pending.erase(pending.begin());
    }
  };

  sim.run(mesh0, observer);
  AdaptiveReport report;
  if (c.adaptive && c.final_time > sim.time())
    report = run_adaptive(sim, c.final_time, c.controller, 0.0, observer);

  SimulationSummary sum;
  sum.steps = sim.steps();
  sum.adaptive_steps = report.accepted;
  sum.final_time = sim.time();
  sum.monitors = sim.monitors();
  sum.nodes.assign(sim.nodes().begin(), sim.nodes().end());
  sum.final_maxnorm = sum.monitors.back().maxnorm;
  sum.final_energy = sum.monitors.back().energy;
  sum.bound_violations = sim.bound_violations();
  for (const auto& r : sum.monitors) {
    sum.max_maxnorm = std::max(sum.max_maxnorm, r.maxnorm);
    sum.max_energy_rise = std::max(sum.max_energy_rise, r.energy - sum.monitors.front().energy);
  }

  if (!out_dir.empty()) {
    auto open = [&](const std::string& name) {
      std::ofstream f(fs::path(out_dir) / name);
      if (!f) throw std::runtime_error("cannot write " + name + " in " + out_dir);
      write_config_header(f, c);
      return f;
    };
    {
      auto f = open("monitors.csv");
      write_monitors_csv(f, sum.monitors);
    }
    {
      auto f = open("mesh.csv");
      write_mesh_csv(f, sim.mesh());
    }
    if (const SoeModel* soe = sim.soe_model()) {
      auto f = open("soe.csv");
      write_soe_csv(f, *soe);
    }
    if (c.adaptive) {
      auto f = open("trace.csv");
      write_trace_csv(f, report.trace);
    }
  }
  return sum;
}

}  // namespace tfac
