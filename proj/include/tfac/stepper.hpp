#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "tfac/periodic_grid.hpp"
#include "tfac/soe.hpp"
#include "tfac/time_mesh.hpp"

namespace tfac {

/// Fills `out` with the source term at time t.
using Forcing = std::function<void(double t, Field& out)>;

/// D^alpha u = eps^2 D_h u - (u^3 - u) + g on a periodic grid.
struct Problem {
  double epsilon = 0.0;
  double alpha = 0.0;
  Field initial;
  Forcing forcing;  // empty for g = 0
};

enum class HistoryMode { direct, fast };
enum class StepBoundPolicy { ignore, warn, strict };
enum class ForcingPoint { collocation, weighted };
enum class Scheme { alikhanov, l1_euler };

struct SolverOptions {
  HistoryMode mode = HistoryMode::direct;
  double eta = 1e-12;
  int max_iterations = 200;
  int fixed_point_limit = 50;
  StepBoundPolicy step_bound = StepBoundPolicy::warn;
  ForcingPoint forcing_point = ForcingPoint::collocation;
  double soe_eps = 1e-12;
  /// Keep the L1 history needed by advance_l1_euler() in fast mode.
  bool l1_companion = false;
};

/// Time range the SOE model must cover in fast mode: the smallest step that
/// will be taken after the first one and the final time.
struct SoeRange {
  double min_step = 0.0;
  double horizon = 0.0;
};

/// min_{k >= 2} tau_k (tau_1 for a single cell) and the final time.
SoeRange soe_range_for(const TimeMesh& mesh);

struct StepBounds {
  double theta_bound = 0.0;
  double diffusion_bound = 0.0;
  double solvability_bound = 0.0;
  double gronwall_bound = 0.0;
  double maximum_principle = 0.0;  // min of the theta and diffusion bounds
  double min = 0.0;                // min of all four
};

StepBounds step_constraint(double alpha, double theta, double h, double epsilon);

class NonconvergenceError : public std::runtime_error {
 public:
  NonconvergenceError(const std::string& what, std::vector<double> updates)
      : std::runtime_error(what), updates_(std::move(updates)) {}
  const std::vector<double>& updates() const { return updates_; }

 private:
  std::vector<double> updates_;
};

class StepBoundViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct SolveStats {
  int iterations = 0;
  bool fallback = false;
  double residual = 0.0;  // scaled max-norm residual of the nonlinear system
  std::vector<double> updates;
};

struct StepResult {
  Field u;
  SolveStats stats;
};

struct MonitorRow {
  std::size_t n = 0;
  double t = 0.0;
  double tau = 0.0;
  double maxnorm = 0.0;
  double energy = 0.0;
  int iters = 0;
};

/// CSV `n,t_n,tau_n,maxnorm,energy,iters`.
void write_monitors_csv(std::ostream& os, std::span<const MonitorRow> rows);

/// Caputo history split at step n: approximation = weight * (v^n - v^{n-1}) + history.
class HistoryBackend {
 public:
  virtual ~HistoryBackend() = default;
  virtual std::size_t level() const = 0;
  virtual double alikhanov_weight(const TimeMesh& mesh, std::size_t n) const = 0;
  virtual void alikhanov_history(const TimeMesh& mesh, std::size_t n, std::span<double> out) const = 0;
  virtual double l1_weight(const TimeMesh& mesh, std::size_t n) const = 0;
  virtual void l1_history(const TimeMesh& mesh, std::size_t n, std::span<double> out) const = 0;
  virtual void commit(const TimeMesh& mesh, std::span<const double> increment) = 0;
};

/// Keeps every increment and evaluates the full discrete convolution.
class DirectHistory final : public HistoryBackend {
 public:
  DirectHistory(double alpha, std::size_t length);
  std::size_t level() const override { return increments_.size(); }
  double alikhanov_weight(const TimeMesh& mesh, std::size_t n) const override;
  void alikhanov_history(const TimeMesh& mesh, std::size_t n, std::span<double> out) const override;
  double l1_weight(const TimeMesh& mesh, std::size_t n) const override;
  void l1_history(const TimeMesh& mesh, std::size_t n, std::span<double> out) const override;
  void commit(const TimeMesh& mesh, std::span<const double> increment) override;

 private:
  void require_step(const TimeMesh& mesh, std::size_t n) const;
  double alpha_;
  std::size_t length_;
  std::vector<std::vector<double>> increments_;
};

class FastHistory final : public HistoryBackend {
 public:
  FastHistory(SoeModel model, std::size_t length, bool track_l1);
  const SoeModel& model() const { return soe_.model(); }
  std::size_t level() const override { return soe_.level(); }
  double alikhanov_weight(const TimeMesh& mesh, std::size_t n) const override {
    return soe_.alikhanov_weight(mesh, n);
  }
  void alikhanov_history(const TimeMesh& mesh, std::size_t n, std::span<double> out) const override {
    soe_.alikhanov_history(mesh, n, out);
  }
  double l1_weight(const TimeMesh& mesh, std::size_t n) const override { return soe_.l1_weight(mesh, n); }
  void l1_history(const TimeMesh& mesh, std::size_t n, std::span<double> out) const override {
    soe_.l1_history(mesh, n, out);
  }
  void commit(const TimeMesh& mesh, std::span<const double> increment) override {
    soe_.commit(mesh, increment);
  }

 private:
  SoeHistory soe_;
};

/// Run state of the time-stepping scheme: accepted time levels, the current
/// solution, the history back end and the monitor trace.
///
/// trial() computes a candidate solution for a proposed step without touching
/// the state, so a rejected step needs no rollback. commit() accepts it.
class Simulation {
 public:
  Simulation(Problem problem, SolverOptions options, SoeRange range = {});
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const Problem& problem() const { return problem_; }
  const SolverOptions& options() const { return options_; }
  std::size_t steps() const { return nodes_.size() - 1; }
  double time() const { return nodes_.back(); }
  double last_step() const;
  const Field& solution() const { return u_; }
  std::span<const double> nodes() const { return nodes_; }
  /// Accepted mesh; requires at least one step.
  TimeMesh mesh() const { return TimeMesh(nodes_); }
  const std::vector<MonitorRow>& monitors() const { return monitors_; }
  const SoeModel* soe_model() const;
  const StepBounds& bounds() const { return bounds_; }
  std::size_t bound_violations() const { return bound_violations_; }

  StepResult trial(double tau, Scheme scheme) const;
  void commit(double tau, const Field& u, const SolveStats& stats);

  /// Alikhanov step of size tau, committed.
  const SolveStats& advance(double tau);
  /// L1 / backward Euler step of size tau, not committed.
  Field advance_l1_euler(double tau) const;

  /// Advances through every remaining cell of `mesh`, whose first nodes must
  /// match the accepted ones. `observer` runs after each step.
  void run(const TimeMesh& mesh, const std::function<void(const Simulation&)>& observer = {});

 private:
  void check_bound(double tau);
  void forcing_at(double t, Field& out) const;
  StepResult trial_to(double t_next, Scheme scheme) const;
  void commit_to(double t_next, const Field& u, const SolveStats& stats);
  const SolveStats& advance_to(double t_next);

  Problem problem_;
  SolverOptions options_;
  double theta_;
  StepBounds bounds_;
  std::vector<double> nodes_;
  Field u_;
  std::unique_ptr<HistoryBackend> history_;
  std::unique_ptr<SpectralSolver> solver_;
  std::vector<MonitorRow> monitors_;
  SolveStats last_stats_;
  std::size_t bound_violations_ = 0;
};

}  // namespace tfac
