#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "tfac/stepper.hpp"

namespace tfac {

enum class ErrorNorm { max, l2 };

struct StepControl {
  double safety = 0.9;
  double tol = 1e-3;
  double tau_min = 1e-3;
  double tau_max = 1e-1;
  int max_recompute = 25;
  ErrorNorm norm = ErrorNorm::max;

  void validate() const;
  double clamp(double tau) const;
};

/// safety * sqrt(tol / e) * tau, unclamped; e == 0 gives +inf.
double tau_ada(double e, double tau, const StepControl& ctl);

struct TraceRow {
  std::size_t attempt = 0;
  std::size_t n = 0;
  double tau = 0.0;
  double e = 0.0;
  bool accepted = false;
};

struct AdaptiveStepResult {
  double tau_taken = 0.0;
  double tau_next = 0.0;
  double e = 0.0;
  int recomputes = 0;
  bool forced = false;  // accepted by the livelock guard
};

/// Relative difference of the two step solutions in the controller's norm.
double relative_difference(const Field& u1, const Field& u2, ErrorNorm norm);

/// One accepted step of the two-solution controller. `tau` is the proposed
/// size, `tau_prev` the last accepted one and `final_time` the end of the run
/// (used to land exactly on T). Rejected attempts are appended to `trace`.
AdaptiveStepResult adaptive_step(Simulation& sim, double tau, double tau_prev, double final_time,
                                 const StepControl& ctl, std::vector<TraceRow>* trace = nullptr);

struct AdaptiveReport {
  std::size_t accepted = 0;
  std::size_t attempts = 0;
  std::size_t forced = 0;
  std::size_t m1_violations = 0;
  double min_step = 0.0;
  double max_step = 0.0;
  std::vector<TraceRow> trace;
};

/// Runs the controller from the simulation's current time to final_time. The
/// first proposal is the last accepted step (or `tau_first` when no step has
/// been taken). `observer` runs after every accepted step.
AdaptiveReport run_adaptive(Simulation& sim, double final_time, const StepControl& ctl,
                            double tau_first = 0.0,
                            const std::function<void(const Simulation&)>& observer = {});

/// CSV `attempt,n,tau,e,accepted`.
void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows);

}  // namespace tfac
