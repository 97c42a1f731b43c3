#include "tfac/adaptive_control.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <ostream>

namespace tfac {

void StepControl::validate() const {
  if (!(safety > 0.0 && safety <= 1.0)) throw InvalidParameter("controller: safety must lie in (0, 1]");
  if (!(tol > 0.0)) throw InvalidParameter("controller: tolerance must be positive");
  if (!(tau_min > 0.0 && tau_min <= tau_max))
    throw InvalidParameter("controller: need 0 < tau_min <= tau_max");
  if (max_recompute < 1) throw InvalidParameter("controller: recompute limit must be positive");
}

double StepControl::clamp(double tau) const { return std::min(std::max(tau_min, tau), tau_max); }

double tau_ada(double e, double tau, const StepControl& ctl) {
  if (e <= 0.0) return std::numeric_limits<double>::infinity();
  return ctl.safety * std::sqrt(ctl.tol / e) * tau;
}

double relative_difference(const Field& u1, const Field& u2, ErrorNorm norm) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < u1.size(); ++k) {
    const double d = u2[k] - u1[k];
    if (norm == ErrorNorm::max) {
      num = std::max(num, std::abs(d));
      den = std::max(den, std::abs(u2[k]));
    } else {
      num += d * d;
      den += u2[k] * u2[k];
    }
  }
  if (norm == ErrorNorm::l2) {
    num = std::sqrt(num);
    den = std::sqrt(den);
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

namespace {

// Shortens the last steps so the run ends on T without a sliver.
double clip_to_end(double tau, double now, double final_time, const StepControl& ctl) {
  const double remaining = final_time - now;
  if (remaining < tau + ctl.tau_min) return remaining <= ctl.tau_max ? remaining : 0.5 * remaining;
  return tau;
}

bool same_step(double a, double b) { return std::abs(a - b) <= 1e-12 * std::abs(b); }

}  // namespace

AdaptiveStepResult adaptive_step(Simulation& sim, double tau, double tau_prev, double final_time,
                                 const StepControl& ctl, std::vector<TraceRow>* trace) {
  ctl.validate();
  if (!(final_time > sim.time())) throw InvalidParameter("adaptive step: already at the final time");
  const double floor_step = 2.0 / 3.0 * tau_prev;
  const std::size_t n = sim.steps() + 1;
  AdaptiveStepResult out;
  tau = clip_to_end(tau, sim.time(), final_time, ctl);

  for (;;) {
    const Field u1 = sim.advance_l1_euler(tau);
    StepResult r2 = sim.trial(tau, Scheme::alikhanov);
    const double e = relative_difference(u1, r2.u, ctl.norm);
    const bool at_floor = same_step(tau, floor_step);
    bool accept = e < ctl.tol || at_floor;

    double retry = std::max(ctl.clamp(tau_ada(e, tau, ctl)), floor_step);
    retry = clip_to_end(retry, sim.time(), final_time, ctl);
    if (!accept && (out.recomputes >= ctl.max_recompute || same_step(retry, tau))) {
      std::cerr << "warning: accepting step " << n << " (tau = " << tau << ", e = " << e
                << ") after " << out.recomputes << " recomputes\n";
      accept = true;
      out.forced = true;
    }
    if (trace) trace->push_back({trace->size() + 1, n, tau, e, accept});
    if (accept) {
      sim.commit(tau, r2.u, r2.stats);
      out.tau_taken = tau;
      out.e = e;
      out.tau_next = ctl.clamp(tau_ada(e, tau, ctl));
      return out;
    }
    ++out.recomputes;
    tau = retry;
  }
}

AdaptiveReport run_adaptive(Simulation& sim, double final_time, const StepControl& ctl,
                            double tau_first,
                            const std::function<void(const Simulation&)>& observer) {
  ctl.validate();
  AdaptiveReport report;
  double tau_prev = sim.steps() > 0 ? sim.last_step() : tau_first;
  if (!(tau_prev > 0.0)) throw InvalidParameter("adaptive run: no initial step size");
  double tau = tau_prev;
  report.min_step = std::numeric_limits<double>::infinity();
  const double tiny = 1e-12 * final_time;
  while (final_time - sim.time() > tiny) {
    const auto r = adaptive_step(sim, tau, tau_prev, final_time, ctl, &report.trace);
    ++report.accepted;
    if (r.forced) ++report.forced;
    if (tau_prev / r.tau_taken > kMaxStepRatio) ++report.m1_violations;
    report.min_step = std::min(report.min_step, r.tau_taken);
    report.max_step = std::max(report.max_step, r.tau_taken);
    tau_prev = r.tau_taken;
    tau = r.tau_next;
    if (observer) observer(sim);
  }
  report.attempts = report.trace.size();
  return report;
}

void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows) {
  os << "attempt,n,tau,e,accepted\n" << std::setprecision(17);
  for (const auto& r : rows)
    os << r.attempt << ',' << r.n << ',' << r.tau << ',' << r.e << ',' << (r.accepted ? 1 : 0) << '\n';
}

}  // namespace tfac
