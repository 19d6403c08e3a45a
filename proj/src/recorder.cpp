#include "recorder.hpp"

#include <algorithm>
#include <cmath>

namespace aorhb::detail {

TraceRecorder::TraceRecorder(std::string solver, const SolverConfig& config, const Vector& x0,
                             ObjectiveFn objective)
    : config_(config), objective_(std::move(objective)), start_(std::chrono::steady_clock::now()) {
  config_.validate();
  trace_.solver = std::move(solver);
  if (config_.reference_x) {
    if (config_.reference_x->size() != x0.size()) throw ConfigError(trace_.solver + ": reference has wrong length");
    ref_ = &*config_.reference_x;
    error0_ = (x0 - *ref_).norm();
  }
  if (config_.reference_f)
    f_star_ = *config_.reference_f;
  else if (ref_ && objective_)
    f_star_ = objective_(*ref_);
  if (config_.rel_error_tolerance > 0 && !ref_)
    throw ConfigError(trace_.solver + ": rel_error_tolerance needs reference_x");
}

double TraceRecorder::error(const Vector& x) const { return ref_ ? (x - *ref_).norm() : kMissing; }

double TraceRecorder::elapsed_ms() const {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
}

void TraceRecorder::record(long k, const Vector& x, const Vector* y, double E, double Ealpha) {
  if (!trace_.rows.empty() && trace_.rows.back().k == k) return;
  TraceRow row;
  row.k = k;
  row.error = error(x);
  if (objective_ && config_.record_objective) {
    const double fx = objective_(x);
    trace_.series["objective"].push_back(fx);
    if (!std::isnan(f_star_)) row.obj_gap = fx - f_star_;
  }
  row.E = E;
  row.Ealpha = Ealpha;
  if (config_.record_time) row.wall_ms = elapsed_ms();
  trace_.rows.push_back(row);
  if (config_.store_iterates) {
    IterateRecord it;
    it.k = k;
    it.x = x;
    if (y) it.y = *y;
    trace_.iterates.push_back(std::move(it));
  }
}

bool TraceRecorder::should_stop(const Vector& x, double grad_norm) {
  if (config_.grad_tolerance > 0 && !std::isnan(grad_norm) && grad_norm <= config_.grad_tolerance) {
    trace_.stop = StopReason::grad_tolerance;
    return true;
  }
  if (config_.rel_error_tolerance > 0) {
    const double e = error(x);
    if (error0_ == 0.0 || e <= config_.rel_error_tolerance * error0_) {
      trace_.stop = StopReason::rel_error_tolerance;
      return true;
    }
  }
  return false;
}

SolverTrace TraceRecorder::finish(long iterations, const Vector& x, const Vector* y, long gradient_evaluations) {
  trace_.iterations = iterations;
  trace_.x_final = x;
  if (y) trace_.y_final = *y;
  trace_.gradient_evaluations = gradient_evaluations;
  trace_.wall_ms = config_.record_time ? elapsed_ms() : 0.0;
  // Without a known optimum the gap is measured against the best value seen.
  auto it = trace_.series.find("objective");
  if (std::isnan(f_star_) && it != trace_.series.end() && !it->second.empty()) {
    const double best = *std::min_element(it->second.begin(), it->second.end());
    for (std::size_t i = 0; i < trace_.rows.size(); ++i) trace_.rows[i].obj_gap = it->second[i] - best;
  }
  return std::move(trace_);
}

}  // namespace aorhb::detail
