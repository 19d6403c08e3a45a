#pragma once

// Shared bookkeeping for solver loops: sampling rows, stopping tests, timing.

#include "aorhb/smooth.hpp"

#include <chrono>
#include <functional>

namespace aorhb::detail {

using ObjectiveFn = std::function<double(const Vector&)>;

inline ObjectiveFn value_fn(const SmoothOracle& f) {
  return [&f](const Vector& x) { return f.value(x); };
}

class TraceRecorder {
 public:
  /// `objective` may be empty (saddle solvers); then obj_gap stays empty.
  TraceRecorder(std::string solver, const SolverConfig& config, const Vector& x0, ObjectiveFn objective);

  bool due(long k) const { return k % config_.record_every == 0; }
  bool has_reference() const { return ref_ != nullptr; }
  const Vector& reference() const { return *ref_; }
  double error(const Vector& x) const;

  /// Appends row k unless it is already the last row.
  void record(long k, const Vector& x, const Vector* y, double E = kMissing, double Ealpha = kMissing);

  /// Stopping tests at iterate k. grad_norm may be NaN when unavailable.
  bool should_stop(const Vector& x, double grad_norm);

  void mark_diverged(long k) {
    trace_.stop = StopReason::diverged;
    trace_.diverged_at = k;
  }

  SolverTrace finish(long iterations, const Vector& x, const Vector* y, long gradient_evaluations);

  SolverTrace& trace() { return trace_; }
  double elapsed_ms() const;

 private:
  SolverConfig config_;
  ObjectiveFn objective_;
  const Vector* ref_ = nullptr;
  double error0_ = kMissing;
  double f_star_ = kMissing;
  SolverTrace trace_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace aorhb::detail
