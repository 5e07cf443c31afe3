#include "qnetsim/kernel.hpp"

#include <cmath>
#include <utility>

namespace qnet {

SimTime time_from_seconds(double seconds) {
  return static_cast<SimTime>(std::llround(seconds * 1e12));
}

double time_to_seconds(SimTime t) { return static_cast<double>(t) * 1e-12; }

double Rng::uniform01() {
  // 53 high bits of one engine word -> double in [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) {
  if (!(a <= b)) throw SimulationError("Rng::uniform: empty range");
  return a + (b - a) * uniform01();
}

bool Rng::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw SimulationError("Rng::bernoulli: probability outside [0, 1]");
  return uniform01() < p;
}

double Rng::exponential(double rate) {
  if (!(rate > 0.0)) throw SimulationError("Rng::exponential: rate must be > 0");
  // uniform01() < 1, so the argument of log1p stays in (-1, 0].
  return -std::log1p(-uniform01()) / rate;
}

std::int64_t Rng::uniform_int(std::int64_t a, std::int64_t b) {
  if (a > b) throw SimulationError("Rng::uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(b - a) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());  // full 64-bit range
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return a + static_cast<std::int64_t>(x % span);
}

EventSeq Timeline::push(SimTime when, bool cancellable, std::string_view target,
                        std::function<void()> fn) {
  if (when < now_) {
    throw SimulationError("causality violation: event for '" + std::string(target) +
                          "' scheduled at t=" + std::to_string(when) +
                          " ps, before now=" + std::to_string(now_) + " ps");
  }
  const EventSeq seq = next_seq_++;
  queue_.push(Event{when, seq, cancellable, target, std::move(fn)});
  ++scheduled_;
  return seq;
}

void Timeline::schedule(SimTime when, std::string_view target,
                        std::function<void()> fn) {
  push(when, false, target, std::move(fn));
}

EventHandle Timeline::schedule_cancellable(SimTime when, std::string_view target,
                                           std::function<void()> fn) {
  const EventSeq seq = push(when, true, target, std::move(fn));
  live_cancellable_.insert(seq);
  return EventHandle{seq};
}

bool Timeline::cancel(EventHandle handle) {
  if (!handle.valid()) return false;
  if (live_cancellable_.erase(handle.seq) == 0) return false;
  ++cancelled_;
  ++voided_in_queue_;
  return true;
}

RunStats Timeline::run(SimTime stop) {
  if (stop < now_) throw SimulationError("Timeline::run: stop time is in the past");
  while (!queue_.empty() && queue_.top().time <= stop) {
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    if (ev.cancellable && live_cancellable_.erase(ev.seq) == 0) {
      --voided_in_queue_;  // cancelled earlier; skip silently
      continue;
    }
    now_ = ev.time;
    ++executed_;
    try {
      ev.fn();
    } catch (const SimulationError&) {
      throw;
    } catch (const std::exception& e) {
      throw SimulationError("event handler for '" + std::string(ev.target) +
                            "' failed at t=" + std::to_string(ev.time) +
                            " ps: " + e.what());
    }
  }
  now_ = stop;
  return stats();
}

RunStats Timeline::stats() const {
  RunStats s;
  s.scheduled = scheduled_;
  s.executed = executed_;
  s.cancelled = cancelled_;
  s.pending = queue_.size() - voided_in_queue_;
  s.now = now_;
  return s;
}

bool Timeline::conservation_holds() const {
  const RunStats s = stats();
  return s.scheduled == s.executed + s.cancelled + s.pending;
}

}  // namespace qnet
