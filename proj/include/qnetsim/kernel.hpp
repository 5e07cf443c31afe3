#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace qnet {

// Simulation time is an integer count of picoseconds. Integer ticks keep
// event ordering exact; picosecond granularity is finer than every hardware
// time constant we model (detector resolution is 100 ps).
using SimTime = std::int64_t;

inline constexpr SimTime kPicosecond = 1;
inline constexpr SimTime kNanosecond = 1'000;
inline constexpr SimTime kMicrosecond = 1'000'000;
inline constexpr SimTime kMillisecond = 1'000'000'000;
inline constexpr SimTime kSecond = 1'000'000'000'000;

SimTime time_from_seconds(double seconds);
double time_to_seconds(SimTime t);

// Fatal simulation faults: scheduling into the past, illegal state
// transitions, handler failures. The CLI maps these to exit code 2.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent topology/configuration input. Exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic random source. One instance is owned by the Timeline and
// drawn from in event-execution order, so a single seed reproduces a run.
// Distributions are derived from raw engine words rather than
// std::*_distribution so that draws are identical across standard library
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1).
  double uniform01();
  // Uniform double in [a, b). Requires a <= b.
  double uniform(double a, double b);
  // True with probability p. Requires p in [0, 1]. Always consumes one draw.
  bool bernoulli(double p);
  // Exponential with the given rate (events per unit). Requires rate > 0.
  double exponential(double rate);
  // Uniform integer in [a, b], both ends inclusive. Requires a <= b.
  std::int64_t uniform_int(std::int64_t a, std::int64_t b);

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

using EventSeq = std::uint64_t;

// Returned by schedule_cancellable(); cancel() is a no-op once the event has
// executed. Handle 0 is reserved as "invalid".
struct EventHandle {
  EventSeq seq = 0;
  bool valid() const { return seq != 0; }
};

struct RunStats {
  std::uint64_t scheduled = 0;
  std::uint64_t executed = 0;
  std::uint64_t cancelled = 0;
  std::uint64_t pending = 0;
  SimTime now = 0;
};

// Discrete-event scheduler. Events execute in (time, sequence) order; the
// sequence number breaks ties in scheduling order, so same-timestamp events
// run FIFO. Cancellation is lazy: cancelled entries stay in the heap and are
// skipped when popped.
class Timeline {
 public:
  explicit Timeline(std::uint64_t seed) : rng_(seed) {}

  SimTime now() const { return now_; }
  Rng& rng() { return rng_; }

  // Schedule a fire-and-forget event. `target` names the owning entity for
  // diagnostics; it must outlive the event (entity names qualify).
  void schedule(SimTime when, std::string_view target, std::function<void()> fn);

  // Same, but returns a handle usable with cancel().
  EventHandle schedule_cancellable(SimTime when, std::string_view target,
                                   std::function<void()> fn);

  // True if the event was still pending and is now cancelled.
  bool cancel(EventHandle handle);

  // Execute events with time <= stop in order, then advance now to stop.
  // Returns statistics for the whole timeline so far.
  RunStats run(SimTime stop);

  RunStats stats() const;

  // scheduled == executed + cancelled + pending must hold at all times.
  bool conservation_holds() const;

 private:
  struct Event {
    SimTime time;
    EventSeq seq;
    bool cancellable;
    std::string_view target;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  EventSeq push(SimTime when, bool cancellable, std::string_view target,
                std::function<void()> fn);

  SimTime now_ = 0;
  EventSeq next_seq_ = 1;
  Rng rng_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  // Seqs of cancellable events that have neither run nor been cancelled.
  std::unordered_set<EventSeq> live_cancellable_;
  // Heap entries voided by cancellation but not yet popped.
  std::uint64_t voided_in_queue_ = 0;
  std::uint64_t scheduled_ = 0;
  std::uint64_t executed_ = 0;
  std::uint64_t cancelled_ = 0;
};

}  // namespace qnet
