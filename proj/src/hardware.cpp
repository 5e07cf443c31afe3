#include "qnetsim/hardware.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace qnet {

// ---------------------------------------------------------------------------
// MemoryParams / DetectorParams

SimTime MemoryParams::excite_period() const {
  if (!(frequency_hz > 0.0))
    throw SimulationError("memory frequency must be > 0");
  return time_from_seconds(1.0 / frequency_hz);
}

double MemoryParams::fresh_pair_fidelity() const {
  return entangled_pair_fidelity(cooperativity, gamma, gamma_star, delta_omega);
}

SimTime DetectorParams::dead_time() const {
  if (!(count_rate_hz > 0.0))
    throw SimulationError("detector count rate must be > 0");
  return time_from_seconds(1.0 / count_rate_hz);
}

// ---------------------------------------------------------------------------
// QuantumMemory

QuantumMemory::QuantumMemory(MemoryId id, std::string name, MemoryParams params)
    : id_(id), name_(std::move(name)), params_(params) {
  set_down();
}

void QuantumMemory::set_plus_state() {
  alpha_ = beta_ = 1.0 / std::sqrt(2.0);
}

void QuantumMemory::set_down() {
  alpha_ = 1.0;
  beta_ = 0.0;
}

void QuantumMemory::set_up() {
  alpha_ = 0.0;
  beta_ = 1.0;
}

void QuantumMemory::apply_x_gate() { std::swap(alpha_, beta_); }

std::optional<PhotonToken> QuantumMemory::excite(Timeline& tl) {
  const SimTime now = tl.now();
  if (now < next_excite_) {
    throw SimulationError("memory '" + name_ + "' excited at t=" +
                          std::to_string(now) + " ps before gate reopens at t=" +
                          std::to_string(next_excite_) + " ps");
  }
  const double norm = alpha_ * alpha_ + beta_ * beta_;
  if (std::abs(norm - 1.0) > 1e-9)
    throw SimulationError("memory '" + name_ + "' spin state not normalized");
  next_excite_ = now + params_.excite_period();
  // Collapse onto the emitting branch with probability |alpha|^2.
  last_excited_ = tl.rng().bernoulli(alpha_ * alpha_);
  if (!last_excited_) {
    set_up();
    return std::nullopt;
  }
  set_down();
  if (!tl.rng().bernoulli(params_.emission_probability)) return std::nullopt;
  return PhotonToken{id_, now};
}

const EntanglementRecord& QuantumMemory::record() const {
  if (!record_) throw SimulationError("memory '" + name_ + "' has no record");
  return *record_;
}

EntanglementRecord& QuantumMemory::mutable_record() {
  if (!record_) throw SimulationError("memory '" + name_ + "' has no record");
  return *record_;
}

void QuantumMemory::store_record(Timeline& tl, const EntanglementRecord& rec,
                                 std::function<void(QuantumMemory&)> on_expire) {
  clear_record(tl);
  record_ = rec;
  on_expire_ = std::move(on_expire);
  const SimTime when = std::max(rec.expiration, tl.now());
  expire_event_ = tl.schedule_cancellable(when, name_, [this] {
    record_.reset();
    expire_event_ = EventHandle{};
    set_down();
    if (on_expire_) {
      auto cb = std::move(on_expire_);
      on_expire_ = nullptr;
      cb(*this);
    }
  });
}

void QuantumMemory::clear_record(Timeline& tl) {
  if (expire_event_.valid()) {
    tl.cancel(expire_event_);
    expire_event_ = EventHandle{};
  }
  record_.reset();
  on_expire_ = nullptr;
}

// ---------------------------------------------------------------------------
// Detector

Detector::Detector(std::string name, DetectorParams params)
    : name_(std::move(name)), params_(params) {}

std::optional<Detection> Detector::register_click(Timeline& tl, SimTime arrival,
                                                  bool dark, MemoryId source) {
  if (arrival < next_ready_) return std::nullopt;  // dead time
  if (!dark && !tl.rng().bernoulli(params_.efficiency)) return std::nullopt;
  next_ready_ = arrival + params_.dead_time();
  Detection det;
  det.timestamp = (arrival / params_.resolution) * params_.resolution;
  det.dark = dark;
  det.source = source;
  return det;
}

std::optional<Detection> Detector::register_photon(Timeline& tl, SimTime arrival,
                                                   MemoryId source) {
  return register_click(tl, arrival, false, source);
}

void Detector::start_dark_counts(Timeline& tl, SimTime stop,
                                 std::function<void(const Detection&)> sink) {
  if (params_.dark_count_rate_hz <= 0.0) return;
  dark_sink_ = std::move(sink);
  // Self-rescheduling Poisson process; the step closure lives in the
  // detector so the chain of events can keep copying it.
  dark_step_ = [this, &tl, stop] {
    if (auto det = register_click(tl, tl.now(), true, kNoMemory))
      if (dark_sink_) dark_sink_(*det);
    const SimTime next =
        tl.now() + time_from_seconds(tl.rng().exponential(params_.dark_count_rate_hz));
    if (next <= stop) tl.schedule(next, name_, dark_step_);
  };
  const SimTime first =
      tl.now() + time_from_seconds(tl.rng().exponential(params_.dark_count_rate_hz));
  if (first <= stop) tl.schedule(first, name_, dark_step_);
}

// ---------------------------------------------------------------------------
// QuantumChannel

QuantumChannel::QuantumChannel(std::string name, double length_km,
                               double attenuation_db_per_km,
                               double light_speed_m_per_s, SimTime tdm_frame)
    : name_(std::move(name)),
      length_km_(length_km),
      transmittance_(channel_transmittance(length_km, attenuation_db_per_km)),
      delay_(propagation_delay(length_km, light_speed_m_per_s)),
      frame_(tdm_frame) {
  if (frame_ <= 0) throw SimulationError("TDM frame must be positive");
}

void QuantumChannel::register_source(MemoryId source) { sources_.insert(source); }

bool QuantumChannel::source_registered(MemoryId source) const {
  return sources_.count(source) != 0;
}

SimTime QuantumChannel::claim_slot(MemoryId source, SimTime not_before) {
  if (!source_registered(source)) {
    throw SimulationError("channel '" + name_ + "': transmit scheduled for " +
                          "unregistered source memory " + std::to_string(source));
  }
  std::int64_t slot = (not_before + frame_ - 1) / frame_;
  while (claims_.count(slot) != 0) ++slot;
  claims_.emplace(slot, source);
  return slot * frame_;
}

void QuantumChannel::release_slot(SimTime transmit_time) {
  claims_.erase(transmit_time / frame_);
}

void QuantumChannel::transmit(Timeline& tl, const PhotonToken& photon,
                              std::function<void(const PhotonToken&, SimTime)> deliver) {
  // Prune slot claims that are entirely in the past.
  const std::int64_t horizon = tl.now() / frame_;
  claims_.erase(claims_.begin(), claims_.lower_bound(horizon));
  ++transmitted_;
  if (!tl.rng().bernoulli(transmittance_)) {
    ++lost_;
    return;
  }
  const SimTime arrival = tl.now() + delay_;
  tl.schedule(arrival, name_, [photon, arrival, deliver = std::move(deliver)] {
    deliver(photon, arrival);
  });
}

// ---------------------------------------------------------------------------
// ClassicalChannel

ClassicalChannel::ClassicalChannel(std::string name, SimTime delay)
    : name_(std::move(name)), delay_(delay) {
  if (delay_ < 0) throw SimulationError("classical delay must be >= 0");
}

void ClassicalChannel::send(Timeline& tl, std::function<void()> deliver) {
  tl.schedule(tl.now() + delay_, name_, std::move(deliver));
}

}  // namespace qnet
