#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "qnetsim/ids.hpp"
#include "qnetsim/kernel.hpp"
#include "qnetsim/physics.hpp"

namespace qnet {

// ---------------------------------------------------------------------------
// Parameters

struct MemoryParams {
  double emission_probability = 0.75;   // photon emitted and collected per excite
  double frequency_hz = 20e3;           // max excitation rate
  double coherence_time_s = 1.3;        // entanglement lifetime
  double cooperativity = 500.0;         // cavity cooperativity C
  double gamma = 14.0;                  // atomic decay rate (MHz-scale units)
  double gamma_star = 32.0;             // dephasing rate, same units as gamma
  double delta_omega = 0.0;             // transition frequency mismatch

  SimTime excite_period() const;        // 1/frequency in picoseconds
  double fresh_pair_fidelity() const;   // entangled_pair_fidelity(...)
};

struct DetectorParams {
  double efficiency = 0.8;              // registration probability per photon
  double count_rate_hz = 50e6;          // max rate; dead time = 1/rate
  double dark_count_rate_hz = 0.0;      // spurious clicks per second
  SimTime resolution = 100;             // timestamp quantization, picoseconds

  SimTime dead_time() const;            // 1/count_rate in picoseconds
};

// ---------------------------------------------------------------------------
// Entanglement bookkeeping

// One half of an entangled pair, stored on each of the two partner memories.
// Both halves carry the same fidelity and, after protocol completion,
// partner fields that mirror each other.
struct EntanglementRecord {
  MemoryId partner = kNoMemory;
  NodeIndex partner_node = kNoNode;
  double fidelity = 0.0;
  SimTime expiration = 0;
  // Simulator-level flag: the other half was already consumed and a release
  // notice is in flight. Protocol logic never reads this; consistency
  // checkers use it to skip pairs that are mid-teardown.
  bool releasing = false;
};

// Ground-truth tag carried by photons through channels and detectors.
// Protocol decisions only ever see detector click messages; the tag lets the
// swap station distinguish true heralds from accidental ones.
struct PhotonToken {
  MemoryId source = kNoMemory;
  SimTime emitted_at = 0;
};

// ---------------------------------------------------------------------------
// Single-atom quantum memory

// Tracks the atomic spin qubit as amplitudes (alpha, beta) over {|down>,
// |up>}, a re-excitation gate derived from the memory frequency, and at most
// one entanglement record. Excitation collapses the spin: with probability
// |alpha|^2 the atom takes the emitting branch (ending in |down>), and a
// photon is actually collected with the configured emission probability.
class QuantumMemory {
 public:
  QuantumMemory(MemoryId id, std::string name, MemoryParams params);

  MemoryId id() const { return id_; }
  const std::string& name() const { return name_; }
  const MemoryParams& params() const { return params_; }

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  void set_plus_state();                // (1/sqrt2, 1/sqrt2)
  void set_down();                      // (1, 0)
  void set_up();                        // (0, 1)
  void apply_x_gate();                  // swap amplitudes

  SimTime next_excite_time() const { return next_excite_; }

  // Attempt photon emission at the current time. Throws if called before the
  // frequency gate reopens. Returns a token only if a photon was collected
  // into the fiber; excited_branch() reports the ground-truth spin branch of
  // the last excite either way.
  std::optional<PhotonToken> excite(Timeline& tl);
  bool excited_branch() const { return last_excited_; }

  bool entangled() const { return record_.has_value(); }
  const EntanglementRecord& record() const;
  EntanglementRecord& mutable_record();

  // Install a record and arm the expiration event. `on_expire` fires when the
  // record's expiration passes while still installed; the callback runs after
  // the record has been cleared and the spin reset.
  void store_record(Timeline& tl, const EntanglementRecord& rec,
                    std::function<void(QuantumMemory&)> on_expire);
  // Drop the record (consumption, teardown) and cancel the expiration event.
  void clear_record(Timeline& tl);

 private:
  MemoryId id_;
  std::string name_;
  MemoryParams params_;
  double alpha_, beta_;
  SimTime next_excite_ = 0;
  bool last_excited_ = false;
  std::optional<EntanglementRecord> record_;
  EventHandle expire_event_;
  std::function<void(QuantumMemory&)> on_expire_;
};

// ---------------------------------------------------------------------------
// Single-photon detector

struct Detection {
  SimTime timestamp = 0;     // quantized to the detector resolution
  bool dark = false;         // ground truth: spurious click
  MemoryId source = kNoMemory;  // ground truth: emitting memory, if any
};

// Applies efficiency, dead time and timestamp quantization to photon
// arrivals. Dark counts are generated as a Poisson process when enabled.
class Detector {
 public:
  Detector(std::string name, DetectorParams params);

  const std::string& name() const { return name_; }
  const DetectorParams& params() const { return params_; }

  // Photon arrival; returns a detection if the detector registers it.
  std::optional<Detection> register_photon(Timeline& tl, SimTime arrival,
                                           MemoryId source);

  // Start the dark-count process (no-op at rate 0). `sink` receives
  // registered dark detections until `stop`.
  void start_dark_counts(Timeline& tl, SimTime stop,
                         std::function<void(const Detection&)> sink);

  SimTime next_ready_time() const { return next_ready_; }

 private:
  std::optional<Detection> register_click(Timeline& tl, SimTime arrival,
                                          bool dark, MemoryId source);

  std::string name_;
  DetectorParams params_;
  SimTime next_ready_ = 0;
  std::function<void(const Detection&)> dark_sink_;
  std::function<void()> dark_step_;
};

// ---------------------------------------------------------------------------
// Quantum channel (one fiber span from a router to its link's swap station)

// Models attenuation, propagation delay and time-division multiplexing.
// Transmission slots lie on a grid spaced one TDM frame apart; each slot can
// be claimed by at most one source, so concurrent attempts on a shared fiber
// never overlap in time.
class QuantumChannel {
 public:
  QuantumChannel(std::string name, double length_km, double attenuation_db_per_km,
                 double light_speed_m_per_s, SimTime tdm_frame);

  const std::string& name() const { return name_; }
  double length_km() const { return length_km_; }
  double transmittance() const { return transmittance_; }
  SimTime delay() const { return delay_; }
  SimTime tdm_frame() const { return frame_; }

  void register_source(MemoryId source);
  bool source_registered(MemoryId source) const;

  // Earliest unclaimed slot whose transmit time is >= not_before, claimed for
  // `source`. Throws if the source is not registered.
  SimTime claim_slot(MemoryId source, SimTime not_before);
  // Release a previously claimed slot (round-two slots of failed attempts).
  void release_slot(SimTime transmit_time);

  // Send a photon entering the fiber at `transmit_time` (must be now).
  // Delivery happens after the propagation delay with probability equal to
  // the transmittance; lost photons disappear silently.
  void transmit(Timeline& tl, const PhotonToken& photon,
                std::function<void(const PhotonToken&, SimTime)> deliver);

  std::uint64_t transmitted() const { return transmitted_; }
  std::uint64_t lost() const { return lost_; }

 private:
  std::string name_;
  double length_km_;
  double transmittance_;
  SimTime delay_;
  SimTime frame_;
  std::unordered_set<MemoryId> sources_;
  std::map<std::int64_t, MemoryId> claims_;  // slot index -> claimant
  std::uint64_t transmitted_ = 0;
  std::uint64_t lost_ = 0;
};

// ---------------------------------------------------------------------------
// Classical channel

// Lossless fixed-delay message pipe. With a constant delay, FIFO ordering
// follows from the event queue's (time, sequence) ordering.
class ClassicalChannel {
 public:
  ClassicalChannel(std::string name, SimTime delay);

  const std::string& name() const { return name_; }
  SimTime delay() const { return delay_; }

  void send(Timeline& tl, std::function<void()> deliver);

 private:
  std::string name_;
  SimTime delay_;
};

}  // namespace qnet
