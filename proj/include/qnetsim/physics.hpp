#pragma once

#include "qnetsim/kernel.hpp"

namespace qnet {

// Closed-form hardware and protocol quality models. All functions are pure;
// they are used by the device models and are unit-tested against hand-derived
// values and limit behavior.

// Fidelity of a fresh entangled pair produced by two single-atom memories in
// cavities, as a function of cavity cooperativity C, atomic decay rate gamma,
// dephasing rate gamma_star, and the frequency difference delta_omega between
// the two transitions (all rates in the same angular units).
double entangled_pair_fidelity(double cooperativity, double gamma,
                               double gamma_star, double delta_omega);

// Memory emission efficiency given the collection efficiency of the optical
// path and the cavity cooperativity: eta_c * C / (C + 1).
double memory_emission_efficiency(double collection_efficiency,
                                  double cooperativity);

// Output fidelity of one entanglement purification round applied to two pairs
// of equal input fidelity F (Werner-state model, keeping one pair).
double purified_fidelity(double fidelity);

// Probability that the purification round succeeds for input fidelity F.
double purification_success_probability(double fidelity);

// Fidelity after entanglement swapping of pairs with fidelities f1 and f2
// through an intermediate node whose gate/measurement quality is
// `degradation` (a multiplicative factor, 0.99 by default elsewhere).
double swapped_fidelity(double f1, double f2, double degradation);

// Fraction of photons surviving a fiber of given length and attenuation
// (dB/km): 10^(-length * attenuation / 10).
double channel_transmittance(double length_km, double attenuation_db_per_km);

// One-way propagation delay of light in fiber, rounded to integer picoseconds.
SimTime propagation_delay(double length_km, double speed_m_per_s);

}  // namespace qnet
