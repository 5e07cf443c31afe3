#include "qnetsim/physics.hpp"

#include <cmath>
#include <string>

namespace qnet {

namespace {
void require(bool ok, const std::string& what) {
  if (!ok) throw SimulationError("physics: " + what);
}
}  // namespace

double entangled_pair_fidelity(double cooperativity, double gamma,
                               double gamma_star, double delta_omega) {
  require(cooperativity >= 0.0, "cooperativity must be >= 0");
  require(gamma > 0.0, "gamma must be > 0");
  require(gamma_star >= 0.0, "gamma_star must be >= 0");
  const double a = (cooperativity + 1.0) * gamma;
  const double b = a + 2.0 * gamma_star;
  return 0.5 * (1.0 + (a * a) / (b * b + delta_omega * delta_omega));
}

double memory_emission_efficiency(double collection_efficiency,
                                  double cooperativity) {
  require(collection_efficiency >= 0.0 && collection_efficiency <= 1.0,
          "collection efficiency must be in [0, 1]");
  require(cooperativity >= 0.0, "cooperativity must be >= 0");
  return collection_efficiency * cooperativity / (cooperativity + 1.0);
}

namespace {
// Shared denominator of the purification update: the success probability.
double purification_denominator(double f) {
  const double g = (1.0 - f) / 3.0;
  return f * f + 2.0 * f * g + 5.0 * g * g;
}
}  // namespace

double purified_fidelity(double fidelity) {
  require(fidelity >= 0.0 && fidelity <= 1.0, "fidelity must be in [0, 1]");
  const double g = (1.0 - fidelity) / 3.0;
  return (fidelity * fidelity + g * g) / purification_denominator(fidelity);
}

double purification_success_probability(double fidelity) {
  require(fidelity >= 0.0 && fidelity <= 1.0, "fidelity must be in [0, 1]");
  return purification_denominator(fidelity);
}

double swapped_fidelity(double f1, double f2, double degradation) {
  require(f1 >= 0.0 && f1 <= 1.0 && f2 >= 0.0 && f2 <= 1.0,
          "fidelities must be in [0, 1]");
  require(degradation >= 0.0 && degradation <= 1.0,
          "degradation factor must be in [0, 1]");
  return f1 * f2 * degradation;
}

double channel_transmittance(double length_km, double attenuation_db_per_km) {
  require(length_km >= 0.0, "length must be >= 0");
  require(attenuation_db_per_km >= 0.0, "attenuation must be >= 0");
  return std::pow(10.0, -length_km * attenuation_db_per_km / 10.0);
}

SimTime propagation_delay(double length_km, double speed_m_per_s) {
  require(length_km >= 0.0, "length must be >= 0");
  require(speed_m_per_s > 0.0, "light speed must be > 0");
  return static_cast<SimTime>(std::llround(length_km * 1000.0 / speed_m_per_s * 1e12));
}

}  // namespace qnet
