#include <cmath>

#include "harness.hpp"
#include "qnetsim/physics.hpp"

namespace accept {

using namespace qnet;

bool closed_form_models(std::ostream& os) {
  Reporter r(os);

  // Fresh-pair fidelity at the default cavity operating point.
  const double f0 = entangled_pair_fidelity(500.0, 14.0, 32.0, 0.0);
  r.check(std::abs(f0 - 0.9910) <= 1e-4,
          "pair fidelity at C=500, gamma=14, gamma*=32, delta_omega=0 is "
          "0.9910 +- 1e-4 (got " +
              str(f0) + ")");

  bool monotone = true;
  double prev = entangled_pair_fidelity(50.0, 14.0, 32.0, 0.0);
  for (int c = 51; c <= 500; ++c) {
    const double f = entangled_pair_fidelity(c, 14.0, 32.0, 0.0);
    if (f < prev) monotone = false;
    prev = f;
  }
  r.check(monotone, "pair fidelity is non-decreasing in C across [50, 500]");

  // Photon collection through the cavity.
  const double e0 = memory_emission_efficiency(0.8, 500.0);
  r.check(std::abs(e0 - 0.7984) <= 1e-4,
          "emission efficiency at eta_c=0.8, C=500 is 0.7984 +- 1e-4 (got " +
              str(e0) + ")");

  // Purification map: fixed points hold exactly, and every input strictly
  // between 1/2 and 1 strictly improves.
  r.check(purified_fidelity(1.0) == 1.0,
          "purified fidelity of 1 is exactly 1");
  r.check(purified_fidelity(0.25) == 0.25,
          "purified fidelity of 1/4 is exactly 1/4");
  bool improves = true;
  for (int k = 1; k <= 100; ++k) {
    const double f = 0.5 + 0.5 * k / 101.0;
    if (!(purified_fidelity(f) > f)) improves = false;
  }
  r.check(improves,
          "purification strictly improves fidelity on a 100-point grid over "
          "(0.5, 1)");

  // Swap output quality is the exact triple product.
  bool exact = true;
  for (double f1 : {0.25, 0.5, 0.7, 0.9, 0.96, 1.0})
    for (double f2 : {0.25, 0.5, 0.7, 0.9, 0.96, 1.0})
      for (double g : {0.9, 0.95, 0.99, 1.0})
        if (swapped_fidelity(f1, f2, g) != f1 * f2 * g) exact = false;
  r.check(exact,
          "swapped fidelity equals fidelity1 * fidelity2 * degradation "
          "exactly on a parameter grid");
  r.check(std::abs(swapped_fidelity(0.9, 0.9, 0.99) - 0.8019) <= 1e-12,
          "swapped fidelity at (0.9, 0.9, 0.99) is 0.8019 (got " +
              str(swapped_fidelity(0.9, 0.9, 0.99)) + ")");

  r.within_budget(1.0);
  return r.all_ok();
}

}  // namespace accept
