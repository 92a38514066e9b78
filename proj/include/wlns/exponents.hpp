#pragma once

#include <cmath>
#include <string>

#include "wlns/error.hpp"

namespace wlns {

/// Prodi-Serrin pair: 2/p + 3/q = 1.
struct ExponentPair {
  double p;
  double q;
};

/// Space/time exponents for the weak-in-space control of the sup norm, chosen
/// so that 1 - 2/rho - 3/sigma = 1/rho.
struct DerivedExponents {
  double p;
  double q;
  double sigma;
  double rho;

  /// 1 - 2/rho - 3/sigma; equals 1/rho for exponents from derive_exponents.
  double scaling_gap() const noexcept { return 1.0 - 2.0 / rho - 3.0 / sigma; }
};

/// q in (3, 9) so that both p and q lie in (3, inf).
inline DerivedExponents derive_exponents(double q) {
  if (!std::isfinite(q)) throw Error("derive_exponents: q must be finite");
  if (!(q > 3.0)) throw Error("derive_exponents: q must exceed 3 (p = 2q/(q-3) is undefined or negative), got " + std::to_string(q));
  if (!(q < 9.0)) throw Error("derive_exponents: q must be below 9 so that p = 2q/(q-3) exceeds 3, got " + std::to_string(q));
  DerivedExponents e{};
  e.q = q;
  e.p = 2.0 * q / (q - 3.0);
  e.sigma = 3.0 * (q - 1.0) / 2.0;
  e.rho = 3.0 * (q - 1.0) / (q - 3.0);
  return e;
}

inline double serrin_defect(const ExponentPair& e) { return 2.0 / e.p + 3.0 / e.q - 1.0; }

}  // namespace wlns
