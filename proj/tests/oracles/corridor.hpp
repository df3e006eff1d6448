#pragma once

#include <cmath>

namespace oracle {

// P(sup_{[0,T]} |B_t| < a) for standard Brownian motion, by the classical
// alternating series over odd k. Terms decay like exp(-k^2), so 200 terms
// are far past double precision for any a, T of interest here.
inline double corridor_probability(double a, double T = 1.0) {
  const double pi = 3.14159265358979323846;
  double sum = 0.0;
  for (int k = 1; k < 400; k += 2) {
    const double sign = ((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    sum += sign / k * std::exp(-k * k * pi * pi * T / (8.0 * a * a));
  }
  return 4.0 / pi * sum;
}

}  // namespace oracle
