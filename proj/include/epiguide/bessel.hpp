#pragma once

#include <vector>

namespace epiguide {

struct BesselZero {
  int m = 0;        ///< Bessel order (nodal diameters)
  int n = 1;        ///< 1-based zero index (nodal circles)
  double value = 0; ///< n-th positive zero of J_m
};

/// First `count` positive zeros of J_0..J_{m_max}, merged in ascending order.
[[nodiscard]] std::vector<BesselZero> bessel_zeros(int count, int m_max);

/// n-th positive zero of J_m.
[[nodiscard]] double bessel_zero(int m, int n);

} // namespace epiguide
