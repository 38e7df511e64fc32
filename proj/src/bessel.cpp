#include "epiguide/bessel.hpp"

#include "epiguide/error.hpp"

#include <algorithm>
#include <cmath>

namespace epiguide {

namespace {

// Zeros of J_m are spaced by roughly pi, so a 0.1 scan never skips a root.
constexpr double kScanStep = 0.1;

double refine(int m, double lo, double hi) {
  double flo = std::cyl_bessel_j(m, lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = std::cyl_bessel_j(m, mid);
    if (fmid == 0.0) {
      return mid;
    }
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> zeros_of_order(int m, int count) {
  std::vector<double> roots;
  double x = 1e-3;
  double fx = std::cyl_bessel_j(m, x);
  while (static_cast<int>(roots.size()) < count) {
    const double next = x + kScanStep;
    const double fn = std::cyl_bessel_j(m, next);
    if (fn == 0.0) {
      roots.push_back(next);
      x = next + 1e-9;
      fx = std::cyl_bessel_j(m, x);
      continue;
    }
    if ((fx < 0.0) != (fn < 0.0)) {
      roots.push_back(refine(m, x, next));
    }
    x = next;
    fx = fn;
  }
  return roots;
}

} // namespace

std::vector<BesselZero> bessel_zeros(int count, int m_max) {
  if (count < 1 || m_max < 0) {
    throw ConfigError("bessel_zeros needs count >= 1 and m_max >= 0");
  }
  std::vector<BesselZero> all;
  for (int m = 0; m <= m_max; ++m) {
    const auto roots = zeros_of_order(m, count);
    for (std::size_t i = 0; i < roots.size(); ++i) {
      all.push_back({m, static_cast<int>(i) + 1, roots[i]});
    }
  }
  std::sort(all.begin(), all.end(), [](const BesselZero& a, const BesselZero& b) { return a.value < b.value; });
  all.resize(static_cast<std::size_t>(count));
  return all;
}

double bessel_zero(int m, int n) {
  if (m < 0 || n < 1) {
    throw ConfigError("bessel_zero needs m >= 0 and n >= 1");
  }
  return zeros_of_order(m, n).back();
}

} // namespace epiguide
