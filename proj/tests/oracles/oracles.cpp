#include "oracles.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oracle {

double ray_sphere_signed(const Vec3& tip, const Vec3& axis, const Vec3& center, double radius) {
  const Vec3 d = axis.normalized();
  const Vec3 oc = tip - center;
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double s = std::sqrt(disc);
  const double t0 = -b - s;
  if (c < 0.0) {
    // inside: the crossing behind the tip is at t0 < 0
    return t0;
  }
  if (t0 >= 0.0) {
    return t0;
  }
  return std::numeric_limits<double>::infinity();
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double nn = n.squaredNorm();
  if (nn > 0.0) {
    const Vec3 q = p - n * ((p - a).dot(n) / nn);
    // inside test via same-side signs of the three sub-triangles
    const double s0 = (b - a).cross(q - a).dot(n);
    const double s1 = (c - b).cross(q - b).dot(n);
    const double s2 = (a - c).cross(q - c).dot(n);
    if (s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0) {
      return (p - q).norm();
    }
  }
  const auto seg = [&](const Vec3& u, const Vec3& v) {
    const Vec3 e = v - u;
    const double ee = e.squaredNorm();
    double t = ee > 0.0 ? (p - u).dot(e) / ee : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (u + t * e)).norm();
  };
  return std::min({seg(a, b), seg(b, c), seg(c, a)});
}

double point_mesh_distance(const epiguide::Mesh& mesh, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    best = std::min(best, point_triangle_distance(p, mesh.corner(i, 0), mesh.corner(i, 1), mesh.corner(i, 2)));
  }
  return best;
}

double winding_number(const epiguide::Mesh& mesh, const Vec3& p) {
  // Van Oosterom-Strackee solid angle per triangle.
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Vec3 a = mesh.corner(i, 0) - p;
    const Vec3 b = mesh.corner(i, 1) - p;
    const Vec3 c = mesh.corner(i, 2) - p;
    const double la = a.norm();
    const double lb = b.norm();
    const double lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * std::numbers::pi);
}

double phantom_myocardium_radius(int k, double r_min, double r_max, int edf) {
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(k - edf) / 20.0;
  return r_min + (r_max - r_min) * 0.5 * (1.0 + std::cos(phase));
}

int frame_index(double t, double period) {
  double cycles = t / period;
  double frac = cycles - std::floor(cycles);
  int k = static_cast<int>(std::floor(frac * 20.0 + 1e-9));
  return k % 20;
}

int state_of(double d_tp, double d_tm) {
  // zone index per distance, then a 2-D lookup: rows tm zone, cols tp zone
  const int tm_zone = d_tm <= 2.0 ? 1 : 0;
  const int tp_zone = d_tp <= 0.0 ? 2 : (d_tp <= 5.0 ? 1 : 0);
  static constexpr int kLookup[2][3] = {{1, 2, 3}, {4, 4, 4}};
  return kLookup[tm_zone][tp_zone];
}

std::array<Row, 4> published_table() {
  const auto k = [](double v) { return std::optional<Cell>(Cell{false, v, 't', 0, 0, v, v}); };
  const auto r = [](char drv, double nf, double nt, double vf, double vt) {
    return std::optional<Cell>(Cell{true, 0.0, drv, nf, nt, vf, vt});
  };
  return {{
      {k(100), k(2), k(10), r('t', 1.0, 0.5, 500, 271)},
      {k(100), r('m', 1.0, 0.5, 2, 1.06), r('m', 1.0, 0.5, 10, 5.075), r('t', 0.5, 0.0, 270, 40)},
      {k(400), r('m', 0.5, 0.0, 1.05, 0.1), r('m', 0.5, 0.0, 5.075, 0.15), k(40)},
      {k(1000), k(0.1), k(0.15), k(40)},
  }};
}

double evaluate_cell(const Cell& c, double tp_hat, double tm_hat) {
  if (!c.ramp) {
    return c.value;
  }
  const double x = c.driver == 't' ? tp_hat : tm_hat;
  const double lo = std::min(c.n_from, c.n_to);
  const double hi = std::max(c.n_from, c.n_to);
  const double xc = std::min(std::max(x, lo), hi);
  // weight of the far end, measured from the near end
  const double w = std::abs(xc - c.n_from) / std::abs(c.n_to - c.n_from);
  return c.v_from * (1.0 - w) + c.v_to * w;
}

double clip_scale(double d, double lo, double hi) {
  if (d <= lo) {
    return 0.0;
  }
  if (d >= hi) {
    return 1.0;
  }
  return (d - lo) / (hi - lo);
}

std::vector<double> bessel_zero_values(int count, int m_max) {
  std::vector<double> all;
  for (int m = 0; m <= m_max; ++m) {
    for (int n = 1; n <= count; ++n) {
      all.push_back(boost::math::cyl_bessel_j_zero(static_cast<double>(m), n));
    }
  }
  std::sort(all.begin(), all.end());
  all.resize(static_cast<std::size_t>(count));
  return all;
}

std::vector<double> spectral_peaks(std::span<const float> signal, double rate, int count) {
  std::size_t n = 1;
  while (n < 4 * signal.size()) {
    n <<= 1;
  }
  auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  const std::size_t len = signal.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i < len) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len - 1));
      in[i] = w * signal[i];
    } else {
      in[i] = 0.0;
    }
  }
  fftw_execute(plan);
  std::vector<double> mag(n / 2 + 1);
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag[i] = std::log(std::hypot(out[i][0], out[i][1]) + 1e-300);
  }
  fftw_destroy_plan(plan);
  fftw_free(in);
  fftw_free(out);

  const double bin_hz = rate / static_cast<double>(n);
  // local maximum over a +-3 Hz neighbourhood
  const auto reach = static_cast<std::size_t>(std::ceil(3.0 / bin_hz));
  std::vector<std::pair<double, double>> peaks; // (log magnitude, frequency)
  for (std::size_t i = 1; i + 1 < mag.size(); ++i) {
    const std::size_t lo = i > reach ? i - reach : 0;
    const std::size_t hi = std::min(mag.size() - 1, i + reach);
    bool is_max = true;
    for (std::size_t j = lo; j <= hi && is_max; ++j) {
      if (j != i && mag[j] >= mag[i]) {
        is_max = false;
      }
    }
    if (!is_max) {
      continue;
    }
    const double a = mag[i - 1];
    const double b = mag[i];
    const double c = mag[i + 1];
    const double denom = a - 2.0 * b + c;
    const double offset = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
    peaks.emplace_back(b, (static_cast<double>(i) + offset) * bin_hz);
  }
  std::sort(peaks.begin(), peaks.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<double> freqs;
  for (int i = 0; i < count && i < static_cast<int>(peaks.size()); ++i) {
    freqs.push_back(peaks[static_cast<std::size_t>(i)].second);
  }
  std::sort(freqs.begin(), freqs.end());
  return freqs;
}

double fitted_decay_rate(std::span<const float> signal, double rate, double freq) {
  const double period = rate / freq;
  const auto win = static_cast<std::size_t>(std::llround(period * 10.0));
  std::vector<double> ts;
  std::vector<double> logs;
  for (std::size_t start = 0; start + win <= signal.size(); start += win) {
    double i_sum = 0.0;
    double q_sum = 0.0;
    for (std::size_t k = start; k < start + win; ++k) {
      const double ph = 2.0 * std::numbers::pi * freq * static_cast<double>(k) / rate;
      i_sum += signal[k] * std::cos(ph);
      q_sum += signal[k] * std::sin(ph);
    }
    const double env = 2.0 * std::hypot(i_sum, q_sum) / static_cast<double>(win);
    if (env < 1e-4) {
      break; // below 16-bit-ish noise, stop fitting
    }
    ts.push_back((static_cast<double>(start) + 0.5 * static_cast<double>(win)) / rate);
    logs.push_back(std::log(env));
  }
  if (ts.size() < 3) {
    throw std::runtime_error("decay fit needs at least three windows");
  }
  const double n = static_cast<double>(ts.size());
  double st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sl += logs[i];
    stt += ts[i] * ts[i];
    stl += ts[i] * logs[i];
  }
  const double slope = (n * stl - st * sl) / (n * stt - st * st);
  return -slope;
}

std::vector<std::int64_t> onsets(std::span<const float> signal, int hop, double ratio, std::int64_t refractory) {
  const auto h = static_cast<std::size_t>(hop);
  std::vector<double> energy;
  for (std::size_t start = 0; start + h <= signal.size(); start += h) {
    double e = 0.0;
    for (std::size_t k = start; k < start + h; ++k) {
      e += static_cast<double>(signal[k]) * signal[k];
    }
    energy.push_back(e);
  }
  const double floor = 1e-4 * *std::max_element(energy.begin(), energy.end());
  std::vector<std::int64_t> result;
  double prev = 0.0;
  for (std::size_t i = 0; i < energy.size(); ++i) {
    if (energy[i] > floor && energy[i] > ratio * prev) {
      std::size_t k = i * h;
      while (std::abs(signal[k]) <= 1e-3) {
        ++k;
      }
      const auto at = static_cast<std::int64_t>(k);
      if (result.empty() || at - result.back() >= refractory) {
        result.push_back(at);
      }
    }
    prev = energy[i];
  }
  return result;
}

std::vector<double> count_ranks(std::span<const double> v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0;
    double equal = 0;
    for (double x : v) {
      less += x < v[i] ? 1 : 0;
      equal += x == v[i] ? 1 : 0;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double pair_count_u(std::span<const double> a, std::span<const double> b) {
  double u = 0;
  for (double x : a) {
    for (double y : b) {
      u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
    }
  }
  return u;
}

double pair_count_delta(std::span<const double> a, std::span<const double> b) {
  double gt = 0, lt = 0;
  for (double x : a) {
    for (double y : b) {
      gt += x > y;
      lt += x < y;
    }
  }
  return (gt - lt) / static_cast<double>(a.size() * b.size());
}

double chi_square_direct(const std::vector<std::vector<double>>& t) {
  double total = 0;
  std::vector<double> rows(t.size(), 0.0);
  std::vector<double> cols(t.front().size(), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      rows[i] += t[i][j];
      cols[j] += t[i][j];
      total += t[i][j];
    }
  }
  double x2 = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      const double e = rows[i] * cols[j] / total;
      x2 += (t[i][j] - e) * (t[i][j] - e) / e;
    }
  }
  return x2;
}

double fligner_direct(const std::vector<std::vector<double>>& groups) {
  std::vector<double> centered;
  std::vector<std::size_t> group_of;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<double> s = groups[g];
    std::sort(s.begin(), s.end());
    const std::size_t m = s.size();
    const double med = m % 2 ? s[m / 2] : 0.5 * (s[m / 2 - 1] + s[m / 2]);
    for (double x : groups[g]) {
      centered.push_back(std::abs(x - med));
      group_of.push_back(g);
    }
  }
  const auto ranks = count_ranks(centered);
  const double n = static_cast<double>(centered.size());
  const boost::math::normal_distribution<double> std_normal;
  std::vector<double> a(centered.size());
  double mean = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = boost::math::quantile(std_normal, (1.0 + ranks[i] / (n + 1.0)) / 2.0);
    mean += a[i];
  }
  mean /= n;
  double var = 0;
  for (double v : a) {
    var += (v - mean) * (v - mean);
  }
  var /= (n - 1.0);
  double stat = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double sum = 0;
    double cnt = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (group_of[i] == g) {
        sum += a[i];
        cnt += 1;
      }
    }
    stat += cnt * (sum / cnt - mean) * (sum / cnt - mean);
  }
  return stat / var;
}

std::vector<double> enumerate_u_distribution(int n, int m) {
  // Walk all n-subsets of n + m positions; U counts pairs where a first-sample
  // element ranks above a second-sample element.
  const int total = n + m;
  std::vector<double> dist(static_cast<std::size_t>(n * m + 1), 0.0);
  std::vector<int> pick(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    pick[static_cast<std::size_t>(i)] = i;
  }
  while (true) {
    int u = 0;
    for (int i = 0; i < n; ++i) {
      // second-sample elements below this position
      u += pick[static_cast<std::size_t>(i)] - i;
    }
    dist[static_cast<std::size_t>(u)] += 1.0;
    int i = n - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == total - n + i) {
      --i;
    }
    if (i < 0) {
      break;
    }
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return dist;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

} // namespace oracle
