#include "epiguide/metrics.hpp"

#include "epiguide/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace epiguide::metrics {

std::array<double, 3> OutcomeCounts::percentages() const {
  const double n = total();
  if (n == 0) {
    return {0.0, 0.0, 0.0};
  }
  return {100.0 * success / n, 100.0 * missed / n, 100.0 * critical / n};
}

namespace {

void count(OutcomeCounts& c, Outcome o) {
  switch (o) {
    case Outcome::SuccessfulCompletion:
      ++c.success;
      break;
    case Outcome::MissedTarget:
      ++c.missed;
      break;
    case Outcome::CriticalFailure:
      ++c.critical;
      break;
  }
}

void require_nonempty(std::span<const double> v, const char* what) {
  if (v.empty()) {
    throw DomainError(std::string(what) + ": empty sample");
  }
}

} // namespace

OutcomeRates outcome_rates(std::span<const TrialLog> logs) {
  if (logs.empty()) {
    throw DomainError("outcome rates: no trials");
  }
  OutcomeRates r;
  for (const auto& log : logs) {
    if (!log.outcome) {
      throw DomainError("outcome rates: trial '" + log.trajectory_id + "' has no outcome");
    }
    count(r.by_modality[log.modality], *log.outcome);
    if (!log.group.empty()) {
      count(r.by_group[log.group][log.modality], *log.outcome);
    }
  }
  return r;
}

double normal_sf(double z) { return boost::math::cdf(boost::math::complement(boost::math::normal(), z)); }

double chi_square_sf(double x, double df) {
  if (x <= 0.0) {
    return 1.0;
  }
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x));
}

double student_t_sf(double t, double df) {
  return boost::math::cdf(boost::math::complement(boost::math::students_t(df), t));
}

ChiSquareResult chi_square(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  if (rows < 2) {
    throw DomainError("chi-square needs at least two rows");
  }
  const std::size_t cols = table.front().size();
  if (cols < 2) {
    throw DomainError("chi-square needs at least two columns");
  }
  std::vector<double> row_sum(rows, 0.0);
  std::vector<double> col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (table[i].size() != cols) {
      throw DomainError("chi-square table is ragged");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!(table[i][j] >= 0.0)) {
        throw DomainError("chi-square counts must be >= 0");
      }
      row_sum[i] += table[i][j];
      col_sum[j] += table[i][j];
      total += table[i][j];
    }
  }
  ChiSquareResult r;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      if (!(expected > 0.0)) {
        throw DomainError("chi-square: zero expected count");
      }
      const double d = table[i][j] - expected;
      r.statistic += d * d / expected;
    }
  }
  r.df = static_cast<int>((rows - 1) * (cols - 1));
  r.p_value = chi_square_sf(r.statistic, r.df);
  return r;
}

ChiSquareResult chi_square(const OutcomeCounts& a, const OutcomeCounts& b) {
  return chi_square({{double(a.success), double(a.missed), double(a.critical)},
                     {double(b.success), double(b.missed), double(b.critical)}});
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) {
      ++j;
    }
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      ranks[order[k]] = rank;
    }
    i = j;
  }
  return ranks;
}

namespace {

/// Null distribution counts of U for sample sizes n and m without ties:
/// c(n, m, u) = c(n - 1, m, u - m) + c(n, m - 1, u).
std::vector<double> exact_u_counts(int n, int m) {
  // table[i][j] holds the count vector for sizes (i, j); build row by row.
  std::vector<std::vector<std::vector<double>>> table(n + 1, std::vector<std::vector<double>>(m + 1));
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= m; ++j) {
      auto& c = table[i][j];
      c.assign(i * j + 1, 0.0);
      if (i == 0 || j == 0) {
        c[0] = 1.0;
        continue;
      }
      const auto& without_a = table[i - 1][j];
      const auto& without_b = table[i][j - 1];
      for (int u = 0; u <= i * j; ++u) {
        double v = 0.0;
        if (u - j >= 0 && u - j < static_cast<int>(without_a.size())) {
          v += without_a[u - j];
        }
        if (u < static_cast<int>(without_b.size())) {
          v += without_b[u];
        }
        c[u] = v;
      }
    }
  }
  return table[n][m];
}

} // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  require_nonempty(a, "Mann-Whitney");
  require_nonempty(b, "Mann-Whitney");
  const auto n = static_cast<double>(a.size());
  const auto m = static_cast<double>(b.size());
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const double rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + static_cast<long>(a.size()), 0.0);
  MannWhitneyResult r;
  r.u_a = rank_sum_a - n * (n + 1.0) / 2.0;
  r.u_b = n * m - r.u_a;
  r.u = std::min(r.u_a, r.u_b);

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) {
      ++j;
    }
    const double t = static_cast<double>(j - i);
    if (t > 1.0) {
      ties = true;
      tie_term += t * t * t - t;
    }
    i = j;
  }

  if (!ties && a.size() <= 20 && b.size() <= 20) {
    r.exact = true;
    const auto counts = exact_u_counts(static_cast<int>(a.size()), static_cast<int>(b.size()));
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto k = static_cast<std::size_t>(std::llround(r.u));
    double lower = 0.0;
    for (std::size_t u = 0; u <= k; ++u) {
      lower += counts[u];
    }
    r.p_value = std::min(1.0, 2.0 * lower / total);
    return r;
  }
  const double N = n + m;
  const double mean = n * m / 2.0;
  const double var = n * m / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (!(var > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double diff = r.u_a - mean;
  const double corrected = std::max(std::abs(diff) - 0.5, 0.0);
  r.p_value = std::min(1.0, 2.0 * normal_sf(corrected / std::sqrt(var)));
  return r;
}

double cliffs_delta(std::span<const double> a, std::span<const double> b) {
  require_nonempty(a, "Cliff's delta");
  require_nonempty(b, "Cliff's delta");
  // Counting via sorted b: for each a_i, #(b < a_i) - #(b > a_i).
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sb.begin(), sb.end());
  double acc = 0.0;
  for (double x : a) {
    const auto below = std::lower_bound(sb.begin(), sb.end(), x) - sb.begin();
    const auto above = sb.end() - std::upper_bound(sb.begin(), sb.end(), x);
    acc += static_cast<double>(below - above);
  }
  return acc / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DomainError("Spearman: length mismatch");
  }
  if (x.size() < 3) {
    throw DomainError("Spearman: needs at least 3 pairs");
  }
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw DomainError("Spearman: constant input");
  }
  SpearmanResult r;
  r.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::abs(r.rho) >= 1.0) {
    r.p_value = 0.0;
  } else {
    const double t = r.rho * std::sqrt((n - 2.0) / (1.0 - r.rho * r.rho));
    r.p_value = std::min(1.0, 2.0 * student_t_sf(std::abs(t), n - 2.0));
  }
  return r;
}

FisherZResult fisher_z_compare(double rho1, int n1, double rho2, int n2) {
  if (!(std::abs(rho1) < 1.0) || !(std::abs(rho2) < 1.0)) {
    throw DomainError("Fisher z: |rho| must be < 1");
  }
  if (n1 < 4 || n2 < 4) {
    throw DomainError("Fisher z: each group needs n >= 4");
  }
  FisherZResult r;
  r.z = (std::atanh(rho1) - std::atanh(rho2)) / std::sqrt(1.0 / (n1 - 3) + 1.0 / (n2 - 3));
  r.p_value = std::min(1.0, 2.0 * normal_sf(std::abs(r.z)));
  return r;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) {
    throw DomainError("quantile of an empty sample");
  }
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double median(std::span<const double> values) {
  require_nonempty(values, "median");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

Descriptives descriptives(std::span<const double> values) {
  require_nonempty(values, "descriptives");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  Descriptives d;
  d.n = s.size();
  d.median = median(s);
  std::vector<double> dev(s.size());
  std::transform(s.begin(), s.end(), dev.begin(), [&](double x) { return std::abs(x - d.median); });
  d.mad = median(dev);
  d.q1 = quantile_sorted(s, 0.25);
  d.q3 = quantile_sorted(s, 0.75);
  d.iqr = d.q3 - d.q1;
  d.min = s.front();
  d.max = s.back();
  return d;
}

FlignerResult fligner_killeen(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) {
    throw DomainError("Fligner-Killeen needs at least two groups");
  }
  std::vector<double> centered;
  std::vector<std::size_t> owner;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    require_nonempty(groups[g], "Fligner-Killeen");
    const double med = median(groups[g]);
    for (double x : groups[g]) {
      centered.push_back(std::abs(x - med));
      owner.push_back(g);
    }
  }
  const auto ranks = midranks(centered);
  const double N = static_cast<double>(centered.size());
  const boost::math::normal standard;
  std::vector<double> score(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    score[i] = boost::math::quantile(standard, (1.0 + ranks[i] / (N + 1.0)) / 2.0);
  }
  const double mean = std::accumulate(score.begin(), score.end(), 0.0) / N;
  double var = 0.0;
  for (double s : score) {
    var += (s - mean) * (s - mean);
  }
  var /= N - 1.0;
  if (!(var > 0.0)) {
    throw DomainError("Fligner-Killeen: all centered values tie");
  }
  std::vector<double> sum(groups.size(), 0.0);
  for (std::size_t i = 0; i < score.size(); ++i) {
    sum[owner[i]] += score[i];
  }
  FlignerResult r;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double n = static_cast<double>(groups[g].size());
    const double gm = sum[g] / n;
    r.statistic += n * (gm - mean) * (gm - mean);
  }
  r.statistic /= var;
  r.df = static_cast<int>(groups.size()) - 1;
  r.p_value = chi_square_sf(r.statistic, r.df);
  return r;
}

FlignerResult fligner_killeen(std::span<const double> a, std::span<const double> b) {
  return fligner_killeen({std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end())});
}

} // namespace epiguide::metrics
