#pragma once

#include "epiguide/navkernel.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace epiguide::metrics {

struct OutcomeCounts {
  int success = 0;
  int missed = 0;
  int critical = 0;

  [[nodiscard]] int total() const { return success + missed + critical; }
  /// Percentages in the order success, missed, critical.
  [[nodiscard]] std::array<double, 3> percentages() const;
  bool operator==(const OutcomeCounts&) const = default;
};

/// Rows keyed by modality.
using OutcomeTable = std::map<std::string, OutcomeCounts>;

struct OutcomeRates {
  OutcomeTable by_modality;
  /// group -> modality -> counts; logs without a group are left out.
  std::map<std::string, OutcomeTable> by_group;
};

/// Throws DomainError for no logs or a log without an outcome.
[[nodiscard]] OutcomeRates outcome_rates(std::span<const TrialLog> logs);

struct ChiSquareResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Pearson chi-square of independence over an r x c table of counts.
/// Throws DomainError when any expected count is zero.
[[nodiscard]] ChiSquareResult chi_square(const std::vector<std::vector<double>>& table);
[[nodiscard]] ChiSquareResult chi_square(const OutcomeCounts& a, const OutcomeCounts& b);

/// Average ranks (1-based) with ties sharing their mean rank.
[[nodiscard]] std::vector<double> midranks(std::span<const double> values);

struct MannWhitneyResult {
  double u = 0.0;   ///< min(U_a, U_b)
  double u_a = 0.0; ///< pairs with a > b, ties counted one half
  double u_b = 0.0;
  double p_value = 1.0; ///< two-sided
  bool exact = false;
};

/// Exact null distribution when both samples have at most 20 values and there
/// are no ties; otherwise the normal approximation with tie and continuity
/// correction. Throws DomainError for an empty sample.
[[nodiscard]] MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// (#{a_i > b_j} - #{a_i < b_j}) / (n m).
[[nodiscard]] double cliffs_delta(std::span<const double> a, std::span<const double> b);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0; ///< two-sided, t approximation with n - 2 df
};

/// Throws DomainError for length mismatch, fewer than 3 pairs, or a constant
/// input.
[[nodiscard]] SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y);

struct FisherZResult {
  double z = 0.0;
  double p_value = 1.0; ///< two-sided
};

[[nodiscard]] FisherZResult fisher_z_compare(double rho1, int n1, double rho2, int n2);

struct Descriptives {
  std::size_t n = 0;
  double median = 0.0;
  double mad = 0.0; ///< median absolute deviation from the median, unscaled
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Type-7 (linear interpolation) sample quantile of sorted data.
[[nodiscard]] double quantile_sorted(std::span<const double> sorted, double p);
[[nodiscard]] double median(std::span<const double> values);
[[nodiscard]] Descriptives descriptives(std::span<const double> values);

struct FlignerResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Fligner-Killeen median-centered test of equal dispersion across groups.
/// Throws DomainError for an empty group or when every centered value ties.
[[nodiscard]] FlignerResult fligner_killeen(const std::vector<std::vector<double>>& groups);
[[nodiscard]] FlignerResult fligner_killeen(std::span<const double> a, std::span<const double> b);

/// Standard normal upper tail and chi-square / Student t upper tails.
[[nodiscard]] double normal_sf(double z);
[[nodiscard]] double chi_square_sf(double x, double df);
[[nodiscard]] double student_t_sf(double t, double df);

} // namespace epiguide::metrics
