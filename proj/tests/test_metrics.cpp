#include "oracles.hpp"
#include "test_util.hpp"

#include "epiguide/analysis.hpp"
#include "epiguide/error.hpp"
#include "epiguide/metrics.hpp"

#include <doctest.h>

#include <numeric>
#include <random>

using namespace epiguide;
using namespace epiguide::metrics;

namespace {

std::vector<double> draw(std::mt19937_64& rng, int n, double shift, double scale, bool round_values = false) {
  std::normal_distribution<double> d(shift, scale);
  std::vector<double> v;
  for (int i = 0; i < n; ++i) {
    const double x = d(rng);
    v.push_back(round_values ? std::round(x) : x);
  }
  return v;
}

TrialLog closed_log(const std::string& modality, const std::string& group, Outcome outcome, double duration,
                    double target_error) {
  TrialLog log;
  log.modality = modality;
  log.group = group;
  log.start_time = 0.0;
  TrialSample s;
  s.pose = make_pose({0, 0, 60}, {0, 0, -1});
  s.nav.time = duration;
  log.append(s);
  log.closed = true;
  log.stop_time = duration;
  log.outcome = outcome;
  log.min_distance_pericardium = target_error / 2;
  log.distance_to_target = target_error;
  return log;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("chi-square matches the direct sum and the closed-form tail for df 2") {
  const std::vector<std::vector<double>> t = {{33, 22, 5}, {50, 8, 2}};
  const auto r = chi_square(t);
  CHECK(r.statistic == doctest::Approx(oracle::chi_square_direct(t)).epsilon(1e-12));
  CHECK(r.df == 2);
  CHECK(r.p_value == doctest::Approx(std::exp(-r.statistic / 2)).epsilon(1e-10));
  CHECK(chi_square(OutcomeCounts{33, 22, 5}, OutcomeCounts{50, 8, 2}).statistic == r.statistic);
  CHECK_THROWS_AS((void)chi_square({{1, 0}, {2, 0}}), DomainError);
  CHECK_THROWS_AS((void)chi_square({{1, 2}}), DomainError);
}

TEST_CASE("midranks agree with rank counting") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto v = draw(rng, 30, 0, 3, true);
    const auto got = midranks(v);
    const auto want = oracle::count_ranks(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(got[i] == want[i]);
    }
  }
}

TEST_CASE("exact Mann-Whitney p-values follow the enumerated null distribution") {
  const std::vector<double> a = {1.1, 2.2, 3.3, 4.4};
  const std::vector<double> b = {5.5, 6.6, 7.7};
  const auto r = mann_whitney_u(a, b);
  CHECK(r.exact);
  CHECK(r.u == 0.0);
  CHECK(r.p_value == doctest::Approx(2.0 / 35.0).epsilon(1e-12));

  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 2 + rep % 7;
    const int m = 3 + rep % 5;
    const auto x = draw(rng, n, 0.3, 1);
    const auto y = draw(rng, m, 0, 1);
    const auto res = mann_whitney_u(x, y);
    REQUIRE(res.exact);
    CHECK(res.u_a == oracle::pair_count_u(x, y));
    CHECK(res.u_a + res.u_b == n * m);
    const auto dist = oracle::enumerate_u_distribution(n, m);
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    double lower = 0;
    for (int u = 0; u <= static_cast<int>(res.u); ++u) lower += dist[static_cast<std::size_t>(u)];
    CHECK(res.p_value == doctest::Approx(std::min(1.0, 2 * lower / total)).epsilon(1e-12));
  }
}

TEST_CASE("ties or large samples use the corrected normal approximation") {
  std::mt19937_64 rng(7);
  const auto x = draw(rng, 40, 1, 2, true);
  const auto y = draw(rng, 35, 0, 2, true);
  const auto r = mann_whitney_u(x, y);
  CHECK_FALSE(r.exact);
  CHECK(r.u_a == oracle::pair_count_u(x, y));
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value <= 1.0);
  CHECK(mann_whitney_u(std::vector<double>{1, 1, 1}, std::vector<double>{1, 1}).p_value == 1.0);
  CHECK_THROWS_AS((void)mann_whitney_u(std::vector<double>{}, y), DomainError);
}

TEST_CASE("Cliff's delta equals pair counting") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = draw(rng, 25, 0.5, 2, true);
    const auto y = draw(rng, 18, 0, 2, true);
    CHECK(cliffs_delta(x, y) == doctest::Approx(oracle::pair_count_delta(x, y)).epsilon(1e-14));
  }
  CHECK(cliffs_delta(std::vector<double>{5, 6}, std::vector<double>{1, 2}) == 1.0);
}

TEST_CASE("Spearman rho is Pearson on midranks") {
  std::mt19937_64 rng(9);
  const auto x = draw(rng, 30, 0, 1, true);
  auto y = x;
  for (auto& v : y) v += std::normal_distribution<double>(0, 1)(rng);
  const auto r = spearman_rho(x, y);
  CHECK(r.rho == doctest::Approx(oracle::pearson(oracle::count_ranks(x), oracle::count_ranks(y))).epsilon(1e-12));
  CHECK(r.p_value < 0.05);
  const std::vector<double> up = {1, 2, 3, 4};
  CHECK(spearman_rho(up, std::vector<double>{10, 20, 30, 40}).rho == 1.0);
  CHECK_THROWS_AS((void)spearman_rho(up, std::vector<double>{1, 2, 3}), DomainError);
  CHECK_THROWS_AS((void)spearman_rho(std::vector<double>{1, 2}, std::vector<double>{1, 2}), DomainError);
  CHECK_THROWS_AS((void)spearman_rho(up, std::vector<double>{7, 7, 7, 7}), DomainError);
}

TEST_CASE("Fisher z comparison of two correlations") {
  const auto r = fisher_z_compare(0.5, 30, 0.1, 30);
  const double want = (std::atanh(0.5) - std::atanh(0.1)) / std::sqrt(2.0 / 27.0);
  CHECK(r.z == doctest::Approx(want).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(2 * normal_sf(want)).epsilon(1e-12));
  CHECK_THROWS_AS((void)fisher_z_compare(1.0, 30, 0.1, 30), DomainError);
  CHECK_THROWS_AS((void)fisher_z_compare(0.2, 3, 0.1, 30), DomainError);
}

TEST_CASE("distribution tails") {
  CHECK(normal_sf(0.0) == doctest::Approx(0.5));
  CHECK(normal_sf(1.959963984540054) == doctest::Approx(0.025).epsilon(1e-10));
  CHECK(chi_square_sf(11.3, 2) == doctest::Approx(std::exp(-5.65)).epsilon(1e-12));
  // t with 1 df is Cauchy
  CHECK(student_t_sf(1.0, 1.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(student_t_sf(0.0, 7.0) == doctest::Approx(0.5));
}

TEST_CASE("descriptives use type-7 quantiles and the unscaled MAD") {
  std::vector<double> v(10);
  std::iota(v.begin(), v.end(), 1.0);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(3));
  const auto d = descriptives(v);
  CHECK(d.n == 10);
  CHECK(d.median == 5.5);
  CHECK(d.q1 == doctest::Approx(3.25));
  CHECK(d.q3 == doctest::Approx(7.75));
  CHECK(d.iqr == doctest::Approx(4.5));
  CHECK(d.mad == 2.5);
  CHECK(d.min == 1.0);
  CHECK(d.max == 10.0);
  CHECK(median(std::vector<double>{3, 1, 2}) == 2.0);
  CHECK_THROWS_AS((void)descriptives(std::vector<double>{}), DomainError);
}

TEST_CASE("Fligner-Killeen agrees with explicit normal scores") {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 10; ++rep) {
    const std::vector<std::vector<double>> g = {draw(rng, 15, 0, 1), draw(rng, 22, 0, 3), draw(rng, 9, 2, 1)};
    const auto r = fligner_killeen(g);
    CHECK(r.df == 2);
    CHECK(r.statistic == doctest::Approx(oracle::fligner_direct(g)).epsilon(1e-9));
    CHECK(r.p_value == doctest::Approx(chi_square_sf(r.statistic, 2)).epsilon(1e-12));
  }
  const std::vector<double> tight = {1, 1.1, 0.9, 1.05, 0.95, 1.0, 1.02, 0.98};
  const std::vector<double> wide = {-5, 6, 0, 3, -4, 8, -7, 2};
  CHECK(fligner_killeen(tight, wide).p_value < 0.05);
  CHECK_THROWS_AS((void)fligner_killeen({{1, 2}, {}}), DomainError);
  CHECK_THROWS_AS((void)fligner_killeen({{1, 1}, {2, 2}}), DomainError);
}

TEST_CASE("outcome rates by modality and group") {
  std::vector<TrialLog> logs = {closed_log("V", "novice", Outcome::SuccessfulCompletion, 5, 1),
                                closed_log("V", "expert", Outcome::MissedTarget, 6, 2),
                                closed_log("MS", "novice", Outcome::CriticalFailure, 7, 3),
                                closed_log("MS", "", Outcome::SuccessfulCompletion, 8, 4)};
  const auto r = outcome_rates(logs);
  CHECK(r.by_modality.at("V") == OutcomeCounts{1, 1, 0});
  CHECK(r.by_modality.at("MS") == OutcomeCounts{1, 0, 1});
  CHECK(r.by_group.at("novice").at("MS") == OutcomeCounts{0, 0, 1});
  CHECK(r.by_group.size() == 2);
  const auto pct = r.by_modality.at("V").percentages();
  CHECK(pct[0] == 50.0);
  CHECK(pct[2] == 0.0);
  CHECK_THROWS_AS((void)outcome_rates(std::vector<TrialLog>{}), DomainError);
  logs.push_back(TrialLog{});
  CHECK_THROWS_AS((void)outcome_rates(logs), DomainError);
}

TEST_CASE("analysis report covers every section and renders markdown") {
  std::vector<TrialLog> logs;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  int v_success = 0;
  for (int i = 0; i < 24; ++i) {
    const std::string m = i % 2 ? "MS" : "V";
    const Outcome o = i % 6 == 0 ? Outcome::MissedTarget
                    : i % 7 == 1 ? Outcome::CriticalFailure
                                 : Outcome::SuccessfulCompletion;
    v_success += m == "V" && o == Outcome::SuccessfulCompletion;
    logs.push_back(closed_log(m, i % 4 < 2 ? "novice" : "expert", o, 3 + 5 * u(rng), 0.5 + 3 * u(rng)));
  }
  const auto report = analyze_trials(logs);
  CHECK(report["trials"] == 24);
  CHECK(report["chi_square"].contains("statistic"));
  CHECK(report["placement"]["distance_to_target"]["mann_whitney"].contains("p_value"));
  CHECK(report["placement"]["distance_to_target"]["V"]["n"] == v_success);
  CHECK(report["execution_time"]["MS"]["n"] == 12);
  CHECK(report["time_accuracy"]["fisher_z"].contains("z"));
  const auto md = report_markdown(report);
  CHECK(md.find("# Trial analysis") == 0);
  CHECK(md.find("Chi-square = ") != std::string::npos);

  const std::vector<TrialLog> only_v(logs.begin(), logs.begin() + 1);
  const auto thin = analyze_trials(only_v);
  CHECK(thin["chi_square"].contains("skipped"));
  CHECK(thin["time_accuracy"]["fisher_z"].contains("skipped"));
  CHECK(report_markdown(thin).find("Chi-square skipped") != std::string::npos);
}

TEST_CASE("trial directories") {
  TempDir dir;
  CHECK_THROWS_AS((void)read_trial_directory(dir / "missing"), ConfigError);
  CHECK_THROWS_AS((void)read_trial_directory(dir.path()), ConfigError);
  write_trial_log(closed_log("MS", "novice", Outcome::SuccessfulCompletion, 4, 1), dir / "b.jsonl");
  write_trial_log(closed_log("V", "novice", Outcome::MissedTarget, 4, 1), dir / "a.jsonl");
  write_text(dir / "notes.txt", "ignored");
  const auto logs = read_trial_directory(dir.path());
  REQUIRE(logs.size() == 2);
  CHECK(logs[0].modality == "V");
  write_text(dir / "c.jsonl", "{broken");
  CHECK_THROWS_AS((void)read_trial_directory(dir.path()), ParseError);
}

} // TEST_SUITE
