#include "epiguide/analysis.hpp"

#include "epiguide/error.hpp"
#include "epiguide/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <sstream>

namespace epiguide {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<TrialLog> read_trial_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ConfigError("trial directory '" + dir.string() + "' does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw ConfigError("no .jsonl trial logs in '" + dir.string() + "'");
  }
  std::sort(files.begin(), files.end());
  std::vector<TrialLog> logs;
  for (const auto& f : files) {
    logs.push_back(read_trial_log(f));
  }
  return logs;
}

namespace {

json counts_json(const metrics::OutcomeCounts& c) {
  const auto pct = c.percentages();
  return {{"success", c.success},
          {"missed", c.missed},
          {"critical", c.critical},
          {"total", c.total()},
          {"percent", {{"success", pct[0]}, {"missed", pct[1]}, {"critical", pct[2]}}}};
}

json table_json(const metrics::OutcomeTable& t) {
  json j = json::object();
  for (const auto& [modality, c] : t) {
    j[modality] = counts_json(c);
  }
  return j;
}

json descriptives_json(const metrics::Descriptives& d) {
  return {{"n", d.n},   {"median", d.median}, {"mad", d.mad}, {"q1", d.q1},
          {"q3", d.q3}, {"iqr", d.iqr},       {"min", d.min}, {"max", d.max}};
}

json skipped(const std::string& why) { return {{"skipped", why}}; }

/// Runs `f`, turning a DomainError into a "skipped" entry.
json guarded(const std::function<json()>& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    return skipped(e.what());
  }
}

json compare(const std::vector<double>& v, const std::vector<double>& ms) {
  json j;
  j["V"] = guarded([&] { return descriptives_json(metrics::descriptives(v)); });
  j["MS"] = guarded([&] { return descriptives_json(metrics::descriptives(ms)); });
  j["mann_whitney"] = guarded([&] {
    const auto r = metrics::mann_whitney_u(v, ms);
    return json{{"u", r.u}, {"u_v", r.u_a}, {"u_ms", r.u_b}, {"p_value", r.p_value}, {"exact", r.exact}};
  });
  j["cliffs_delta"] = guarded([&] { return json(metrics::cliffs_delta(v, ms)); });
  j["fligner"] = guarded([&] {
    const auto r = metrics::fligner_killeen(v, ms);
    return json{{"statistic", r.statistic}, {"df", r.df}, {"p_value", r.p_value}};
  });
  return j;
}

} // namespace

json analyze_trials(const std::vector<TrialLog>& logs) {
  const auto rates = metrics::outcome_rates(logs);
  json report;
  report["trials"] = logs.size();
  report["outcomes"]["by_modality"] = table_json(rates.by_modality);
  json groups = json::object();
  for (const auto& [g, t] : rates.by_group) {
    groups[g] = table_json(t);
  }
  report["outcomes"]["by_group"] = groups;

  const auto v_it = rates.by_modality.find("V");
  const auto ms_it = rates.by_modality.find("MS");
  if (v_it != rates.by_modality.end() && ms_it != rates.by_modality.end()) {
    report["chi_square"] = guarded([&] {
      const auto r = metrics::chi_square(v_it->second, ms_it->second);
      return json{{"statistic", r.statistic}, {"df", r.df}, {"p_value", r.p_value}};
    });
  } else {
    report["chi_square"] = skipped("needs both V and MS trials");
  }

  std::map<std::string, std::vector<double>> peri;
  std::map<std::string, std::vector<double>> target;
  std::map<std::string, std::vector<double>> target_time;
  std::map<std::string, std::vector<double>> time_all;
  for (const auto& log : logs) {
    time_all[log.modality].push_back(log.execution_time());
    if (log.outcome != Outcome::SuccessfulCompletion) {
      continue;
    }
    if (log.min_distance_pericardium) {
      peri[log.modality].push_back(*log.min_distance_pericardium);
    }
    if (log.distance_to_target) {
      target[log.modality].push_back(*log.distance_to_target);
      target_time[log.modality].push_back(log.execution_time());
    }
  }
  report["placement"]["min_distance_pericardium"] = compare(peri["V"], peri["MS"]);
  report["placement"]["distance_to_target"] = compare(target["V"], target["MS"]);
  report["execution_time"] = compare(time_all["V"], time_all["MS"]);

  json corr;
  std::map<std::string, metrics::SpearmanResult> rho;
  for (const std::string m : {"V", "MS"}) {
    corr[m] = guarded([&] {
      const auto r = metrics::spearman_rho(target_time[m], target[m]);
      rho[m] = r;
      return json{{"rho", r.rho}, {"p_value", r.p_value}, {"n", target[m].size()}};
    });
  }
  corr["fisher_z"] = guarded([&] {
    if (!rho.count("V") || !rho.count("MS")) {
      throw DomainError("needs a correlation for both modalities");
    }
    const auto r = metrics::fisher_z_compare(rho["V"].rho, static_cast<int>(target["V"].size()), rho["MS"].rho,
                                             static_cast<int>(target["MS"].size()));
    return json{{"z", r.z}, {"p_value", r.p_value}};
  });
  report["time_accuracy"] = corr;
  report["conventions"] = {
      {"quantiles", "linear interpolation (type 7)"},
      {"mad", "unscaled median absolute deviation"},
      {"placement_trials", "successful trials only"},
      {"mann_whitney_u", "min(U_V, U_MS); exact null distribution for n, m <= 20 without ties"},
      {"cliffs_delta", "V relative to MS"},
      {"normality", "not tested; nonparametric tests throughout"}};
  return report;
}

namespace {

std::string fmt(const json& v, int digits = 2) {
  if (!v.is_number()) {
    return "-";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v.get<double>());
  return buf;
}

void descriptives_rows(std::ostringstream& out, const json& section) {
  for (const std::string m : {"V", "MS"}) {
    const auto& d = section.at(m);
    if (d.contains("skipped")) {
      out << "| " << m << " | 0 | - | - | - | - | - |\n";
      continue;
    }
    out << "| " << m << " | " << d.at("n").get<std::size_t>() << " | " << fmt(d.at("median")) << " | "
        << fmt(d.at("mad")) << " | " << fmt(d.at("iqr")) << " | " << fmt(d.at("min")) << " | " << fmt(d.at("max"))
        << " |\n";
  }
}

void tests_line(std::ostringstream& out, const json& section) {
  const auto& mw = section.at("mann_whitney");
  const auto& fk = section.at("fligner");
  out << "\nMann-Whitney U = " << (mw.contains("u") ? fmt(mw.at("u"), 1) : "-")
      << ", p = " << (mw.contains("p_value") ? fmt(mw.at("p_value"), 4) : "-")
      << "; Cliff's delta = " << fmt(section.at("cliffs_delta"), 3)
      << "; Fligner p = " << (fk.contains("p_value") ? fmt(fk.at("p_value"), 4) : "-") << "\n\n";
}

} // namespace

std::string report_markdown(const json& report) {
  std::ostringstream out;
  out << "# Trial analysis\n\n";
  out << report.at("trials").get<std::size_t>() << " trials.\n\n";
  out << "## Task outcomes\n\n";
  out << "| Group | Modality | Success | Missed | Critical | n |\n|---|---|---|---|---|---|\n";
  const auto row = [&](const std::string& group, const json& table) {
    for (const auto& [m, c] : table.items()) {
      const auto& p = c.at("percent");
      out << "| " << group << " | " << m << " | " << fmt(p.at("success")) << "% | " << fmt(p.at("missed")) << "% | "
          << fmt(p.at("critical")) << "% | " << c.at("total").get<int>() << " |\n";
    }
  };
  row("All", report.at("outcomes").at("by_modality"));
  for (const auto& [g, t] : report.at("outcomes").at("by_group").items()) {
    row(g, t);
  }
  const auto& chi = report.at("chi_square");
  out << "\n";
  if (chi.contains("statistic")) {
    out << "Chi-square = " << fmt(chi.at("statistic")) << " (df " << chi.at("df").get<int>()
        << "), p = " << fmt(chi.at("p_value"), 4) << "\n\n";
  } else {
    out << "Chi-square skipped: " << chi.at("skipped").get<std::string>() << "\n\n";
  }
  const char* header = "| Modality | n | Median | MAD | IQR | Min | Max |\n|---|---|---|---|---|---|---|\n";
  out << "## Minimum distance to pericardium (mm), successful trials\n\n" << header;
  descriptives_rows(out, report.at("placement").at("min_distance_pericardium"));
  tests_line(out, report.at("placement").at("min_distance_pericardium"));
  out << "## Distance to target (mm), successful trials\n\n" << header;
  descriptives_rows(out, report.at("placement").at("distance_to_target"));
  tests_line(out, report.at("placement").at("distance_to_target"));
  out << "## Execution time (s), all trials\n\n" << header;
  descriptives_rows(out, report.at("execution_time"));
  tests_line(out, report.at("execution_time"));
  out << "## Time vs. accuracy\n\n";
  const auto& ta = report.at("time_accuracy");
  for (const std::string m : {"V", "MS"}) {
    const auto& c = ta.at(m);
    out << "- " << m << ": Spearman rho = " << (c.contains("rho") ? fmt(c.at("rho"), 3) : "-")
        << ", p = " << (c.contains("p_value") ? fmt(c.at("p_value"), 4) : "-") << "\n";
  }
  const auto& fz = ta.at("fisher_z");
  out << "- Fisher z = " << (fz.contains("z") ? fmt(fz.at("z"), 3) : "-")
      << ", p = " << (fz.contains("p_value") ? fmt(fz.at("p_value"), 4) : "-") << "\n";
  return out.str();
}

} // namespace epiguide
