#include "epiguide/error.hpp"
#include "epiguide/json_util.hpp"
#include "epiguide/mesh_io.hpp"
#include "epiguide/navkernel.hpp"

#include <fstream>
#include <sstream>

namespace epiguide {

namespace {

constexpr const char* kSchema = "epiguide.trial/1";

nlohmann::json flags_to_json(const FrameFlags& f) {
  nlohmann::json a = nlohmann::json::array();
  for (bool b : f) {
    a.push_back(b);
  }
  return a;
}

FrameFlags flags_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != kFrameCount) {
    throw ParseError("contact flags must be a 20-element array");
  }
  FrameFlags f{};
  for (std::size_t k = 0; k < kFrameCount; ++k) {
    f[k] = j[k].get<bool>();
  }
  return f;
}

} // namespace

std::string serialize_trial_log(const TrialLog& log) {
  std::ostringstream out;
  nlohmann::json header = {{"type", "header"},
                           {"schema", kSchema},
                           {"trajectory_id", log.trajectory_id},
                           {"modality", log.modality},
                           {"group", log.group},
                           {"start_time", log.start_time},
                           {"render", log.render_settings}};
  header["target"] = log.target ? vec3_to_json(*log.target) : nlohmann::json(nullptr);
  out << header.dump() << '\n';
  for (const auto& s : log.samples) {
    nlohmann::json rec = {{"type", "sample"},
                          {"t", s.nav.time},
                          {"d_tp", distance_to_json(s.nav.d_tp)},
                          {"d_tm", distance_to_json(s.nav.d_tm)},
                          {"frame", s.nav.frame},
                          {"tip", vec3_to_json(s.pose.tip)},
                          {"axis", vec3_to_json(s.pose.axis)},
                          {"state", s.state}};
    out << rec.dump() << '\n';
  }
  nlohmann::json footer = {{"type", "footer"},
                           {"closed", log.closed},
                           {"stop_time", log.stop_time},
                           {"final_tip", vec3_to_json(log.final_tip)},
                           {"contact_pericardium", flags_to_json(log.contact_pericardium)},
                           {"contact_myocardium", flags_to_json(log.contact_myocardium)}};
  footer["outcome"] = log.outcome ? nlohmann::json(to_string(*log.outcome)) : nlohmann::json(nullptr);
  footer["execution_time"] = log.execution_time();
  footer["min_distance_pericardium"] =
      log.min_distance_pericardium ? nlohmann::json(*log.min_distance_pericardium) : nlohmann::json(nullptr);
  footer["distance_to_target"] =
      log.distance_to_target ? nlohmann::json(*log.distance_to_target) : nlohmann::json(nullptr);
  out << footer.dump() << '\n';
  return out.str();
}

TrialLog parse_trial_log(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  TrialLog log;
  bool have_header = false;
  bool have_footer = false;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) {
        continue;
      }
      if (have_footer) {
        throw ParseError("records after footer");
      }
      const auto rec = nlohmann::json::parse(line);
      const auto type = rec.at("type").get<std::string>();
      if (type == "header") {
        if (have_header) {
          throw ParseError("duplicate header");
        }
        if (rec.at("schema").get<std::string>() != kSchema) {
          throw ParseError("unsupported trial log schema '" + rec.at("schema").get<std::string>() + "'");
        }
        log.trajectory_id = rec.at("trajectory_id").get<std::string>();
        log.modality = rec.at("modality").get<std::string>();
        log.group = rec.value("group", std::string{});
        log.start_time = rec.at("start_time").get<double>();
        log.render_settings = rec.value("render", nlohmann::json::object());
        if (rec.contains("target") && !rec.at("target").is_null()) {
          log.target = vec3_from_json(rec.at("target"), "target");
        }
        have_header = true;
      } else if (type == "sample") {
        if (!have_header) {
          throw ParseError("sample before header");
        }
        TrialSample s;
        s.nav.time = rec.at("t").get<double>();
        s.nav.d_tp = distance_from_json(rec.at("d_tp"));
        s.nav.d_tm = distance_from_json(rec.at("d_tm"));
        s.nav.frame = rec.at("frame").get<int>();
        s.pose.tip = vec3_from_json(rec.at("tip"), "tip");
        s.pose.axis = vec3_from_json(rec.at("axis"), "axis");
        s.state = rec.value("state", 0);
        log.append(s);
      } else if (type == "footer") {
        if (!have_header) {
          throw ParseError("footer before header");
        }
        log.closed = rec.at("closed").get<bool>();
        log.stop_time = rec.at("stop_time").get<double>();
        log.final_tip = vec3_from_json(rec.at("final_tip"), "final_tip");
        log.contact_pericardium = flags_from_json(rec.at("contact_pericardium"));
        log.contact_myocardium = flags_from_json(rec.at("contact_myocardium"));
        if (!rec.at("outcome").is_null()) {
          log.outcome = outcome_from_string(rec.at("outcome").get<std::string>());
        }
        if (rec.contains("min_distance_pericardium") && !rec.at("min_distance_pericardium").is_null()) {
          log.min_distance_pericardium = rec.at("min_distance_pericardium").get<double>();
        }
        if (rec.contains("distance_to_target") && !rec.at("distance_to_target").is_null()) {
          log.distance_to_target = rec.at("distance_to_target").get<double>();
        }
        have_footer = true;
      } else {
        throw ParseError("unknown record type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("trial log line " + std::to_string(line_no) + ": " + e.what());
  } catch (const DomainError& e) {
    throw ParseError("trial log line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) {
    throw ParseError("trial log has no header record");
  }
  if (!have_footer) {
    throw ParseError("trial log has no footer record (truncated?)");
  }
  return log;
}

TrialLog read_trial_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open trial log " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trial_log(ss.str());
}

void write_trial_log(const TrialLog& log, const std::filesystem::path& path) {
  write_file_atomically(path, serialize_trial_log(log));
}

} // namespace epiguide
