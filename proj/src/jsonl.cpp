#include "drivecot/jsonl.hpp"

#include <string>

namespace drivecot {

void to_json(nlohmann::json& j, const Point2d& p) { j = nlohmann::json::array({p.x, p.y}); }

void from_json(const nlohmann::json& j, Point2d& p) {
  p.x = j.at(0).get<double>();
  p.y = j.at(1).get<double>();
}

void to_json(nlohmann::json& j, const Trajectory& t) {
  j = nlohmann::json{{"points", t.points}, {"dt", t.dt}};
}

void from_json(const nlohmann::json& j, Trajectory& t) {
  t.points = j.at("points").get<std::vector<Point2d>>();
  t.dt = j.value("dt", 0.5);
}

void to_json(nlohmann::json& j, const EgoStatus& e) {
  j = nlohmann::json{{"velocity", e.velocity}, {"acceleration", e.acceleration}};
}

void from_json(const nlohmann::json& j, EgoStatus& e) {
  e.velocity = j.at("velocity").get<double>();
  e.acceleration = j.at("acceleration").get<double>();
}

void to_json(nlohmann::json& j, const MetaAction& a) {
  j = nlohmann::json{{"direction", to_id(a.direction)}, {"speed", to_id(a.speed)}};
}

void from_json(const nlohmann::json& j, MetaAction& a) {
  a.direction = direction_from_id(j.at("direction").get<std::string>());
  a.speed = speed_from_id(j.at("speed").get<std::string>());
}

void to_json(nlohmann::json& j, const ActionDecision& d) {
  j = nlohmann::json{{"direction_text", d.direction_text}, {"speed_text", d.speed_text}};
  if (d.parsed) {
    j["parsed"] = *d.parsed;
  } else {
    j["parsed"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, ActionDecision& d) {
  d.direction_text = j.at("direction_text").get<std::string>();
  d.speed_text = j.at("speed_text").get<std::string>();
  if (j.contains("parsed") && !j.at("parsed").is_null()) {
    d.parsed = j.at("parsed").get<MetaAction>();
  } else {
    d.parsed.reset();
  }
}

void to_json(nlohmann::json& j, const CotText& c) {
  j = nlohmann::json{{"scene_analysis", c.scene_analysis},
                     {"latent_risk", c.latent_risk},
                     {"behavior_reasoning", c.behavior_reasoning},
                     {"action_decision", c.action_decision}};
}

void from_json(const nlohmann::json& j, CotText& c) {
  c.scene_analysis = j.at("scene_analysis").get<std::string>();
  c.latent_risk = j.at("latent_risk").get<std::string>();
  c.behavior_reasoning = j.at("behavior_reasoning").get<std::string>();
  c.action_decision = j.at("action_decision").get<ActionDecision>();
}

void to_json(nlohmann::json& j, const TrainingSequence& s) {
  j = nlohmann::json{
      {"cot", s.cot}, {"dream_tokens", s.dream_tokens}, {"trajectory", s.trajectory}};
}

void from_json(const nlohmann::json& j, TrainingSequence& s) {
  s.cot = j.at("cot").get<CotText>();
  s.dream_tokens = j.at("dream_tokens").get<std::vector<std::int64_t>>();
  s.trajectory = j.at("trajectory").get<Trajectory>();
}

void to_json(nlohmann::json& j, const AnnotationSample& s) {
  j = nlohmann::json{{"sample_id", s.sample_id},
                     {"image_refs", s.image_refs},
                     {"history_refs", s.history_refs},
                     {"command", to_id(s.command)},
                     {"ego", s.ego},
                     {"gt_trajectory", s.gt_trajectory},
                     {"future_image_tokens", s.future_image_tokens}};
}

void from_json(const nlohmann::json& j, AnnotationSample& s) {
  s.sample_id = j.at("sample_id").get<std::string>();
  s.image_refs = j.at("image_refs").get<std::vector<std::string>>();
  s.history_refs = j.at("history_refs").get<std::vector<std::string>>();
  s.command = driving_command_from_id(j.at("command").get<std::string>());
  s.ego = j.at("ego").get<EgoStatus>();
  s.gt_trajectory = j.at("gt_trajectory").get<Trajectory>();
  s.future_image_tokens =
      j.value("future_image_tokens", std::vector<std::int64_t>{});
}

std::size_t for_each_jsonl(std::istream& in,
                           const std::function<void(std::size_t, const nlohmann::json&)>& fn,
                           bool skip_bad) {
  std::size_t bad = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      if (skip_bad) {
        ++bad;
        continue;
      }
      throw DataError("malformed JSON on line " + std::to_string(line_no));
    }
    fn(line_no, j);
  }
  return bad;
}

void write_jsonl_line(std::ostream& out, const nlohmann::json& j) { out << j.dump() << '\n'; }

}  // namespace drivecot
