#include "drivecot/cot.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <sstream>

namespace drivecot {

namespace {

std::string trim(std::string_view sv) {
  std::size_t b = 0;
  std::size_t e = sv.size();
  while (b < e && std::isspace(static_cast<unsigned char>(sv[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(sv[e - 1]))) --e;
  return std::string(sv.substr(b, e - b));
}

std::string to_lower(std::string_view sv) {
  std::string out(sv);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Lowercase with all non-alphanumeric characters squeezed to single spaces;
// used to compare candidate header lines against the known section names.
std::string squeeze_key(std::string_view sv) {
  std::string out;
  out.reserve(sv.size());
  bool pending = false;
  for (const char ch : sv) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      if (pending && !out.empty()) out.push_back(' ');
      pending = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending = true;
    }
  }
  return out;
}

enum class Section { Scene = 0, Risk = 1, Behavior = 2, Decision = 3, None };

constexpr std::array<const char*, 4> kSectionKeys = {
    "scene analysis", "latent risk assessment", "behavior reasoning",
    "action decision"};

// A line starts a section when, ignoring markdown decoration, it reads
// `<section name>` or `<section name>: inline content`.
struct HeaderMatch {
  Section section{Section::None};
  std::string inline_content;
};

// "1. Scene Analysis" / "## Scene Analysis" squeeze to "1 scene analysis" /
// "scene analysis"; drop a leading numbering token before comparing.
std::string drop_leading_number(const std::string& key) {
  std::size_t i = 0;
  while (i < key.size() && std::isdigit(static_cast<unsigned char>(key[i]))) ++i;
  if (i == 0 || i >= key.size() || key[i] != ' ') return key;
  return key.substr(i + 1);
}

std::string trim_markdown(std::string text) {
  std::size_t b = 0;
  while (b < text.size() && (text[b] == '*' || text[b] == '#' || text[b] == ' ')) ++b;
  std::size_t e = text.size();
  while (e > b && (text[e - 1] == '*' || text[e - 1] == ' ')) --e;
  return text.substr(b, e - b);
}

HeaderMatch match_header(const std::string& line) {
  HeaderMatch m;
  const auto colon = line.find(':');
  const std::string head_part = colon == std::string::npos ? line : line.substr(0, colon);
  const std::string key = drop_leading_number(squeeze_key(head_part));
  for (std::size_t i = 0; i < kSectionKeys.size(); ++i) {
    if (key == kSectionKeys[i]) {
      m.section = static_cast<Section>(i);
      if (colon != std::string::npos)
        m.inline_content = trim_markdown(trim(line.substr(colon + 1)));
      return m;
    }
  }
  return m;
}

// Strips list markers ("-", "*", "1.", "(2)") before a labeled decision line.
std::string_view strip_list_marker(std::string_view sv) {
  std::size_t i = 0;
  while (i < sv.size() && std::isspace(static_cast<unsigned char>(sv[i]))) ++i;
  std::size_t j = i;
  while (j < sv.size() &&
         (std::isdigit(static_cast<unsigned char>(sv[j])) || sv[j] == '-' || sv[j] == '*' ||
          sv[j] == '.' || sv[j] == ')' || sv[j] == '(' || sv[j] == '#')) {
    ++j;
  }
  // Only treat it as a marker if something follows and the marker is short.
  if (j > i && j < sv.size() && j - i <= 4) i = j;
  while (i < sv.size() && std::isspace(static_cast<unsigned char>(sv[i]))) ++i;
  return sv.substr(i);
}

// `Direction: Turn Left` / `Speed Decision - stop` style line.
std::optional<std::string> labeled_value(const std::string& line, const char* label) {
  const std::string_view body = strip_list_marker(line);
  const std::string lower = to_lower(body);
  if (lower.rfind(label, 0) != 0) return std::nullopt;
  const auto sep = body.find_first_of(":-", std::string_view(label).size());
  if (sep == std::string_view::npos) return std::nullopt;
  return trim(body.substr(sep + 1));
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (const char c : text) {
    if (c == '\n') {
      lines.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  lines.push_back(current);
  return lines;
}

ActionDecision parse_action_decision(const std::string& section_text) {
  ActionDecision decision;
  const auto lines = split_lines(section_text);

  for (const auto& line : lines) {
    if (decision.direction_text.empty()) {
      if (auto v = labeled_value(line, "direction"); v && !v->empty())
        decision.direction_text = *v;
    }
    if (decision.speed_text.empty()) {
      if (auto v = labeled_value(line, "speed"); v && !v->empty())
        decision.speed_text = *v;
    }
  }

  // `Turn Left / Smooth Deceleration` shorthand.
  if (decision.direction_text.empty() && decision.speed_text.empty()) {
    for (const auto& line : lines) {
      const auto slash = line.find('/');
      if (slash == std::string::npos) continue;
      decision.direction_text = trim(line.substr(0, slash));
      decision.speed_text = trim(line.substr(slash + 1));
      break;
    }
  }

  // Last resort: scan for vocabulary phrases anywhere in the section.
  if (decision.direction_text.empty() || decision.speed_text.empty()) {
    const std::string key = squeeze_key(section_text);
    auto contains = [&key](const std::string& phrase) {
      const std::string want = squeeze_key(phrase);
      if (want.empty()) return false;
      // Word-boundary substring search over the squeezed text.
      std::size_t pos = 0;
      while ((pos = key.find(want, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || key[pos - 1] == ' ';
        const std::size_t end = pos + want.size();
        const bool right_ok = end == key.size() || key[end] == ' ';
        if (left_ok && right_ok) return true;
        ++pos;
      }
      return false;
    };
    if (decision.direction_text.empty()) {
      for (int i = 0; i < 5; ++i) {
        const auto a = static_cast<DirectionAction>(i);
        if (contains(to_display(a))) {
          decision.direction_text = to_display(a);
          break;
        }
      }
    }
    if (decision.speed_text.empty()) {
      for (int i = 0; i < 6; ++i) {
        const auto a = static_cast<SpeedAction>(i);
        if (contains(to_display(a))) {
          decision.speed_text = to_display(a);
          break;
        }
      }
    }
  }

  const auto dir = match_direction_phrase(decision.direction_text);
  const auto spd = match_speed_phrase(decision.speed_text);
  if (dir && spd) decision.parsed = MetaAction{*dir, *spd};
  return decision;
}

constexpr const char* kThinkOpen = "<think>";
constexpr const char* kThinkClose = "</think>";
constexpr const char* kDreamOpen = "<dream>";
constexpr const char* kDreamClose = "</dream>";
constexpr const char* kAnswerOpen = "<answer>";
constexpr const char* kAnswerClose = "</answer>";

std::size_t count_occurrences(const std::string& text, std::string_view token) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    ++count;
    pos += token.size();
  }
  return count;
}

struct SpanLoc {
  bool present{false};
  std::size_t open_at{0};
  std::size_t begin{0};
  std::size_t end{0};
};

SpanLoc locate_span(const std::string& text, std::string_view open, std::string_view close) {
  // Opener and closer never occur inside each other, so counting is exact.
  const std::size_t opens = count_occurrences(text, open);
  const std::size_t closes = count_occurrences(text, close);
  if (opens == 0 && closes == 0) return {};
  if (opens != 1 || closes != 1)
    throw MalformedDelimiters("duplicate or unbalanced " + std::string(open) + " span");
  SpanLoc loc;
  loc.present = true;
  loc.open_at = text.find(open);
  loc.begin = loc.open_at + open.size();
  loc.end = text.find(close);
  if (loc.end < loc.begin)
    throw MalformedDelimiters("closer precedes opener for " + std::string(open));
  return loc;
}

}  // namespace

CotText parse_cot(const std::string& text) {
  CotText cot;
  std::array<std::string, 4> bodies;
  Section current = Section::None;

  for (const auto& line : split_lines(text)) {
    const HeaderMatch header = match_header(trim(line));
    if (header.section != Section::None) {
      current = header.section;
      auto& body = bodies[static_cast<std::size_t>(current)];
      if (!header.inline_content.empty()) {
        if (!body.empty()) body.push_back('\n');
        body += header.inline_content;
      }
      continue;
    }
    if (current == Section::None) continue;  // preamble before any header
    auto& body = bodies[static_cast<std::size_t>(current)];
    if (!body.empty()) body.push_back('\n');
    body += line;
  }

  cot.scene_analysis = trim(bodies[0]);
  cot.latent_risk = trim(bodies[1]);
  cot.behavior_reasoning = trim(bodies[2]);
  cot.action_decision = parse_action_decision(trim(bodies[3]));
  return cot;
}

std::string render_cot(const CotText& cot) {
  std::ostringstream os;
  os << "Scene Analysis:\n" << cot.scene_analysis << '\n';
  os << "Latent Risk Assessment:\n" << cot.latent_risk << '\n';
  os << "Behavior Reasoning:\n" << cot.behavior_reasoning << '\n';
  os << "Action Decision:\n";
  os << "Direction: " << cot.action_decision.direction_text << '\n';
  os << "Speed: " << cot.action_decision.speed_text;
  return os.str();
}

ParsedPointList parse_point_list(std::string_view span_view) {
  ParsedPointList out;
  const std::string span(span_view);  // strtod needs null termination
  std::size_t i = 0;
  const std::size_t n = span.size();

  auto skip_ws = [&] {
    while (i < n && std::isspace(static_cast<unsigned char>(span[i]))) ++i;
  };
  auto parse_number = [&](double& value) {
    skip_ws();
    const char* begin = span.data() + i;
    char* end = nullptr;
    value = std::strtod(begin, &end);
    if (end == begin || !std::isfinite(value)) return false;
    i += static_cast<std::size_t>(end - begin);
    return true;
  };

  while (i < n) {
    const char c = span[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == ';' || c == '[' ||
        c == ']') {
      ++i;
      continue;
    }
    if (c != '(') {
      out.clean = false;
      ++i;
      continue;
    }
    ++i;  // consume '('
    double x = 0.0;
    double y = 0.0;
    bool ok = parse_number(x);
    skip_ws();
    ok = ok && i < n && span[i] == ',';
    if (ok) ++i;
    ok = ok && parse_number(y);
    skip_ws();
    ok = ok && i < n && span[i] == ')';
    if (ok) {
      ++i;  // consume ')'
      out.points.push_back({x, y});
    } else {
      out.clean = false;
      // resynchronize at the next opening parenthesis
      while (i < n && span[i] != '(') ++i;
    }
  }
  return out;
}

std::string format_trajectory_points(const Trajectory& traj) {
  std::string out;
  char buf[80];
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "(%.2f, %.2f)", traj.points[k].x, traj.points[k].y);
    if (k != 0) out += ", ";
    out += buf;
  }
  return out;
}

std::string assemble_sequence(const CotText& cot,
                              const std::vector<std::int64_t>& dream_tokens,
                              const Trajectory& traj) {
  if (!cot.is_complete()) throw IncompleteCot("cannot assemble sequence from incomplete CoT");
  traj.validate();
  if (!traj.is_planning_horizon())
    throw BadTrajectory("answer trajectory must carry exactly 6 points, got " +
                        std::to_string(traj.points.size()));

  std::ostringstream os;
  os << kThinkOpen << render_cot(cot) << kThinkClose;
  os << kDreamOpen;
  for (std::size_t k = 0; k < dream_tokens.size(); ++k) {
    if (k != 0) os << ' ';
    os << dream_tokens[k];
  }
  os << kDreamClose;
  os << kAnswerOpen << format_trajectory_points(traj) << kAnswerClose;
  return os.str();
}

ParsedSequence parse_sequence(const std::string& text) {
  const SpanLoc think = locate_span(text, kThinkOpen, kThinkClose);
  const SpanLoc dream = locate_span(text, kDreamOpen, kDreamClose);
  const SpanLoc answer = locate_span(text, kAnswerOpen, kAnswerClose);

  // Present spans must be disjoint and ordered think -> dream -> answer.
  const SpanLoc* previous = nullptr;
  for (const SpanLoc* span : {&think, &dream, &answer}) {
    if (!span->present) continue;
    if (previous && span->open_at < previous->end)
      throw MalformedDelimiters("spans are nested or out of order");
    previous = span;
  }

  ParsedSequence out;
  if (think.present) {
    out.has_think = true;
    out.think_text = text.substr(think.begin, think.end - think.begin);
    out.cot = parse_cot(out.think_text);
  }
  if (dream.present) {
    out.has_dream = true;
    std::istringstream is(text.substr(dream.begin, dream.end - dream.begin));
    std::string tok;
    while (is >> tok) {
      char* end = nullptr;
      const long long id = std::strtoll(tok.c_str(), &end, 10);
      if (end == tok.c_str() || *end != '\0' || id < 0) {
        out.dream_clean = false;
        continue;
      }
      out.dream_tokens.push_back(id);
    }
  }
  if (answer.present) {
    out.has_answer = true;
    out.answer_text = text.substr(answer.begin, answer.end - answer.begin);
    ParsedPointList pts = parse_point_list(out.answer_text);
    out.answer_points = std::move(pts.points);
    out.answer_clean = pts.clean;
  }
  return out;
}

TrainingSequence ParsedSequence::to_training_sequence(double dt) const {
  if (!has_think || !has_dream || !has_answer)
    throw MalformedDelimiters("sequence is missing a <think>/<dream>/<answer> span");
  if (!cot.is_complete())
    throw IncompleteCot("think span does not parse into a complete CoT");
  if (!answer_clean || answer_points.empty())
    throw BadTrajectory("answer span does not parse into a trajectory");
  TrainingSequence seq;
  seq.cot = cot;
  seq.dream_tokens = dream_tokens;
  seq.trajectory.points = answer_points;
  seq.trajectory.dt = dt;
  seq.validate();
  return seq;
}

}  // namespace drivecot
