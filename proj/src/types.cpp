#include "drivecot/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

namespace drivecot {

namespace {

bool all_finite(const std::vector<Point2d>& pts) {
  return std::all_of(pts.begin(), pts.end(), [](const Point2d& p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
  });
}

// Lowercase, strip leading/trailing punctuation, collapse internal whitespace.
std::string normalize_phrase(const std::string& text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  auto is_edge_junk = [](unsigned char c) {
    return std::isspace(c) || std::ispunct(c);
  };
  while (begin < end && is_edge_junk(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && is_edge_junk(static_cast<unsigned char>(text[end - 1]))) --end;

  std::string out;
  out.reserve(end - begin);
  bool pending_space = false;
  for (std::size_t i = begin; i < end; ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

constexpr std::array<const char*, 5> kDirectionDisplay = {
    "Maintain Current Lane", "Change Lane Left", "Change Lane Right",
    "Turn Left", "Turn Right"};
constexpr std::array<const char*, 5> kDirectionIds = {
    "MaintainCurrentLane", "ChangeLaneLeft", "ChangeLaneRight",
    "TurnLeft", "TurnRight"};

constexpr std::array<const char*, 6> kSpeedDisplay = {
    "Smooth Deceleration", "Emergency Brake", "Maintain Current Speed",
    "Smooth Acceleration", "Stop", "Remain Stationary"};
constexpr std::array<const char*, 6> kSpeedIds = {
    "SmoothDeceleration", "EmergencyBrake", "MaintainCurrentSpeed",
    "SmoothAcceleration", "Stop", "RemainStationary"};

constexpr std::array<const char*, 3> kCommandIds = {"TurnLeft", "TurnRight", "GoStraight"};

}  // namespace

void Trajectory::validate() const {
  if (points.empty()) throw BadTrajectory("trajectory has no points");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw BadTrajectory("trajectory dt must be positive");
  if (!all_finite(points)) throw BadTrajectory("trajectory contains non-finite coordinates");
}

void EgoStatus::validate() const {
  if (!std::isfinite(velocity) || velocity < 0.0)
    throw Error("ego velocity must be finite and non-negative");
  if (!std::isfinite(acceleration)) throw Error("ego acceleration must be finite");
}

void TrainingSequence::validate() const {
  trajectory.validate();
  for (const auto id : dream_tokens) {
    if (id < 0) throw Error("dream token ids must be non-negative");
  }
}

void AnnotationSample::validate() const {
  if (sample_id.empty()) throw Error("sample_id must be non-empty");
  if (image_refs.size() != 6)
    throw Error("sample " + sample_id + " must carry exactly 6 image_refs");
  if (history_refs.size() > 4)
    throw Error("sample " + sample_id + " carries more than 4 history_refs");
  ego.validate();
  gt_trajectory.validate();
  for (const auto id : future_image_tokens) {
    if (id < 0) throw Error("future_image_tokens must be non-negative");
  }
}

std::string to_display(DirectionAction a) {
  return kDirectionDisplay[static_cast<std::size_t>(a)];
}

std::string to_display(SpeedAction a) {
  return kSpeedDisplay[static_cast<std::size_t>(a)];
}

std::string to_id(DrivingCommand c) { return kCommandIds[static_cast<std::size_t>(c)]; }
std::string to_id(DirectionAction a) { return kDirectionIds[static_cast<std::size_t>(a)]; }
std::string to_id(SpeedAction a) { return kSpeedIds[static_cast<std::size_t>(a)]; }

DrivingCommand driving_command_from_id(const std::string& id) {
  for (std::size_t i = 0; i < kCommandIds.size(); ++i) {
    if (id == kCommandIds[i]) return static_cast<DrivingCommand>(i);
  }
  throw Error("unknown driving command: " + id);
}

DirectionAction direction_from_id(const std::string& id) {
  for (std::size_t i = 0; i < kDirectionIds.size(); ++i) {
    if (id == kDirectionIds[i]) return static_cast<DirectionAction>(i);
  }
  throw Error("unknown direction action: " + id);
}

SpeedAction speed_from_id(const std::string& id) {
  for (std::size_t i = 0; i < kSpeedIds.size(); ++i) {
    if (id == kSpeedIds[i]) return static_cast<SpeedAction>(i);
  }
  throw Error("unknown speed action: " + id);
}

std::optional<DirectionAction> match_direction_phrase(const std::string& text) {
  const std::string norm = normalize_phrase(text);
  for (std::size_t i = 0; i < kDirectionDisplay.size(); ++i) {
    if (norm == normalize_phrase(kDirectionDisplay[i]))
      return static_cast<DirectionAction>(i);
  }
  return std::nullopt;
}

std::optional<SpeedAction> match_speed_phrase(const std::string& text) {
  const std::string norm = normalize_phrase(text);
  for (std::size_t i = 0; i < kSpeedDisplay.size(); ++i) {
    if (norm == normalize_phrase(kSpeedDisplay[i])) return static_cast<SpeedAction>(i);
  }
  return std::nullopt;
}

}  // namespace drivecot
