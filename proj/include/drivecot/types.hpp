#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drivecot/errors.hpp"

namespace drivecot {

struct Point2d {
  double x{0.0};  // meters forward, ego frame at t=0
  double y{0.0};  // meters left

  friend bool operator==(const Point2d&, const Point2d&) = default;
};

// Future ego waypoints in the ego frame at t=0. The pose at t=0 is the
// implicit origin (0,0) with heading along +x; points start at t=dt.
struct Trajectory {
  std::vector<Point2d> points;
  double dt{0.5};  // seconds per step

  // Planning-horizon trajectories carry 6 points covering 3 s.
  static constexpr std::size_t kPlanningPoints = 6;

  void validate() const;
  bool is_planning_horizon() const { return points.size() == kPlanningPoints; }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct EgoStatus {
  double velocity{0.0};      // m/s, >= 0
  double acceleration{0.0};  // m/s^2, signed

  void validate() const;

  friend bool operator==(const EgoStatus&, const EgoStatus&) = default;
};

enum class DrivingCommand {
  TurnLeft,
  TurnRight,
  GoStraight,
};

enum class DirectionAction {
  MaintainCurrentLane,
  ChangeLaneLeft,
  ChangeLaneRight,
  TurnLeft,
  TurnRight,
};

enum class SpeedAction {
  SmoothDeceleration,
  EmergencyBrake,
  MaintainCurrentSpeed,
  SmoothAcceleration,
  Stop,
  RemainStationary,
};

// (direction, speed) decision pair from the discrete action vocabulary.
struct MetaAction {
  DirectionAction direction{DirectionAction::MaintainCurrentLane};
  SpeedAction speed{SpeedAction::MaintainCurrentSpeed};

  friend bool operator==(const MetaAction&, const MetaAction&) = default;
};

// Display names ("Turn Left", "Smooth Deceleration") used in prompts and
// filter feedback; ids ("TurnLeft") used in JSON.
std::string to_display(DirectionAction a);
std::string to_display(SpeedAction a);
std::string to_id(DrivingCommand c);
std::string to_id(DirectionAction a);
std::string to_id(SpeedAction a);
DrivingCommand driving_command_from_id(const std::string& id);
DirectionAction direction_from_id(const std::string& id);
SpeedAction speed_from_id(const std::string& id);

// Case- and punctuation-insensitive phrase lookup against the action
// vocabulary ("turn left" -> TurnLeft). Returns nullopt for anything else.
std::optional<DirectionAction> match_direction_phrase(const std::string& text);
std::optional<SpeedAction> match_speed_phrase(const std::string& text);

struct ActionDecision {
  std::string direction_text;  // annotator's direction phrase, verbatim
  std::string speed_text;      // annotator's speed phrase, verbatim
  std::optional<MetaAction> parsed;

  bool has_any_text() const { return !direction_text.empty() || !speed_text.empty(); }

  friend bool operator==(const ActionDecision&, const ActionDecision&) = default;
};

// Four-section structured reasoning text.
struct CotText {
  std::string scene_analysis;
  std::string latent_risk;
  std::string behavior_reasoning;
  ActionDecision action_decision;

  // Complete iff all four sections carry content; the decision section needs
  // both a direction and a speed phrase.
  bool is_complete() const {
    return !scene_analysis.empty() && !latent_risk.empty() &&
           !behavior_reasoning.empty() && !action_decision.direction_text.empty() &&
           !action_decision.speed_text.empty();
  }

  friend bool operator==(const CotText&, const CotText&) = default;
};

// <think> CoT + <dream> visual-token span + <answer> trajectory.
struct TrainingSequence {
  CotText cot;
  std::vector<std::int64_t> dream_tokens;  // opaque non-negative visual-token ids
  Trajectory trajectory;

  void validate() const;

  friend bool operator==(const TrainingSequence&, const TrainingSequence&) = default;
};

// One dataset record fed to the annotation pipeline.
struct AnnotationSample {
  std::string sample_id;
  std::vector<std::string> image_refs;    // exactly 6 surround views
  std::vector<std::string> history_refs;  // up to 4 recent front-view frames
  DrivingCommand command{DrivingCommand::GoStraight};
  EgoStatus ego;
  Trajectory gt_trajectory;
  // GT future-frame visual tokens, pre-tokenized offline by the dataset
  // producer. Empty yields a text-only record.
  std::vector<std::int64_t> future_image_tokens;

  void validate() const;

  friend bool operator==(const AnnotationSample&, const AnnotationSample&) = default;
};

}  // namespace drivecot
