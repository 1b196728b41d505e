#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "drivecot/types.hpp"

namespace drivecot {

// Parses raw annotator output into the four-section structure. Total: never
// throws, absent sections come back empty and the format filter judges them.
// Section headers ("Scene Analysis", "Latent Risk Assessment", "Behavior
// Reasoning", "Action Decision") are matched case-insensitively, tolerating
// markdown/numbering prefixes and an inline `Header: content` form.
CotText parse_cot(const std::string& text);

// Canonical text rendering of a CotText; parse_cot(render_cot(c)) == c for
// any c whose section bodies do not themselves contain header lines.
std::string render_cot(const CotText& cot);

// Result of scanning a span for "(x, y)" pairs. `clean` is true when the
// span consists solely of well-formed pairs and separators.
struct ParsedPointList {
  std::vector<Point2d> points;
  bool clean{true};
};

ParsedPointList parse_point_list(std::string_view span);

// "(x1, y1), (x2, y2), ..." with 2-decimal fixed precision.
std::string format_trajectory_points(const Trajectory& traj);

// Emits <think>...</think><dream>...</dream><answer>...</answer>.
// Throws IncompleteCot when any CoT section is empty, BadTrajectory when the
// trajectory is invalid or does not carry exactly 6 points.
std::string assemble_sequence(const CotText& cot,
                              const std::vector<std::int64_t>& dream_tokens,
                              const Trajectory& traj);

// Span-level view of a serialized sequence, with per-span presence and
// cleanliness flags for the reward modules.
struct ParsedSequence {
  bool has_think{false};
  bool has_dream{false};
  bool has_answer{false};

  std::string think_text;
  CotText cot;

  std::vector<std::int64_t> dream_tokens;
  bool dream_clean{true};

  std::string answer_text;
  std::vector<Point2d> answer_points;
  bool answer_clean{true};

  bool answer_is_planning_horizon() const {
    return answer_points.size() == Trajectory::kPlanningPoints;
  }

  // Strict conversion; throws IncompleteCot / BadTrajectory / MalformedDelimiters
  // when a span is missing or unusable.
  TrainingSequence to_training_sequence(double dt = 0.5) const;
};

// Extracts the three delimited spans. Throws MalformedDelimiters when
// delimiters are duplicated, unbalanced, nested, or out of order; a span may
// be absent entirely (its presence flag stays false).
ParsedSequence parse_sequence(const std::string& text);

}  // namespace drivecot
