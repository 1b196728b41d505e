#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "drivecot/rewards.hpp"
#include "drivecot/types.hpp"

namespace drivecot::testing {

inline double quantize_cm(double v) { return std::round(v * 100.0) / 100.0; }

// Diverse 6-point planning trajectory: random speed profile integrated along
// a random turn-rate profile, starting at the origin heading +x.
inline Trajectory random_trajectory(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> speed_dist(0.0, 15.0);
  std::uniform_real_distribution<double> accel_dist(-3.0, 3.0);
  std::uniform_real_distribution<double> turn_dist(-0.4, 0.4);
  std::bernoulli_distribution stationary(0.1);

  Trajectory traj;
  traj.dt = 0.5;
  if (stationary(rng)) {
    traj.points.assign(6, Point2d{0.0, 0.0});
    return traj;
  }

  double speed = speed_dist(rng);
  const double accel = accel_dist(rng);
  const double turn_rate = turn_dist(rng);
  double heading = 0.0;
  double x = 0.0;
  double y = 0.0;
  for (int k = 0; k < 6; ++k) {
    speed = std::max(0.0, speed + accel * traj.dt);
    heading += turn_rate;
    x += speed * traj.dt * std::cos(heading);
    y += speed * traj.dt * std::sin(heading);
    traj.points.push_back({x, y});
  }
  return traj;
}

inline Trajectory mirror_y(const Trajectory& traj) {
  Trajectory out = traj;
  for (auto& p : out.points) p.y = -p.y;
  return out;
}

// Circular arc tangent to +x at the origin; positive total_angle turns left.
inline Trajectory arc_trajectory(double radius, double total_angle, std::size_t points,
                                 double dt = 0.5) {
  Trajectory traj;
  traj.dt = dt;
  const double sign = total_angle >= 0.0 ? 1.0 : -1.0;
  const double mag = std::abs(total_angle);
  for (std::size_t k = 1; k <= points; ++k) {
    const double a = mag * static_cast<double>(k) / static_cast<double>(points);
    traj.points.push_back({radius * std::sin(a), sign * radius * (1.0 - std::cos(a))});
  }
  return traj;
}

inline Trajectory straight_trajectory(double speed, std::size_t points = 6, double dt = 0.5) {
  Trajectory traj;
  traj.dt = dt;
  for (std::size_t k = 1; k <= points; ++k) {
    traj.points.push_back({speed * dt * static_cast<double>(k), 0.0});
  }
  return traj;
}

// Straight trajectory following an explicit per-segment speed schedule.
inline Trajectory straight_from_speeds(const std::vector<double>& speeds, double dt = 0.5) {
  Trajectory traj;
  traj.dt = dt;
  double x = 0.0;
  for (const double s : speeds) {
    x += s * dt;
    traj.points.push_back({x, 0.0});
  }
  return traj;
}

inline std::string random_words(std::mt19937_64& rng, int min_words, int max_words) {
  static const char* kWords[] = {"vehicle", "crossing", "pedestrian", "lane",   "signal",
                                 "ahead",   "slowing",  "clear",      "wet",    "merging",
                                 "cyclist", "truck",    "stopped",    "moving", "close"};
  std::uniform_int_distribution<int> count_dist(min_words, max_words);
  std::uniform_int_distribution<std::size_t> word_dist(0, std::size(kWords) - 1);
  const int count = count_dist(rng);
  std::string out;
  for (int i = 0; i < count; ++i) {
    if (i != 0) out += ' ';
    out += kWords[word_dist(rng)];
  }
  return out;
}

inline CotText random_cot(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dir_dist(0, 4);
  std::uniform_int_distribution<int> spd_dist(0, 5);
  CotText cot;
  cot.scene_analysis = random_words(rng, 3, 12);
  cot.latent_risk = random_words(rng, 3, 12);
  cot.behavior_reasoning = random_words(rng, 3, 12);
  const auto dir = static_cast<DirectionAction>(dir_dist(rng));
  const auto spd = static_cast<SpeedAction>(spd_dist(rng));
  cot.action_decision.direction_text = to_display(dir);
  cot.action_decision.speed_text = to_display(spd);
  cot.action_decision.parsed = MetaAction{dir, spd};
  return cot;
}

inline TrainingSequence random_training_sequence(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> token_count(0, 12);
  std::uniform_int_distribution<std::int64_t> token_id(0, 16383);
  std::uniform_real_distribution<double> coord(-50.0, 50.0);

  TrainingSequence seq;
  seq.cot = random_cot(rng);
  const int tokens = token_count(rng);
  for (int i = 0; i < tokens; ++i) seq.dream_tokens.push_back(token_id(rng));
  seq.trajectory.dt = 0.5;
  for (int k = 0; k < 6; ++k) {
    seq.trajectory.points.push_back({quantize_cm(coord(rng)), quantize_cm(coord(rng))});
  }
  return seq;
}

// Old/ref log-probs stay close to the current policy so the summed
// importance ratios land in a realistic range instead of overflowing exp().
inline reward::RolloutGroup random_rollout_group(std::mt19937_64& rng, std::size_t group_size,
                                                 std::size_t max_tokens) {
  std::uniform_int_distribution<std::size_t> len_dist(1, max_tokens);
  std::uniform_real_distribution<double> logp_dist(-3.0, 0.0);
  std::uniform_real_distribution<double> old_noise(-0.05, 0.05);
  std::uniform_real_distribution<double> ref_noise(-0.5, 0.5);
  std::uniform_real_distribution<double> reward_dist(-2.0, 12.0);
  std::bernoulli_distribution all_equal_rewards(0.05);

  reward::RolloutGroup group;
  group.query_id = "q" + std::to_string(rng());
  const std::size_t len = len_dist(rng);
  const bool degenerate = all_equal_rewards(rng);
  const double shared_reward = reward_dist(rng);
  for (std::size_t i = 0; i < group_size; ++i) {
    reward::Rollout r;
    r.text = "rollout-" + std::to_string(i);
    r.reward = degenerate ? shared_reward : reward_dist(rng);
    for (std::size_t t = 0; t < len; ++t) {
      const double cur = logp_dist(rng);
      r.token_logps_current.push_back(cur);
      r.token_logps_old.push_back(std::min(0.0, cur + old_noise(rng)));
      r.token_logps_ref.push_back(std::min(0.0, cur + ref_noise(rng)));
    }
    group.rollouts.push_back(std::move(r));
  }
  return group;
}

}  // namespace drivecot::testing
