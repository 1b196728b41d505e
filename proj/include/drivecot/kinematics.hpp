#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "drivecot/types.hpp"

namespace drivecot::kinematics {

// Per-step motion quantities derived from a trajectory. The ego pose at t=0
// is the implicit origin, so an n-point trajectory yields n step segments:
// speeds[k] is the mean speed over segment k (origin->p1 first); when an
// EgoStatus is supplied its velocity is prepended as the t=0 speed. accels
// are forward differences of the speeds vector.
struct KinematicsProfile {
  std::vector<double> speeds;  // m/s
  std::vector<double> accels;  // m/s^2
  double heading_change_total{0.0};  // radians, signed, left-positive
  double lateral_disp_final{0.0};    // meters, signed, left-positive
  double path_length{0.0};           // meters

  double mean_accel() const;
  double initial_speed() const { return speeds.empty() ? 0.0 : speeds.front(); }
  double final_speed() const { return speeds.empty() ? 0.0 : speeds.back(); }
};

struct ThresholdSet {
  double accel_p30{0.5};  // m/s^2 over positive mean-accel trajectories
  double accel_p60{1.0};
  double decel_p30{0.5};  // magnitudes over negative mean-accel trajectories
  double decel_p60{1.5};
  double turn_heading_min{0.3};        // radians
  double lane_change_lateral_min{1.5}; // meters
  double stop_speed_eps{0.2};          // m/s
  double stationary_disp_eps{0.3};     // meters

  void validate() const;
};

void to_json(nlohmann::json& j, const ThresholdSet& t);
void from_json(const nlohmann::json& j, ThresholdSet& t);

// Seed values for fit_thresholds; the geometric thresholds and epsilons pass
// through to the fitted set.
struct ThresholdConfig {
  double turn_heading_min{0.3};
  double lane_change_lateral_min{1.5};
  double stop_speed_eps{0.2};
  double stationary_disp_eps{0.3};
};

struct FitResult {
  ThresholdSet thresholds;
  std::size_t accel_population{0};
  std::size_t decel_population{0};
  std::size_t turning_candidates{0};
  std::vector<std::string> warnings;
};

// Throws DegenerateTrajectory when the trajectory has fewer than 2 points.
KinematicsProfile compute_kinematics(const Trajectory& traj,
                                     const std::optional<EgoStatus>& ego = std::nullopt);

// Linear interpolation between order statistics: rank h = (n-1) * p / 100.
// `sorted` must be ascending and non-empty.
double linear_percentile(std::span<const double> sorted, double percentile);

// Splits trajectories into accelerating / decelerating populations by mean
// signed acceleration and takes the 30th/60th percentiles of each; the turn
// threshold is tightened to the 30th percentile of |heading change| over
// trajectories already exceeding the seed threshold. Throws EmptyPopulation
// when either acceleration population is empty; warns below 100 samples.
FitResult fit_thresholds(const std::vector<Trajectory>& trajectories,
                         const ThresholdConfig& config = {});

// Ground-truth meta-action derivation consumed by the decision filter.
MetaAction classify_action(const Trajectory& traj, const ThresholdSet& th);

}  // namespace drivecot::kinematics
