#include "drivecot/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace drivecot::kinematics {

namespace {

constexpr double kHeadingDispEps = 1e-3;  // meters; shorter chords carry no heading

double wrap_to_pi(double angle) {
  while (angle > M_PI) angle -= 2.0 * M_PI;
  while (angle < -M_PI) angle += 2.0 * M_PI;
  return angle;
}

}  // namespace

double KinematicsProfile::mean_accel() const {
  if (accels.empty()) return 0.0;
  return std::accumulate(accels.begin(), accels.end(), 0.0) /
         static_cast<double>(accels.size());
}

void ThresholdSet::validate() const {
  if (accel_p30 > accel_p60) throw Error("accel_p30 must not exceed accel_p60");
  if (decel_p30 > decel_p60) throw Error("decel_p30 must not exceed decel_p60");
  for (const double eps :
       {turn_heading_min, lane_change_lateral_min, stop_speed_eps, stationary_disp_eps}) {
    if (!(eps > 0.0)) throw Error("threshold epsilons must be positive");
  }
}

void to_json(nlohmann::json& j, const ThresholdSet& t) {
  j = nlohmann::json{{"accel_p30", t.accel_p30},
                     {"accel_p60", t.accel_p60},
                     {"decel_p30", t.decel_p30},
                     {"decel_p60", t.decel_p60},
                     {"turn_heading_min", t.turn_heading_min},
                     {"lane_change_lateral_min", t.lane_change_lateral_min},
                     {"stop_speed_eps", t.stop_speed_eps},
                     {"stationary_disp_eps", t.stationary_disp_eps}};
}

void from_json(const nlohmann::json& j, ThresholdSet& t) {
  t.accel_p30 = j.at("accel_p30").get<double>();
  t.accel_p60 = j.at("accel_p60").get<double>();
  t.decel_p30 = j.at("decel_p30").get<double>();
  t.decel_p60 = j.at("decel_p60").get<double>();
  t.turn_heading_min = j.at("turn_heading_min").get<double>();
  t.lane_change_lateral_min = j.at("lane_change_lateral_min").get<double>();
  t.stop_speed_eps = j.at("stop_speed_eps").get<double>();
  t.stationary_disp_eps = j.at("stationary_disp_eps").get<double>();
  t.validate();
}

KinematicsProfile compute_kinematics(const Trajectory& traj,
                                     const std::optional<EgoStatus>& ego) {
  if (traj.points.size() < 2)
    throw DegenerateTrajectory("kinematics needs at least 2 trajectory points");
  traj.validate();

  KinematicsProfile profile;
  const auto& pts = traj.points;

  if (ego) profile.speeds.push_back(ego->velocity);

  Point2d prev{0.0, 0.0};  // implicit t=0 pose
  double prev_heading = 0.0;
  for (const auto& p : pts) {
    const double dx = p.x - prev.x;
    const double dy = p.y - prev.y;
    const double disp = std::hypot(dx, dy);
    profile.path_length += disp;
    profile.speeds.push_back(disp / traj.dt);
    if (disp >= kHeadingDispEps) {
      const double heading = std::atan2(dy, dx);
      profile.heading_change_total += wrap_to_pi(heading - prev_heading);
      prev_heading = heading;
    }
    prev = p;
  }
  profile.lateral_disp_final = pts.back().y;

  profile.accels.reserve(profile.speeds.size() - 1);
  for (std::size_t k = 1; k < profile.speeds.size(); ++k) {
    profile.accels.push_back((profile.speeds[k] - profile.speeds[k - 1]) / traj.dt);
  }
  return profile;
}

double linear_percentile(std::span<const double> sorted, double percentile) {
  if (sorted.empty()) throw EmptyPopulation("percentile of empty population");
  if (sorted.size() == 1) return sorted.front();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * percentile / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

FitResult fit_thresholds(const std::vector<Trajectory>& trajectories,
                         const ThresholdConfig& config) {
  FitResult result;
  if (trajectories.size() < 100) {
    result.warnings.push_back("threshold fit over only " +
                              std::to_string(trajectories.size()) +
                              " trajectories; percentiles may be unstable");
  }

  std::vector<double> accel_means;
  std::vector<double> decel_magnitudes;
  std::vector<double> turn_magnitudes;
  for (const auto& traj : trajectories) {
    if (traj.points.size() < 2) continue;
    const KinematicsProfile k = compute_kinematics(traj);
    const double a = k.mean_accel();
    if (a > 0.0) {
      accel_means.push_back(a);
    } else if (a < 0.0) {
      decel_magnitudes.push_back(-a);
    }
    if (std::abs(k.heading_change_total) > config.turn_heading_min) {
      turn_magnitudes.push_back(std::abs(k.heading_change_total));
    }
  }

  if (accel_means.empty()) throw EmptyPopulation("no accelerating trajectories in dataset");
  if (decel_magnitudes.empty())
    throw EmptyPopulation("no decelerating trajectories in dataset");

  std::sort(accel_means.begin(), accel_means.end());
  std::sort(decel_magnitudes.begin(), decel_magnitudes.end());
  std::sort(turn_magnitudes.begin(), turn_magnitudes.end());

  ThresholdSet& th = result.thresholds;
  th.accel_p30 = linear_percentile(accel_means, 30.0);
  th.accel_p60 = linear_percentile(accel_means, 60.0);
  th.decel_p30 = linear_percentile(decel_magnitudes, 30.0);
  th.decel_p60 = linear_percentile(decel_magnitudes, 60.0);
  th.turn_heading_min = turn_magnitudes.empty()
                            ? config.turn_heading_min
                            : linear_percentile(turn_magnitudes, 30.0);
  th.lane_change_lateral_min = config.lane_change_lateral_min;
  th.stop_speed_eps = config.stop_speed_eps;
  th.stationary_disp_eps = config.stationary_disp_eps;
  th.validate();

  result.accel_population = accel_means.size();
  result.decel_population = decel_magnitudes.size();
  result.turning_candidates = turn_magnitudes.size();
  return result;
}

MetaAction classify_action(const Trajectory& traj, const ThresholdSet& th) {
  const KinematicsProfile k = compute_kinematics(traj);
  MetaAction action;

  const bool stationary = k.path_length < th.stationary_disp_eps;

  if (stationary) {
    action.direction = DirectionAction::MaintainCurrentLane;
  } else if (std::abs(k.heading_change_total) >= th.turn_heading_min) {
    action.direction = k.heading_change_total > 0.0 ? DirectionAction::TurnLeft
                                                    : DirectionAction::TurnRight;
  } else if (std::abs(k.lateral_disp_final) >= th.lane_change_lateral_min) {
    action.direction = k.lateral_disp_final > 0.0 ? DirectionAction::ChangeLaneLeft
                                                  : DirectionAction::ChangeLaneRight;
  } else {
    action.direction = DirectionAction::MaintainCurrentLane;
  }

  const double mean_a = k.mean_accel();
  if (stationary) {
    action.speed = SpeedAction::RemainStationary;
  } else if (k.final_speed() < th.stop_speed_eps && k.initial_speed() >= th.stop_speed_eps) {
    action.speed = SpeedAction::Stop;
  } else if (mean_a >= th.accel_p60) {
    action.speed = SpeedAction::SmoothAcceleration;
  } else if (-mean_a >= th.decel_p60) {
    action.speed = SpeedAction::EmergencyBrake;
  } else if (-mean_a >= th.decel_p30) {
    action.speed = SpeedAction::SmoothDeceleration;
  } else if (mean_a >= th.accel_p30) {
    action.speed = SpeedAction::SmoothAcceleration;
  } else {
    action.speed = SpeedAction::MaintainCurrentSpeed;
  }
  return action;
}

}  // namespace drivecot::kinematics
