#include "drivecot/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "drivecot/jsonl.hpp"

namespace drivecot::metrics {

namespace {

constexpr std::size_t kHorizonSteps[3] = {2, 4, 6};

double step_error(const Trajectory& pred, const Trajectory& gt, std::size_t step) {
  const auto& p = pred.points[step - 1];
  const auto& g = gt.points[step - 1];
  return std::hypot(p.x - g.x, p.y - g.y);
}

void check_horizon(const Trajectory& pred, const Trajectory& gt, std::size_t horizon_step) {
  if (horizon_step == 0 || horizon_step > pred.points.size() ||
      horizon_step > gt.points.size())
    throw HorizonOutOfRange("horizon step " + std::to_string(horizon_step) +
                            " not covered by trajectories");
}

}  // namespace

void ObstacleBox::validate() const {
  if (!(half_length > 0.0) || !(half_width > 0.0))
    throw Error("obstacle extents must be positive");
  if (!(heading > -M_PI - 1e-12) || heading > M_PI + 1e-12)
    throw Error("obstacle heading must be in (-pi, pi]");
  if (timestep < 1) throw Error("obstacle timestep must be >= 1");
}

void to_json(nlohmann::json& j, const ObstacleBox& b) {
  j = nlohmann::json{{"center", b.center},
                     {"half_extents", nlohmann::json::array({b.half_length, b.half_width})},
                     {"heading", b.heading},
                     {"timestep", b.timestep}};
}

void from_json(const nlohmann::json& j, ObstacleBox& b) {
  b.center = j.at("center").get<Point2d>();
  b.half_length = j.at("half_extents").at(0).get<double>();
  b.half_width = j.at("half_extents").at(1).get<double>();
  b.heading = j.at("heading").get<double>();
  b.timestep = j.at("timestep").get<int>();
  b.validate();
}

double l2_uniad(const Trajectory& pred, const Trajectory& gt, std::size_t horizon_step) {
  check_horizon(pred, gt, horizon_step);
  return step_error(pred, gt, horizon_step);
}

double l2_stp3(const Trajectory& pred, const Trajectory& gt, std::size_t horizon_step) {
  check_horizon(pred, gt, horizon_step);
  double total = 0.0;
  for (std::size_t s = 1; s <= horizon_step; ++s) total += step_error(pred, gt, s);
  return total / static_cast<double>(horizon_step);
}

bool boxes_overlap(const Point2d& center_a, double half_len_a, double half_wid_a,
                   double heading_a, const Point2d& center_b, double half_len_b,
                   double half_wid_b, double heading_b) {
  const double ua_x = std::cos(heading_a), ua_y = std::sin(heading_a);
  const double va_x = -ua_y, va_y = ua_x;
  const double ub_x = std::cos(heading_b), ub_y = std::sin(heading_b);
  const double vb_x = -ub_y, vb_y = ub_x;

  const double axes[4][2] = {
      {ua_x, ua_y}, {va_x, va_y}, {ub_x, ub_y}, {vb_x, vb_y}};
  const double dcx = center_b.x - center_a.x;
  const double dcy = center_b.y - center_a.y;

  for (const auto& axis : axes) {
    const double ra = half_len_a * std::abs(axis[0] * ua_x + axis[1] * ua_y) +
                      half_wid_a * std::abs(axis[0] * va_x + axis[1] * va_y);
    const double rb = half_len_b * std::abs(axis[0] * ub_x + axis[1] * ub_y) +
                      half_wid_b * std::abs(axis[0] * vb_x + axis[1] * vb_y);
    const double distance = std::abs(axis[0] * dcx + axis[1] * dcy);
    if (distance > ra + rb) return false;  // separating axis found
  }
  return true;
}

bool collision_at(const Point2d& pred_point, double pred_heading, const EgoDims& ego,
                  std::span<const ObstacleBox> obstacles_at_t) {
  for (const auto& box : obstacles_at_t) {
    if (boxes_overlap(pred_point, ego.length / 2.0, ego.width / 2.0, pred_heading,
                      box.center, box.half_length, box.half_width, box.heading)) {
      return true;
    }
  }
  return false;
}

std::vector<double> ego_headings(const Trajectory& pred) {
  std::vector<double> headings;
  headings.reserve(pred.points.size());
  Point2d prev{0.0, 0.0};
  double heading = 0.0;  // t=0 heading along +x
  for (const auto& p : pred.points) {
    const double dx = p.x - prev.x;
    const double dy = p.y - prev.y;
    if (std::hypot(dx, dy) > 1e-9) heading = std::atan2(dy, dx);
    headings.push_back(heading);
    prev = p;
  }
  return headings;
}

std::vector<bool> collision_flags(const Trajectory& pred,
                                  const std::vector<std::vector<ObstacleBox>>& obstacles_per_step,
                                  const EgoDims& ego) {
  if (obstacles_per_step.size() < pred.points.size())
    throw MissingObstacleFrame("obstacle frames cover " +
                               std::to_string(obstacles_per_step.size()) + " steps, need " +
                               std::to_string(pred.points.size()));
  const std::vector<double> headings = ego_headings(pred);
  std::vector<bool> flags(pred.points.size(), false);
  for (std::size_t k = 0; k < pred.points.size(); ++k) {
    flags[k] = collision_at(pred.points[k], headings[k], ego, obstacles_per_step[k]);
  }
  return flags;
}

void to_json(nlohmann::json& j, const HorizonValues& v) {
  j = nlohmann::json{{"1s", v.at_1s}, {"2s", v.at_2s}, {"3s", v.at_3s}, {"avg", v.avg()}};
}

HorizonValues collision_rate(const Trajectory& pred,
                             const std::vector<std::vector<ObstacleBox>>& obstacles_per_step,
                             const EgoDims& ego, Convention conv) {
  const std::vector<bool> flags = collision_flags(pred, obstacles_per_step, ego);
  HorizonValues out;
  double* slots[3] = {&out.at_1s, &out.at_2s, &out.at_3s};
  for (int h = 0; h < 3; ++h) {
    const std::size_t step = kHorizonSteps[h];
    if (step > flags.size())
      throw HorizonOutOfRange("trajectory shorter than the 3 s horizon");
    bool collided = false;
    if (conv == Convention::UniAD) {
      collided = flags[step - 1];
    } else {
      for (std::size_t s = 0; s < step; ++s) collided = collided || flags[s];
    }
    *slots[h] = collided ? 100.0 : 0.0;
  }
  return out;
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{
      {"stp3", {{"l2", r.stp3.l2}, {"collision_pct", r.stp3.collision_pct}}},
      {"uniad", {{"l2", r.uniad.l2}, {"collision_pct", r.uniad.collision_pct}}},
      {"num_samples", r.num_samples},
      {"samples_with_obstacles", r.samples_with_obstacles}};
}

EvalReport evaluate_dataset(std::span<const SampleRecord> samples, const EvalOptions& opts) {
  EvalReport report;
  if (samples.empty()) return report;

  double l2_sum_stp3[3] = {0, 0, 0};
  double l2_sum_uniad[3] = {0, 0, 0};
  double coll_sum_stp3[3] = {0, 0, 0};
  double coll_sum_uniad[3] = {0, 0, 0};

  for (const auto& sample : samples) {
    for (int h = 0; h < 3; ++h) {
      const std::size_t step = kHorizonSteps[h];
      l2_sum_stp3[h] += l2_stp3(sample.pred, sample.gt, step);
      l2_sum_uniad[h] += l2_uniad(sample.pred, sample.gt, step);
    }
    if (sample.obstacles) {
      const std::vector<bool> flags =
          collision_flags(sample.pred, *sample.obstacles, opts.ego);
      for (int h = 0; h < 3; ++h) {
        const std::size_t step = kHorizonSteps[h];
        coll_sum_uniad[h] += flags[step - 1] ? 100.0 : 0.0;
        if (opts.stp3_averaged_collision) {
          double hits = 0.0;
          for (std::size_t s = 0; s < step; ++s) hits += flags[s] ? 100.0 : 0.0;
          coll_sum_stp3[h] += hits / static_cast<double>(step);
        } else {
          bool any = false;
          for (std::size_t s = 0; s < step; ++s) any = any || flags[s];
          coll_sum_stp3[h] += any ? 100.0 : 0.0;
        }
      }
      ++report.samples_with_obstacles;
    }
  }

  report.num_samples = samples.size();
  const double n = static_cast<double>(samples.size());
  const double n_obs = report.samples_with_obstacles > 0
                           ? static_cast<double>(report.samples_with_obstacles)
                           : 1.0;
  double* l2_stp3_slots[3] = {&report.stp3.l2.at_1s, &report.stp3.l2.at_2s,
                              &report.stp3.l2.at_3s};
  double* l2_uniad_slots[3] = {&report.uniad.l2.at_1s, &report.uniad.l2.at_2s,
                               &report.uniad.l2.at_3s};
  double* c_stp3_slots[3] = {&report.stp3.collision_pct.at_1s, &report.stp3.collision_pct.at_2s,
                             &report.stp3.collision_pct.at_3s};
  double* c_uniad_slots[3] = {&report.uniad.collision_pct.at_1s,
                              &report.uniad.collision_pct.at_2s,
                              &report.uniad.collision_pct.at_3s};
  for (int h = 0; h < 3; ++h) {
    *l2_stp3_slots[h] = l2_sum_stp3[h] / n;
    *l2_uniad_slots[h] = l2_sum_uniad[h] / n;
    *c_stp3_slots[h] = coll_sum_stp3[h] / n_obs;
    *c_uniad_slots[h] = coll_sum_uniad[h] / n_obs;
  }
  return report;
}

GaussianStats fit_gaussian(std::span<const std::vector<double>> features,
                           bool diagonal_only) {
  if (features.size() < 2)
    throw TooFewSamples("need at least 2 feature vectors, got " +
                        std::to_string(features.size()));
  const std::size_t d = features.front().size();
  if (d == 0) throw DimMismatch("feature vectors are empty");
  for (const auto& row : features) {
    if (row.size() != d) throw DimMismatch("ragged feature matrix");
  }

  const auto n = static_cast<Eigen::Index>(features.size());
  const auto dim = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd x(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) x(i, j) = features[i][j];
  }

  GaussianStats stats;
  stats.mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - stats.mean.transpose();
  stats.cov = centered.transpose() * centered / static_cast<double>(n - 1);
  if (diagonal_only) {
    stats.cov = stats.cov.diagonal().asDiagonal();
  }
  return stats;
}

double frechet_gaussian(const GaussianStats& a, const GaussianStats& b,
                        double negative_eig_tol) {
  if (a.mean.size() != b.mean.size() || a.cov.rows() != b.cov.rows() ||
      a.cov.cols() != b.cov.cols())
    throw DimMismatch("Gaussian dimensions differ");

  auto clamped_eigs = [negative_eig_tol](const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success)
      throw NonPSDCovariance("eigendecomposition failed");
    Eigen::VectorXd eigs = solver.eigenvalues();
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
      if (eigs[i] < -negative_eig_tol)
        throw NonPSDCovariance("covariance eigenvalue " + std::to_string(eigs[i]) +
                               " below tolerance");
      eigs[i] = std::max(eigs[i], 0.0);
    }
    return std::make_pair(eigs, solver.eigenvectors());
  };

  const double mean_term = (a.mean - b.mean).squaredNorm();

  const auto [eigs_a, vecs_a] = clamped_eigs((a.cov + a.cov.transpose()) / 2.0);
  const Eigen::MatrixXd sqrt_a =
      vecs_a * eigs_a.cwiseSqrt().asDiagonal() * vecs_a.transpose();

  Eigen::MatrixXd inner = sqrt_a * b.cov * sqrt_a;
  inner = (inner + inner.transpose()) / 2.0;
  const auto [eigs_m, vecs_m] = clamped_eigs(inner);
  const double tr_sqrt = eigs_m.cwiseSqrt().sum();

  return mean_term + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt;
}

double frechet_distance(std::span<const std::vector<double>> features_a,
                        std::span<const std::vector<double>> features_b,
                        const FrechetOptions& opts) {
  if (features_a.empty() || features_b.empty())
    throw TooFewSamples("feature set is empty");
  const std::size_t d = features_a.front().size();
  if (features_b.front().size() != d)
    throw DimMismatch("feature sets have different dimensions");

  const bool enough = features_a.size() >= d + 1 && features_b.size() >= d + 1;
  bool diagonal = false;
  if (!enough) {
    if (!opts.allow_diagonal_fallback)
      throw TooFewSamples("full covariance needs at least d+1 samples per set");
    diagonal = true;
  }

  const GaussianStats ga = fit_gaussian(features_a, diagonal);
  const GaussianStats gb = fit_gaussian(features_b, diagonal);
  return frechet_gaussian(ga, gb, opts.negative_eig_tol);
}

}  // namespace drivecot::metrics
