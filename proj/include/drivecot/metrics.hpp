#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "drivecot/types.hpp"

namespace drivecot::metrics {

// Oriented obstacle rectangle in the ego frame at one future timestep.
struct ObstacleBox {
  Point2d center;
  double half_length{0.0};  // along heading
  double half_width{0.0};
  double heading{0.0};  // radians, (-pi, pi]
  int timestep{1};      // 1-based step index

  void validate() const;
};

void to_json(nlohmann::json& j, const ObstacleBox& b);
void from_json(const nlohmann::json& j, ObstacleBox& b);

// Standard nuScenes ego footprint unless overridden.
struct EgoDims {
  double length{4.084};
  double width{1.730};
};

enum class Convention { STP3, UniAD };

// Horizons 1s/2s/3s map to steps 2/4/6 at dt=0.5.
constexpr std::size_t horizon_step_for(int horizon_index /*1..3*/) {
  return static_cast<std::size_t>(horizon_index) * 2;
}

// Euclidean error at exactly horizon_step (1-based). Throws HorizonOutOfRange
// when either trajectory does not cover the step.
double l2_uniad(const Trajectory& pred, const Trajectory& gt, std::size_t horizon_step);

// Mean of per-step Euclidean errors over steps 1..horizon_step.
double l2_stp3(const Trajectory& pred, const Trajectory& gt, std::size_t horizon_step);

// Separating-axis overlap test between two oriented rectangles; touching
// counts as overlap.
bool boxes_overlap(const Point2d& center_a, double half_len_a, double half_wid_a,
                   double heading_a, const Point2d& center_b, double half_len_b,
                   double half_wid_b, double heading_b);

// True iff the oriented ego rectangle overlaps any obstacle of that timestep.
bool collision_at(const Point2d& pred_point, double pred_heading, const EgoDims& ego,
                  std::span<const ObstacleBox> obstacles_at_t);

// Heading per waypoint from consecutive displacements; step 1 uses the
// implicit origin, zero-displacement steps inherit the previous heading.
std::vector<double> ego_headings(const Trajectory& pred);

// Per-step collision flags for one trajectory; obstacles_per_step[k] holds
// the boxes of step k+1 and must cover every evaluated step.
std::vector<bool> collision_flags(const Trajectory& pred,
                                  const std::vector<std::vector<ObstacleBox>>& obstacles_per_step,
                                  const EgoDims& ego);

struct HorizonValues {
  double at_1s{0.0};
  double at_2s{0.0};
  double at_3s{0.0};

  double avg() const { return (at_1s + at_2s + at_3s) / 3.0; }
};

void to_json(nlohmann::json& j, const HorizonValues& v);

// Single-sample collision outcome (0 or 100 per horizon). UniAD: collides at
// horizon h iff the flag at step h is set; ST-P3: iff any flag at step <= h.
HorizonValues collision_rate(const Trajectory& pred,
                             const std::vector<std::vector<ObstacleBox>>& obstacles_per_step,
                             const EgoDims& ego, Convention conv);

struct SampleRecord {
  Trajectory pred;
  Trajectory gt;
  std::optional<std::vector<std::vector<ObstacleBox>>> obstacles;  // per step
};

struct ConventionReport {
  HorizonValues l2;
  HorizonValues collision_pct;
};

struct EvalReport {
  ConventionReport stp3;
  ConventionReport uniad;
  std::size_t num_samples{0};
  std::size_t samples_with_obstacles{0};
};

void to_json(nlohmann::json& j, const EvalReport& r);

struct EvalOptions {
  EgoDims ego{};
  // ST-P3 collision is cumulative-any-step by default; this switches to the
  // averaged-rate variant (mean of per-step flags up to the horizon).
  bool stp3_averaged_collision{false};
};

// Table-shaped open-loop report over a sample set, both conventions.
EvalReport evaluate_dataset(std::span<const SampleRecord> samples,
                            const EvalOptions& opts = {});

// --- Frechet distance between Gaussian-fitted feature sets ---

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Unbiased (n-1) covariance; diagonal_only keeps only the variances.
// Throws TooFewSamples below 2 rows, DimMismatch on ragged input.
GaussianStats fit_gaussian(std::span<const std::vector<double>> features,
                           bool diagonal_only = false);

// ||mu_a - mu_b||^2 + Tr(cov_a + cov_b - 2 (cov_a cov_b)^{1/2}); the matrix
// square root comes from the symmetric eigendecomposition of
// cov_a^{1/2} cov_b cov_a^{1/2}. Eigenvalues below -negative_eig_tol raise
// NonPSDCovariance; small negatives clamp to zero.
double frechet_gaussian(const GaussianStats& a, const GaussianStats& b,
                        double negative_eig_tol = 1e-8);

struct FrechetOptions {
  bool allow_diagonal_fallback{false};
  double negative_eig_tol{1e-8};
};

// Fits a Gaussian to each feature set and returns their Frechet distance.
// Full covariance needs at least d+1 samples per set; with fewer, the
// diagonal fallback is used when enabled, otherwise TooFewSamples is raised.
double frechet_distance(std::span<const std::vector<double>> features_a,
                        std::span<const std::vector<double>> features_b,
                        const FrechetOptions& opts = {});

}  // namespace drivecot::metrics
