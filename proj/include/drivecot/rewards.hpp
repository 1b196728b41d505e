#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "drivecot/types.hpp"

namespace drivecot::reward {

struct RewardConfig {
  double lambda_l2{10.0};   // maximum displacement error (meters)
  double alpha_l2{6.0};     // reward scaling factor
  double lambda1{10.0};     // stage-1 format-reward weight
  double lambda2{10.0};     // stage-2 format-reward weight
  double epsilon_clip{0.2};
  double beta_kl{0.04};
  double std_floor{1e-6};
  bool clamp_l2_at_zero{true};  // floor the L2 reward at 0 beyond lambda_l2

  void validate() const;
};

void to_json(nlohmann::json& j, const RewardConfig& c);
void from_json(const nlohmann::json& j, RewardConfig& c);

// Cosine similarity between two externally computed embedding vectors.
// Throws DimMismatch on unequal dimensions, ZeroNorm on a zero vector,
// NonFinite on non-finite entries.
double image_reward(std::span<const double> e_dream, std::span<const double> e_gt);

// Mean Euclidean distance over corresponding waypoints.
double ade(const Trajectory& pred, const Trajectory& gt);

// (lambda - ADE) / alpha, floored at 0 once ADE exceeds lambda (configurable).
double l2_reward(const Trajectory& pred, const Trajectory& gt, const RewardConfig& cfg);
double l2_reward_from_ade(double ade_value, const RewardConfig& cfg);

// 1 iff the answer span parses into exactly 6 well-formed (x, y) pairs.
int format_reward(std::string_view answer_span);

// Stage 1: r_img + lambda1 * r_fmt; stage 2: r_l2 + lambda2 * r_fmt.
double stage_reward(int stage, double r_core, int r_fmt, const RewardConfig& cfg);

// A_i = (r_i - mean) / max(population std, std_floor).
std::vector<double> group_advantages(std::span<const double> rewards,
                                     const RewardConfig& cfg);

// min(rho * A, clip(rho, 1-eps, 1+eps) * A) with rho from summed log-probs.
double clipped_surrogate(double logp_cur_sum, double logp_old_sum, double advantage,
                         const RewardConfig& cfg);

// Per-token mean of exp(l_ref - l_cur) - (l_ref - l_cur) - 1; always >= 0.
double kl_penalty(std::span<const double> token_logps_cur,
                  std::span<const double> token_logps_ref);

// -sum of token log-probs. Entries must be finite and <= 0.
double sequence_nll(std::span<const double> token_logps);

struct Rollout {
  std::string text;
  double reward{0.0};
  std::vector<double> token_logps_current;
  std::vector<double> token_logps_old;
  std::vector<double> token_logps_ref;

  void validate() const;
};

struct RolloutGroup {
  std::string query_id;
  std::vector<Rollout> rollouts;

  void validate() const;
};

void to_json(nlohmann::json& j, const Rollout& r);
void from_json(const nlohmann::json& j, Rollout& r);
void to_json(nlohmann::json& j, const RolloutGroup& g);
void from_json(const nlohmann::json& j, RolloutGroup& g);

struct RolloutBreakdown {
  double rho{0.0};
  double advantage{0.0};
  double kl{0.0};
  double surrogate{0.0};
  double contribution{0.0};  // surrogate - beta * kl
};

struct GrpoResult {
  double objective{0.0};
  std::vector<RolloutBreakdown> per_rollout;
};

// J = (1/G) * sum_i [ clipped_surrogate_i - beta * KL_i ] with advantages
// normalized within the group.
GrpoResult grpo_objective(const RolloutGroup& group, const RewardConfig& cfg);

}  // namespace drivecot::reward
