#include "drivecot/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "drivecot/cot.hpp"

namespace drivecot::reward {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (const double v : values) {
    if (!std::isfinite(v)) throw NonFinite(std::string(what) + " contains a non-finite value");
  }
}

double sum(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

}  // namespace

void RewardConfig::validate() const {
  if (!(alpha_l2 > 0.0)) throw Error("alpha_l2 must be positive");
  if (!(epsilon_clip > 0.0 && epsilon_clip < 1.0)) throw Error("epsilon_clip must be in (0,1)");
  if (beta_kl < 0.0) throw Error("beta_kl must be non-negative");
  if (!(std_floor > 0.0)) throw Error("std_floor must be positive");
}

void to_json(nlohmann::json& j, const RewardConfig& c) {
  j = nlohmann::json{{"lambda_l2", c.lambda_l2},
                     {"alpha_l2", c.alpha_l2},
                     {"lambda1", c.lambda1},
                     {"lambda2", c.lambda2},
                     {"epsilon_clip", c.epsilon_clip},
                     {"beta_kl", c.beta_kl},
                     {"std_floor", c.std_floor},
                     {"clamp_l2_at_zero", c.clamp_l2_at_zero}};
}

void from_json(const nlohmann::json& j, RewardConfig& c) {
  RewardConfig defaults;
  c.lambda_l2 = j.value("lambda_l2", defaults.lambda_l2);
  c.alpha_l2 = j.value("alpha_l2", defaults.alpha_l2);
  c.lambda1 = j.value("lambda1", defaults.lambda1);
  c.lambda2 = j.value("lambda2", defaults.lambda2);
  c.epsilon_clip = j.value("epsilon_clip", defaults.epsilon_clip);
  c.beta_kl = j.value("beta_kl", defaults.beta_kl);
  c.std_floor = j.value("std_floor", defaults.std_floor);
  c.clamp_l2_at_zero = j.value("clamp_l2_at_zero", defaults.clamp_l2_at_zero);
  c.validate();
}

double image_reward(std::span<const double> e_dream, std::span<const double> e_gt) {
  if (e_dream.size() != e_gt.size())
    throw DimMismatch("embedding dimensions differ: " + std::to_string(e_dream.size()) +
                      " vs " + std::to_string(e_gt.size()));
  if (e_dream.empty()) throw DimMismatch("embeddings are empty");
  require_finite(e_dream, "dream embedding");
  require_finite(e_gt, "gt embedding");

  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < e_dream.size(); ++i) {
    dot += e_dream[i] * e_gt[i];
    na += e_dream[i] * e_dream[i];
    nb += e_gt[i] * e_gt[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroNorm("cosine similarity of a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double ade(const Trajectory& pred, const Trajectory& gt) {
  if (pred.points.size() != gt.points.size())
    throw LengthMismatch("trajectory point counts differ: " +
                         std::to_string(pred.points.size()) + " vs " +
                         std::to_string(gt.points.size()));
  if (pred.dt != gt.dt) throw LengthMismatch("trajectory dt differ");
  if (pred.points.empty()) throw LengthMismatch("trajectories are empty");

  double total = 0.0;
  for (std::size_t k = 0; k < pred.points.size(); ++k) {
    total += std::hypot(pred.points[k].x - gt.points[k].x, pred.points[k].y - gt.points[k].y);
  }
  return total / static_cast<double>(pred.points.size());
}

double l2_reward_from_ade(double ade_value, const RewardConfig& cfg) {
  const double raw = (cfg.lambda_l2 - ade_value) / cfg.alpha_l2;
  if (cfg.clamp_l2_at_zero && raw < 0.0) return 0.0;
  return raw;
}

double l2_reward(const Trajectory& pred, const Trajectory& gt, const RewardConfig& cfg) {
  return l2_reward_from_ade(ade(pred, gt), cfg);
}

int format_reward(std::string_view answer_span) {
  const ParsedPointList parsed = parse_point_list(answer_span);
  return (parsed.clean && parsed.points.size() == Trajectory::kPlanningPoints) ? 1 : 0;
}

double stage_reward(int stage, double r_core, int r_fmt, const RewardConfig& cfg) {
  if (stage == 1) return r_core + cfg.lambda1 * r_fmt;
  if (stage == 2) return r_core + cfg.lambda2 * r_fmt;
  throw BadStage("stage must be 1 or 2, got " + std::to_string(stage));
}

std::vector<double> group_advantages(std::span<const double> rewards,
                                     const RewardConfig& cfg) {
  if (rewards.size() < 2)
    throw GroupTooSmall("advantage normalization needs at least 2 rollouts");
  require_finite(rewards, "rewards");

  const double mean = sum(rewards) / static_cast<double>(rewards.size());
  double var = 0.0;
  for (const double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());  // population variance
  const double denom = std::max(std::sqrt(var), cfg.std_floor);

  std::vector<double> advantages(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) advantages[i] = (rewards[i] - mean) / denom;
  return advantages;
}

double clipped_surrogate(double logp_cur_sum, double logp_old_sum, double advantage,
                         const RewardConfig& cfg) {
  if (!std::isfinite(logp_cur_sum) || !std::isfinite(logp_old_sum) ||
      !std::isfinite(advantage))
    throw NonFinite("clipped_surrogate requires finite inputs");

  if (advantage == 0.0) return 0.0;
  const double rho = std::exp(logp_cur_sum - logp_old_sum);
  const double clipped =
      std::clamp(rho, 1.0 - cfg.epsilon_clip, 1.0 + cfg.epsilon_clip);
  return std::min(rho * advantage, clipped * advantage);
}

double kl_penalty(std::span<const double> token_logps_cur,
                  std::span<const double> token_logps_ref) {
  if (token_logps_cur.size() != token_logps_ref.size())
    throw LengthMismatch("KL log-prob vectors differ in length");
  if (token_logps_cur.empty()) return 0.0;
  require_finite(token_logps_cur, "current log-probs");
  require_finite(token_logps_ref, "reference log-probs");

  double total = 0.0;
  for (std::size_t i = 0; i < token_logps_cur.size(); ++i) {
    const double d = token_logps_ref[i] - token_logps_cur[i];
    total += std::exp(d) - d - 1.0;
  }
  return total / static_cast<double>(token_logps_cur.size());
}

double sequence_nll(std::span<const double> token_logps) {
  double total = 0.0;
  for (const double lp : token_logps) {
    if (!std::isfinite(lp)) throw NonFinite("log-prob is non-finite");
    if (lp > 0.0) throw PositiveLogProb("log-prob exceeds 0: " + std::to_string(lp));
    total += lp;
  }
  return -total;
}

void Rollout::validate() const {
  if (!std::isfinite(reward)) throw NonFinite("rollout reward is non-finite");
  const std::size_t n = token_logps_current.size();
  if (n == 0) throw LengthMismatch("rollout has no token log-probs");
  if (token_logps_old.size() != n || token_logps_ref.size() != n)
    throw LengthMismatch("rollout log-prob vectors differ in length");
  for (const auto* vec : {&token_logps_current, &token_logps_old, &token_logps_ref}) {
    for (const double lp : *vec) {
      if (!std::isfinite(lp)) throw NonFinite("rollout log-prob is non-finite");
      if (lp > 0.0) throw PositiveLogProb("rollout log-prob exceeds 0");
    }
  }
}

void RolloutGroup::validate() const {
  if (rollouts.size() < 2) throw GroupTooSmall("GRPO group needs at least 2 rollouts");
  for (const auto& r : rollouts) r.validate();
}

void to_json(nlohmann::json& j, const Rollout& r) {
  j = nlohmann::json{{"text", r.text},
                     {"reward", r.reward},
                     {"logps_current", r.token_logps_current},
                     {"logps_old", r.token_logps_old},
                     {"logps_ref", r.token_logps_ref}};
}

void from_json(const nlohmann::json& j, Rollout& r) {
  r.text = j.value("text", std::string{});
  r.reward = j.at("reward").get<double>();
  r.token_logps_current = j.at("logps_current").get<std::vector<double>>();
  r.token_logps_old = j.at("logps_old").get<std::vector<double>>();
  r.token_logps_ref = j.at("logps_ref").get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const RolloutGroup& g) {
  j = nlohmann::json{{"query_id", g.query_id}, {"rollouts", g.rollouts}};
}

void from_json(const nlohmann::json& j, RolloutGroup& g) {
  g.query_id = j.at("query_id").get<std::string>();
  g.rollouts = j.at("rollouts").get<std::vector<Rollout>>();
}

GrpoResult grpo_objective(const RolloutGroup& group, const RewardConfig& cfg) {
  group.validate();
  cfg.validate();

  std::vector<double> rewards;
  rewards.reserve(group.rollouts.size());
  for (const auto& r : group.rollouts) rewards.push_back(r.reward);
  const std::vector<double> advantages = group_advantages(rewards, cfg);

  GrpoResult result;
  result.per_rollout.reserve(group.rollouts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    const Rollout& r = group.rollouts[i];
    RolloutBreakdown b;
    b.advantage = advantages[i];
    const double cur = sum(r.token_logps_current);
    const double old = sum(r.token_logps_old);
    b.rho = std::exp(cur - old);
    b.surrogate = clipped_surrogate(cur, old, b.advantage, cfg);
    b.kl = kl_penalty(r.token_logps_current, r.token_logps_ref);
    b.contribution = b.surrogate - cfg.beta_kl * b.kl;
    total += b.contribution;
    result.per_rollout.push_back(b);
  }
  result.objective = total / static_cast<double>(group.rollouts.size());
  return result;
}

}  // namespace drivecot::reward
