#include <doctest.h>

#include "support/approx.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "drivecot/rewards.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace drivecot;
using namespace drivecot::reward;

TEST_CASE("image reward is cosine similarity") {
  const std::vector<double> e{0.5, -0.25, 1.0};
  CHECK(image_reward(e, e) == doctest::Approx(1.0));

  const std::vector<double> x{1.0, 0.0};
  const std::vector<double> y{0.0, 1.0};
  CHECK(image_reward(x, y) == doctest::Approx(0.0));

  const std::vector<double> neg{-0.5, 0.25, -1.0};
  CHECK(image_reward(e, neg) == doctest::Approx(-1.0));

  CHECK_THROWS_AS(image_reward(x, e), DimMismatch);
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(image_reward(x, zero), ZeroNorm);
}

TEST_CASE("image reward is invariant to positive scaling") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::uniform_real_distribution<double> scale_dist(1e-3, 1e3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(16);
    std::vector<double> b(16);
    for (auto& v : a) v = dist(rng);
    for (auto& v : b) v = dist(rng);
    const double scale = scale_dist(rng);
    std::vector<double> scaled = a;
    for (auto& v : scaled) v *= scale;
    REQUIRE(image_reward(scaled, b) ==
            testing::ApproxAbs(image_reward(a, b), 1e-9));
  }
}

TEST_CASE("ade averages pointwise distances") {
  const Trajectory gt = testing::straight_trajectory(4.0);
  CHECK(ade(gt, gt) == doctest::Approx(0.0));

  Trajectory offset = gt;
  for (auto& p : offset.points) p.y += 0.5;
  CHECK(ade(offset, gt) == doctest::Approx(0.5));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-20.0, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory a;
    Trajectory b;
    for (int k = 0; k < 6; ++k) {
      a.points.push_back({dist(rng), dist(rng)});
      b.points.push_back({dist(rng), dist(rng)});
    }
    double expected = 0.0;
    for (int k = 0; k < 6; ++k) {
      expected += std::hypot(a.points[k].x - b.points[k].x, a.points[k].y - b.points[k].y);
    }
    expected /= 6.0;
    REQUIRE(ade(a, b) == testing::ApproxAbs(expected, 1e-12));
  }

  Trajectory five = gt;
  five.points.pop_back();
  CHECK_THROWS_AS(ade(five, gt), LengthMismatch);
}

TEST_CASE("l2 reward follows (lambda - ade) / alpha with a zero floor") {
  const RewardConfig cfg;
  CHECK(l2_reward_from_ade(0.0, cfg) == testing::ApproxAbs(10.0 / 6.0, 1e-9));
  CHECK(l2_reward_from_ade(10.0, cfg) == testing::ApproxAbs(0.0, 1e-9));
  CHECK(l2_reward_from_ade(4.0, cfg) == testing::ApproxAbs(1.0, 1e-9));
  CHECK(l2_reward_from_ade(12.0, cfg) == 0.0);

  RewardConfig unclamped = cfg;
  unclamped.clamp_l2_at_zero = false;
  CHECK(l2_reward_from_ade(16.0, unclamped) == doctest::Approx(-1.0));

  // strictly decreasing on [0, lambda]
  double prev = l2_reward_from_ade(0.0, cfg);
  for (double a = 0.25; a <= 10.0; a += 0.25) {
    const double r = l2_reward_from_ade(a, cfg);
    REQUIRE(r < prev);
    prev = r;
  }
}

TEST_CASE("format reward accepts exactly six well-formed pairs") {
  const std::string six =
      "(1.00, 2.00), (3.00, 4.00), (5.00, 6.00), (7.00, 8.00), (9.00, 10.00), (11.00, 12.00)";
  CHECK(format_reward(six) == 1);
  CHECK(format_reward("") == 0);
  CHECK(format_reward("(1,2)") == 0);
  CHECK(format_reward(six + ", (13.00, 14.00)") == 0);
  CHECK(format_reward("(1,2), (3,4), (5,6), (7,8), (9,abc), (11,12)") == 0);
  CHECK(format_reward("(1,2), (3,4), (5,6), (7,8), (9,10), (11,12) trailing junk") == 0);
}

TEST_CASE("format reward never throws on fuzzed spans") {
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<int> len_dist(0, 120);
  std::uniform_int_distribution<int> char_dist(32, 126);
  for (int i = 0; i < 1000; ++i) {
    std::string junk;
    const int len = len_dist(rng);
    for (int k = 0; k < len; ++k) junk.push_back(static_cast<char>(char_dist(rng)));
    CHECK_NOTHROW(format_reward(junk));
  }
}

TEST_CASE("stage reward applies the format weight of its stage") {
  const RewardConfig cfg;
  CHECK(stage_reward(1, 0.8, 1, cfg) == doctest::Approx(10.8));
  CHECK(stage_reward(2, 1.5, 0, cfg) == doctest::Approx(1.5));
  CHECK(stage_reward(2, 0.0, 1, cfg) == doctest::Approx(10.0));
  CHECK_THROWS_AS(stage_reward(3, 0.0, 0, cfg), BadStage);
}

TEST_CASE("group advantages normalize to zero mean and unit population std") {
  const RewardConfig cfg;
  const std::vector<double> rewards{1.0, 2.0, 3.0};
  const std::vector<double> a = group_advantages(rewards, cfg);
  REQUIRE(a.size() == 3);
  CHECK(a[0] == testing::ApproxAbs(-1.2247, 1e-4));
  CHECK(a[1] == testing::ApproxAbs(0.0, 1e-9));
  CHECK(a[2] == testing::ApproxAbs(1.2247, 1e-4));

  const std::vector<double> equal{4.0, 4.0, 4.0, 4.0};
  for (const double v : group_advantages(equal, cfg)) CHECK(v == 0.0);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> r(8);
    for (auto& v : r) v = dist(rng);
    const std::vector<double> adv = group_advantages(r, cfg);
    double mean = 0.0;
    for (const double v : adv) mean += v;
    mean /= static_cast<double>(adv.size());
    double var = 0.0;
    for (const double v : adv) var += (v - mean) * (v - mean);
    var /= static_cast<double>(adv.size());
    REQUIRE(std::abs(mean) < 1e-9);
    REQUIRE(std::abs(std::sqrt(var) - 1.0) < 1e-9);
  }

  CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0}, cfg), GroupTooSmall);
}

TEST_CASE("clipped surrogate clips pessimistically") {
  const RewardConfig cfg;  // epsilon 0.2
  CHECK(clipped_surrogate(-10.0, -10.0, 0.7, cfg) == doctest::Approx(0.7));
  CHECK(clipped_surrogate(std::log(1.5), 0.0, 1.0, cfg) == doctest::Approx(1.2));
  CHECK(clipped_surrogate(std::log(0.5), 0.0, -1.0, cfg) == doctest::Approx(-0.8));
  CHECK_THROWS_AS(clipped_surrogate(std::nan(""), 0.0, 1.0, cfg), NonFinite);

  // min-form: the clipped surrogate never exceeds either branch, and inside
  // the trust region it equals the unclipped ratio term
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> log_rho(-1.5, 1.5);
  std::uniform_real_distribution<double> adv(-4.0, 4.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double lr = log_rho(rng);
    const double a = adv(rng);
    const double rho = std::exp(lr);
    const double clipped = std::clamp(rho, 1.0 - cfg.epsilon_clip, 1.0 + cfg.epsilon_clip);
    const double surrogate = clipped_surrogate(lr, 0.0, a, cfg);
    REQUIRE(surrogate <= rho * a + 1e-12);
    REQUIRE(surrogate <= clipped * a + 1e-12);
    if (rho >= 1.0 - cfg.epsilon_clip && rho <= 1.0 + cfg.epsilon_clip) {
      REQUIRE(surrogate == testing::ApproxAbs(rho * a, 1e-12));
    }
  }
}

TEST_CASE("kl penalty is the nonnegative per-token estimator") {
  const std::vector<double> lp{-0.5, -1.0, -2.0};
  CHECK(kl_penalty(lp, lp) == doctest::Approx(0.0));

  // single token with lref - lcur = 1
  CHECK(kl_penalty(std::vector<double>{-1.5}, std::vector<double>{-0.5}) ==
        testing::ApproxAbs(std::exp(1.0) - 2.0, 1e-12));

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> dist(-4.0, 0.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> cur(12);
    std::vector<double> ref(12);
    for (auto& v : cur) v = dist(rng);
    for (auto& v : ref) v = dist(rng);
    REQUIRE(kl_penalty(cur, ref) >= 0.0);
  }

  CHECK_THROWS_AS(kl_penalty(lp, std::vector<double>{-1.0}), LengthMismatch);
}

TEST_CASE("sequence nll sums negative log likelihoods") {
  const std::vector<double> uniform(5, -std::log(100.0));
  CHECK(sequence_nll(uniform) == doctest::Approx(5.0 * std::log(100.0)));
  CHECK(sequence_nll(std::vector<double>{0.0, 0.0}) == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-3.0, 0.0);
  std::vector<double> a(7);
  std::vector<double> b(9);
  for (auto& v : a) v = dist(rng);
  for (auto& v : b) v = dist(rng);
  std::vector<double> joined = a;
  joined.insert(joined.end(), b.begin(), b.end());
  CHECK(sequence_nll(joined) ==
        testing::ApproxAbs(sequence_nll(a) + sequence_nll(b), 1e-12));

  CHECK_THROWS_AS(sequence_nll(std::vector<double>{0.5}), PositiveLogProb);
  CHECK_THROWS_AS(sequence_nll(std::vector<double>{-std::numeric_limits<double>::infinity()}),
                  NonFinite);
}

TEST_CASE("grpo objective vanishes for identical policies and equal rewards") {
  RolloutGroup group;
  group.query_id = "q0";
  for (int i = 0; i < 4; ++i) {
    Rollout r;
    r.reward = 2.5;
    r.token_logps_current = {-0.5, -1.0};
    r.token_logps_old = r.token_logps_current;
    r.token_logps_ref = r.token_logps_current;
    group.rollouts.push_back(r);
  }
  const GrpoResult result = grpo_objective(group, RewardConfig{});
  CHECK(result.objective == testing::ApproxAbs(0.0, 1e-12));
  for (const auto& b : result.per_rollout) {
    CHECK(b.advantage == 0.0);
    CHECK(b.kl == doctest::Approx(0.0));
    CHECK(b.rho == doctest::Approx(1.0));
  }
}

TEST_CASE("grpo objective equals mean advantage when beta=0 and rho=1") {
  std::mt19937_64 rng(77);
  RolloutGroup group = testing::random_rollout_group(rng, 6, 16);
  for (auto& r : group.rollouts) {
    r.token_logps_old = r.token_logps_current;
    r.token_logps_ref = r.token_logps_current;
  }
  RewardConfig cfg;
  cfg.beta_kl = 0.0;
  const GrpoResult result = grpo_objective(group, cfg);
  CHECK(result.objective == testing::ApproxAbs(0.0, 1e-9));
}

TEST_CASE("grpo objective matches the hand-built three-rollout oracle") {
  RolloutGroup group;
  group.query_id = "hand";
  const double rewards[3] = {1.0, 4.0, 7.0};
  const std::vector<std::vector<double>> cur{{-0.2, -0.3}, {-1.0}, {-0.5, -0.25, -0.75}};
  const std::vector<std::vector<double>> old{{-0.25, -0.35}, {-0.9}, {-0.5, -0.3, -0.7}};
  const std::vector<std::vector<double>> ref{{-0.3, -0.2}, {-1.2}, {-0.45, -0.3, -0.8}};
  for (int i = 0; i < 3; ++i) {
    Rollout r;
    r.reward = rewards[i];
    r.token_logps_current = cur[i];
    r.token_logps_old = old[i];
    r.token_logps_ref = ref[i];
    group.rollouts.push_back(r);
  }
  const RewardConfig cfg;
  const GrpoResult result = grpo_objective(group, cfg);
  const double expected =
      testing::oracle_grpo_objective(group, cfg.beta_kl, cfg.epsilon_clip, cfg.std_floor);
  CHECK(result.objective == testing::ApproxAbs(expected, 1e-9));
  REQUIRE(result.per_rollout.size() == 3);
  // middle rollout carries the mean reward, so zero advantage and surrogate
  CHECK(result.per_rollout[1].advantage == testing::ApproxAbs(0.0, 1e-12));
}

TEST_CASE("grpo objective matches the scalar oracle on random groups") {
  std::mt19937_64 rng(20250809);
  const RewardConfig cfg;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t g = std::uniform_int_distribution<std::size_t>(2, 16)(rng);
    const RolloutGroup group = testing::random_rollout_group(rng, g, 64);
    const GrpoResult result = grpo_objective(group, cfg);
    const double expected =
        testing::oracle_grpo_objective(group, cfg.beta_kl, cfg.epsilon_clip, cfg.std_floor);
    REQUIRE(result.objective == testing::ApproxAbs(expected, 1e-9));
    for (const auto& b : result.per_rollout) REQUIRE(b.kl >= 0.0);
  }
}

TEST_CASE("rollout groups validate their invariants") {
  std::mt19937_64 rng(1);
  RolloutGroup group = testing::random_rollout_group(rng, 2, 8);
  CHECK_NOTHROW(group.validate());

  RolloutGroup small = group;
  small.rollouts.resize(1);
  CHECK_THROWS_AS(grpo_objective(small, RewardConfig{}), GroupTooSmall);

  RolloutGroup ragged = group;
  ragged.rollouts[0].token_logps_ref.pop_back();
  CHECK_THROWS_AS(grpo_objective(ragged, RewardConfig{}), LengthMismatch);

  RolloutGroup positive = group;
  positive.rollouts[0].token_logps_current[0] = 0.25;
  CHECK_THROWS_AS(grpo_objective(positive, RewardConfig{}), PositiveLogProb);
}

TEST_CASE("rollout group JSONL round-trips") {
  std::mt19937_64 rng(88);
  const RolloutGroup group = testing::random_rollout_group(rng, 3, 12);
  const std::string dumped = nlohmann::json(group).dump();
  const auto back = nlohmann::json::parse(dumped).get<RolloutGroup>();
  CHECK(back.query_id == group.query_id);
  REQUIRE(back.rollouts.size() == group.rollouts.size());
  CHECK(back.rollouts[1].token_logps_ref == group.rollouts[1].token_logps_ref);
  CHECK(nlohmann::json(back).dump() == dumped);
}

TEST_CASE("grpo golden dump evaluates to the frozen objective") {
  const std::string path =
      std::string(DRIVECOT_SOURCE_DIR) + "/tests/golden/grpo_groups.jsonl";
  std::ifstream in(path);
  REQUIRE(in.good());

  std::ifstream expected_in(std::string(DRIVECOT_SOURCE_DIR) +
                            "/tests/golden/grpo_expected.json");
  REQUIRE(expected_in.good());
  nlohmann::json expected;
  expected_in >> expected;

  const RewardConfig cfg;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto group = nlohmann::json::parse(line).get<RolloutGroup>();
    const GrpoResult result = grpo_objective(group, cfg);
    const double frozen = expected.at("objectives").at(index).get<double>();
    const double oracle =
        testing::oracle_grpo_objective(group, cfg.beta_kl, cfg.epsilon_clip, cfg.std_floor);
    REQUIRE(result.objective == testing::ApproxAbs(frozen, 1e-9));
    REQUIRE(result.objective == testing::ApproxAbs(oracle, 1e-9));
    ++index;
  }
  CHECK(index == expected.at("objectives").size());
}
