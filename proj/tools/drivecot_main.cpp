#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drivecot/config.hpp"
#include "drivecot/features_io.hpp"
#include "drivecot/jsonl.hpp"
#include "drivecot/kinematics.hpp"
#include "drivecot/metrics.hpp"
#include "drivecot/pipeline.hpp"
#include "drivecot/rewards.hpp"
#include "drivecot/toml_lite.hpp"

namespace {

using namespace drivecot;

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitConfig = 2;
constexpr int kExitProvider = 3;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open input file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + path);
  return out;
}

kinematics::ThresholdSet load_thresholds(const std::string& path) {
  std::ifstream in = open_input(path);
  nlohmann::json j;
  in >> j;
  return j.get<kinematics::ThresholdSet>();
}

int cmd_annotate(const std::string& config_path, const std::string& input_path,
                 const std::string& output_path, int concurrency_override, bool skip_bad,
                 std::uint64_t seed) {
  config::AppConfig cfg = config::AppConfig::load(config_path);
  if (cfg.threshold_file.empty())
    throw ConfigError("annotate requires pipeline.threshold_file in the config");
  const kinematics::ThresholdSet thresholds = load_thresholds(cfg.threshold_file);
  if (concurrency_override > 0) cfg.pipeline.concurrency = concurrency_override;

  llm::HttpChatClient annotator(cfg.annotator, seed);
  llm::HttpChatClient checker(cfg.checker, seed + 1);

  std::ifstream in = open_input(input_path);
  std::ofstream out = open_output(output_path);
  const pipeline::PipelineStats stats = pipeline::run_pipeline(
      in, out, annotator, checker, thresholds, cfg.pipeline, skip_bad);

  std::cout << nlohmann::json(stats).dump(2) << std::endl;
  if (stats.total > 0 && stats.errored == stats.total) return kExitProvider;
  return kExitOk;
}

int cmd_derive_actions(const std::string& input_path, const std::string& output_path,
                       const std::string& thresholds_out, const std::string& thresholds_in,
                       const kinematics::ThresholdConfig& seed_cfg) {
  struct Record {
    std::string sample_id;
    Trajectory trajectory;
  };
  std::vector<Record> records;
  {
    std::ifstream in = open_input(input_path);
    for_each_jsonl(in, [&records](std::size_t line, const nlohmann::json& j) {
      Record r;
      r.sample_id = j.value("sample_id", "line-" + std::to_string(line));
      if (j.contains("gt_trajectory")) {
        r.trajectory = j.at("gt_trajectory").get<Trajectory>();
      } else if (j.contains("trajectory")) {
        r.trajectory = j.at("trajectory").get<Trajectory>();
      } else {
        throw DataError("line " + std::to_string(line) +
                        " carries neither gt_trajectory nor trajectory");
      }
      r.trajectory.validate();
      records.push_back(std::move(r));
    });
  }

  kinematics::ThresholdSet thresholds;
  if (!thresholds_in.empty()) {
    thresholds = load_thresholds(thresholds_in);
  } else {
    std::vector<Trajectory> trajectories;
    trajectories.reserve(records.size());
    for (const auto& r : records) trajectories.push_back(r.trajectory);
    const kinematics::FitResult fit = kinematics::fit_thresholds(trajectories, seed_cfg);
    for (const auto& warning : fit.warnings) std::cerr << "warning: " << warning << '\n';
    thresholds = fit.thresholds;
  }

  std::ofstream out = open_output(output_path);
  for (const auto& r : records) {
    const MetaAction action = kinematics::classify_action(r.trajectory, thresholds);
    write_jsonl_line(out, nlohmann::json{{"sample_id", r.sample_id}, {"action", action}});
  }

  if (!thresholds_out.empty()) {
    std::ofstream th_out = open_output(thresholds_out);
    th_out << nlohmann::json(thresholds).dump(2) << '\n';
  }
  return kExitOk;
}

struct NamedTrajectory {
  std::string sample_id;
  Trajectory trajectory;
};

std::vector<NamedTrajectory> read_named_trajectories(const std::string& path) {
  std::vector<NamedTrajectory> out;
  std::ifstream in = open_input(path);
  for_each_jsonl(in, [&out](std::size_t line, const nlohmann::json& j) {
    NamedTrajectory t;
    t.sample_id = j.value("sample_id", "line-" + std::to_string(line));
    t.trajectory = j.at("trajectory").get<Trajectory>();
    t.trajectory.validate();
    out.push_back(std::move(t));
  });
  return out;
}

int cmd_eval_openloop(const std::string& pred_path, const std::string& gt_path,
                      const std::string& obstacles_path, const std::string& convention,
                      const metrics::EvalOptions& opts, const std::string& output_path,
                      const std::string& csv_path) {
  const auto preds = read_named_trajectories(pred_path);
  const auto gts = read_named_trajectories(gt_path);
  if (preds.size() != gts.size())
    throw DataError("pred and gt carry different sample counts");

  std::map<std::string, const Trajectory*> gt_by_id;
  for (const auto& g : gts) gt_by_id[g.sample_id] = &g.trajectory;

  std::map<std::string, std::vector<metrics::ObstacleBox>> boxes_by_id;
  if (!obstacles_path.empty()) {
    std::ifstream in = open_input(obstacles_path);
    for_each_jsonl(in, [&boxes_by_id](std::size_t, const nlohmann::json& j) {
      boxes_by_id[j.at("sample_id").get<std::string>()] =
          j.at("boxes").get<std::vector<metrics::ObstacleBox>>();
    });
  }

  std::vector<metrics::SampleRecord> samples;
  samples.reserve(preds.size());
  for (const auto& p : preds) {
    const auto it = gt_by_id.find(p.sample_id);
    if (it == gt_by_id.end()) throw DataError("no gt trajectory for sample " + p.sample_id);
    metrics::SampleRecord record;
    record.pred = p.trajectory;
    record.gt = *it->second;
    if (!obstacles_path.empty()) {
      const auto obs_it = boxes_by_id.find(p.sample_id);
      if (obs_it == boxes_by_id.end())
        throw MissingObstacleFrame("no obstacle record for sample " + p.sample_id);
      std::vector<std::vector<metrics::ObstacleBox>> per_step(record.pred.points.size());
      for (const auto& box : obs_it->second) {
        const auto step = static_cast<std::size_t>(box.timestep);
        if (step >= 1 && step <= per_step.size()) per_step[step - 1].push_back(box);
      }
      record.obstacles = std::move(per_step);
    }
    samples.push_back(std::move(record));
  }

  const metrics::EvalReport report = metrics::evaluate_dataset(samples, opts);
  nlohmann::json j = report;
  if (convention == "stp3") j.erase("uniad");
  if (convention == "uniad") j.erase("stp3");

  std::cout << j.dump(2) << std::endl;
  if (!output_path.empty()) {
    std::ofstream out = open_output(output_path);
    out << j.dump(2) << '\n';
  }
  if (!csv_path.empty()) {
    std::ofstream csv = open_output(csv_path);
    csv << "convention,metric,1s,2s,3s,avg\n";
    char line[256];
    auto emit = [&csv, &line](const char* conv, const char* metric,
                              const metrics::HorizonValues& v) {
      std::snprintf(line, sizeof(line), "%s,%s,%.6f,%.6f,%.6f,%.6f\n", conv, metric, v.at_1s,
                    v.at_2s, v.at_3s, v.avg());
      csv << line;
    };
    if (convention != "uniad") {
      emit("STP3", "L2", report.stp3.l2);
      emit("STP3", "Collision", report.stp3.collision_pct);
    }
    if (convention != "stp3") {
      emit("UniAD", "L2", report.uniad.l2);
      emit("UniAD", "Collision", report.uniad.collision_pct);
    }
  }
  return kExitOk;
}

int cmd_fid(const std::string& a_path, const std::string& b_path, bool diagonal_fallback) {
  const auto a = features::load_feature_matrix(a_path);
  const auto b = features::load_feature_matrix(b_path);
  metrics::FrechetOptions opts;
  opts.allow_diagonal_fallback = diagonal_fallback;
  const double fid = metrics::frechet_distance(a, b, opts);
  std::cout << nlohmann::json{{"fid", fid}}.dump(2) << std::endl;
  return kExitOk;
}

int cmd_grpo_check(const std::string& groups_path, const std::string& config_path) {
  reward::RewardConfig cfg;
  if (!config_path.empty()) {
    const toml::Table table = toml::Table::parse_file(config_path);
    for (const auto& key : table.keys()) {
      if (key.rfind("rewards.", 0) != 0)
        throw ConfigError("unknown config key for grpo-check: " + key);
    }
    cfg.lambda_l2 = table.get_double("rewards.lambda_l2", cfg.lambda_l2);
    cfg.alpha_l2 = table.get_double("rewards.alpha_l2", cfg.alpha_l2);
    cfg.lambda1 = table.get_double("rewards.lambda1", cfg.lambda1);
    cfg.lambda2 = table.get_double("rewards.lambda2", cfg.lambda2);
    cfg.epsilon_clip = table.get_double("rewards.epsilon_clip", cfg.epsilon_clip);
    cfg.beta_kl = table.get_double("rewards.beta_kl", cfg.beta_kl);
    cfg.std_floor = table.get_double("rewards.std_floor", cfg.std_floor);
    cfg.clamp_l2_at_zero = table.get_bool("rewards.clamp_l2_at_zero", cfg.clamp_l2_at_zero);
    cfg.validate();
  }

  std::ifstream in = open_input(groups_path);
  nlohmann::json out_groups = nlohmann::json::array();
  double total = 0.0;
  std::size_t count = 0;
  for_each_jsonl(in, [&](std::size_t, const nlohmann::json& j) {
    const auto group = j.get<reward::RolloutGroup>();
    const reward::GrpoResult result = reward::grpo_objective(group, cfg);
    nlohmann::json rollouts = nlohmann::json::array();
    for (const auto& b : result.per_rollout) {
      rollouts.push_back({{"rho", b.rho},
                          {"advantage", b.advantage},
                          {"kl", b.kl},
                          {"surrogate", b.surrogate},
                          {"contribution", b.contribution}});
    }
    out_groups.push_back({{"query_id", group.query_id},
                          {"objective", result.objective},
                          {"rollouts", rollouts}});
    total += result.objective;
    ++count;
  });

  nlohmann::json out{{"groups", out_groups},
                     {"mean_objective", count == 0 ? 0.0 : total / static_cast<double>(count)}};
  std::cout << out.dump(2) << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dataset annotation, meta-action derivation, GRPO reward checks, and "
               "open-loop trajectory evaluation for driving planners"};
  app.require_subcommand(1);

  std::uint64_t seed = 0x5eedf00d;
  app.add_option("--seed", seed, "Seed for any randomized behavior (retry jitter)");

  // annotate
  auto* annotate = app.add_subcommand("annotate", "Run the feedback-guided CoT pipeline");
  std::string an_config, an_input, an_output;
  int an_concurrency = 0;
  bool an_skip_bad = false;
  annotate->add_option("--config", an_config, "Pipeline TOML config")->required();
  annotate->add_option("--input", an_input, "AnnotationSample JSONL")->required();
  annotate->add_option("--output", an_output, "AnnotationOutcome JSONL")->required();
  annotate->add_option("--concurrency", an_concurrency, "Worker count override");
  annotate->add_flag("--skip-bad", an_skip_bad, "Skip malformed input lines");

  // derive-actions
  auto* derive = app.add_subcommand("derive-actions", "Fit thresholds and label meta-actions");
  std::string da_input, da_output, da_th_out, da_th_in;
  kinematics::ThresholdConfig da_seed_cfg;
  derive->add_option("--input", da_input, "Dataset JSONL")->required();
  derive->add_option("--output", da_output, "Per-sample MetaAction JSONL")->required();
  derive->add_option("--thresholds-out", da_th_out, "Write fitted ThresholdSet JSON here");
  derive->add_option("--thresholds", da_th_in, "Reuse an existing ThresholdSet JSON");
  derive->add_option("--turn-heading-min", da_seed_cfg.turn_heading_min, "Seed turn threshold (rad)");
  derive->add_option("--lane-change-lateral-min", da_seed_cfg.lane_change_lateral_min,
                     "Lane-change lateral threshold (m)");
  derive->add_option("--stop-speed-eps", da_seed_cfg.stop_speed_eps, "Stop speed epsilon (m/s)");
  derive->add_option("--stationary-disp-eps", da_seed_cfg.stationary_disp_eps,
                     "Stationary displacement epsilon (m)");

  // eval-openloop
  auto* evalcmd = app.add_subcommand("eval-openloop", "Open-loop L2 and collision report");
  std::string ev_pred, ev_gt, ev_obstacles, ev_convention = "both", ev_output, ev_csv;
  metrics::EvalOptions ev_opts;
  evalcmd->add_option("--pred", ev_pred, "Predicted trajectory JSONL")->required();
  evalcmd->add_option("--gt", ev_gt, "Ground-truth trajectory JSONL")->required();
  evalcmd->add_option("--obstacles", ev_obstacles, "Obstacle boxes JSONL");
  evalcmd->add_option("--convention", ev_convention, "stp3 | uniad | both")
      ->check(CLI::IsMember({"stp3", "uniad", "both"}));
  evalcmd->add_option("--ego-length", ev_opts.ego.length, "Ego box length (m)");
  evalcmd->add_option("--ego-width", ev_opts.ego.width, "Ego box width (m)");
  evalcmd->add_flag("--stp3-averaged-collision", ev_opts.stp3_averaged_collision,
                    "Average per-step collision flags instead of cumulative-any");
  evalcmd->add_option("--output", ev_output, "Write the JSON report here");
  evalcmd->add_option("--csv", ev_csv, "Write a CSV report here");

  // fid
  auto* fid = app.add_subcommand("fid", "Frechet distance between two feature sets");
  std::string fid_a, fid_b;
  bool fid_diag = false;
  fid->add_option("--features-a", fid_a, "Feature matrix (.bin or .json)")->required();
  fid->add_option("--features-b", fid_b, "Feature matrix (.bin or .json)")->required();
  fid->add_flag("--allow-diagonal-fallback", fid_diag,
                "Fit diagonal covariances when samples are scarce");

  // grpo-check
  auto* grpo = app.add_subcommand("grpo-check", "Evaluate the GRPO objective over rollout dumps");
  std::string gc_groups, gc_config;
  grpo->add_option("--groups", gc_groups, "RolloutGroup JSONL dump")->required();
  grpo->add_option("--config", gc_config, "rewards TOML config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (annotate->parsed())
      return cmd_annotate(an_config, an_input, an_output, an_concurrency, an_skip_bad, seed);
    if (derive->parsed())
      return cmd_derive_actions(da_input, da_output, da_th_out, da_th_in, da_seed_cfg);
    if (evalcmd->parsed())
      return cmd_eval_openloop(ev_pred, ev_gt, ev_obstacles, ev_convention, ev_opts, ev_output,
                               ev_csv);
    if (fid->parsed()) return cmd_fid(fid_a, fid_b, fid_diag);
    if (grpo->parsed()) return cmd_grpo_check(gc_groups, gc_config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const llm::ProviderError& e) {
    std::cerr << "provider error: " << e.what() << '\n';
    return kExitProvider;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
