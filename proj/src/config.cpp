#include "drivecot/config.hpp"

#include <algorithm>
#include <array>
#include <filesystem>

#include "drivecot/prompts.hpp"
#include "drivecot/toml_lite.hpp"

namespace drivecot::config {

namespace {

constexpr std::array kKnownKeys = {
    "pipeline.max_rounds",
    "pipeline.concurrency",
    "pipeline.short_circuit_format",
    "pipeline.annotator_temperature",
    "pipeline.annotator_template_file",
    "pipeline.logic_template_file",
    "pipeline.threshold_file",
    "annotator.base_url",
    "annotator.model_name",
    "annotator.api_key_env",
    "annotator.timeout_s",
    "annotator.max_retries",
    "annotator.backoff_base_s",
    "annotator.max_concurrent",
    "checker.base_url",
    "checker.model_name",
    "checker.api_key_env",
    "checker.timeout_s",
    "checker.max_retries",
    "checker.backoff_base_s",
    "checker.max_concurrent",
    "rewards.lambda_l2",
    "rewards.alpha_l2",
    "rewards.lambda1",
    "rewards.lambda2",
    "rewards.epsilon_clip",
    "rewards.beta_kl",
    "rewards.std_floor",
    "rewards.clamp_l2_at_zero",
    "logging.level",
};

void reject_unknown_keys(const toml::Table& table) {
  for (const auto& key : table.keys()) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
      throw ConfigError("unknown config key: " + key);
  }
}

void require_exists(const std::string& path, const std::string& key) {
  if (!std::filesystem::exists(path))
    throw ConfigError("file referenced by " + key + " does not exist: " + path);
}

llm::EndpointConfig load_endpoint(const toml::Table& t, const std::string& section) {
  llm::EndpointConfig cfg;
  cfg.base_url = t.get_string(section + ".base_url", "");
  cfg.model_name = t.get_string(section + ".model_name", "");
  cfg.api_key_env = t.get_string(section + ".api_key_env", "");
  cfg.timeout_s = t.get_double(section + ".timeout_s", cfg.timeout_s);
  cfg.max_retries = static_cast<int>(t.get_int(section + ".max_retries", cfg.max_retries));
  cfg.backoff_base_s = t.get_double(section + ".backoff_base_s", cfg.backoff_base_s);
  cfg.max_concurrent =
      static_cast<int>(t.get_int(section + ".max_concurrent", cfg.max_concurrent));
  return cfg;
}

}  // namespace

AppConfig AppConfig::load(const std::string& path) {
  const toml::Table table = toml::Table::parse_file(path);
  reject_unknown_keys(table);

  AppConfig cfg;
  cfg.pipeline.max_rounds =
      static_cast<int>(table.get_int("pipeline.max_rounds", cfg.pipeline.max_rounds));
  cfg.pipeline.concurrency =
      static_cast<int>(table.get_int("pipeline.concurrency", cfg.pipeline.concurrency));
  cfg.pipeline.short_circuit_format =
      table.get_bool("pipeline.short_circuit_format", cfg.pipeline.short_circuit_format);
  cfg.pipeline.annotator_temperature = table.get_double(
      "pipeline.annotator_temperature", cfg.pipeline.annotator_temperature);

  if (table.contains("pipeline.annotator_template_file")) {
    const std::string file = table.get_string("pipeline.annotator_template_file");
    require_exists(file, "pipeline.annotator_template_file");
    cfg.pipeline.annotator_template = prompts::load_template_file(file);
  }
  if (table.contains("pipeline.logic_template_file")) {
    const std::string file = table.get_string("pipeline.logic_template_file");
    require_exists(file, "pipeline.logic_template_file");
    cfg.pipeline.logic_template = prompts::load_template_file(file);
  }
  if (table.contains("pipeline.threshold_file")) {
    cfg.threshold_file = table.get_string("pipeline.threshold_file");
    require_exists(cfg.threshold_file, "pipeline.threshold_file");
  }

  cfg.annotator = load_endpoint(table, "annotator");
  cfg.checker = load_endpoint(table, "checker");

  cfg.rewards.lambda_l2 = table.get_double("rewards.lambda_l2", cfg.rewards.lambda_l2);
  cfg.rewards.alpha_l2 = table.get_double("rewards.alpha_l2", cfg.rewards.alpha_l2);
  cfg.rewards.lambda1 = table.get_double("rewards.lambda1", cfg.rewards.lambda1);
  cfg.rewards.lambda2 = table.get_double("rewards.lambda2", cfg.rewards.lambda2);
  cfg.rewards.epsilon_clip = table.get_double("rewards.epsilon_clip", cfg.rewards.epsilon_clip);
  cfg.rewards.beta_kl = table.get_double("rewards.beta_kl", cfg.rewards.beta_kl);
  cfg.rewards.std_floor = table.get_double("rewards.std_floor", cfg.rewards.std_floor);
  cfg.rewards.clamp_l2_at_zero =
      table.get_bool("rewards.clamp_l2_at_zero", cfg.rewards.clamp_l2_at_zero);
  cfg.rewards.validate();

  cfg.log_level = table.get_string("logging.level", cfg.log_level);
  cfg.pipeline.validate();
  return cfg;
}

}  // namespace drivecot::config
