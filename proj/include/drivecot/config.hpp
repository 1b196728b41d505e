#pragma once

#include <string>

#include "drivecot/llm.hpp"
#include "drivecot/pipeline.hpp"
#include "drivecot/rewards.hpp"

namespace drivecot::config {

// Merged view over the TOML config consumed by the CLI. Unknown keys are
// rejected and every referenced file must exist at load time.
struct AppConfig {
  pipeline::PipelineConfig pipeline;
  llm::EndpointConfig annotator;
  llm::EndpointConfig checker;
  reward::RewardConfig rewards;
  std::string threshold_file;
  std::string log_level{"info"};

  static AppConfig load(const std::string& path);
};

}  // namespace drivecot::config
