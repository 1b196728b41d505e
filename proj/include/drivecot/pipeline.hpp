#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "drivecot/filters.hpp"
#include "drivecot/kinematics.hpp"
#include "drivecot/llm.hpp"
#include "drivecot/types.hpp"

namespace drivecot::pipeline {

enum class OutcomeStatus { Accepted, Rejected, Errored };

const char* to_string(OutcomeStatus status);

struct AnnotationOutcome {
  std::string sample_id;
  OutcomeStatus status{OutcomeStatus::Rejected};
  int rounds_used{0};
  std::optional<CotText> final_cot;
  std::vector<std::vector<filters::FilterVerdict>> verdict_history;  // one list per round
  std::optional<TrainingSequence> sequence;  // Accepted only
  std::string error;                         // Errored only
};

void to_json(nlohmann::json& j, const AnnotationOutcome& o);
void from_json(const nlohmann::json& j, AnnotationOutcome& o);

struct PipelineConfig {
  int max_rounds{3};
  int concurrency{1};
  bool short_circuit_format{true};  // skip Decision/Logic when Format fails
  std::string annotator_template;   // empty = compiled-in default
  std::string logic_template;       // empty = compiled-in default
  double annotator_temperature{0.7};

  void validate() const;
};

// Runs the round loop for one sample: prompt the annotator (round >= 2
// prepends the previous round's feedback), parse, filter against the GT
// meta-action classified from the sample's trajectory, accept or iterate.
// Provider failures mark the sample Errored rather than throwing.
AnnotationOutcome annotate_sample(const AnnotationSample& sample,
                                  llm::ChatProvider& annotator,
                                  llm::ChatProvider& checker,
                                  const kinematics::ThresholdSet& thresholds,
                                  const PipelineConfig& cfg);

struct PipelineStats {
  std::size_t total{0};
  std::size_t accepted{0};
  std::size_t rejected{0};
  std::size_t errored{0};
  std::size_t skipped_bad{0};
  std::size_t format_failures{0};
  std::size_t decision_failures{0};
  std::size_t logic_failures{0};
  std::map<int, std::size_t> accepted_rounds_histogram;
};

void to_json(nlohmann::json& j, const PipelineStats& s);

// Streams AnnotationSample JSONL in, writes one AnnotationOutcome per line in
// input order. Samples are processed by a pool of cfg.concurrency workers and
// resequenced on emit with a buffer bounded at concurrency * 4 outcomes.
// Malformed input lines abort unless skip_bad is set (then they are counted).
PipelineStats run_pipeline(std::istream& in, std::ostream& out,
                           llm::ChatProvider& annotator, llm::ChatProvider& checker,
                           const kinematics::ThresholdSet& thresholds,
                           const PipelineConfig& cfg, bool skip_bad = false);

}  // namespace drivecot::pipeline
