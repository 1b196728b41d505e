#include "drivecot/pipeline.hpp"

#include <condition_variable>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "drivecot/cot.hpp"
#include "drivecot/jsonl.hpp"
#include "drivecot/prompts.hpp"

namespace drivecot::pipeline {

namespace {

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i != 0) out += ", ";
    out += parts[i];
  }
  return out;
}

std::string command_display(DrivingCommand command) {
  switch (command) {
    case DrivingCommand::TurnLeft: return "Turn Left";
    case DrivingCommand::TurnRight: return "Turn Right";
    case DrivingCommand::GoStraight: return "Go Straight";
  }
  return "Go Straight";
}

std::string render_base_prompt(const AnnotationSample& sample, const std::string& tmpl) {
  return llm::render_prompt(
      tmpl, {{"cameras", join(sample.image_refs)},
             {"history", join(sample.history_refs)},
             {"command", command_display(sample.command)},
             {"velocity", format_number(sample.ego.velocity)},
             {"acceleration", format_number(sample.ego.acceleration)}});
}

}  // namespace

const char* to_string(OutcomeStatus status) {
  switch (status) {
    case OutcomeStatus::Accepted: return "Accepted";
    case OutcomeStatus::Rejected: return "Rejected";
    case OutcomeStatus::Errored: return "Errored";
  }
  return "Rejected";
}

void to_json(nlohmann::json& j, const AnnotationOutcome& o) {
  j = nlohmann::json{{"sample_id", o.sample_id},
                     {"status", to_string(o.status)},
                     {"rounds_used", o.rounds_used},
                     {"verdict_history", o.verdict_history}};
  j["final_cot"] = o.final_cot ? nlohmann::json(*o.final_cot) : nlohmann::json(nullptr);
  j["sequence"] = o.sequence ? nlohmann::json(*o.sequence) : nlohmann::json(nullptr);
  if (!o.error.empty()) j["error"] = o.error;
}

void from_json(const nlohmann::json& j, AnnotationOutcome& o) {
  o.sample_id = j.at("sample_id").get<std::string>();
  const std::string status = j.at("status").get<std::string>();
  if (status == "Accepted") {
    o.status = OutcomeStatus::Accepted;
  } else if (status == "Rejected") {
    o.status = OutcomeStatus::Rejected;
  } else if (status == "Errored") {
    o.status = OutcomeStatus::Errored;
  } else {
    throw Error("unknown outcome status: " + status);
  }
  o.rounds_used = j.at("rounds_used").get<int>();
  o.verdict_history =
      j.at("verdict_history").get<std::vector<std::vector<filters::FilterVerdict>>>();
  if (j.contains("final_cot") && !j.at("final_cot").is_null())
    o.final_cot = j.at("final_cot").get<CotText>();
  if (j.contains("sequence") && !j.at("sequence").is_null())
    o.sequence = j.at("sequence").get<TrainingSequence>();
  o.error = j.value("error", std::string{});
}

void PipelineConfig::validate() const {
  if (max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
  if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
  if (!(annotator_temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
}

AnnotationOutcome annotate_sample(const AnnotationSample& sample,
                                  llm::ChatProvider& annotator,
                                  llm::ChatProvider& checker,
                                  const kinematics::ThresholdSet& thresholds,
                                  const PipelineConfig& cfg) {
  cfg.validate();
  sample.validate();
  if (!sample.gt_trajectory.is_planning_horizon())
    throw BadTrajectory("gt_trajectory must carry exactly 6 points for annotation");

  const MetaAction gt_action = kinematics::classify_action(sample.gt_trajectory, thresholds);
  const std::string& annotator_tmpl =
      cfg.annotator_template.empty() ? prompts::annotator_template() : cfg.annotator_template;
  const std::string& logic_tmpl =
      cfg.logic_template.empty() ? prompts::logic_check_template() : cfg.logic_template;
  const std::string base_prompt = render_base_prompt(sample, annotator_tmpl);

  AnnotationOutcome outcome;
  outcome.sample_id = sample.sample_id;

  std::optional<filters::FeedbackContext> previous_failure;
  for (int round = 1; round <= cfg.max_rounds; ++round) {
    outcome.rounds_used = round;

    llm::ChatRequest request;
    request.system_text = prompts::annotator_system();
    request.user_text = previous_failure
                            ? filters::build_feedback(*previous_failure) + "\n\n" + base_prompt
                            : base_prompt;
    request.image_refs = sample.image_refs;
    request.image_refs.insert(request.image_refs.end(), sample.history_refs.begin(),
                              sample.history_refs.end());
    request.temperature = cfg.annotator_temperature;

    std::string raw_cot;
    try {
      raw_cot = annotator.complete(request).text;
    } catch (const llm::ProviderError& e) {
      outcome.status = OutcomeStatus::Errored;
      outcome.error = e.what();
      return outcome;
    }

    const CotText cot = parse_cot(raw_cot);
    outcome.final_cot = cot;

    std::vector<filters::FilterVerdict> verdicts;
    verdicts.push_back(filters::format_filter(cot));
    if (verdicts.front().passed || !cfg.short_circuit_format) {
      verdicts.push_back(filters::decision_filter(cot.action_decision.parsed, gt_action));
      try {
        verdicts.push_back(filters::logic_filter(cot, checker, logic_tmpl));
      } catch (const llm::ProviderError& e) {
        outcome.verdict_history.push_back(std::move(verdicts));
        outcome.status = OutcomeStatus::Errored;
        outcome.error = e.what();
        return outcome;
      }
    }

    bool all_passed = true;
    for (const auto& v : verdicts) all_passed = all_passed && v.passed;
    outcome.verdict_history.push_back(verdicts);

    if (all_passed) {
      TrainingSequence sequence;
      sequence.cot = cot;
      sequence.dream_tokens = sample.future_image_tokens;
      sequence.trajectory = sample.gt_trajectory;
      sequence.validate();
      outcome.sequence = std::move(sequence);
      outcome.status = OutcomeStatus::Accepted;
      return outcome;
    }

    previous_failure = filters::FeedbackContext{raw_cot, std::move(verdicts), round};
  }

  outcome.status = OutcomeStatus::Rejected;
  return outcome;
}

void to_json(nlohmann::json& j, const PipelineStats& s) {
  nlohmann::json histogram = nlohmann::json::object();
  for (const auto& [round, count] : s.accepted_rounds_histogram) {
    histogram[std::to_string(round)] = count;
  }
  j = nlohmann::json{{"total", s.total},
                     {"accepted", s.accepted},
                     {"rejected", s.rejected},
                     {"errored", s.errored},
                     {"skipped_bad", s.skipped_bad},
                     {"filter_failures",
                      {{"format", s.format_failures},
                       {"decision", s.decision_failures},
                       {"logic", s.logic_failures}}},
                     {"accepted_rounds_histogram", histogram}};
}

namespace {

void account_outcome(PipelineStats& stats, const AnnotationOutcome& outcome) {
  ++stats.total;
  switch (outcome.status) {
    case OutcomeStatus::Accepted:
      ++stats.accepted;
      ++stats.accepted_rounds_histogram[outcome.rounds_used];
      break;
    case OutcomeStatus::Rejected: ++stats.rejected; break;
    case OutcomeStatus::Errored: ++stats.errored; break;
  }
  for (const auto& round : outcome.verdict_history) {
    for (const auto& v : round) {
      if (v.passed) continue;
      switch (v.stage) {
        case filters::FilterStage::Format: ++stats.format_failures; break;
        case filters::FilterStage::Decision: ++stats.decision_failures; break;
        case filters::FilterStage::Logic: ++stats.logic_failures; break;
      }
    }
  }
}

}  // namespace

PipelineStats run_pipeline(std::istream& in, std::ostream& out,
                           llm::ChatProvider& annotator, llm::ChatProvider& checker,
                           const kinematics::ThresholdSet& thresholds,
                           const PipelineConfig& cfg, bool skip_bad) {
  cfg.validate();
  thresholds.validate();

  const std::size_t reorder_bound = static_cast<std::size_t>(cfg.concurrency) * 4;

  std::mutex mutex;
  std::condition_variable emit_cv;
  std::map<std::size_t, AnnotationOutcome> pending;
  std::size_t next_index = 0;   // next sample index handed to a worker
  std::size_t next_emit = 0;    // next sample index to write
  bool input_done = false;
  std::size_t input_line = 0;
  PipelineStats stats;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      std::size_t index = 0;
      AnnotationSample sample;
      {
        std::unique_lock<std::mutex> lock(mutex);
        // Admission: keep at most reorder_bound outcomes in the resequencer.
        emit_cv.wait(lock, [&] {
          return failure || input_done || next_index - next_emit < reorder_bound;
        });
        if (failure || input_done) return;

        bool got_sample = false;
        while (!got_sample) {
          std::string line;
          if (!std::getline(in, line)) {
            input_done = true;
            emit_cv.notify_all();
            return;
          }
          ++input_line;
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          try {
            const nlohmann::json j = nlohmann::json::parse(line);
            sample = j.get<AnnotationSample>();
            sample.validate();
            if (!sample.gt_trajectory.is_planning_horizon())
              throw BadTrajectory("gt_trajectory must carry exactly 6 points");
            got_sample = true;
          } catch (const std::exception& e) {
            if (skip_bad) {
              ++stats.skipped_bad;
              continue;
            }
            failure = std::make_exception_ptr(
                DataError("input line " + std::to_string(input_line) + ": " + e.what()));
            emit_cv.notify_all();
            return;
          }
        }
        index = next_index++;
      }

      AnnotationOutcome outcome;
      try {
        outcome = annotate_sample(sample, annotator, checker, thresholds, cfg);
      } catch (...) {
        std::unique_lock<std::mutex> lock(mutex);
        if (!failure) failure = std::current_exception();
        emit_cv.notify_all();
        return;
      }

      {
        std::unique_lock<std::mutex> lock(mutex);
        pending.emplace(index, std::move(outcome));
        while (!pending.empty() && pending.begin()->first == next_emit) {
          const AnnotationOutcome& ready = pending.begin()->second;
          account_outcome(stats, ready);
          write_jsonl_line(out, nlohmann::json(ready));
          pending.erase(pending.begin());
          ++next_emit;
        }
        emit_cv.notify_all();
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(cfg.concurrency));
  for (int i = 0; i < cfg.concurrency; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  if (failure) std::rethrow_exception(failure);
  out.flush();
  return stats;
}

}  // namespace drivecot::pipeline
