#include <doctest.h>

#include <fstream>
#include <sstream>

#include "drivecot/cot.hpp"
#include "drivecot/jsonl.hpp"
#include "drivecot/pipeline.hpp"
#include "support/generators.hpp"
#include "support/scripted_provider.hpp"

using namespace drivecot;
using namespace drivecot::pipeline;
using drivecot::testing::ScriptedProvider;

namespace {

AnnotationSample make_sample(const std::string& id) {
  AnnotationSample sample;
  sample.sample_id = id;
  for (int i = 0; i < 6; ++i) sample.image_refs.push_back(id + "-cam" + std::to_string(i));
  sample.history_refs = {id + "-h0", id + "-h1"};
  sample.command = DrivingCommand::GoStraight;
  sample.ego = EgoStatus{5.0, 0.0};
  sample.gt_trajectory = testing::straight_trajectory(5.0);  // (MCL, MCS) under defaults
  sample.future_image_tokens = {3, 1, 4, 1, 5};
  return sample;
}

std::string cot_text(const std::string& direction, const std::string& speed) {
  return "Scene Analysis:\nstraight clear road\n"
         "Latent Risk Assessment:\nnothing unusual nearby\n"
         "Behavior Reasoning:\nkeep the current pace\n"
         "Action Decision:\nDirection: " +
         direction + "\nSpeed: " + speed + "\n";
}

std::string good_text() { return cot_text("Maintain Current Lane", "Maintain Current Speed"); }
std::string wrong_decision_text() { return cot_text("Turn Right", "Emergency Brake"); }

// id is recoverable from the request's first image ref ("<id>-cam0").
std::string sample_id_of(const llm::ChatRequest& req) {
  const std::string& first = req.image_refs.front();
  return first.substr(0, first.find("-cam"));
}

llm::ChatResponse text_response(const std::string& text) {
  llm::ChatResponse response;
  response.text = text;
  return response;
}

kinematics::ThresholdSet default_thresholds() { return kinematics::ThresholdSet{}; }

}  // namespace

TEST_CASE("a sample passing every filter in round 1 is accepted") {
  auto annotator = ScriptedProvider::fixed(good_text());
  auto checker = ScriptedProvider::fixed("PASS");
  const AnnotationSample sample = make_sample("s0");

  const AnnotationOutcome outcome =
      annotate_sample(sample, annotator, checker, default_thresholds(), PipelineConfig{});
  CHECK(outcome.status == OutcomeStatus::Accepted);
  CHECK(outcome.rounds_used == 1);
  REQUIRE(outcome.final_cot.has_value());
  CHECK(outcome.final_cot->is_complete());
  REQUIRE(outcome.verdict_history.size() == 1);
  for (const auto& v : outcome.verdict_history.front()) CHECK(v.passed);

  // the accepted sequence survives assemble -> parse
  REQUIRE(outcome.sequence.has_value());
  const std::string serialized = assemble_sequence(
      outcome.sequence->cot, outcome.sequence->dream_tokens, outcome.sequence->trajectory);
  CHECK(parse_sequence(serialized).to_training_sequence() == *outcome.sequence);
  CHECK(outcome.sequence->dream_tokens == sample.future_image_tokens);
}

TEST_CASE("decision feedback flows into the round-2 prompt and fixes the sample") {
  ScriptedProvider annotator([](const llm::ChatRequest& req, std::size_t) {
    const bool has_feedback =
        req.user_text.find("Direction decision error(GT:") != std::string::npos;
    return text_response(has_feedback ? good_text() : wrong_decision_text());
  });
  auto checker = ScriptedProvider::fixed("PASS");

  const AnnotationOutcome outcome = annotate_sample(make_sample("s1"), annotator, checker,
                                                    default_thresholds(), PipelineConfig{});
  CHECK(outcome.status == OutcomeStatus::Accepted);
  CHECK(outcome.rounds_used == 2);
  REQUIRE(outcome.verdict_history.size() == 2);

  const auto requests = annotator.requests();
  REQUIRE(requests.size() == 2);
  const std::string& round2 = requests[1].user_text;
  CHECK(round2.find("Direction decision error(GT: Maintain Current Lane; "
                    "Prediction: Turn Right)") != std::string::npos);
  CHECK(round2.find("Speed decision error(GT: Maintain Current Speed; "
                    "Prediction: Emergency Brake)") != std::string::npos);
  // the previous raw CoT rides along as context
  CHECK(round2.find("Turn Right") != std::string::npos);
  CHECK(round2.find("straight clear road") != std::string::npos);
}

TEST_CASE("a permanently malformed annotator is rejected after exactly max_rounds") {
  auto annotator = ScriptedProvider::fixed("free-form rambling with no sections");
  auto checker = ScriptedProvider::fixed("PASS");

  const AnnotationOutcome outcome = annotate_sample(make_sample("s2"), annotator, checker,
                                                    default_thresholds(), PipelineConfig{});
  CHECK(outcome.status == OutcomeStatus::Rejected);
  CHECK(outcome.rounds_used == 3);
  REQUIRE(outcome.verdict_history.size() == 3);
  // default short-circuit: only the format verdict ran each round
  for (const auto& round : outcome.verdict_history) {
    REQUIRE(round.size() == 1);
    CHECK(round.front().stage == filters::FilterStage::Format);
    CHECK_FALSE(round.front().passed);
  }
  CHECK(checker.requests().empty());
  CHECK_FALSE(outcome.sequence.has_value());
}

TEST_CASE("disabling the short-circuit runs all three filters on format failures") {
  auto annotator = ScriptedProvider::fixed("still no sections");
  auto checker = ScriptedProvider::fixed("PASS");
  PipelineConfig cfg;
  cfg.short_circuit_format = false;
  cfg.max_rounds = 1;

  const AnnotationOutcome outcome =
      annotate_sample(make_sample("s3"), annotator, checker, default_thresholds(), cfg);
  CHECK(outcome.status == OutcomeStatus::Rejected);
  REQUIRE(outcome.verdict_history.size() == 1);
  CHECK(outcome.verdict_history.front().size() == 3);
  CHECK(checker.requests().size() == 1);
}

TEST_CASE("logic failures feed back like any other stage") {
  // the annotator repeats the same CoT; only the checker's verdict changes
  auto annotator = ScriptedProvider::fixed(good_text());
  ScriptedProvider checker([](const llm::ChatRequest&, std::size_t index) {
    return text_response(index == 0 ? "FAIL: reasoning is discontinuous" : "PASS");
  });

  const AnnotationOutcome outcome = annotate_sample(make_sample("s4"), annotator, checker,
                                                    default_thresholds(), PipelineConfig{});
  CHECK(outcome.status == OutcomeStatus::Accepted);
  CHECK(outcome.rounds_used == 2);
  const auto requests = annotator.requests();
  REQUIRE(requests.size() == 2);
  CHECK(requests[1].user_text.find("reasoning is discontinuous") != std::string::npos);
}

TEST_CASE("provider transport failures mark the sample errored") {
  ScriptedProvider annotator([](const llm::ChatRequest&, std::size_t) -> llm::ChatResponse {
    throw llm::ProviderError(llm::ProviderErrorKind::Exhausted, "all retries failed", 4);
  });
  auto checker = ScriptedProvider::fixed("PASS");

  const AnnotationOutcome outcome = annotate_sample(make_sample("s5"), annotator, checker,
                                                    default_thresholds(), PipelineConfig{});
  CHECK(outcome.status == OutcomeStatus::Errored);
  CHECK_FALSE(outcome.error.empty());
}

TEST_CASE("run_pipeline on empty input yields empty output and zero stats") {
  std::istringstream in("");
  std::ostringstream out;
  auto annotator = ScriptedProvider::fixed(good_text());
  auto checker = ScriptedProvider::fixed("PASS");
  const PipelineStats stats = run_pipeline(in, out, annotator, checker, default_thresholds(),
                                           PipelineConfig{});
  CHECK(stats.total == 0);
  CHECK(stats.accepted == 0);
  CHECK(out.str().empty());
}

namespace {

// 7 samples pass round 1, 2 need the decision feedback, 1 never recovers.
ScriptedProvider schedule_annotator() {
  return ScriptedProvider([](const llm::ChatRequest& req, std::size_t) {
    const std::string id = sample_id_of(req);
    const bool has_feedback = req.user_text.find("Decision Error:") != std::string::npos;
    if (id == "s9") return text_response("hopeless output");
    if (id == "s7" || id == "s8")
      return text_response(has_feedback ? good_text() : wrong_decision_text());
    return text_response(good_text());
  });
}

std::string input_for(int count) {
  std::ostringstream in;
  for (int i = 0; i < count; ++i) {
    write_jsonl_line(in, nlohmann::json(make_sample("s" + std::to_string(i))));
  }
  return in.str();
}

}  // namespace

TEST_CASE("run_pipeline reports the acceptance histogram of the scripted schedule") {
  std::istringstream in(input_for(10));
  std::ostringstream out;
  auto annotator = schedule_annotator();
  auto checker = ScriptedProvider::fixed("PASS");

  const PipelineStats stats = run_pipeline(in, out, annotator, checker, default_thresholds(),
                                           PipelineConfig{});
  CHECK(stats.total == 10);
  CHECK(stats.accepted == 9);
  CHECK(stats.rejected == 1);
  CHECK(stats.errored == 0);
  REQUIRE(stats.accepted_rounds_histogram.count(1));
  REQUIRE(stats.accepted_rounds_histogram.count(2));
  CHECK(stats.accepted_rounds_histogram.at(1) == 7);
  CHECK(stats.accepted_rounds_histogram.at(2) == 2);
  CHECK(stats.accepted_rounds_histogram.count(3) == 0);
  CHECK(stats.decision_failures == 2);  // s7 and s8, round 1
  CHECK(stats.format_failures == 3);    // s9, three rounds

  // output preserves input order
  std::istringstream lines(out.str());
  std::string line;
  int index = 0;
  while (std::getline(lines, line)) {
    const auto outcome = nlohmann::json::parse(line).get<AnnotationOutcome>();
    CHECK(outcome.sample_id == "s" + std::to_string(index));
    ++index;
  }
  CHECK(index == 10);
}

TEST_CASE("concurrency does not change the output bytes") {
  auto run_with = [](int concurrency) {
    std::istringstream in(input_for(10));
    std::ostringstream out;
    auto annotator = schedule_annotator();
    auto checker = ScriptedProvider::fixed("PASS");
    PipelineConfig cfg;
    cfg.concurrency = concurrency;
    run_pipeline(in, out, annotator, checker, default_thresholds(), cfg);
    return out.str();
  };
  const std::string serial = run_with(1);
  const std::string parallel = run_with(8);
  CHECK(serial == parallel);
  CHECK_FALSE(serial.empty());
}

TEST_CASE("malformed input lines fail fast unless skip_bad is set") {
  const std::string good_line = nlohmann::json(make_sample("ok")).dump();
  auto annotator = ScriptedProvider::fixed(good_text());
  auto checker = ScriptedProvider::fixed("PASS");

  {
    std::istringstream in(good_line + "\n{broken json\n");
    std::ostringstream out;
    CHECK_THROWS_AS(run_pipeline(in, out, annotator, checker, default_thresholds(),
                                 PipelineConfig{}),
                    DataError);
  }
  {
    std::istringstream in(good_line + "\n{broken json\n" + good_line + "\n");
    std::ostringstream out;
    const PipelineStats stats = run_pipeline(in, out, annotator, checker,
                                             default_thresholds(), PipelineConfig{}, true);
    CHECK(stats.total == 2);
    CHECK(stats.skipped_bad == 1);
  }
  {
    // a five-point gt trajectory is rejected at the reader stage
    AnnotationSample bad = make_sample("short");
    bad.gt_trajectory.points.pop_back();
    std::istringstream in(nlohmann::json(bad).dump() + "\n");
    std::ostringstream out;
    CHECK_THROWS_AS(run_pipeline(in, out, annotator, checker, default_thresholds(),
                                 PipelineConfig{}),
                    DataError);
  }
}

TEST_CASE("the outcome golden example parses and re-serializes byte-identically") {
  std::ifstream in(std::string(DRIVECOT_SOURCE_DIR) +
                   "/docs/examples/annotation_outcome.jsonl");
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));
  const auto outcome = nlohmann::json::parse(line).get<AnnotationOutcome>();
  CHECK(outcome.status == OutcomeStatus::Accepted);
  CHECK(nlohmann::json(outcome).dump() == line);
}

TEST_CASE("outcome JSON round-trips through the reader") {
  auto annotator = schedule_annotator();
  auto checker = ScriptedProvider::fixed("PASS");
  const AnnotationOutcome outcome = annotate_sample(make_sample("s7"), annotator, checker,
                                                    default_thresholds(), PipelineConfig{});
  const std::string dumped = nlohmann::json(outcome).dump();
  const auto back = nlohmann::json::parse(dumped).get<AnnotationOutcome>();
  CHECK(back.sample_id == outcome.sample_id);
  CHECK(back.status == outcome.status);
  CHECK(back.rounds_used == outcome.rounds_used);
  CHECK(back.verdict_history.size() == outcome.verdict_history.size());
  CHECK(nlohmann::json(back).dump() == dumped);
}
