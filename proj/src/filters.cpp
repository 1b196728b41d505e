#include "drivecot/filters.hpp"

#include <cctype>
#include <sstream>

#include "drivecot/cot.hpp"

namespace drivecot::filters {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string first_nonempty_line(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (!t.empty()) return t;
  }
  return {};
}

bool istarts_with(const std::string& text, const std::string& prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  return true;
}

}  // namespace

const char* stage_name(FilterStage stage) {
  switch (stage) {
    case FilterStage::Format: return "Format";
    case FilterStage::Decision: return "Decision";
    case FilterStage::Logic: return "Logic";
  }
  return "Unknown";
}

void FilterVerdict::validate() const {
  if (passed && !messages.empty()) throw Error("passed verdict carries messages");
  if (!passed && messages.empty()) throw Error("failed verdict carries no message");
}

void to_json(nlohmann::json& j, const FilterVerdict& v) {
  j = nlohmann::json{
      {"stage", stage_name(v.stage)}, {"passed", v.passed}, {"messages", v.messages}};
}

void from_json(const nlohmann::json& j, FilterVerdict& v) {
  const std::string stage = j.at("stage").get<std::string>();
  if (stage == "Format") {
    v.stage = FilterStage::Format;
  } else if (stage == "Decision") {
    v.stage = FilterStage::Decision;
  } else if (stage == "Logic") {
    v.stage = FilterStage::Logic;
  } else {
    throw Error("unknown filter stage: " + stage);
  }
  v.passed = j.at("passed").get<bool>();
  v.messages = j.at("messages").get<std::vector<std::string>>();
  v.validate();
}

FilterVerdict format_filter(const CotText& cot) {
  FilterVerdict verdict;
  verdict.stage = FilterStage::Format;

  if (cot.scene_analysis.empty()) verdict.messages.push_back("Missing Scene Analysis");
  if (cot.latent_risk.empty()) verdict.messages.push_back("Missing Latent Risk Assessment");
  if (cot.behavior_reasoning.empty())
    verdict.messages.push_back("Missing Behavior Reasoning");

  const ActionDecision& decision = cot.action_decision;
  const bool direction_ok =
      !decision.direction_text.empty() && match_direction_phrase(decision.direction_text);
  const bool speed_ok = !decision.speed_text.empty() && match_speed_phrase(decision.speed_text);
  if (!decision.has_any_text()) {
    verdict.messages.push_back("Missing Action Decision part");
  } else if (!direction_ok && !speed_ok) {
    verdict.messages.push_back("Missing Action Decision part");
  } else if (!direction_ok) {
    verdict.messages.push_back("Missing Direction Decision in Action Decision part");
  } else if (!speed_ok) {
    verdict.messages.push_back("Missing Speed Decision in Action Decision part");
  }

  verdict.passed = verdict.messages.empty();
  return verdict;
}

FilterVerdict decision_filter(const std::optional<MetaAction>& predicted,
                              const MetaAction& gt) {
  FilterVerdict verdict;
  verdict.stage = FilterStage::Decision;

  const std::string pred_direction =
      predicted ? to_display(predicted->direction) : std::string("None");
  const std::string pred_speed = predicted ? to_display(predicted->speed) : std::string("None");

  if (!predicted || predicted->direction != gt.direction) {
    verdict.messages.push_back("Direction decision error(GT: " + to_display(gt.direction) +
                               "; Prediction: " + pred_direction + ")");
  }
  if (!predicted || predicted->speed != gt.speed) {
    verdict.messages.push_back("Speed decision error(GT: " + to_display(gt.speed) +
                               "; Prediction: " + pred_speed + ")");
  }

  verdict.passed = verdict.messages.empty();
  return verdict;
}

FilterVerdict logic_filter(const CotText& cot, llm::ChatProvider& checker,
                           const std::string& prompt_template,
                           const LogicCheckOptions& opts) {
  llm::ChatRequest request;
  request.user_text = llm::render_prompt(prompt_template, {{"cot", render_cot(cot)}});
  request.temperature = 0.0;  // verdicts should be as deterministic as the model allows

  const int attempts = opts.verdict_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const llm::ChatResponse response = checker.complete(request);
    const std::string head = first_nonempty_line(response.text);

    if (istarts_with(head, "pass")) {
      FilterVerdict verdict;
      verdict.stage = FilterStage::Logic;
      verdict.passed = true;
      return verdict;
    }
    if (istarts_with(head, "fail")) {
      // Summary: everything after the first FAIL marker, across lines.
      const std::string& full = response.text;
      std::size_t pos = full.find(head);
      pos = pos == std::string::npos ? 0 : pos + 4;  // skip "FAIL"
      while (pos < full.size() && (full[pos] == ':' || std::isspace(static_cast<unsigned char>(full[pos]))))
        ++pos;
      std::string summary = trim(full.substr(pos));
      if (summary.empty()) summary = "Logic check failed";
      FilterVerdict verdict;
      verdict.stage = FilterStage::Logic;
      verdict.passed = false;
      verdict.messages.push_back(summary);
      return verdict;
    }
    // Unparseable verdict: ask again.
  }
  throw llm::ProviderError(llm::ProviderErrorKind::Parse,
                           "logic checker never produced a PASS/FAIL verdict", attempts);
}

std::string build_feedback(const FeedbackContext& ctx) {
  bool any_failed = false;
  for (const auto& v : ctx.verdicts) any_failed = any_failed || !v.passed;
  if (!any_failed) throw NoFailures("no failed verdicts to build feedback from");

  std::ostringstream os;
  os << "The previous annotation failed quality checks. Use the feedback below to "
        "produce a corrected annotation.\n\n";
  os << "Previous CoT:\n" << ctx.raw_cot << "\n";

  for (const FilterStage stage :
       {FilterStage::Format, FilterStage::Decision, FilterStage::Logic}) {
    for (const auto& v : ctx.verdicts) {
      if (v.stage != stage || v.passed) continue;
      os << '\n' << stage_name(stage) << " Error:\n";
      for (std::size_t i = 0; i < v.messages.size(); ++i) {
        os << (i + 1) << ". " << v.messages[i] << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace drivecot::filters
