#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drivecot/llm.hpp"
#include "drivecot/types.hpp"

namespace drivecot::filters {

enum class FilterStage { Format, Decision, Logic };

const char* stage_name(FilterStage stage);

struct FilterVerdict {
  FilterStage stage{FilterStage::Format};
  bool passed{false};
  std::vector<std::string> messages;  // empty iff passed

  void validate() const;
};

void to_json(nlohmann::json& j, const FilterVerdict& v);
void from_json(const nlohmann::json& j, FilterVerdict& v);

struct FeedbackContext {
  std::string raw_cot;
  std::vector<FilterVerdict> verdicts;
  int round_index{1};  // 1-based
};

// Rule-based structural check: every section present, and the action
// decision carries both a direction and a speed phrase from the vocabulary.
FilterVerdict format_filter(const CotText& cot);

// Compares the annotator's parsed decision to the GT meta-action; an absent
// prediction counts as a mismatch on both components.
FilterVerdict decision_filter(const std::optional<MetaAction>& predicted,
                              const MetaAction& gt);

struct LogicCheckOptions {
  // Re-asks the checker when its reply does not match the PASS/FAIL grammar.
  int verdict_retries{2};
};

// Delegates reasoning soundness to the external checker model. The template
// must carry a {cot} placeholder; the checker must answer `PASS` or
// `FAIL: summary` on its first line. A FAIL verdict is a normal result;
// ProviderError means transport or an unparseable reply after retries.
FilterVerdict logic_filter(const CotText& cot, llm::ChatProvider& checker,
                           const std::string& prompt_template,
                           const LogicCheckOptions& opts = {});

// Re-annotation context: the raw CoT followed by one header per failed stage
// (Format -> Decision -> Logic) with its numbered messages. Byte-stable.
// Throws NoFailures when every verdict passed.
std::string build_feedback(const FeedbackContext& ctx);

}  // namespace drivecot::filters
