#pragma once

#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "drivecot/types.hpp"

namespace drivecot {

// JSON bindings for the core record types. One JSON object per line, UTF-8,
// snake_case keys; nlohmann keeps object keys sorted, so a serialize ->
// parse -> serialize cycle is byte-stable.

void to_json(nlohmann::json& j, const Point2d& p);
void from_json(const nlohmann::json& j, Point2d& p);

void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);

void to_json(nlohmann::json& j, const EgoStatus& e);
void from_json(const nlohmann::json& j, EgoStatus& e);

void to_json(nlohmann::json& j, const MetaAction& a);
void from_json(const nlohmann::json& j, MetaAction& a);

void to_json(nlohmann::json& j, const ActionDecision& d);
void from_json(const nlohmann::json& j, ActionDecision& d);

void to_json(nlohmann::json& j, const CotText& c);
void from_json(const nlohmann::json& j, CotText& c);

void to_json(nlohmann::json& j, const TrainingSequence& s);
void from_json(const nlohmann::json& j, TrainingSequence& s);

void to_json(nlohmann::json& j, const AnnotationSample& s);
void from_json(const nlohmann::json& j, AnnotationSample& s);

// Calls fn(line_number, parsed_json) for every non-empty line.
// Throws DataError naming the line on parse failure unless skip_bad is set,
// in which case bad lines are counted and skipped.
std::size_t for_each_jsonl(std::istream& in,
                           const std::function<void(std::size_t, const nlohmann::json&)>& fn,
                           bool skip_bad = false);

void write_jsonl_line(std::ostream& out, const nlohmann::json& j);

template <typename T>
std::vector<T> read_jsonl_records(std::istream& in) {
  std::vector<T> records;
  for_each_jsonl(in, [&records](std::size_t, const nlohmann::json& j) {
    records.push_back(j.get<T>());
  });
  return records;
}

template <typename T>
void write_jsonl_records(std::ostream& out, const std::vector<T>& records) {
  for (const auto& r : records) write_jsonl_line(out, nlohmann::json(r));
}

}  // namespace drivecot
