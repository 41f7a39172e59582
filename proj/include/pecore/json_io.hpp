#pragma once

#include <json.hpp>

#include "pecore/evalkit.hpp"
#include "pecore/pipeline.hpp"

namespace pecore {

// ADL hooks so nlohmann::json converts the result types directly.
void to_json(nlohmann::json& j, const Span& s);
void from_json(const nlohmann::json& j, Span& s);
void to_json(nlohmann::json& j, const TokenSeq& t);
void from_json(const nlohmann::json& j, TokenSeq& t);
void to_json(nlohmann::json& j, const InputPair& p);
void from_json(const nlohmann::json& j, InputPair& p);
void to_json(nlohmann::json& j, const SelectorConfig& s);
void from_json(const nlohmann::json& j, SelectorConfig& s);
void to_json(nlohmann::json& j, const MetricScoreRow& r);
void from_json(const nlohmann::json& j, MetricScoreRow& r);
void to_json(nlohmann::json& j, const CTIResult& r);
void from_json(const nlohmann::json& j, CTIResult& r);
void to_json(nlohmann::json& j, const AttributionMap& m);
void from_json(const nlohmann::json& j, AttributionMap& m);
void to_json(nlohmann::json& j, const CueTargetPair& p);
void from_json(const nlohmann::json& j, CueTargetPair& p);
void to_json(nlohmann::json& j, const HeadSelection& h);
void from_json(const nlohmann::json& j, HeadSelection& h);
void to_json(nlohmann::json& j, const DecodeConfig& d);
void from_json(const nlohmann::json& j, DecodeConfig& d);
void to_json(nlohmann::json& j, const PecoreConfig& c);
void from_json(const nlohmann::json& j, PecoreConfig& c);
void to_json(nlohmann::json& j, const PecoreResult& r);
void from_json(const nlohmann::json& j, PecoreResult& r);

namespace eval {
void to_json(nlohmann::json& j, const EvalRecord& r);
void from_json(const nlohmann::json& j, EvalRecord& r);
void to_json(nlohmann::json& j, const Aggregate& a);
void from_json(const nlohmann::json& j, Aggregate& a);
void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);
void to_json(nlohmann::json& j, const AccuracyResult& a);
}  // namespace eval

namespace io {

constexpr int kSchemaVersion = 1;

// Serialized results carry {"schema_version": 1, ...}; loading anything
// else raises DataError. Round trips are lossless: dumps(loads(dumps(x)))
// == dumps(x).
std::string dumps(const PecoreResult& result, int indent = -1);
PecoreResult load_result(const std::string& text);
std::string dumps(const eval::EvalReport& report, int indent = -1);
eval::EvalReport load_report(const std::string& text);

}  // namespace io
}  // namespace pecore
