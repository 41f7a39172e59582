#include "pecore/json_io.hpp"

#include <cmath>
#include <limits>

namespace pecore {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field: ") + key);
  return *it;
}

}  // namespace

void to_json(json& j, const Span& s) { j = json::array({s.begin, s.end}); }

void from_json(const json& j, Span& s) {
  if (!j.is_array() || j.size() != 2) throw DataError("span must be [begin, end]");
  s.begin = j[0].get<std::size_t>();
  s.end = j[1].get<std::size_t>();
}

void to_json(json& j, const TokenSeq& t) {
  j = json{{"tokens", t.tokens}, {"offsets", t.offsets}, {"text", t.text}};
}

void from_json(const json& j, TokenSeq& t) {
  field(j, "tokens").get_to(t.tokens);
  field(j, "offsets").get_to(t.offsets);
  field(j, "text").get_to(t.text);
}

void to_json(json& j, const InputPair& p) {
  j = json{{"contextual", p.contextual},
           {"non_contextual", p.non_contextual},
           {"context_mask", p.context_mask},
           {"template_id", p.template_id}};
}

void from_json(const json& j, InputPair& p) {
  field(j, "contextual").get_to(p.contextual);
  field(j, "non_contextual").get_to(p.non_contextual);
  field(j, "context_mask").get_to(p.context_mask);
  field(j, "template_id").get_to(p.template_id);
}

void to_json(json& j, const SelectorConfig& s) {
  j = json{{"metric", s.metric}, {"k", s.k}};
}

void from_json(const json& j, SelectorConfig& s) {
  field(j, "metric").get_to(s.metric);
  field(j, "k").get_to(s.k);
}

void to_json(json& j, const MetricScoreRow& r) {
  j = json{{"step", r.step}, {"scores", r.scores}};
}

void from_json(const json& j, MetricScoreRow& r) {
  field(j, "step").get_to(r.step);
  field(j, "scores").get_to(r.scores);
}

void to_json(json& j, const CTIResult& r) {
  j = json{{"target", r.target},
           {"rows", r.rows},
           {"selected", r.selected},
           {"selector", r.selector}};
}

void from_json(const json& j, CTIResult& r) {
  field(j, "target").get_to(r.target);
  field(j, "rows").get_to(r.rows);
  field(j, "selected").get_to(r.selected);
  field(j, "selector").get_to(r.selector);
}

void to_json(json& j, const AttributionMap& m) {
  j = json{{"target_step", m.target_step}, {"scores", m.scores},
           {"ctx_scores", m.ctx_scores},   {"ctx_positions", m.ctx_positions},
           {"method", m.method},           {"tgt_fn", m.tgt_fn}};
}

void from_json(const json& j, AttributionMap& m) {
  field(j, "target_step").get_to(m.target_step);
  field(j, "scores").get_to(m.scores);
  field(j, "ctx_scores").get_to(m.ctx_scores);
  field(j, "ctx_positions").get_to(m.ctx_positions);
  field(j, "method").get_to(m.method);
  field(j, "tgt_fn").get_to(m.tgt_fn);
}

void to_json(json& j, const CueTargetPair& p) {
  j = json{{"cue_position", p.cue_position}, {"target_step", p.target_step},
           {"cue_score", p.cue_score},       {"cti_score", p.cti_score},
           {"cue_token", p.cue_token},       {"target_token", p.target_token},
           {"cue_text", p.cue_text},         {"target_text", p.target_text}};
}

void from_json(const json& j, CueTargetPair& p) {
  field(j, "cue_position").get_to(p.cue_position);
  field(j, "target_step").get_to(p.target_step);
  field(j, "cue_score").get_to(p.cue_score);
  field(j, "cti_score").get_to(p.cti_score);
  field(j, "cue_token").get_to(p.cue_token);
  field(j, "target_token").get_to(p.target_token);
  field(j, "cue_text").get_to(p.cue_text);
  field(j, "target_text").get_to(p.target_text);
}

void to_json(json& j, const HeadSelection& h) {
  j = json{{"layer", h.layer}, {"head", h.head}};
}

void from_json(const json& j, HeadSelection& h) {
  field(j, "layer").get_to(h.layer);
  field(j, "head").get_to(h.head);
}

void to_json(json& j, const DecodeConfig& d) {
  j = json{{"strategy", "greedy"},
           {"max_new_tokens", d.max_new_tokens},
           {"eos_token", d.eos_token}};
}

void from_json(const json& j, DecodeConfig& d) {
  if (field(j, "strategy").get<std::string>() != "greedy")
    throw DataError("unknown decode strategy");
  d.strategy = DecodeStrategy::Greedy;
  field(j, "max_new_tokens").get_to(d.max_new_tokens);
  field(j, "eos_token").get_to(d.eos_token);
}

void to_json(json& j, const PecoreConfig& c) {
  j = json{{"cti_metric", c.cti_metric},
           {"cti_k", c.cti_k},
           {"cti_metrics", c.cti_metrics},
           {"pcxmi_sign_flip", c.pcxmi_sign_flip},
           {"cci_method", c.cci_method},
           {"cci_tgt_fn", c.cci_tgt_fn},
           {"cci_k", c.cci_k},
           {"attn_head", c.attn_head ? json(*c.attn_head) : json(nullptr)},
           {"decode", c.decode},
           {"template_id", c.template_id},
           {"separator", c.separator},
           {"compute_y_star", c.compute_y_star}};
}

void from_json(const json& j, PecoreConfig& c) {
  field(j, "cti_metric").get_to(c.cti_metric);
  field(j, "cti_k").get_to(c.cti_k);
  field(j, "cti_metrics").get_to(c.cti_metrics);
  field(j, "pcxmi_sign_flip").get_to(c.pcxmi_sign_flip);
  field(j, "cci_method").get_to(c.cci_method);
  field(j, "cci_tgt_fn").get_to(c.cci_tgt_fn);
  field(j, "cci_k").get_to(c.cci_k);
  const json& head = field(j, "attn_head");
  c.attn_head = head.is_null() ? std::nullopt
                               : std::make_optional(head.get<HeadSelection>());
  field(j, "decode").get_to(c.decode);
  field(j, "template_id").get_to(c.template_id);
  field(j, "separator").get_to(c.separator);
  field(j, "compute_y_star").get_to(c.compute_y_star);
}

void to_json(json& j, const PecoreResult& r) {
  json maps = json::array();
  for (const auto& [t, m] : r.attribution_maps) maps.push_back(m);
  json ystar = json::array();
  for (const auto& [t, seq] : r.y_star)
    ystar.push_back(json{{"target_step", t}, {"tokens", seq}});
  j = json{{"schema_version", io::kSchemaVersion},
           {"config", r.config},
           {"input", r.input},
           {"y_hat", r.y_hat},
           {"y_tilde", r.y_tilde},
           {"cti", r.cti},
           {"attribution_maps", maps},
           {"pairs", r.pairs},
           {"y_star", ystar}};
}

void from_json(const json& j, PecoreResult& r) {
  if (!j.is_object() || !j.contains("schema_version") ||
      !j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != io::kSchemaVersion)
    throw DataError("missing or unsupported schema_version");
  field(j, "config").get_to(r.config);
  field(j, "input").get_to(r.input);
  field(j, "y_hat").get_to(r.y_hat);
  field(j, "y_tilde").get_to(r.y_tilde);
  field(j, "cti").get_to(r.cti);
  r.attribution_maps.clear();
  for (const json& m : field(j, "attribution_maps")) {
    AttributionMap am = m.get<AttributionMap>();
    r.attribution_maps[am.target_step] = std::move(am);
  }
  field(j, "pairs").get_to(r.pairs);
  r.y_star.clear();
  for (const json& e : field(j, "y_star"))
    r.y_star[field(e, "target_step").get<int>()] = field(e, "tokens").get<TokenSeq>();
}

namespace eval {

void to_json(json& j, const EvalRecord& r) {
  j = json{{"example_id", r.example_id},
           {"stage", r.stage},
           {"macro_f1", r.macro_f1},
           {"auprc", std::isnan(r.auprc) ? json(nullptr) : json(r.auprc)},
           {"n_gold_positive", r.n_gold_positive},
           {"warnings", r.warnings}};
}

void from_json(const json& j, EvalRecord& r) {
  field(j, "example_id").get_to(r.example_id);
  field(j, "stage").get_to(r.stage);
  field(j, "macro_f1").get_to(r.macro_f1);
  const json& a = field(j, "auprc");
  r.auprc = a.is_null() ? std::numeric_limits<double>::quiet_NaN() : a.get<double>();
  field(j, "n_gold_positive").get_to(r.n_gold_positive);
  field(j, "warnings").get_to(r.warnings);
}

void to_json(json& j, const Aggregate& a) {
  j = json{{"mean", a.mean}, {"median", a.median}, {"q1", a.q1}, {"q3", a.q3}, {"n", a.n}};
}

void from_json(const json& j, Aggregate& a) {
  field(j, "mean").get_to(a.mean);
  field(j, "median").get_to(a.median);
  field(j, "q1").get_to(a.q1);
  field(j, "q3").get_to(a.q3);
  field(j, "n").get_to(a.n);
}

void to_json(json& j, const EvalReport& r) {
  j = json{{"schema_version", io::kSchemaVersion},
           {"records", r.records},
           {"aggregates", r.aggregates},
           {"notes", r.notes}};
}

void from_json(const json& j, EvalReport& r) {
  if (!j.contains("schema_version") || j["schema_version"] != io::kSchemaVersion)
    throw DataError("missing or unsupported schema_version");
  field(j, "records").get_to(r.records);
  field(j, "aggregates").get_to(r.aggregates);
  field(j, "notes").get_to(r.notes);
}

void to_json(json& j, const AccuracyResult& a) {
  j = json{{"ok", a.ok},
           {"ok_cs", a.ok_cs},
           {"n", a.n},
           {"n_ok", a.n_ok},
           {"n_ok_cs", a.n_ok_cs}};
}

}  // namespace eval

namespace io {

std::string dumps(const PecoreResult& result, int indent) {
  return json(result).dump(indent);
}

PecoreResult load_result(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  return j.get<PecoreResult>();
}

std::string dumps(const eval::EvalReport& report, int indent) {
  return json(report).dump(indent);
}

eval::EvalReport load_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  return j.get<eval::EvalReport>();
}

}  // namespace io
}  // namespace pecore
