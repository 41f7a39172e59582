#include "pecore/bench.hpp"

namespace pecore::bench {

namespace {

std::string example_id(const data::AnnotatedExample& ex, std::size_t i) {
  auto it = ex.meta.find("id");
  return it != ex.meta.end() ? it->second : "ex" + std::to_string(i);
}

CtiOptions cti_options(const PecoreConfig& c) {
  CtiOptions o;
  o.metrics = c.cti_metrics;
  o.selector = {c.cti_metric, c.cti_k};
  o.pcxmi_sign_flip = c.pcxmi_sign_flip;
  return o;
}

CciOptions cci_options(const PecoreConfig& c) {
  CciOptions o;
  o.method = c.cci_method;
  o.tgt_fn = c.cci_tgt_fn;
  o.k = c.cci_k;
  o.head = c.attn_head;
  return o;
}

// Gold CTI mask on the generated tokens, or nullopt when the example has no
// usable gold. Appends a warning when some spans could not be aligned.
std::optional<std::vector<bool>> gold_cti_mask(const data::AnnotatedExample& ex,
                                               const TokenSeq& y_hat,
                                               std::vector<std::string>* warnings) {
  if (!ex.current_target || ex.gold_target_spans.empty()) return std::nullopt;
  const data::AlignedSpans aligned =
      data::align_tags(*ex.current_target, ex.gold_target_spans, y_hat.text);
  if (aligned.dropped > 0 && warnings)
    warnings->push_back(std::to_string(aligned.dropped) + " gold span(s) unalignable");
  if (aligned.spans.empty()) return std::nullopt;
  return data::spans_to_token_mask(aligned.spans, y_hat);
}

struct PerExample {
  InputPair pair;
  TokenSeq y_hat;
  CTIResult cti;
};

PerExample run_example(const GenerativeModel& model, const data::AnnotatedExample& ex,
                       const DatasetOptions& options) {
  PerExample out;
  out.pair = data::build_input_pair(ex, model, options.scheme,
                                    options.config.template_id);
  out.y_hat = generate(model, out.pair.contextual, options.config.decode);
  out.cti = run_cti(model, out.pair, out.y_hat, cti_options(options.config));
  return out;
}

void append_cci_items(const GenerativeModel& model, const data::AnnotatedExample& ex,
                      const PerExample& pe, const std::set<int>& targets,
                      const DatasetOptions& options, const std::string& id,
                      std::vector<eval::EvalItem>* items) {
  const std::vector<bool> gold = data::gold_cue_mask(
      ex, pe.pair, model, options.scheme, options.config.template_id);
  std::map<int, AttributionMap> maps;
  run_cci(model, pe.pair, pe.y_hat, targets, cci_options(options.config), &maps);
  for (const auto& [t, map] : maps) {
    eval::EvalItem it;
    it.id = id + "#t" + std::to_string(t);
    it.scores = map.ctx_scores;
    it.selected = std_selector(map.ctx_scores, options.config.cci_k);
    it.gold = gold;
    items->push_back(std::move(it));
  }
}

}  // namespace

eval::EvalReport evaluate_dataset_cti(const GenerativeModel& model,
                                      const std::vector<data::AnnotatedExample>& examples,
                                      const DatasetOptions& options) {
  options.config.validate(&model);
  std::vector<eval::EvalItem> items;
  std::vector<std::string> notes;
  std::map<std::string, std::vector<std::string>> item_warnings;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const std::string id = example_id(examples[i], i);
    try {
      const PerExample pe = run_example(model, examples[i], options);
      std::vector<std::string> warnings;
      const auto gold = gold_cti_mask(examples[i], pe.y_hat, &warnings);
      if (!gold) {
        notes.push_back(id + ": skipped (no usable gold target spans)");
        continue;
      }
      eval::EvalItem it;
      it.id = id;
      it.scores = pe.cti.column(pe.cti.selector.metric);
      it.selected = pe.cti.selected;
      it.gold = *gold;
      items.push_back(std::move(it));
      item_warnings[id] = warnings;
    } catch (const DataError& e) {
      notes.push_back(id + ": skipped (" + e.what() + ")");
    }
  }
  eval::EvalReport report = eval::evaluate_items(items, "cti");
  for (eval::EvalRecord& r : report.records) {
    const auto& w = item_warnings[r.example_id];
    r.warnings.insert(r.warnings.end(), w.begin(), w.end());
  }
  report.notes = std::move(notes);
  return report;
}

eval::EvalReport evaluate_dataset_cci(const GenerativeModel& model,
                                      const std::vector<data::AnnotatedExample>& examples,
                                      const DatasetOptions& options) {
  options.config.validate(&model);
  if (options.start != "gold" && options.start != "e2e")
    throw ConfigError("cci start must be gold or e2e");
  std::vector<eval::EvalItem> items;
  std::vector<std::string> notes;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const std::string id = example_id(examples[i], i);
    try {
      const PerExample pe = run_example(model, examples[i], options);
      std::set<int> targets;
      if (options.start == "gold") {
        const auto gold = gold_cti_mask(examples[i], pe.y_hat, nullptr);
        if (gold)
          for (std::size_t t = 0; t < gold->size(); ++t)
            if ((*gold)[t]) targets.insert(static_cast<int>(t));
      } else {
        targets = pe.cti.selected;
      }
      if (targets.empty()) {
        notes.push_back(id + ": skipped (no target steps)");
        continue;
      }
      append_cci_items(model, examples[i], pe, targets, options, id, &items);
    } catch (const DataError& e) {
      notes.push_back(id + ": skipped (" + e.what() + ")");
    }
  }
  eval::EvalReport report = eval::evaluate_items(items, "cci");
  report.notes = std::move(notes);
  return report;
}

E2eReports evaluate_dataset_e2e(const GenerativeModel& model,
                                const std::vector<data::AnnotatedExample>& examples,
                                const DatasetOptions& options) {
  E2eReports out;
  DatasetOptions e2e = options;
  e2e.start = "e2e";
  out.cti = evaluate_dataset_cti(model, examples, e2e);
  out.cci = evaluate_dataset_cci(model, examples, e2e);
  return out;
}

eval::AccuracyResult dataset_accuracy(const GenerativeModel& model,
                                      const std::vector<data::AnnotatedExample>& examples,
                                      const DatasetOptions& options) {
  options.config.validate(&model);
  std::vector<std::string> refs, ctx_out, noctx_out;
  std::vector<std::vector<Span>> spans;
  for (const data::AnnotatedExample& ex : examples) {
    const InputPair pair = data::build_input_pair(ex, model, options.scheme,
                                                  options.config.template_id);
    refs.push_back(ex.current_target.value_or(""));
    spans.push_back(ex.gold_target_spans);
    ctx_out.push_back(generate(model, pair.contextual, options.config.decode).text);
    noctx_out.push_back(generate(model, pair.non_contextual, options.config.decode).text);
  }
  return eval::disambiguation_accuracy(refs, spans, ctx_out, noctx_out);
}

}  // namespace pecore::bench
