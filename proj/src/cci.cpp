#include "pecore/cci.hpp"

#include <algorithm>
#include <cmath>

#include "pecore/cti.hpp"
#include "pecore/evalkit.hpp"

namespace pecore {

bool is_cci_method(const std::string& name) {
  return name == "grad_diff" || name == "grad_kl" || name == "attn_mean" ||
         name == "attn_best";
}

std::string default_tgt_fn(const std::string& method) {
  if (method == "grad_diff") return "prob_diff";
  if (method == "grad_kl") return "kl";
  return "";
}

namespace {

void fill_ctx_restriction(const InputPair& pair, AttributionMap& map) {
  map.ctx_scores.clear();
  map.ctx_positions.clear();
  for (std::size_t i = 0; i < pair.context_mask.size(); ++i) {
    if (pair.context_mask[i]) {
      map.ctx_scores.push_back(map.scores[i]);
      map.ctx_positions.push_back(static_cast<int>(i));
    }
  }
}

}  // namespace

AttributionMap attribute_contrastive_grad(const GenerativeModel& model,
                                          const InputPair& pair, const TokenSeq& prefix,
                                          int token, const std::string& tgt_fn) {
  if (tgt_fn != "prob_diff" && tgt_fn != "kl")
    throw ConfigError("unknown contrastive target function: " + tgt_fn);
  if (token < 0 || token >= model.vocab_size())
    throw VocabMismatchError("attributed token outside vocab");
  const StepDistribution p_no =
      checked_next_distribution(model, pair.non_contextual, prefix);
  ScalarTarget target =
      tgt_fn == "kl" ? ScalarTarget::kl_to_fixed(p_no.probs)
                     : ScalarTarget::token_prob_minus_const(token, p_no.probs[token]);
  AttributionMap map;
  map.target_step = static_cast<int>(prefix.size());
  map.method = tgt_fn == "kl" ? "grad_kl" : "grad_diff";
  map.tgt_fn = tgt_fn;
  map.scores = model.gradient_norms(pair.contextual, prefix, target);
  fill_ctx_restriction(pair, map);
  return map;
}

AttributionMap attribute_attention(const GenerativeModel& model, const InputPair& pair,
                                   const TokenSeq& prefix, const std::string& method,
                                   std::optional<HeadSelection> head) {
  if (method != "attn_mean" && method != "attn_best")
    throw ConfigError("unknown attention method: " + method);
  const AttentionTensor attn = model.attention_weights(pair.contextual, prefix);
  attn.check();
  AttributionMap map;
  map.target_step = static_cast<int>(prefix.size());
  map.method = method;
  if (method == "attn_mean") {
    map.scores = attn.mean_all();
  } else {
    if (!head) throw ConfigError("attn_best requires a fitted head");
    if (head->layer < 0 || head->layer >= attn.layers || head->head < 0 ||
        head->head >= attn.heads)
      throw ConfigError("head selection outside the attention tensor");
    map.scores = attn.slice(head->layer, head->head);
  }
  fill_ctx_restriction(pair, map);
  return map;
}

HeadSelection fit_best_head(const GenerativeModel& model,
                            const std::vector<HeadCalibrationItem>& items) {
  if (items.empty()) throw ConfigError("fit_best_head needs calibration items");
  int layers = -1, heads = -1;
  std::vector<AttentionTensor> tensors;
  std::vector<std::vector<bool>> golds;
  for (const HeadCalibrationItem& it : items) {
    it.pair.check();
    AttentionTensor t = model.attention_weights(it.pair.contextual, it.prefix);
    if (layers < 0) {
      layers = t.layers;
      heads = t.heads;
    } else if (t.layers != layers || t.heads != heads) {
      throw Error("attention tensor shape varies across calibration items");
    }
    if (it.gold_cue_mask.size() != it.pair.context_size())
      throw DataError("gold cue mask length != context size");
    tensors.push_back(std::move(t));
    golds.push_back(it.gold_cue_mask);
  }
  HeadSelection best;
  double best_score = -1.0;
  for (int l = 0; l < layers; ++l) {
    for (int h = 0; h < heads; ++h) {
      std::vector<bool> gold;
      std::vector<double> score;
      for (std::size_t i = 0; i < items.size(); ++i) {
        const std::vector<double> s = tensors[i].slice(l, h);
        const std::vector<int> pos = items[i].pair.context_positions();
        for (std::size_t j = 0; j < pos.size(); ++j) {
          score.push_back(s[pos[j]]);
          gold.push_back(golds[i][j]);
        }
      }
      const double a = eval::auprc(gold, score);
      if (std::isnan(a)) continue;
      if (a > best_score) {
        best_score = a;
        best = {l, h};
      }
    }
  }
  if (best_score < 0.0)
    throw DataError("no calibration item has a positive gold cue");
  return best;
}

TokenSeq constrained_continuation(const GenerativeModel& model, const TokenSeq& input,
                                  const TokenSeq& forced_prefix,
                                  const DecodeConfig& config) {
  config.check();
  std::vector<int> out = forced_prefix.tokens;
  for (int step = 0; step < config.max_new_tokens; ++step) {
    const StepDistribution d =
        checked_next_distribution(model, input, model.detokenize(out));
    int best = 0;
    for (std::size_t v = 1; v < d.probs.size(); ++v)
      if (d.probs[v] > d.probs[best]) best = static_cast<int>(v);
    out.push_back(best);
    if (config.eos_token >= 0 && best == config.eos_token) break;
  }
  return model.detokenize(out);
}

std::vector<CueTargetPair> run_cci(const GenerativeModel& model, const InputPair& pair,
                                   const TokenSeq& y_hat, const std::set<int>& targets,
                                   const CciOptions& options,
                                   std::map<int, AttributionMap>* maps_out,
                                   const std::vector<double>* cti_scores) {
  pair.check();
  if (!is_cci_method(options.method))
    throw ConfigError("unknown CCI method: " + options.method);
  std::string tgt_fn = options.tgt_fn.empty() ? default_tgt_fn(options.method)
                                              : options.tgt_fn;
  if (options.method == "grad_diff" || options.method == "grad_kl") {
    if (tgt_fn != default_tgt_fn(options.method))
      throw ConfigError("method " + options.method + " implies tgt_fn " +
                        default_tgt_fn(options.method));
  } else if (!options.tgt_fn.empty()) {
    throw ConfigError("attention methods take no tgt_fn");
  }
  if (options.k < 0.0) throw ConfigError("selector k must be >= 0");
  if (cti_scores && cti_scores->size() != y_hat.size())
    throw Error("cti_scores length != generation length");

  std::vector<CueTargetPair> pairs;
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= y_hat.size())
      throw ConfigError("CCI target step " + std::to_string(t) +
                        " outside the generation");
    const TokenSeq prefix = y_hat.prefix(static_cast<std::size_t>(t));
    AttributionMap map =
        (options.method == "grad_diff" || options.method == "grad_kl")
            ? attribute_contrastive_grad(model, pair, prefix, y_hat.tokens[t], tgt_fn)
            : attribute_attention(model, pair, prefix, options.method, options.head);
    const std::set<int> cue_idx = std_selector(map.ctx_scores, options.k);
    for (int ci : cue_idx) {
      CueTargetPair p;
      p.cue_position = map.ctx_positions[ci];
      p.target_step = t;
      p.cue_score = map.ctx_scores[ci];
      p.cti_score = cti_scores ? (*cti_scores)[t] : 0.0;
      p.cue_token = pair.contextual.tokens[p.cue_position];
      p.target_token = y_hat.tokens[t];
      const Span cs = pair.contextual.offsets[p.cue_position];
      p.cue_text = pair.contextual.text.substr(cs.begin, cs.length());
      const Span ts = y_hat.offsets[t];
      p.target_text = y_hat.text.substr(ts.begin, ts.length());
      pairs.push_back(std::move(p));
    }
    if (maps_out) (*maps_out)[t] = std::move(map);
  }
  return pairs;
}

}  // namespace pecore
