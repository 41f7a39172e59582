#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pecore/model.hpp"

namespace pecore {

// Per-position attribution for one attributed generation step. `scores`
// covers every contextual-input position (context ++ separator ++ current ++
// generated prefix); ctx_scores is its restriction to mask-true positions
// and ctx_positions maps those entries back to absolute positions.
struct AttributionMap {
  int target_step = 0;
  std::vector<double> scores;
  std::vector<double> ctx_scores;
  std::vector<int> ctx_positions;
  std::string method;
  std::string tgt_fn;  // empty for attention methods
};

// One attributed (cue, target) link. cue_position is absolute within the
// contextual sequence; cti_score is the selector-metric value of the target
// step when produced by the pipeline, 0 when unset.
struct CueTargetPair {
  int cue_position = 0;
  int target_step = 0;
  double cue_score = 0.0;
  double cti_score = 0.0;
  int cue_token = 0;
  int target_token = 0;
  std::string cue_text;
  std::string target_text;
};

struct HeadSelection {
  int layer = 0;
  int head = 0;
};

// Methods understood by run_cci / the CLI: grad_diff, grad_kl, attn_mean,
// attn_best. Target functions for the gradient methods: prob_diff, kl.
bool is_cci_method(const std::string& name);
// prob_diff for grad_diff, kl for grad_kl, empty for attention methods.
std::string default_tgt_fn(const std::string& method);

// Gradient attribution of step |prefix|: the scalar is either
// P_ctx(token) - P_noctx(token) (tgt_fn prob_diff; the non-contextual term
// is a constant) or KL(P_ctx || P_noctx) with the non-contextual
// distribution frozen (tgt_fn kl). Returns per-position gradient norms.
AttributionMap attribute_contrastive_grad(const GenerativeModel& model,
                                          const InputPair& pair, const TokenSeq& prefix,
                                          int token, const std::string& tgt_fn);

// Attention attribution: head-averaged weights (attn_mean) or one selected
// head (attn_best with `head`).
AttributionMap attribute_attention(const GenerativeModel& model, const InputPair& pair,
                                   const TokenSeq& prefix, const std::string& method,
                                   std::optional<HeadSelection> head = std::nullopt);

struct HeadCalibrationItem {
  InputPair pair;
  TokenSeq prefix;
  // Gold cue indicator per mask-true position, same order as ctx_scores.
  std::vector<bool> gold_cue_mask;
};

// Picks the (layer, head) whose attention best ranks gold cues by AUPRC
// over the calibration items; ties break toward the lowest (layer, head).
HeadSelection fit_best_head(const GenerativeModel& model,
                            const std::vector<HeadCalibrationItem>& items);

// Natural continuation after forcing `forced_prefix` on top of `input`;
// returns forced_prefix ++ continuation.
TokenSeq constrained_continuation(const GenerativeModel& model, const TokenSeq& input,
                                  const TokenSeq& forced_prefix,
                                  const DecodeConfig& config);

struct CciOptions {
  std::string method = "grad_kl";
  std::string tgt_fn;  // empty: derived from method
  double k = 2.0;
  std::optional<HeadSelection> head;  // required by attn_best
};

// Attributes each target step and selects cue positions with the std
// selector over ctx_scores. cti_scores, when given, stamps each pair's
// cti_score by target step. Pairs are ordered by (target_step,
// cue_position).
std::vector<CueTargetPair> run_cci(const GenerativeModel& model, const InputPair& pair,
                                   const TokenSeq& y_hat, const std::set<int>& targets,
                                   const CciOptions& options = {},
                                   std::map<int, AttributionMap>* maps_out = nullptr,
                                   const std::vector<double>* cti_scores = nullptr);

}  // namespace pecore
