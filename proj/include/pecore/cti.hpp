#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "pecore/model.hpp"

namespace pecore {

// Contrastive step metrics. p_ctx / p_noctx are the probabilities the
// contextual and non-contextual runs assign to the same forced token.
// Shared eps = 1e-12 clamps denominators.
double metric_prob_diff(double p_ctx, double p_noctx);
double metric_lr(double p_ctx, double p_noctx);
// Pointwise contextual cross-mutual information, -ln(p_ctx / p_noctx):
// negative when context raises the token's probability. sign_flip negates
// it for "higher = more context-sensitive" consumers.
double metric_pcxmi(double p_ctx, double p_noctx, bool sign_flip = false);
// KL(ctx || noctx) over full distributions; terms with p_ctx = 0 contribute 0.
double metric_kl(const std::vector<double>& p_ctx, const std::vector<double>& p_noctx);
// Share of gradient mass on context positions: sum of norms where
// context_mask is true / sum over all positions. Norms must be >= 0;
// all-zero norms yield 0.
double metric_context_saliency(const std::vector<double>& grad_norms,
                               const std::vector<bool>& context_mask);

// Indices whose score strictly exceeds mean + k * population std.
// k >= 0; empty input yields the empty set.
std::set<int> std_selector(const std::vector<double>& scores, double k);

// Deterministic per-index Bernoulli(rate) baseline selector.
std::set<int> stratified_random_baseline(std::size_t n, double rate, std::uint64_t seed);

// Names understood by run_cti / the CLI: prob_diff, lr, pcxmi, kl,
// ctx_saliency.
bool is_cti_metric(const std::string& name);

struct SelectorConfig {
  std::string metric = "kl";
  double k = 2.0;
};

struct MetricScoreRow {
  int step = 0;
  std::map<std::string, double> scores;
};

struct CtiOptions {
  std::set<std::string> metrics = {"prob_diff", "lr", "pcxmi", "kl"};
  SelectorConfig selector;
  bool pcxmi_sign_flip = false;
};

struct CTIResult {
  TokenSeq target;                   // the scored generation
  std::vector<MetricScoreRow> rows;  // one per generated step
  std::set<int> selected;            // steps above the selector threshold
  SelectorConfig selector;

  std::vector<double> column(const std::string& metric) const;
};

// Scores y_hat step by step under both sides of `pair` and applies the
// selector to the chosen metric's column. ctx_saliency requires gradient
// capability (the saliency target is the forced token's probability).
CTIResult run_cti(const GenerativeModel& model, const InputPair& pair,
                  const TokenSeq& y_hat, const CtiOptions& options = {});

}  // namespace pecore
