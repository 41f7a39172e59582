#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "pecore/cci.hpp"
#include "pecore/cti.hpp"

namespace pecore {

struct PecoreConfig {
  std::string cti_metric = "kl";
  double cti_k = 2.0;
  std::set<std::string> cti_metrics = {"prob_diff", "lr", "pcxmi", "kl"};
  bool pcxmi_sign_flip = false;
  std::string cci_method = "grad_kl";
  std::string cci_tgt_fn;  // empty: derived from cci_method
  double cci_k = 2.0;
  std::optional<HeadSelection> attn_head;
  DecodeConfig decode;
  std::string template_id = "source";
  std::string separator = "<brk>";
  bool compute_y_star = true;

  // Throws ConfigError on bad names/values; with a model, also checks its
  // capabilities against the chosen methods (CapabilityError).
  void validate(const GenerativeModel* model = nullptr) const;

  // Benchmark-style selectors: k = 1 on both stages.
  static PecoreConfig benchmark_preset();
};

struct PecoreResult {
  InputPair input;
  TokenSeq y_hat;    // contextual generation
  TokenSeq y_tilde;  // non-contextual generation
  CTIResult cti;
  std::map<int, AttributionMap> attribution_maps;  // keyed by target step
  std::vector<CueTargetPair> pairs;
  // Constrained non-contextual continuations, keyed by target step.
  std::map<int, TokenSeq> y_star;
  PecoreConfig config;
};

// End-to-end run: generate both sides, score + select context-sensitive
// steps, attribute each to context cues. The id-level entry takes a
// prebuilt pair; the text entry tokenizes context/current and joins them
// with config.separator.
PecoreResult run_pecore(const GenerativeModel& model, const InputPair& pair,
                        const PecoreConfig& config = {});
PecoreResult run_pecore(const GenerativeModel& model, const std::string& context,
                        const std::string& current, const PecoreConfig& config = {});

struct PecoreInput {
  std::string context;
  std::string current;
};

struct BatchItem {
  std::optional<PecoreResult> result;
  std::string error;  // non-empty when the item failed
  bool ok() const { return result.has_value(); }
};

// Parallel map over inputs; `factory` is called once per worker thread.
// Per-item failures are captured, not thrown. Output order matches input
// order regardless of worker count.
std::vector<BatchItem> run_pecore_batch(
    const std::function<std::shared_ptr<GenerativeModel>()>& factory,
    const std::vector<PecoreInput>& inputs, const PecoreConfig& config, int workers);

// Same, with one prebuilt model handle per worker (size must be >= workers).
std::vector<BatchItem> run_pecore_batch(
    const std::vector<std::shared_ptr<GenerativeModel>>& worker_models,
    const std::vector<PecoreInput>& inputs, const PecoreConfig& config, int workers);

}  // namespace pecore
