#pragma once

#include <memory>
#include <vector>

#include "pecore/types.hpp"

namespace pecore {

enum class DecodeStrategy { Greedy };

struct DecodeConfig {
  DecodeStrategy strategy = DecodeStrategy::Greedy;
  int max_new_tokens = 64;
  int eos_token = -1;  // < 0 disables eos stopping

  void check() const;
};

// Scalar function of one next-token distribution, used as the downstream
// target for gradient attribution.
struct ScalarTarget {
  enum class Kind { TokenProb, TokenProbMinusConst, KlToFixed };

  Kind kind = Kind::TokenProb;
  int token = -1;          // TokenProb / TokenProbMinusConst
  double constant = 0.0;   // TokenProbMinusConst
  std::vector<double> fixed;  // KlToFixed reference; frozen, not differentiated

  static ScalarTarget token_prob(int token);
  static ScalarTarget token_prob_minus_const(int token, double constant);
  static ScalarTarget kl_to_fixed(std::vector<double> fixed);

  double evaluate(const std::vector<double>& probs) const;
  // d evaluate / d probs. For KlToFixed the reference is a constant.
  std::vector<double> grad_probs(const std::vector<double>& probs) const;
  void check(int vocab_size) const;
};

// Attention weights for one query step: data[layer][head][position],
// each (layer, head) slice a distribution over input-so-far positions.
struct AttentionTensor {
  int layers = 0;
  int heads = 0;
  int positions = 0;
  std::vector<double> data;

  AttentionTensor() = default;
  AttentionTensor(int l, int h, int p)
      : layers(l), heads(h), positions(p),
        data(static_cast<std::size_t>(l) * h * p, 0.0) {}

  double& at(int l, int h, int p);
  double at(int l, int h, int p) const;
  std::vector<double> slice(int l, int h) const;
  // Average over every (layer, head) slice.
  std::vector<double> mean_all() const;
  void check(double tol = 1e-5) const;
};

struct ModelCapabilities {
  bool gradients = false;
  bool attention = false;
};

// Adapter contract for generative backends. A concrete adapter owns its
// tokenizer and weights; capability flags must reflect what the callables
// below actually serve. All methods are const and safe to call from
// multiple threads on distinct instances.
class GenerativeModel {
 public:
  virtual ~GenerativeModel() = default;

  virtual int vocab_size() const = 0;
  virtual ModelCapabilities capabilities() const = 0;

  virtual TokenSeq tokenize(const std::string& text) const = 0;
  virtual TokenSeq detokenize(const std::vector<int>& ids) const = 0;

  // Distribution over the next token given input ++ prefix.
  virtual StepDistribution next_distribution(const TokenSeq& input,
                                             const TokenSeq& prefix) const = 0;

  // L2 norm of d target / d embedding(position) for every position of
  // input ++ prefix. Default: CapabilityError.
  virtual std::vector<double> gradient_norms(const TokenSeq& input,
                                             const TokenSeq& prefix,
                                             const ScalarTarget& target) const;

  // Attention for the next-token query over input ++ prefix positions.
  // Default: CapabilityError.
  virtual AttentionTensor attention_weights(const TokenSeq& input,
                                            const TokenSeq& prefix) const;
};

// Greedy decoding loop over next_distribution. Ties break toward the lowest
// token id. Returns only the continuation. Throws LengthError when
// max_new_tokens == 0 and CapabilityError for non-greedy strategies.
TokenSeq generate(const GenerativeModel& model, const TokenSeq& input,
                  const DecodeConfig& config);

// next_distribution with input validation and a checked result.
StepDistribution checked_next_distribution(const GenerativeModel& model,
                                           const TokenSeq& input,
                                           const TokenSeq& prefix);

// Per-step distributions while force-decoding `target` after `input`;
// result[i] is the distribution that scored target[i].
std::vector<StepDistribution> force_decode_scores(const GenerativeModel& model,
                                                  const TokenSeq& input,
                                                  const TokenSeq& target);

// Id-level pair builder: contextual = context ++ [separator] ++ current.
// separator_id < 0 omits the separator. Mask covers context + separator.
InputPair make_input_pair(const GenerativeModel& model,
                          const std::vector<int>& context_ids,
                          const std::vector<int>& current_ids,
                          int separator_id = -1);

}  // namespace pecore
