#pragma once

#include <cstdint>
#include <vector>

#include "pecore/model.hpp"

namespace pecore {

// Row-major matrix, just enough for the toy model.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

// One planted behaviour: with `cue_token` anywhere in the context, greedy
// decoding emits `flipped_token` at step `trigger_pos`; without it, the
// natural continuation is unchanged at every step.
struct PlantedRule {
  int cue_token = -1;
  int trigger_pos = -1;
  int flipped_token = -1;
};

// The probe the factory verified a rule against. context/current are token
// ids; natural_token is what step trigger_pos emits without the cue.
struct PlantedProbe {
  std::vector<int> context;
  std::vector<int> current;
  int trigger_pos = -1;
  int flipped_token = -1;
  int natural_token = -1;
  int cue_slot = -1;  // index of the cue inside `context`
};

// Deterministic seeded model: embedding lookup, pooling, linear projection,
// softmax. Pseudo-attention pooling scores every position against the last
// position (alpha_j = softmax_j(beta * x_q . x_j), h = sum alpha_j x_j);
// mean pooling averages. Gradients and the single pseudo-attention head are
// closed form, so the adapter contract is exercised end to end without any
// ML runtime.
//
// Tokenizer: whitespace words; decimal literals map to their id, "<brk>" to
// separator_id(), anything else to an FNV-1a hash mod vocab. detokenize
// renders ids as decimal words ("<brk>" for the separator).
class ToyCueModel final : public GenerativeModel {
 public:
  enum class Pooling { Mean, PseudoAttention };

  // Unstructured weights ~ N(0, 1/sqrt(dim)), bit-identical per seed.
  ToyCueModel(int vocab, int dim, std::uint64_t seed,
              Pooling pooling = Pooling::PseudoAttention, double beta = 1.0);

  // Fixture entry: exact weights, no reserved ids (separator_id() = -1).
  static ToyCueModel from_weights(Mat embedding, Mat projection, Pooling pooling,
                                  double beta = 1.0);

  int vocab_size() const override { return vocab_; }
  ModelCapabilities capabilities() const override {
    return {true, pooling_ == Pooling::PseudoAttention};
  }
  TokenSeq tokenize(const std::string& text) const override;
  TokenSeq detokenize(const std::vector<int>& ids) const override;
  StepDistribution next_distribution(const TokenSeq& input,
                                     const TokenSeq& prefix) const override;
  std::vector<double> gradient_norms(const TokenSeq& input, const TokenSeq& prefix,
                                     const ScalarTarget& target) const override;
  AttentionTensor attention_weights(const TokenSeq& input,
                                    const TokenSeq& prefix) const override;

  Pooling pooling() const { return pooling_; }
  double beta() const { return beta_; }
  int dim() const { return dim_; }
  const Mat& embedding() const { return E_; }
  const Mat& projection() const { return W_; }
  int separator_id() const { return separator_id_; }

  const std::vector<PlantedRule>& rules() const { return rules_; }
  const std::vector<PlantedProbe>& probes() const { return probes_; }
  // InputPair for the verified probe of rule `rule_idx` (separator included).
  InputPair probe_pair(std::size_t rule_idx) const;

  // Exposed plumbing for tests (finite differences perturb embeddings).
  std::vector<std::vector<double>> embeddings_for(const std::vector<int>& ids) const;
  std::vector<double> forward_from_embeddings(
      const std::vector<std::vector<double>>& xs,
      std::vector<double>* attn_out = nullptr) const;
  // Per-position d target / d embedding, closed form.
  std::vector<std::vector<double>> embedding_grads(const std::vector<int>& ids,
                                                   const ScalarTarget& target) const;

  friend ToyCueModel make_planted_cue_model(int vocab, const std::vector<PlantedRule>&,
                                            std::uint64_t seed);

 private:
  ToyCueModel() = default;
  std::vector<int> joined_ids(const TokenSeq& input, const TokenSeq& prefix) const;

  int vocab_ = 0;
  int dim_ = 0;
  Pooling pooling_ = Pooling::PseudoAttention;
  double beta_ = 1.0;
  int separator_id_ = -1;
  Mat E_;  // vocab x dim
  Mat W_;  // dim x vocab
  std::vector<PlantedRule> rules_;
  std::vector<PlantedProbe> probes_;
};

// Constructs a pseudo-attention toy model realizing `rules` exactly, by
// construction + simulation + verification, retrying with fresh draws until
// the certificate holds (PlantInfeasibleError after 256 attempts).
//
// Scheme (all solved against simulated runs, then re-verified through the
// public model interface):
//   * dim = vocab + 1; axis 0 is a shared "content" direction g, axis 1+v
//     is token v's private residual axis.
//   * content token v: E[v] = mu*g + sr*axis(v); its projection column mixes
//     residual axes only, so logits are invariant to the shared direction.
//   * filler + separator: embedding -mf*g (large negative attention score,
//     so they take almost no pooled mass) and output column -chi on g
//     (suppressed logit).
//   * cue token: mu*g + sr*axis(cue) + kq*axis(q*), where q* is the token
//     the probe generates at step trigger-1. Its attention therefore spikes
//     exactly at the trigger step's query and stays content-typical before.
//   * the flip is the single entry W[axis(cue), flipped] = gamma; gamma is
//     chosen inside the simulated feasibility window (must flip at the
//     trigger, must not flip earlier), which is wide because cue attention
//     is small before the trigger.
//
// Certified per rule: contextual/non-contextual greedy runs agree before the
// trigger and differ exactly there; the KL score column selects {trigger}
// (k=1 for n >= 3, k=2 for n >= 6); gradient norms of the KL-to-fixed target
// restricted to context positions select {cue slot} at both k; attention
// argmax at the trigger is the cue.
//
// Constraints: 8 <= vocab <= 62, distinct trigger positions, distinct cue
// tokens, no rule's flipped token equal to another rule's cue token.
ToyCueModel make_planted_cue_model(int vocab, const std::vector<PlantedRule>& rules,
                                   std::uint64_t seed);

// Portable deterministic RNG (splitmix64; 53-bit uniforms; Box-Muller).
struct Rng {
  std::uint64_t s;
  explicit Rng(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  std::uint32_t below(std::uint32_t n) { return static_cast<std::uint32_t>(next() % n); }
  double gauss();

 private:
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pecore
