#include "pecore/model.hpp"

#include <algorithm>
#include <cmath>

namespace pecore {

TokenSeq TokenSeq::prefix(std::size_t n) const {
  if (n >= size()) return *this;
  TokenSeq out;
  out.tokens.assign(tokens.begin(), tokens.begin() + n);
  out.offsets.assign(offsets.begin(), offsets.begin() + n);
  out.text = n == 0 ? std::string() : text.substr(0, offsets[n - 1].end);
  return out;
}

TokenSeq TokenSeq::concat(const TokenSeq& a, const TokenSeq& b, const std::string& joiner) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  TokenSeq out = a;
  out.text += joiner;
  const std::size_t shift = out.text.size();
  out.text += b.text;
  out.tokens.insert(out.tokens.end(), b.tokens.begin(), b.tokens.end());
  for (const Span& s : b.offsets) out.offsets.emplace_back(s.begin + shift, s.end + shift);
  return out;
}

void TokenSeq::check(int vocab_size) const {
  if (tokens.size() != offsets.size())
    throw Error("TokenSeq: tokens/offsets length mismatch");
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const Span& s = offsets[i];
    if (s.end < s.begin || s.end > text.size())
      throw Error("TokenSeq: offset out of bounds at token " + std::to_string(i));
    if (i > 0 && s.begin < prev_end)
      throw Error("TokenSeq: overlapping offsets at token " + std::to_string(i));
    prev_end = s.end;
  }
  if (vocab_size >= 0) {
    for (int t : tokens)
      if (t < 0 || t >= vocab_size)
        throw VocabMismatchError("token id " + std::to_string(t) +
                                 " outside vocab of size " + std::to_string(vocab_size));
  }
}

bool InputPair::has_context() const {
  return std::any_of(context_mask.begin(), context_mask.end(), [](bool b) { return b; });
}

std::size_t InputPair::context_size() const {
  return static_cast<std::size_t>(
      std::count(context_mask.begin(), context_mask.end(), true));
}

std::vector<int> InputPair::context_positions() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < context_mask.size(); ++i)
    if (context_mask[i]) out.push_back(static_cast<int>(i));
  return out;
}

void InputPair::check() const {
  contextual.check();
  non_contextual.check();
  if (context_mask.size() != contextual.size())
    throw Error("InputPair: mask length != contextual length");
  std::vector<int> kept;
  for (std::size_t i = 0; i < context_mask.size(); ++i)
    if (!context_mask[i]) kept.push_back(contextual.tokens[i]);
  if (kept != non_contextual.tokens)
    throw Error("InputPair: unmasked contextual tokens differ from non-contextual tokens");
}

void StepDistribution::check(double tol) const {
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0)
      throw Error("StepDistribution: negative or non-finite probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > tol)
    throw Error("StepDistribution: probabilities sum to " + std::to_string(sum));
}

void DecodeConfig::check() const {
  if (strategy != DecodeStrategy::Greedy)
    throw CapabilityError("only greedy decoding is supported");
  if (max_new_tokens <= 0) throw LengthError("max_new_tokens must be positive");
}

ScalarTarget ScalarTarget::token_prob(int token) {
  ScalarTarget t;
  t.kind = Kind::TokenProb;
  t.token = token;
  return t;
}

ScalarTarget ScalarTarget::token_prob_minus_const(int token, double constant) {
  ScalarTarget t;
  t.kind = Kind::TokenProbMinusConst;
  t.token = token;
  t.constant = constant;
  return t;
}

ScalarTarget ScalarTarget::kl_to_fixed(std::vector<double> fixed) {
  ScalarTarget t;
  t.kind = Kind::KlToFixed;
  t.fixed = std::move(fixed);
  return t;
}

void ScalarTarget::check(int vocab_size) const {
  if (kind == Kind::KlToFixed) {
    if (static_cast<int>(fixed.size()) != vocab_size)
      throw VocabMismatchError("KlToFixed reference has arity " +
                               std::to_string(fixed.size()) + ", vocab is " +
                               std::to_string(vocab_size));
  } else {
    if (token < 0 || token >= vocab_size)
      throw VocabMismatchError("target token " + std::to_string(token) +
                               " outside vocab of size " + std::to_string(vocab_size));
  }
}

namespace {
constexpr double kEps = 1e-12;
}

double ScalarTarget::evaluate(const std::vector<double>& probs) const {
  switch (kind) {
    case Kind::TokenProb:
      return probs[token];
    case Kind::TokenProbMinusConst:
      return probs[token] - constant;
    case Kind::KlToFixed: {
      double kl = 0.0;
      for (std::size_t v = 0; v < probs.size(); ++v) {
        if (probs[v] > 0.0)
          kl += probs[v] * std::log(probs[v] / std::max(fixed[v], kEps));
      }
      return kl;
    }
  }
  return 0.0;
}

std::vector<double> ScalarTarget::grad_probs(const std::vector<double>& probs) const {
  std::vector<double> g(probs.size(), 0.0);
  switch (kind) {
    case Kind::TokenProb:
    case Kind::TokenProbMinusConst:
      g[token] = 1.0;
      break;
    case Kind::KlToFixed:
      for (std::size_t v = 0; v < probs.size(); ++v) {
        if (probs[v] > 0.0)
          g[v] = std::log(probs[v] / std::max(fixed[v], kEps)) + 1.0;
      }
      break;
  }
  return g;
}

double& AttentionTensor::at(int l, int h, int p) {
  return data[(static_cast<std::size_t>(l) * heads + h) * positions + p];
}

double AttentionTensor::at(int l, int h, int p) const {
  return data[(static_cast<std::size_t>(l) * heads + h) * positions + p];
}

std::vector<double> AttentionTensor::slice(int l, int h) const {
  std::vector<double> out(positions);
  for (int p = 0; p < positions; ++p) out[p] = at(l, h, p);
  return out;
}

std::vector<double> AttentionTensor::mean_all() const {
  std::vector<double> out(positions, 0.0);
  const double denom = static_cast<double>(layers) * heads;
  for (int l = 0; l < layers; ++l)
    for (int h = 0; h < heads; ++h)
      for (int p = 0; p < positions; ++p) out[p] += at(l, h, p) / denom;
  return out;
}

void AttentionTensor::check(double tol) const {
  if (data.size() != static_cast<std::size_t>(layers) * heads * positions)
    throw Error("AttentionTensor: data size mismatch");
  for (int l = 0; l < layers; ++l) {
    for (int h = 0; h < heads; ++h) {
      double sum = 0.0;
      for (int p = 0; p < positions; ++p) {
        const double w = at(l, h, p);
        if (!std::isfinite(w) || w < 0.0)
          throw Error("AttentionTensor: negative or non-finite weight");
        sum += w;
      }
      if (std::abs(sum - 1.0) > tol)
        throw Error("AttentionTensor: slice does not sum to 1");
    }
  }
}

std::vector<double> GenerativeModel::gradient_norms(const TokenSeq&, const TokenSeq&,
                                                    const ScalarTarget&) const {
  throw CapabilityError("model does not serve gradients");
}

AttentionTensor GenerativeModel::attention_weights(const TokenSeq&, const TokenSeq&) const {
  throw CapabilityError("model does not serve attention");
}

StepDistribution checked_next_distribution(const GenerativeModel& model,
                                           const TokenSeq& input, const TokenSeq& prefix) {
  input.check(model.vocab_size());
  prefix.check(model.vocab_size());
  if (input.empty() && prefix.empty()) throw LengthError("empty model input");
  StepDistribution d = model.next_distribution(input, prefix);
  if (static_cast<int>(d.probs.size()) != model.vocab_size())
    throw VocabMismatchError("next_distribution arity != vocab size");
  d.check();
  return d;
}

TokenSeq generate(const GenerativeModel& model, const TokenSeq& input,
                  const DecodeConfig& config) {
  config.check();
  std::vector<int> out;
  TokenSeq prefix;
  for (int step = 0; step < config.max_new_tokens; ++step) {
    StepDistribution d = checked_next_distribution(model, input, prefix);
    d.step_index = step;
    int best = 0;
    for (std::size_t v = 1; v < d.probs.size(); ++v)
      if (d.probs[v] > d.probs[best]) best = static_cast<int>(v);
    out.push_back(best);
    prefix = model.detokenize(out);
    if (config.eos_token >= 0 && best == config.eos_token) break;
  }
  return model.detokenize(out);
}

std::vector<StepDistribution> force_decode_scores(const GenerativeModel& model,
                                                  const TokenSeq& input,
                                                  const TokenSeq& target) {
  std::vector<StepDistribution> out;
  out.reserve(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    StepDistribution d = checked_next_distribution(model, input, target.prefix(i));
    d.step_index = static_cast<int>(i);
    out.push_back(std::move(d));
  }
  return out;
}

InputPair make_input_pair(const GenerativeModel& model, const std::vector<int>& context_ids,
                          const std::vector<int>& current_ids, int separator_id) {
  if (current_ids.empty()) throw LengthError("current segment must be non-empty");
  InputPair pair;
  pair.non_contextual = model.detokenize(current_ids);
  if (context_ids.empty()) {
    pair.contextual = pair.non_contextual;
    pair.context_mask.assign(pair.contextual.size(), false);
  } else {
    std::vector<int> ctx = context_ids;
    if (separator_id >= 0) ctx.push_back(separator_id);
    TokenSeq ctx_seq = model.detokenize(ctx);
    pair.contextual = TokenSeq::concat(ctx_seq, pair.non_contextual);
    pair.context_mask.assign(ctx.size(), true);
    pair.context_mask.resize(pair.contextual.size(), false);
  }
  pair.check();
  return pair;
}

}  // namespace pecore
