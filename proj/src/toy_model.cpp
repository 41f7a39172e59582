#include "pecore/toy_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <string>

namespace pecore {

namespace {

constexpr double kEps = 1e-12;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void softmax_inplace(std::vector<double>& z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

int argmax(const std::vector<double>& v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

double kl_div(const std::vector<double>& p, const std::vector<double>& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / std::max(q[i], kEps));
  return kl;
}

// mean + k * population std, strict threshold; mirrors the CTI selector so
// the factory can certify without depending on it.
std::set<int> select_above(const std::vector<double>& scores, double k) {
  const double n = static_cast<double>(scores.size());
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double thr = mean + k * std::sqrt(var / n);
  std::set<int> out;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] > thr) out.insert(static_cast<int>(i));
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

}  // namespace

double Rng::gauss() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

ToyCueModel::ToyCueModel(int vocab, int dim, std::uint64_t seed, Pooling pooling,
                         double beta)
    : vocab_(vocab), dim_(dim), pooling_(pooling), beta_(beta),
      separator_id_(vocab - 1), E_(vocab, dim), W_(dim, vocab) {
  if (vocab < 2 || dim < 1) throw ConfigError("toy model needs vocab >= 2, dim >= 1");
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& v : E_.a) v = rng.gauss() * scale;
  for (double& v : W_.a) v = rng.gauss() * scale;
}

ToyCueModel ToyCueModel::from_weights(Mat embedding, Mat projection, Pooling pooling,
                                      double beta) {
  if (embedding.cols != projection.rows)
    throw ConfigError("embedding dim != projection rows");
  if (embedding.rows != projection.cols)
    throw ConfigError("embedding rows != projection cols (vocab mismatch)");
  ToyCueModel m;
  m.vocab_ = embedding.rows;
  m.dim_ = embedding.cols;
  m.pooling_ = pooling;
  m.beta_ = beta;
  m.separator_id_ = -1;
  m.E_ = std::move(embedding);
  m.W_ = std::move(projection);
  return m;
}

TokenSeq ToyCueModel::tokenize(const std::string& text) const {
  TokenSeq out;
  out.text = text;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    const std::string word = text.substr(i, j - i);
    int id;
    if (word == "<brk>" && separator_id_ >= 0) {
      id = separator_id_;
    } else if (all_digits(word)) {
      long v = std::stol(word);
      if (v >= vocab_)
        throw VocabMismatchError("literal token " + word + " outside vocab of size " +
                                 std::to_string(vocab_));
      id = static_cast<int>(v);
    } else {
      id = static_cast<int>(fnv1a(word) % static_cast<std::uint64_t>(vocab_));
    }
    out.tokens.push_back(id);
    out.offsets.emplace_back(i, j);
    i = j;
  }
  return out;
}

TokenSeq ToyCueModel::detokenize(const std::vector<int>& ids) const {
  TokenSeq out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= vocab_)
      throw VocabMismatchError("token id " + std::to_string(ids[i]) +
                               " outside vocab of size " + std::to_string(vocab_));
    const std::string word =
        ids[i] == separator_id_ ? "<brk>" : std::to_string(ids[i]);
    if (i > 0) out.text += ' ';
    const std::size_t begin = out.text.size();
    out.text += word;
    out.tokens.push_back(ids[i]);
    out.offsets.emplace_back(begin, out.text.size());
  }
  return out;
}

std::vector<int> ToyCueModel::joined_ids(const TokenSeq& input,
                                         const TokenSeq& prefix) const {
  std::vector<int> ids = input.tokens;
  ids.insert(ids.end(), prefix.tokens.begin(), prefix.tokens.end());
  if (ids.empty()) throw LengthError("empty model input");
  for (int t : ids)
    if (t < 0 || t >= vocab_)
      throw VocabMismatchError("token id " + std::to_string(t) +
                               " outside vocab of size " + std::to_string(vocab_));
  return ids;
}

std::vector<std::vector<double>> ToyCueModel::embeddings_for(
    const std::vector<int>& ids) const {
  std::vector<std::vector<double>> xs;
  xs.reserve(ids.size());
  for (int id : ids) {
    std::vector<double> x(dim_);
    for (int k = 0; k < dim_; ++k) x[k] = E_.at(id, k);
    xs.push_back(std::move(x));
  }
  return xs;
}

std::vector<double> ToyCueModel::forward_from_embeddings(
    const std::vector<std::vector<double>>& xs, std::vector<double>* attn_out) const {
  if (xs.empty()) throw LengthError("empty model input");
  const std::size_t n = xs.size();
  std::vector<double> h(dim_, 0.0);
  if (pooling_ == Pooling::Mean) {
    for (const auto& x : xs)
      for (int k = 0; k < dim_; ++k) h[k] += x[k] / static_cast<double>(n);
    if (attn_out) attn_out->assign(n, 1.0 / static_cast<double>(n));
  } else {
    const std::vector<double>& q = xs.back();
    std::vector<double> alpha(n);
    for (std::size_t j = 0; j < n; ++j) alpha[j] = beta_ * dot(q, xs[j]);
    softmax_inplace(alpha);
    for (std::size_t j = 0; j < n; ++j)
      for (int k = 0; k < dim_; ++k) h[k] += alpha[j] * xs[j][k];
    if (attn_out) *attn_out = alpha;
  }
  std::vector<double> z(vocab_, 0.0);
  for (int v = 0; v < vocab_; ++v) {
    double s = 0.0;
    for (int k = 0; k < dim_; ++k) s += W_.at(k, v) * h[k];
    z[v] = s;
  }
  softmax_inplace(z);
  return z;
}

StepDistribution ToyCueModel::next_distribution(const TokenSeq& input,
                                                const TokenSeq& prefix) const {
  StepDistribution d;
  d.probs = forward_from_embeddings(embeddings_for(joined_ids(input, prefix)));
  return d;
}

std::vector<std::vector<double>> ToyCueModel::embedding_grads(
    const std::vector<int>& ids, const ScalarTarget& target) const {
  target.check(vocab_);
  const auto xs = embeddings_for(ids);
  std::vector<double> alpha;
  const std::vector<double> p = forward_from_embeddings(xs, &alpha);
  const std::size_t n = xs.size();

  // Backprop through softmax(z), z = W^T h.
  const std::vector<double> gp = target.grad_probs(p);
  const double gp_dot_p = dot(gp, p);
  std::vector<double> gz(vocab_);
  for (int v = 0; v < vocab_; ++v) gz[v] = p[v] * (gp[v] - gp_dot_p);
  std::vector<double> gh(dim_, 0.0);
  for (int k = 0; k < dim_; ++k) {
    double s = 0.0;
    for (int v = 0; v < vocab_; ++v) s += W_.at(k, v) * gz[v];
    gh[k] = s;
  }

  std::vector<std::vector<double>> gx(n, std::vector<double>(dim_, 0.0));
  if (pooling_ == Pooling::Mean) {
    for (std::size_t j = 0; j < n; ++j)
      for (int k = 0; k < dim_; ++k) gx[j][k] = gh[k] / static_cast<double>(n);
    return gx;
  }

  // h = sum_j alpha_j x_j, alpha = softmax(beta * x_q . x_j), q the last
  // position. Direct term alpha_j * gh plus the score paths: with
  // m_j = x_j . gh and gs_j = alpha_j (m_j - sum_k alpha_k m_k),
  //   d/dx_j (j != q) += beta * gs_j * x_q
  //   d/dx_q += beta * sum_m gs_m * x_m + beta * gs_q * x_q
  // (the q self-score s_q = beta x_q . x_q contributes twice).
  const std::size_t q = n - 1;
  std::vector<double> m(n), gs(n);
  double mbar = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    m[j] = dot(xs[j], gh);
    mbar += alpha[j] * m[j];
  }
  for (std::size_t j = 0; j < n; ++j) gs[j] = alpha[j] * (m[j] - mbar);
  for (std::size_t j = 0; j < n; ++j)
    for (int k = 0; k < dim_; ++k) gx[j][k] = alpha[j] * gh[k];
  for (std::size_t j = 0; j + 1 < n; ++j)
    for (int k = 0; k < dim_; ++k) gx[j][k] += beta_ * gs[j] * xs[q][k];
  for (std::size_t mj = 0; mj < n; ++mj)
    for (int k = 0; k < dim_; ++k) gx[q][k] += beta_ * gs[mj] * xs[mj][k];
  for (int k = 0; k < dim_; ++k) gx[q][k] += beta_ * gs[q] * xs[q][k];
  return gx;
}

std::vector<double> ToyCueModel::gradient_norms(const TokenSeq& input,
                                                const TokenSeq& prefix,
                                                const ScalarTarget& target) const {
  const auto gx = embedding_grads(joined_ids(input, prefix), target);
  std::vector<double> norms(gx.size());
  for (std::size_t j = 0; j < gx.size(); ++j) norms[j] = std::sqrt(dot(gx[j], gx[j]));
  return norms;
}

AttentionTensor ToyCueModel::attention_weights(const TokenSeq& input,
                                               const TokenSeq& prefix) const {
  if (pooling_ != Pooling::PseudoAttention)
    throw CapabilityError("mean-pooling toy model has no attention");
  std::vector<double> alpha;
  forward_from_embeddings(embeddings_for(joined_ids(input, prefix)), &alpha);
  AttentionTensor t(1, 1, static_cast<int>(alpha.size()));
  for (std::size_t p = 0; p < alpha.size(); ++p) t.at(0, 0, static_cast<int>(p)) = alpha[p];
  return t;
}

InputPair ToyCueModel::probe_pair(std::size_t rule_idx) const {
  if (rule_idx >= probes_.size())
    throw ConfigError("no planted probe at index " + std::to_string(rule_idx));
  const PlantedProbe& pr = probes_[rule_idx];
  return make_input_pair(*this, pr.context, pr.current, separator_id_);
}

// ---------------------------------------------------------------------------
// Planted-cue factory.

namespace {

struct FactoryParams {
  double mu = 1.0;     // shared content direction coefficient
  double sr = 0.35;    // residual scale
  double sw = 0.8;     // projection weight scale
  double beta = 1.0;
  double chi = 100.0;  // suppressed-output strength
  double mf = 3.0;     // filler/separator negative attention coefficient
  double kq = 9.0;     // cue-to-trigger-query alignment (drawn per attempt)
};

struct CandidateState {
  Mat E, W;
  int dim = 0;
  std::vector<PlantedProbe> probes;
  std::vector<double> gammas;
};

// Forward pass on raw matrices; returns logits (pre-softmax) and alpha.
void raw_forward(const Mat& E, const Mat& W, double beta, const std::vector<int>& ids,
                 std::vector<double>* logits, std::vector<double>* alpha_out) {
  const int dim = E.cols;
  const std::size_t n = ids.size();
  std::vector<double> alpha(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += E.at(ids.back(), k) * E.at(ids[j], k);
    alpha[j] = beta * s;
  }
  softmax_inplace(alpha);
  std::vector<double> h(dim, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (int k = 0; k < dim; ++k) h[k] += alpha[j] * E.at(ids[j], k);
  logits->assign(W.cols, 0.0);
  for (int v = 0; v < W.cols; ++v) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += W.at(k, v) * h[k];
    (*logits)[v] = s;
  }
  if (alpha_out) *alpha_out = alpha;
}

std::vector<int> raw_greedy(const Mat& E, const Mat& W, double beta,
                            std::vector<int> ids, int steps) {
  std::vector<int> out;
  std::vector<double> z;
  for (int i = 0; i < steps; ++i) {
    raw_forward(E, W, beta, ids, &z, nullptr);
    const int w = argmax(z);
    out.push_back(w);
    ids.push_back(w);
  }
  return out;
}

}  // namespace

ToyCueModel make_planted_cue_model(int vocab, const std::vector<PlantedRule>& rules,
                                   std::uint64_t seed) {
  if (vocab < 8 || vocab > 62)
    throw ConfigError("planted factory supports 8 <= vocab <= 62");
  std::set<int> cues, flips, triggers;
  for (const PlantedRule& r : rules) {
    if (r.cue_token < 0 || r.cue_token >= vocab || r.flipped_token < 0 ||
        r.flipped_token >= vocab)
      throw VocabMismatchError("planted rule token outside vocab");
    if (r.trigger_pos < 0) throw ConfigError("trigger_pos must be >= 0");
    if (!triggers.insert(r.trigger_pos).second)
      throw ConfigError("duplicate trigger positions");
    if (!cues.insert(r.cue_token).second) throw ConfigError("duplicate cue tokens");
    if (r.cue_token == r.flipped_token)
      throw ConfigError("cue and flipped token must differ");
    flips.insert(r.flipped_token);
  }
  for (const PlantedRule& r : rules)
    if (cues.count(r.flipped_token))
      throw ConfigError("a rule's flipped token equals another rule's cue token");

  // Reserved separator and filler: highest ids not used by any rule.
  int brk_id = -1, filler_id = -1;
  for (int v = vocab - 1; v >= 0 && filler_id < 0; --v) {
    if (cues.count(v) || flips.count(v)) continue;
    if (brk_id < 0)
      brk_id = v;
    else
      filler_id = v;
  }
  std::vector<int> content_pool;
  for (int v = 0; v < vocab; ++v)
    if (v != brk_id && v != filler_id && !cues.count(v) && !flips.count(v))
      content_pool.push_back(v);
  if (brk_id < 0 || filler_id < 0 || content_pool.size() < 3)
    throw ConfigError("vocab too small for the requested rules");

  const int dim = vocab + 1;  // axis 0 shared, axis 1+v per token
  std::string last_failure = "no attempts made";

  for (int attempt = 0; attempt < 256; ++attempt) {
    Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt + 1)));
    FactoryParams P;
    P.kq = 8.0 + 3.0 * rng.uniform();

    Mat E(vocab, dim), W(dim, vocab);
    for (int v = 0; v < vocab; ++v) {
      const bool fill = (v == brk_id || v == filler_id);
      if (fill) {
        E.at(v, 0) = -P.mf;
      } else {
        E.at(v, 0) = P.mu;
        E.at(v, 1 + v) = P.sr;
      }
    }
    for (int v = 0; v < vocab; ++v) {
      const bool suppressed = (v == brk_id || v == filler_id || cues.count(v) > 0);
      if (suppressed) {
        W.at(0, v) = -P.chi;
      } else {
        for (int k = 1; k < dim; ++k) W.at(k, v) = P.sw * rng.gauss();
      }
    }
    for (int c : cues)
      for (int v = 0; v < vocab; ++v) W.at(1 + c, v) = 0.0;

    // Draw probes.
    std::vector<PlantedProbe> probes(rules.size());
    bool bad = false;
    for (std::size_t ri = 0; ri < rules.size(); ++ri) {
      PlantedProbe& pr = probes[ri];
      const int K = 6 + static_cast<int>(rng.below(4));
      pr.cue_slot = static_cast<int>(rng.below(static_cast<std::uint32_t>(K)));
      pr.context.assign(K, filler_id);
      pr.context[pr.cue_slot] = rules[ri].cue_token;
      pr.trigger_pos = rules[ri].trigger_pos;
      pr.flipped_token = rules[ri].flipped_token;
      const int xlen = 2 + static_cast<int>(rng.below(3));
      for (int i = 0; i < xlen; ++i)
        pr.current.push_back(
            content_pool[rng.below(static_cast<std::uint32_t>(content_pool.size()))]);
    }

    // Natural schedules (cue absent, so later edits to cue rows/columns
    // cannot change them except through the query-axis rows zeroed below).
    std::vector<std::vector<int>> sched(rules.size());
    std::set<int> qstars;
    for (std::size_t ri = 0; ri < rules.size() && !bad; ++ri) {
      const int n = rules[ri].trigger_pos + 1;
      sched[ri] = raw_greedy(E, W, P.beta, probes[ri].current, n);
      for (int u : sched[ri])
        if (flips.count(u)) bad = true;  // a flip must never occur naturally
      const int t = rules[ri].trigger_pos;
      qstars.insert(t > 0 ? sched[ri][t - 1] : probes[ri].current.back());
    }
    // Pre-trigger inputs must avoid every trigger-query token, so that
    // zeroing those rows leaves all pre-trigger steps bit-identical. Rules
    // triggering at step 0 have no pre-trigger steps to preserve.
    for (std::size_t ri = 0; ri < rules.size() && !bad; ++ri) {
      const int t = rules[ri].trigger_pos;
      if (t == 0) continue;
      for (int tok : probes[ri].current)
        if (qstars.count(tok)) bad = true;
      for (int i = 0; i + 1 < t; ++i)
        if (qstars.count(sched[ri][i])) bad = true;
    }
    if (bad) {
      last_failure = "schedule constraints violated";
      continue;
    }

    // Kill logit leakage of trigger-query axes, then re-simulate: only the
    // trigger step's natural winner may change.
    for (int q : qstars)
      for (int v = 0; v < vocab; ++v) W.at(1 + q, v) = 0.0;
    for (std::size_t ri = 0; ri < rules.size() && !bad; ++ri) {
      const int t = rules[ri].trigger_pos;
      const std::vector<int> resim =
          raw_greedy(E, W, P.beta, probes[ri].current, t + 1);
      for (int i = 0; i < t; ++i)
        if (resim[i] != sched[ri][i]) bad = true;
      sched[ri] = resim;
      probes[ri].natural_token = resim[t];
      if (flips.count(resim[t])) bad = true;
    }
    if (bad) {
      last_failure = "trigger-query axis zeroing disturbed a schedule";
      continue;
    }

    // Align each cue with its trigger query.
    for (std::size_t ri = 0; ri < rules.size(); ++ri) {
      const int t = rules[ri].trigger_pos;
      const int qstar = t > 0 ? sched[ri][t - 1] : probes[ri].current.back();
      E.at(rules[ri].cue_token, 1 + qstar) = P.kq;
    }

    // Solve each flip magnitude from its feasibility window.
    std::vector<double> gammas(rules.size(), 0.0);
    for (std::size_t ri = 0; ri < rules.size() && !bad; ++ri) {
      const int t = rules[ri].trigger_pos;
      const int f = rules[ri].flipped_token;
      const int cue = rules[ri].cue_token;
      std::vector<int> ids = probes[ri].context;
      ids.push_back(brk_id);
      ids.insert(ids.end(), probes[ri].current.begin(), probes[ri].current.end());
      double lo = 0.0, hi = std::numeric_limits<double>::infinity();
      std::vector<double> z, alpha;
      for (int i = 0; i <= t && !bad; ++i) {
        raw_forward(E, W, P.beta, ids, &z, &alpha);
        const double a_i = alpha[probes[ri].cue_slot] * P.sr;  // dz_f / dgamma
        double m = -std::numeric_limits<double>::infinity();
        for (int v = 0; v < vocab; ++v)
          if (v != f) m = std::max(m, z[v]);
        if (i < t) {
          if (argmax(z) != sched[ri][i]) {
            bad = true;
            break;
          }
          hi = std::min(hi, (m - z[f]) / a_i);
          ids.push_back(sched[ri][i]);
        } else {
          lo = (m - z[f]) / a_i;
        }
      }
      if (bad || lo <= 0.0 || hi < 1.5 * lo) {
        bad = true;
        last_failure = "empty flip feasibility window";
        continue;
      }
      gammas[ri] = std::isfinite(hi) ? std::min(2.0 * lo, std::sqrt(lo * hi)) : 2.0 * lo;
      W.at(1 + cue, f) = gammas[ri];
    }
    if (bad) continue;

    // Assemble and certify through the public interface.
    ToyCueModel model;
    model.vocab_ = vocab;
    model.dim_ = dim;
    model.pooling_ = ToyCueModel::Pooling::PseudoAttention;
    model.beta_ = P.beta;
    model.separator_id_ = brk_id;
    model.E_ = std::move(E);
    model.W_ = std::move(W);
    model.rules_ = rules;
    model.probes_ = probes;

    bool ok = true;
    for (std::size_t ri = 0; ri < rules.size() && ok; ++ri) {
      const int t = rules[ri].trigger_pos;
      const int n = t + 1;
      const InputPair pair = model.probe_pair(ri);
      DecodeConfig dc;
      dc.max_new_tokens = n;
      const TokenSeq y_hat = generate(model, pair.contextual, dc);
      const TokenSeq y_tilde = generate(model, pair.non_contextual, dc);
      for (int i = 0; i < t; ++i)
        ok = ok && y_hat.tokens[i] == sched[ri][i] && y_tilde.tokens[i] == sched[ri][i];
      ok = ok && y_hat.tokens[t] == rules[ri].flipped_token;
      ok = ok && y_tilde.tokens[t] == probes[ri].natural_token;
      if (!ok) {
        last_failure = "generation certificate failed";
        break;
      }

      const auto ctx_scores = force_decode_scores(model, pair.contextual, y_hat);
      const auto no_scores = force_decode_scores(model, pair.non_contextual, y_hat);
      std::vector<double> kl(n);
      for (int i = 0; i < n; ++i) kl[i] = kl_div(ctx_scores[i].probs, no_scores[i].probs);
      ok = ok && argmax(kl) == t;
      if (n >= 3) ok = ok && select_above(kl, 1.0) == std::set<int>{t};
      if (n >= 6) ok = ok && select_above(kl, 2.0) == std::set<int>{t};
      if (!ok) {
        last_failure = "KL certificate failed";
        break;
      }

      const TokenSeq prefix = y_hat.prefix(static_cast<std::size_t>(t));
      const StepDistribution p_no =
          checked_next_distribution(model, pair.non_contextual, prefix);
      const auto grads = model.gradient_norms(pair.contextual, prefix,
                                              ScalarTarget::kl_to_fixed(p_no.probs));
      const std::size_t n_ctx = pair.context_size();
      const std::vector<double> cscores(grads.begin(), grads.begin() + n_ctx);
      ok = ok && argmax(cscores) == probes[ri].cue_slot;
      ok = ok && select_above(cscores, 1.0) == std::set<int>{probes[ri].cue_slot};
      ok = ok && select_above(cscores, 2.0) == std::set<int>{probes[ri].cue_slot};
      if (!ok) {
        last_failure = "gradient certificate failed";
        break;
      }

      const AttentionTensor attn = model.attention_weights(pair.contextual, prefix);
      ok = ok && argmax(attn.slice(0, 0)) == probes[ri].cue_slot;
      if (!ok) last_failure = "attention certificate failed";
    }
    if (ok) return model;
  }
  throw PlantInfeasibleError("planted-cue construction failed after 256 attempts: " +
                             last_failure);
}

}  // namespace pecore
