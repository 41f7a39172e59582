#include "pecore/cti.hpp"

#include <algorithm>
#include <cmath>

#include "pecore/toy_model.hpp"

namespace pecore {

namespace {
constexpr double kEps = 1e-12;
}

double metric_prob_diff(double p_ctx, double p_noctx) { return p_ctx - p_noctx; }

double metric_lr(double p_ctx, double p_noctx) {
  return p_ctx / std::max(p_ctx + p_noctx, kEps);
}

double metric_pcxmi(double p_ctx, double p_noctx, bool sign_flip) {
  const double v = -std::log(std::max(p_ctx, kEps) / std::max(p_noctx, kEps));
  return sign_flip ? -v : v;
}

double metric_kl(const std::vector<double>& p_ctx, const std::vector<double>& p_noctx) {
  if (p_ctx.size() != p_noctx.size())
    throw VocabMismatchError("KL over distributions of different arity");
  double kl = 0.0;
  for (std::size_t v = 0; v < p_ctx.size(); ++v)
    if (p_ctx[v] > 0.0) kl += p_ctx[v] * std::log(p_ctx[v] / std::max(p_noctx[v], kEps));
  return kl;
}

double metric_context_saliency(const std::vector<double>& grad_norms,
                               const std::vector<bool>& context_mask) {
  if (grad_norms.size() != context_mask.size())
    throw Error("saliency: norms/mask length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < grad_norms.size(); ++i) {
    if (grad_norms[i] < 0.0) throw Error("saliency: negative gradient norm");
    den += grad_norms[i];
    if (context_mask[i]) num += grad_norms[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

std::set<int> std_selector(const std::vector<double>& scores, double k) {
  if (k < 0.0) throw ConfigError("selector k must be >= 0");
  std::set<int> out;
  if (scores.empty()) return out;
  const double n = static_cast<double>(scores.size());
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double thr = mean + k * std::sqrt(var / n);
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] > thr) out.insert(static_cast<int>(i));
  return out;
}

std::set<int> stratified_random_baseline(std::size_t n, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) throw ConfigError("baseline rate must be in [0, 1]");
  Rng rng(seed);
  std::set<int> out;
  for (std::size_t i = 0; i < n; ++i)
    if (rng.uniform() < rate) out.insert(static_cast<int>(i));
  return out;
}

bool is_cti_metric(const std::string& name) {
  return name == "prob_diff" || name == "lr" || name == "pcxmi" || name == "kl" ||
         name == "ctx_saliency";
}

std::vector<double> CTIResult::column(const std::string& metric) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const MetricScoreRow& r : rows) {
    auto it = r.scores.find(metric);
    if (it == r.scores.end())
      throw ConfigError("metric " + metric + " was not computed");
    out.push_back(it->second);
  }
  return out;
}

CTIResult run_cti(const GenerativeModel& model, const InputPair& pair,
                  const TokenSeq& y_hat, const CtiOptions& options) {
  pair.check();
  if (options.selector.k < 0.0) throw ConfigError("selector k must be >= 0");
  std::set<std::string> metrics = options.metrics;
  metrics.insert(options.selector.metric);
  for (const std::string& m : metrics)
    if (!is_cti_metric(m)) throw ConfigError("unknown CTI metric: " + m);

  const bool want_dist = metrics.count("prob_diff") || metrics.count("lr") ||
                         metrics.count("pcxmi") || metrics.count("kl");
  const bool want_sal = metrics.count("ctx_saliency") > 0;

  std::vector<StepDistribution> ctx, noctx;
  if (want_dist || want_sal) {
    ctx = force_decode_scores(model, pair.contextual, y_hat);
    noctx = force_decode_scores(model, pair.non_contextual, y_hat);
  }

  CTIResult res;
  res.target = y_hat;
  res.selector = options.selector;
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    MetricScoreRow row;
    row.step = static_cast<int>(i);
    const int tok = y_hat.tokens[i];
    const double pc = ctx[i].probs[tok];
    const double pn = noctx[i].probs[tok];
    if (metrics.count("prob_diff")) row.scores["prob_diff"] = metric_prob_diff(pc, pn);
    if (metrics.count("lr")) row.scores["lr"] = metric_lr(pc, pn);
    if (metrics.count("pcxmi"))
      row.scores["pcxmi"] = metric_pcxmi(pc, pn, options.pcxmi_sign_flip);
    if (metrics.count("kl")) row.scores["kl"] = metric_kl(ctx[i].probs, noctx[i].probs);
    if (want_sal) {
      // Gradient mass the forced token's probability puts on the context.
      const std::vector<double> norms = model.gradient_norms(
          pair.contextual, y_hat.prefix(i), ScalarTarget::token_prob(tok));
      std::vector<bool> mask = pair.context_mask;
      mask.resize(norms.size(), false);
      row.scores["ctx_saliency"] = metric_context_saliency(norms, mask);
    }
    res.rows.push_back(std::move(row));
  }
  res.selected = std_selector(res.column(options.selector.metric), options.selector.k);
  return res;
}

}  // namespace pecore
