// Acceptance gate: one line per criterion, first failure aborts with a
// positioned message. Tolerances and runtime budgets are part of the
// contract, so they are pinned here rather than shared with the unit suites.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "pecore/datasets.hpp"
#include "pecore/evalkit.hpp"
#include "pecore/json_io.hpp"
#include "pecore/pipeline.hpp"
#include "pecore/render.hpp"
#include "pecore/toy_model.hpp"

namespace {

// Always-on requirement: never compiled out in Release.
#define REQUIRE(cond, msg)                                                      \
    do {                                                                        \
        if (!(cond)) {                                                          \
            std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << msg \
                      << "\n";                                                  \
            std::exit(1);                                                       \
        }                                                                       \
    } while (0)

using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void pass(int criterion, const std::string& what, double seconds) {
  std::cout << "[PASS] " << criterion << ". " << what << " ("
            << static_cast<long>(seconds * 1000.0 + 0.5) << " ms)\n";
}

std::vector<double> random_simplex(pecore::Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  double sum = 0.0;
  for (double& x : p) {
    x = -std::log(1.0 - rng.uniform());
    sum += x;
  }
  for (double& x : p) x /= sum;
  return p;
}

// ---------------------------------------------------------------------------
// 1. metric fixed points on random pairs and self-pairs

void criterion1() {
  const auto t0 = Clock::now();
  pecore::Rng rng(1001);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(15);
    const std::vector<double> p = random_simplex(rng, n);
    const std::vector<double> q = random_simplex(rng, n);
    const int tok = static_cast<int>(rng.below(static_cast<std::uint32_t>(n)));

    REQUIRE(pecore::metric_kl(p, q) >= 0.0, "kl must be non-negative");
    const double lr = pecore::metric_lr(p[tok], q[tok]);
    REQUIRE(lr >= 0.0 && lr <= 1.0, "lr outside [0,1]");

    REQUIRE(std::abs(pecore::metric_kl(p, p)) <= 1e-12, "self kl not 0");
    REQUIRE(pecore::metric_prob_diff(p[tok], p[tok]) == 0.0, "self prob_diff not 0");
    REQUIRE(std::abs(pecore::metric_pcxmi(p[tok], p[tok])) <= 1e-12, "self pcxmi not 0");
    REQUIRE(std::abs(pecore::metric_lr(p[tok], p[tok]) - 0.5) <= 1e-12,
            "self lr not 0.5");
  }
  const double dt = elapsed_s(t0);
  REQUIRE(dt < 1.0, "criterion 1 over budget");
  pass(1, "metric fixed points on 1000 random pairs and self-pairs", dt);
}

// ---------------------------------------------------------------------------
// 2. KL oracle: hand value plus term-by-term summation

double kl_term_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    sum += p[i] * std::log(p[i] / std::max(q[i], 1e-12));
  }
  return sum;
}

void criterion2() {
  const auto t0 = Clock::now();
  const double hand = pecore::metric_kl({0.7, 0.2, 0.1}, {0.1, 0.2, 0.7});
  REQUIRE(std::abs(hand - 0.6 * std::log(7.0)) <= 1e-9, "kl hand value off");

  pecore::Rng rng(1002);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(15);
    std::vector<double> p = random_simplex(rng, n);
    const std::vector<double> q = random_simplex(rng, n);
    if (trial % 3 == 0) {
      // push some exact zeros through the p = 0 convention
      p[rng.below(static_cast<std::uint32_t>(n))] = 0.0;
    }
    REQUIRE(std::abs(pecore::metric_kl(p, q) - kl_term_oracle(p, q)) <= 1e-9,
            "kl disagrees with summation oracle");
  }
  pass(2, "KL hand value and 1000-pair summation oracle", elapsed_s(t0));
}

// ---------------------------------------------------------------------------
// 3. gradient correctness against central finite differences

double fd_norm(const pecore::ToyCueModel& m, const std::vector<int>& ids,
               const pecore::ScalarTarget& tgt, std::size_t pos) {
  const double h = 1e-5;
  auto xs = m.embeddings_for(ids);
  double sq = 0.0;
  for (int k = 0; k < m.dim(); ++k) {
    auto xp = xs;
    xp[pos][k] += h;
    auto xm = xs;
    xm[pos][k] -= h;
    const double fd = (tgt.evaluate(m.forward_from_embeddings(xp)) -
                       tgt.evaluate(m.forward_from_embeddings(xm))) /
                      (2.0 * h);
    sq += fd * fd;
  }
  return std::sqrt(sq);
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-8);
}

void criterion3() {
  const auto t0 = Clock::now();
  pecore::Rng rng(1003);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const int vocab = 6 + static_cast<int>(rng.below(10));
    const int dim = 3 + static_cast<int>(rng.below(6));
    const auto pooling = inst % 2 ? pecore::ToyCueModel::Pooling::Mean
                                  : pecore::ToyCueModel::Pooling::PseudoAttention;
    const pecore::ToyCueModel m(vocab, dim, 9000 + inst, pooling,
                                0.5 + 2.0 * rng.uniform());

    std::vector<int> ids(3 + rng.below(5));
    for (int& id : ids) id = static_cast<int>(rng.below(vocab));
    pecore::ScalarTarget tgt = pecore::ScalarTarget::token_prob(
        static_cast<int>(rng.below(vocab)));
    if (inst % 3 == 1)
      tgt = pecore::ScalarTarget::token_prob_minus_const(
          static_cast<int>(rng.below(vocab)), rng.uniform());
    if (inst % 3 == 2)
      tgt = pecore::ScalarTarget::kl_to_fixed(random_simplex(rng, vocab));

    const std::vector<double> norms =
        m.gradient_norms(m.detokenize(ids), pecore::TokenSeq{}, tgt);
    for (std::size_t j = 0; j < ids.size(); ++j)
      worst = std::max(worst, rel_err(norms[j], fd_norm(m, ids, tgt, j)));

    // the contrastive path reconstructs its target from public operations
    std::vector<int> ctx(2 + rng.below(3)), cur(2 + rng.below(3));
    for (int& id : ctx) id = static_cast<int>(rng.below(vocab));
    for (int& id : cur) id = static_cast<int>(rng.below(vocab));
    const pecore::InputPair pair =
        pecore::make_input_pair(m, ctx, cur, m.separator_id());
    const pecore::TokenSeq prefix = m.detokenize({static_cast<int>(rng.below(vocab))});
    const std::string tgt_fn = inst % 2 ? "kl" : "prob_diff";
    const int token = static_cast<int>(rng.below(vocab));
    const pecore::AttributionMap map =
        pecore::attribute_contrastive_grad(m, pair, prefix, token, tgt_fn);

    const pecore::StepDistribution p_no =
        pecore::checked_next_distribution(m, pair.non_contextual, prefix);
    const pecore::ScalarTarget mirror =
        tgt_fn == "kl"
            ? pecore::ScalarTarget::kl_to_fixed(p_no.probs)
            : pecore::ScalarTarget::token_prob_minus_const(token, p_no.probs[token]);
    std::vector<int> full = pair.contextual.tokens;
    full.insert(full.end(), prefix.tokens.begin(), prefix.tokens.end());
    for (std::size_t j = 0; j < full.size(); ++j)
      worst = std::max(worst, rel_err(map.scores[j], fd_norm(m, full, mirror, j)));
  }
  const double dt = elapsed_s(t0);
  REQUIRE(worst < 1e-4, "finite-difference relative error too large");
  REQUIRE(dt < 30.0, "criterion 3 over budget");
  pass(3, "gradients vs central finite differences, 100 instances", dt);
}

// ---------------------------------------------------------------------------
// 4. planted-cue end-to-end recovery

void criterion4() {
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const pecore::ToyCueModel m = pecore::make_planted_cue_model(24, {{3, 6, 9}}, seed);
    const pecore::PlantedProbe& probe = m.probes()[0];
    pecore::PecoreConfig cfg;
    cfg.decode.max_new_tokens = 8;
    const pecore::PecoreResult res = pecore::run_pecore(m, m.probe_pair(0), cfg);

    std::vector<bool> gold(res.y_hat.size(), false);
    gold[probe.trigger_pos] = true;
    std::vector<bool> pred(res.y_hat.size(), false);
    for (int t : res.cti.selected) pred[t] = true;
    REQUIRE(pecore::eval::token_macro_f1(gold, pred) == 1.0, "CTI F1 below 1");

    REQUIRE(!res.pairs.empty(), "no cue-target pair recovered");
    const auto top = std::max_element(
        res.pairs.begin(), res.pairs.end(),
        [](const auto& a, const auto& b) { return a.cue_score < b.cue_score; });
    REQUIRE(top->cue_position == probe.cue_slot, "top-1 cue misses the planted slot");
    REQUIRE(top->target_step == probe.trigger_pos, "pair target off the trigger");
  }
  const double dt = elapsed_s(t0);
  REQUIRE(dt < 60.0, "criterion 4 over budget");
  pass(4, "planted cue-target recovery over 50 seeded models", dt);
}

// ---------------------------------------------------------------------------
// 5. pipeline equals the naive composition of public operations

pecore::PecoreResult naive_compose(const pecore::GenerativeModel& model,
                                   const pecore::InputPair& pair,
                                   const pecore::PecoreConfig& cfg) {
  pecore::PecoreResult r;
  r.config = cfg;
  r.input = pair;
  r.y_hat = pecore::generate(model, pair.contextual, cfg.decode);
  r.y_tilde = pecore::generate(model, pair.non_contextual, cfg.decode);

  pecore::CtiOptions cti_opts;
  cti_opts.metrics = cfg.cti_metrics;
  cti_opts.selector = {cfg.cti_metric, cfg.cti_k};
  cti_opts.pcxmi_sign_flip = cfg.pcxmi_sign_flip;
  r.cti = pecore::run_cti(model, pair, r.y_hat, cti_opts);

  pecore::CciOptions cci_opts;
  cci_opts.method = cfg.cci_method;
  cci_opts.tgt_fn = cfg.cci_tgt_fn;
  cci_opts.k = cfg.cci_k;
  cci_opts.head = cfg.attn_head;
  const std::vector<double> col = r.cti.column(cfg.cti_metric);
  r.pairs = pecore::run_cci(model, pair, r.y_hat, r.cti.selected, cci_opts,
                            &r.attribution_maps, &col);

  if (cfg.compute_y_star) {
    for (int t : r.cti.selected) {
      pecore::DecodeConfig cont = cfg.decode;
      cont.max_new_tokens = std::max(1, cfg.decode.max_new_tokens - t);
      r.y_star[t] = pecore::constrained_continuation(
          model, pair.non_contextual, r.y_hat.prefix(static_cast<std::size_t>(t)),
          cont);
    }
  }
  return r;
}

void criterion5() {
  const auto t0 = Clock::now();
  pecore::Rng rng(1005);
  for (int inst = 0; inst < 50; ++inst) {
    pecore::PecoreConfig cfg =
        inst % 2 ? pecore::PecoreConfig::benchmark_preset() : pecore::PecoreConfig{};
    cfg.decode.max_new_tokens = 6;
    if (inst % 5 == 3) cfg.pcxmi_sign_flip = true;
    if (inst % 7 == 4) {
      cfg.cci_method = "attn_mean";
      cfg.cci_tgt_fn.clear();
    }

    if (inst < 25) {
      const pecore::ToyCueModel m =
          pecore::make_planted_cue_model(24, {{3, 6, 9}}, 200 + inst);
      cfg.decode.max_new_tokens = 8;
      const pecore::InputPair pair = m.probe_pair(0);
      REQUIRE(pecore::io::dumps(pecore::run_pecore(m, pair, cfg)) ==
                  pecore::io::dumps(naive_compose(m, pair, cfg)),
              "pipeline diverges from naive composition (planted)");
    } else {
      const pecore::ToyCueModel m(14, 7, 300 + inst);
      std::vector<int> ctx(3), cur(3);
      for (int& id : ctx) id = static_cast<int>(rng.below(13));
      for (int& id : cur) id = static_cast<int>(rng.below(13));
      const pecore::InputPair pair =
          pecore::make_input_pair(m, ctx, cur, m.separator_id());
      REQUIRE(pecore::io::dumps(pecore::run_pecore(m, pair, cfg)) ==
                  pecore::io::dumps(naive_compose(m, pair, cfg)),
              "pipeline diverges from naive composition (random)");
    }
  }
  pass(5, "bit-identical serialization vs naive composition, 50 instances",
       elapsed_s(t0));
}

// ---------------------------------------------------------------------------
// 6. evaluation oracles

double auprc_sweep_oracle(const std::vector<bool>& gold,
                          const std::vector<double>& scores) {
  long total_pos = 0;
  for (bool g : gold) total_pos += g;
  if (total_pos == 0) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  double area = 0.0, prev_recall = 0.0;
  for (double th : thresholds) {
    long tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= th) {
        tp += gold[i];
        fp += !gold[i];
      }
    }
    const double recall = static_cast<double>(tp) / total_pos;
    area += static_cast<double>(tp) / (tp + fp) * (recall - prev_recall);
    prev_recall = recall;
  }
  return area;
}

void criterion6() {
  const auto t0 = Clock::now();
  REQUIRE(std::abs(pecore::eval::token_macro_f1({false, true, false, false},
                                                {false, true, true, false}) -
                   (0.8 + 2.0 / 3.0) / 2.0) <= 1e-9,
          "macro F1 hand value off");
  REQUIRE(std::abs(pecore::eval::auprc({false, true, true}, {0.9, 0.8, 0.1}) -
                   (0.25 + 1.0 / 3.0)) <= 1e-9,
          "auprc hand value off");

  pecore::Rng rng(1006);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(14);
    std::vector<bool> gold(n);
    std::vector<double> scores(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = rng.uniform() < 0.4;
      any = any || gold[i];
      scores[i] = static_cast<double>(rng.below(6)) / 5.0;
    }
    if (!any) {
      REQUIRE(std::isnan(pecore::eval::auprc(gold, scores)),
              "auprc should be undefined without positives");
      continue;
    }
    REQUIRE(std::abs(pecore::eval::auprc(gold, scores) -
                     auprc_sweep_oracle(gold, scores)) <= 1e-9,
            "auprc disagrees with threshold sweep");
  }
  pass(6, "evaluation hand values and 1000-instance AUPRC sweep", elapsed_s(t0));
}

// ---------------------------------------------------------------------------
// 7. selector fixtures and affine invariance

void criterion7() {
  const auto t0 = Clock::now();
  REQUIRE(pecore::std_selector({0.1, 0.1, 0.1, 0.9}, 1.0) == std::set<int>{3},
          "selector fixture 1 off");
  REQUIRE(pecore::std_selector({1.0, 2.0, 3.0}, 0.0) == std::set<int>{2},
          "selector fixture 2 off");
  REQUIRE(pecore::std_selector({0.4, 0.4, 0.4}, 0.0).empty(),
          "constant scores must select nothing");
  REQUIRE(pecore::std_selector({}, 2.0).empty(), "empty input must select nothing");

  pecore::Rng rng(1007);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(10);
    std::vector<double> scores(n);
    for (double& s : scores) s = rng.gauss();
    const double k = 2.0 * rng.uniform();
    const double a = 0.1 + 3.0 * rng.uniform();
    const double b = 10.0 * (rng.uniform() - 0.5);
    std::vector<double> mapped(n);
    for (std::size_t i = 0; i < n; ++i) mapped[i] = a * scores[i] + b;
    REQUIRE(pecore::std_selector(scores, k) == pecore::std_selector(mapped, k),
            "selection not affine invariant");
  }
  pass(7, "selector fixtures and 100 affine-invariance checks", elapsed_s(t0));
}

// ---------------------------------------------------------------------------
// 8. tag parsing round-trip and malformation classes

void criterion8() {
  const auto t0 = Clock::now();
  pecore::Rng rng(1008);
  const std::string alphabet = "abcdef gh";
  for (int trial = 0; trial < 1000; ++trial) {
    std::string clean;
    const std::size_t len = 6 + rng.below(30);
    for (std::size_t i = 0; i < len; ++i)
      clean += alphabet[rng.below(static_cast<std::uint32_t>(alphabet.size()))];
    std::vector<pecore::Span> targets, cues;
    std::size_t at = 0;
    while (at + 2 < clean.size() && rng.uniform() < 0.6) {
      const std::size_t b = at + rng.below(3);
      const std::size_t e = std::min(clean.size(), b + 1 + rng.below(4));
      if (b >= e) break;
      (rng.uniform() < 0.5 ? targets : cues).emplace_back(b, e);
      at = e + rng.below(3);
    }
    const pecore::data::ParsedTags back =
        pecore::data::parse_tagged(pecore::data::render_tagged(clean, targets, cues));
    REQUIRE(back.clean == clean, "round-trip changed the clean text");
    REQUIRE(back.target_spans == targets && back.cue_spans == cues,
            "round-trip changed the spans");
  }

  const std::vector<std::pair<std::string, std::size_t>> malformed = {
      {"a <p>b", 2},          // unbalanced: open without close
      {"<p>a <p>b</p></p>", 5},  // nested open
      {"<p>a<hoff> b", 4},    // interleaved close of the other scheme
  };
  for (const auto& [text, offset] : malformed) {
    bool caught = false;
    try {
      pecore::data::parse_tagged(text);
    } catch (const pecore::TagError& e) {
      caught = true;
      REQUIRE(e.offset == offset, "malformation reported at the wrong byte");
    }
    REQUIRE(caught, "malformed input accepted");
  }
  pass(8, "1000 tag round-trips and positioned malformation errors", elapsed_s(t0));
}

// ---------------------------------------------------------------------------
// 9. ok / ok_cs protocol

void criterion9() {
  const auto t0 = Clock::now();
  const pecore::eval::AccuracyResult fixed = pecore::eval::disambiguation_accuracy(
      {"le chat noir", "le chat noir", "le chat noir"},
      {{pecore::Span(8, 12)}, {pecore::Span(8, 12)}, {pecore::Span(8, 12)}},
      {"un chat noir", "le noir aussi", "le blanc"},
      {"un chat blanc", "noir encore", "le gris"});
  REQUIRE(fixed.n == 3 && fixed.n_ok == 2 && fixed.n_ok_cs == 1,
          "definitional ok/ok_cs cases misclassified");

  pecore::Rng rng(1009);
  const std::vector<std::string> dict = {"noir", "blanc", "chat", "elle"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> refs, ctx, noctx;
    std::vector<std::vector<pecore::Span>> gold;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& w = dict[rng.below(4)];
      refs.push_back("x " + w);
      gold.push_back({pecore::Span(2, 2 + w.size())});
      ctx.push_back(rng.uniform() < 0.5 ? w + " y" : "y");
      noctx.push_back(rng.uniform() < 0.5 ? w + " z" : "z");
    }
    const pecore::eval::AccuracyResult r =
        pecore::eval::disambiguation_accuracy(refs, gold, ctx, noctx);
    REQUIRE(r.ok_cs <= r.ok && r.n_ok_cs <= r.n_ok, "ok_cs exceeded ok");
  }
  pass(9, "ok/ok_cs fixtures and 200 dominance checks", elapsed_s(t0));
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  std::cout << "[SKIP] 10. optional pretrained-model integration: no offline "
               "checkpoint in this environment; adapter plumbing is exercised by "
               "criteria 3-5 (non-gating)\n";
  std::cout << "acceptance: all gating criteria passed\n";
  return 0;
}
