#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pecore/toy_model.hpp"

using namespace pecore;

namespace {

// dim x vocab projection of zeros: every step is uniform, argmax ties at 0.
ToyCueModel uniform_model(int vocab, int dim) {
  Mat E(vocab, dim);
  Rng rng(99);
  for (double& v : E.a) v = rng.gauss();
  return ToyCueModel::from_weights(E, Mat(dim, vocab), ToyCueModel::Pooling::Mean);
}

}  // namespace

TEST_CASE("TokenSeq prefix and concat") {
  ToyCueModel m(16, 6, 3);
  const TokenSeq ab = m.detokenize({10, 11});
  CHECK(ab.text == "10 11");
  const TokenSeq p1 = ab.prefix(1);
  CHECK(p1.tokens == std::vector<int>{10});
  CHECK(p1.text == "10");
  CHECK(ab.prefix(0).empty());
  CHECK(ab.prefix(5).tokens == ab.tokens);

  const TokenSeq c = TokenSeq::concat(ab, m.detokenize({3}));
  CHECK(c.tokens == std::vector<int>{10, 11, 3});
  CHECK(c.text == "10 11 3");
  c.check(16);

  TokenSeq bad = c;
  bad.offsets[2].end = 99;
  CHECK_THROWS_AS(bad.check(), Error);
  CHECK_THROWS_AS(c.check(4), VocabMismatchError);
}

TEST_CASE("InputPair invariants") {
  ToyCueModel m(16, 6, 3);
  InputPair pair = make_input_pair(m, {1, 2}, {3, 4}, 5);
  CHECK(pair.contextual.tokens == std::vector<int>{1, 2, 5, 3, 4});
  CHECK(pair.context_mask == std::vector<bool>{true, true, true, false, false});
  CHECK(pair.non_contextual.tokens == std::vector<int>{3, 4});
  CHECK(pair.has_context());
  CHECK(pair.context_size() == 3);
  CHECK(pair.context_positions() == std::vector<int>{0, 1, 2});
  pair.check();

  // no separator when separator_id < 0
  InputPair flat = make_input_pair(m, {1, 2}, {3, 4});
  CHECK(flat.contextual.tokens == std::vector<int>{1, 2, 3, 4});
  CHECK(flat.context_size() == 2);

  InputPair empty = make_input_pair(m, {}, {3, 4}, 5);
  CHECK_FALSE(empty.has_context());
  CHECK(empty.contextual.tokens == empty.non_contextual.tokens);

  CHECK_THROWS_AS(make_input_pair(m, {1}, {}, 5), LengthError);

  InputPair broken = pair;
  broken.context_mask[0] = false;
  CHECK_THROWS_AS(broken.check(), Error);
}

TEST_CASE("ScalarTarget evaluate and grad") {
  const std::vector<double> p = {0.1, 0.2, 0.7};

  const ScalarTarget tp = ScalarTarget::token_prob(2);
  CHECK(tp.evaluate(p) == doctest::Approx(0.7));
  CHECK(tp.grad_probs(p) == std::vector<double>{0.0, 0.0, 1.0});

  const ScalarTarget tc = ScalarTarget::token_prob_minus_const(1, 0.3);
  CHECK(tc.evaluate(p) == doctest::Approx(-0.1));
  CHECK(tc.grad_probs(p)[1] == 1.0);

  const ScalarTarget kl = ScalarTarget::kl_to_fixed({0.2, 0.2, 0.6});
  const double expect = 0.1 * std::log(0.5) + 0.2 * std::log(1.0) + 0.7 * std::log(0.7 / 0.6);
  CHECK(kl.evaluate(p) == doctest::Approx(expect).epsilon(1e-12));
  // d/dp_v = ln(p_v / q_v) + 1 on the support
  CHECK(kl.grad_probs(p)[0] == doctest::Approx(std::log(0.5) + 1.0));
  CHECK(kl.evaluate({0.2, 0.2, 0.6}) == doctest::Approx(0.0));

  CHECK_THROWS_AS(ScalarTarget::token_prob(5).check(3), VocabMismatchError);
  CHECK_THROWS_AS(ScalarTarget::kl_to_fixed({0.5, 0.5}).check(3), VocabMismatchError);
}

TEST_CASE("AttentionTensor shape, slices, mean") {
  AttentionTensor t(2, 2, 3);
  for (int l = 0; l < 2; ++l)
    for (int h = 0; h < 2; ++h) {
      t.at(l, h, 0) = 0.5;
      t.at(l, h, 1) = 0.25;
      t.at(l, h, 2) = 0.25;
    }
  t.at(1, 1, 0) = 0.1;
  t.at(1, 1, 1) = 0.1;
  t.at(1, 1, 2) = 0.8;
  t.check();
  CHECK(t.slice(1, 1) == std::vector<double>{0.1, 0.1, 0.8});
  const std::vector<double> mean = t.mean_all();
  CHECK(mean[0] == doctest::Approx((0.5 * 3 + 0.1) / 4));
  CHECK(mean[2] == doctest::Approx((0.25 * 3 + 0.8) / 4));

  AttentionTensor bad = t;
  bad.at(0, 1, 2) = 0.9;
  CHECK_THROWS_AS(bad.check(), Error);
}

TEST_CASE("generate: planted flip, ties, eos, budget") {
  const ToyCueModel m = make_planted_cue_model(24, {{3, 6, 9}}, 1);
  const PlantedProbe& probe = m.probes()[0];
  const InputPair pair = m.probe_pair(0);
  DecodeConfig cfg;
  cfg.max_new_tokens = probe.trigger_pos + 2;

  const TokenSeq with_cue = generate(m, pair.contextual, cfg);
  const TokenSeq without = generate(m, pair.non_contextual, cfg);
  CHECK(with_cue.tokens[probe.trigger_pos] == probe.flipped_token);
  CHECK(without.tokens[probe.trigger_pos] == probe.natural_token);
  for (int i = 0; i < probe.trigger_pos; ++i)
    CHECK(with_cue.tokens[i] == without.tokens[i]);

  // all-zero projection: uniform everywhere, ties break toward id 0
  const ToyCueModel u = uniform_model(8, 4);
  DecodeConfig short_cfg;
  short_cfg.max_new_tokens = 3;
  const TokenSeq flat = generate(u, u.detokenize({1, 2}), short_cfg);
  CHECK(flat.tokens == std::vector<int>{0, 0, 0});

  short_cfg.eos_token = 0;
  CHECK(generate(u, u.detokenize({1, 2}), short_cfg).size() == 1);

  DecodeConfig zero;
  zero.max_new_tokens = 0;
  CHECK_THROWS_AS(generate(m, pair.contextual, zero), LengthError);
}

TEST_CASE("checked_next_distribution validates both directions") {
  ToyCueModel m(12, 6, 4);
  const TokenSeq in = m.detokenize({1, 2, 3});
  const StepDistribution d = checked_next_distribution(m, in, {});
  CHECK(d.probs.size() == 12);
  double sum = 0.0;
  for (double p : d.probs) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

  TokenSeq bad = in;
  bad.tokens[1] = 50;
  CHECK_THROWS_AS(checked_next_distribution(m, bad, {}), VocabMismatchError);
  CHECK_THROWS_AS(checked_next_distribution(m, {}, {}), LengthError);
}

TEST_CASE("force_decode_scores equals stepwise next_distribution") {
  ToyCueModel m(16, 8, 5);
  const TokenSeq in = m.detokenize({1, 2, 3});
  const TokenSeq tgt = m.detokenize({4, 5, 6});
  const auto scores = force_decode_scores(m, in, tgt);
  REQUIRE(scores.size() == 3);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    CHECK(scores[i].step_index == static_cast<int>(i));
    const StepDistribution d = checked_next_distribution(m, in, tgt.prefix(i));
    CHECK(scores[i].probs == d.probs);
  }
}

TEST_CASE("distributions normalize across random inputs") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    ToyCueModel m(10, 5, rng.next());
    std::vector<int> ids(1 + rng.below(6));
    for (int& id : ids) id = static_cast<int>(rng.below(10));
    const StepDistribution d = checked_next_distribution(m, m.detokenize(ids), {});
    d.check();
  }
}

TEST_CASE("capability defaults reject unsupported queries") {
  ToyCueModel mean(12, 6, 4, ToyCueModel::Pooling::Mean);
  CHECK(mean.capabilities().gradients);
  CHECK_FALSE(mean.capabilities().attention);
  CHECK_THROWS_AS(mean.attention_weights(mean.detokenize({1, 2}), {}), CapabilityError);

  ToyCueModel attn(12, 6, 4);
  CHECK(attn.capabilities().attention);
  const AttentionTensor t = attn.attention_weights(attn.detokenize({1, 2, 3}), {});
  CHECK(t.layers == 1);
  CHECK(t.heads == 1);
  CHECK(t.positions == 3);
  t.check();
}
