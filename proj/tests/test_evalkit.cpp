#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pecore/evalkit.hpp"
#include "pecore/pipeline.hpp"
#include "pecore/toy_model.hpp"

using namespace pecore;
using namespace pecore::eval;

namespace {

// Threshold-sweep oracle: recomputes precision/recall from scratch at every
// distinct score instead of walking a sorted order.
double auprc_bruteforce(const std::vector<bool>& gold, const std::vector<double>& scores) {
  long total_pos = 0;
  for (bool g : gold) total_pos += g;
  if (total_pos == 0) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
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
    const double precision = static_cast<double>(tp) / (tp + fp);
    area += precision * (recall - prev_recall);
    prev_recall = recall;
  }
  return area;
}

}  // namespace

TEST_CASE("token_macro_f1 hand values and conventions") {
  CHECK(token_macro_f1({false, true, false, false}, {false, true, true, false}) ==
        doctest::Approx((0.8 + 2.0 / 3.0) / 2.0).epsilon(1e-9));
  CHECK(token_macro_f1({true, false, true}, {true, false, true}) == 1.0);
  // positives absent from both sides score a vacuous 1 for that class
  CHECK(token_macro_f1({false, false}, {false, false}) == 1.0);
  CHECK(token_macro_f1({true, true}, {true, true}) == 1.0);
  // fully inverted prediction: both classes collapse to 0
  CHECK(token_macro_f1({true, false}, {false, true}) == 0.0);
  CHECK_THROWS_AS(token_macro_f1({true}, {true, false}), Error);

  // joint permutations leave the score unchanged
  const std::vector<bool> gold = {true, false, false, true, false};
  const std::vector<bool> pred = {true, true, false, false, false};
  const std::vector<int> perm = {4, 2, 0, 1, 3};
  std::vector<bool> g2(5), p2(5);
  for (int i = 0; i < 5; ++i) {
    g2[i] = gold[perm[i]];
    p2[i] = pred[perm[i]];
  }
  CHECK(token_macro_f1(gold, pred) == token_macro_f1(g2, p2));
}

TEST_CASE("auprc fixtures") {
  CHECK(auprc({false, true, true}, {0.9, 0.8, 0.1}) ==
        doctest::Approx(0.25 + 1.0 / 3.0).epsilon(1e-9));
  CHECK(auprc({true, true, false}, {0.9, 0.8, 0.1}) == 1.0);
  CHECK(std::isnan(auprc({false, false}, {0.5, 0.2})));
  // equal scores are one block
  CHECK(auprc({true, false}, {0.5, 0.5}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(auprc({true}, {0.5, 0.2}), Error);
}

TEST_CASE("auprc agrees with the threshold-sweep oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    std::vector<bool> gold(n);
    std::vector<double> scores(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = rng.uniform() < 0.4;
      any = any || gold[i];
      // coarse grid forces plenty of ties
      scores[i] = static_cast<double>(rng.below(5)) / 4.0;
    }
    const double a = auprc(gold, scores);
    const double b = auprc_bruteforce(gold, scores);
    if (!any) {
      CHECK(std::isnan(a));
      CHECK(std::isnan(b));
    } else {
      CHECK(a == doctest::Approx(b).epsilon(1e-9));
      // invariant under strictly increasing transforms
      std::vector<double> warped(n);
      for (std::size_t i = 0; i < n; ++i) warped[i] = std::exp(3.0 * scores[i]);
      CHECK(auprc(gold, warped) == doctest::Approx(a).epsilon(1e-9));
    }
  }
}

TEST_CASE("aggregate_values quantiles interpolate linearly") {
  const Aggregate a = aggregate_values({4.0, 1.0, 3.0, 2.0});
  CHECK(a.n == 4);
  CHECK(a.mean == doctest::Approx(2.5));
  CHECK(a.median == doctest::Approx(2.5));
  CHECK(a.q1 == doctest::Approx(1.75));
  CHECK(a.q3 == doctest::Approx(3.25));

  const Aggregate one = aggregate_values({0.7});
  CHECK(one.median == 0.7);
  CHECK(one.q1 == 0.7);
  CHECK(one.q3 == 0.7);
  CHECK(aggregate_values({}).n == 0);
}

TEST_CASE("evaluate_items builds records and excludes undefined AUPRC") {
  std::vector<EvalItem> items(2);
  items[0] = {"a", {0.9, 0.1, 0.2}, {0}, {true, false, false}};
  items[1] = {"b", {0.3, 0.4}, {}, {false, false}};
  const EvalReport rep = evaluate_items(items, "cti");
  REQUIRE(rep.records.size() == 2);
  CHECK(rep.records[0].macro_f1 == 1.0);
  CHECK(rep.records[0].auprc == 1.0);
  CHECK(rep.records[0].n_gold_positive == 1);
  CHECK(std::isnan(rep.records[1].auprc));
  CHECK(rep.records[1].macro_f1 == 1.0);
  REQUIRE(rep.records[1].warnings.size() == 1);

  CHECK(rep.aggregates.at("cti.macro_f1").n == 2);
  CHECK(rep.aggregates.at("cti.auprc").n == 1);

  EvalItem bad{"c", {0.5}, {}, {true, false}};
  CHECK_THROWS_AS(evaluate_items({bad}, "cti"), DataError);
  EvalItem oob{"d", {0.5}, {4}, {true}};
  CHECK_THROWS_AS(evaluate_items({oob}, "cti"), DataError);
  CHECK(evaluate_items({}, "cti").records.empty());
}

TEST_CASE("evaluate_cti scores planted runs perfectly") {
  std::vector<CTIResult> results;
  std::vector<std::vector<bool>> gold;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ToyCueModel m = make_planted_cue_model(24, {{3, 6, 9}}, seed);
    const InputPair pair = m.probe_pair(0);
    DecodeConfig cfg;
    cfg.max_new_tokens = 8;
    const TokenSeq y_hat = generate(m, pair.contextual, cfg);
    CtiOptions opt;
    opt.selector = {"kl", 1.0};
    results.push_back(run_cti(m, pair, y_hat, opt));
    std::vector<bool> g(y_hat.size(), false);
    g[6] = true;
    gold.push_back(g);
  }
  const EvalReport rep = evaluate_cti(results, gold, {"s1", "s2", "s3"});
  REQUIRE(rep.records.size() == 3);
  for (const EvalRecord& r : rep.records) {
    CHECK(r.stage == "cti");
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.auprc == 1.0);
  }
  CHECK(rep.records[0].example_id == "s1");
  CHECK(rep.aggregates.at("cti.macro_f1").mean == 1.0);

  CHECK_THROWS_AS(evaluate_cti(results, {{true}}), DataError);
}

TEST_CASE("report finalize recomputes aggregates and CSV keeps shape") {
  EvalReport rep;
  EvalRecord r1{"a", "cti", 0.5, 0.25, 2, {}};
  EvalRecord r2{"b", "cti", 1.0, 0.75, 1, {"w1", "w2"}};
  rep.records = {r1, r2};
  rep.notes.push_back("skipped 1 example");
  rep.finalize();
  CHECK(rep.aggregates.at("cti.macro_f1").mean == doctest::Approx(0.75));
  CHECK(rep.aggregates.at("cti.auprc").median == doctest::Approx(0.5));

  const std::string csv = rep.to_csv();
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "example_id,stage,macro_f1,auprc,n_gold_positive,warnings");
  std::getline(lines, line);
  CHECK(line == "a,cti,0.5,0.25,2,");
  std::getline(lines, line);
  CHECK(line == "b,cti,1,0.75,1,w1;w2");
  int aggregate_lines = 0, note_lines = 0;
  while (std::getline(lines, line)) {
    aggregate_lines += line.rfind("# aggregate,", 0) == 0;
    note_lines += line.rfind("# note,", 0) == 0;
  }
  CHECK(aggregate_lines == 2);
  CHECK(note_lines == 1);
}

TEST_CASE("disambiguation accuracy definitional cases") {
  const std::vector<std::string> refs = {
      "le chat noir", "le chat noir", "le chat noir", "pas de cible"};
  const std::vector<std::vector<Span>> gold = {
      {Span(8, 12)}, {Span(8, 12)}, {Span(8, 12)}, {}};
  // only with context / in both / in neither; last example has no gold
  const std::vector<std::string> ctx = {"un chat Noir", "le noir aussi", "le blanc",
                                        "whatever"};
  const std::vector<std::string> noctx = {"un chat blanc", "noir encore", "le gris",
                                          "whatever"};
  const AccuracyResult res = disambiguation_accuracy(refs, gold, ctx, noctx);
  CHECK(res.n == 3);
  CHECK(res.n_ok == 2);
  CHECK(res.n_ok_cs == 1);
  CHECK(res.ok == doctest::Approx(2.0 / 3.0));
  CHECK(res.ok_cs == doctest::Approx(1.0 / 3.0));

  // whole-word matching: substrings do not count
  const AccuracyResult ww = disambiguation_accuracy(
      {"il"}, {{Span(0, 2)}}, {"illusion grande"}, {"rien"});
  CHECK(ww.n_ok == 0);

  CHECK_THROWS_AS(disambiguation_accuracy({"a"}, {{}}, {}, {}), DataError);
  CHECK_THROWS_AS(
      disambiguation_accuracy({"ab"}, {{Span(0, 9)}}, {"ab"}, {"ab"}), DataError);
}

TEST_CASE("ok_cs never exceeds ok") {
  Rng rng(23);
  const std::vector<std::string> dict = {"noir", "blanc", "chat", "elle", "il"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> refs, ctx, noctx;
    std::vector<std::vector<Span>> gold;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& w = dict[rng.below(5)];
      refs.push_back("x " + w);
      gold.push_back({Span(2, 2 + w.size())});
      ctx.push_back(rng.uniform() < 0.5 ? w + " y" : "y");
      noctx.push_back(rng.uniform() < 0.5 ? w + " z" : "z");
    }
    const AccuracyResult r = disambiguation_accuracy(refs, gold, ctx, noctx);
    CHECK(r.ok_cs <= r.ok);
    CHECK(r.n_ok_cs <= r.n_ok);
  }
}
