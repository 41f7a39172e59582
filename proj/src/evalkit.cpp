#include "pecore/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pecore::eval {

double token_macro_f1(const std::vector<bool>& gold, const std::vector<bool>& pred) {
  if (gold.size() != pred.size()) throw Error("macro F1: gold/pred length mismatch");
  double sum = 0.0;
  for (bool cls : {false, true}) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool g = gold[i] == cls, p = pred[i] == cls;
      tp += g && p;
      fp += !g && p;
      fn += g && !p;
    }
    sum += (tp + fp + fn == 0) ? 1.0
                               : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  }
  return sum / 2.0;
}

double auprc(const std::vector<bool>& gold, const std::vector<double>& scores) {
  if (gold.size() != scores.size()) throw Error("AUPRC: gold/scores length mismatch");
  const long total_pos = std::count(gold.begin(), gold.end(), true);
  if (total_pos == 0) return std::numeric_limits<double>::quiet_NaN();
  std::vector<std::size_t> order(gold.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double area = 0.0, prev_recall = 0.0;
  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += gold[order[j]];
      fp += !gold[order[j]];
      ++j;
    }
    const double recall = static_cast<double>(tp) / total_pos;
    const double precision = static_cast<double>(tp) / (tp + fp);
    area += precision * (recall - prev_recall);
    prev_recall = recall;
    i = j;
  }
  return area;
}

Aggregate aggregate_values(std::vector<double> values) {
  Aggregate a;
  a.n = static_cast<int>(values.size());
  if (values.empty()) return a;
  std::sort(values.begin(), values.end());
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    return lo + 1 < values.size() ? (1.0 - frac) * values[lo] + frac * values[lo + 1]
                                  : values[lo];
  };
  a.q1 = quantile(0.25);
  a.median = quantile(0.5);
  a.q3 = quantile(0.75);
  return a;
}

void EvalReport::finalize() {
  aggregates.clear();
  std::map<std::string, std::vector<double>> f1s, aps;
  for (const EvalRecord& r : records) {
    f1s[r.stage].push_back(r.macro_f1);
    if (!std::isnan(r.auprc)) aps[r.stage].push_back(r.auprc);
  }
  for (auto& [stage, v] : f1s) aggregates[stage + ".macro_f1"] = aggregate_values(v);
  for (auto& [stage, v] : aps) aggregates[stage + ".auprc"] = aggregate_values(v);
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "example_id,stage,macro_f1,auprc,n_gold_positive,warnings\n";
  for (const EvalRecord& r : records) {
    out << r.example_id << ',' << r.stage << ',' << r.macro_f1 << ',';
    if (!std::isnan(r.auprc)) out << r.auprc;
    out << ',' << r.n_gold_positive << ',';
    for (std::size_t i = 0; i < r.warnings.size(); ++i)
      out << (i ? ";" : "") << r.warnings[i];
    out << '\n';
  }
  for (const auto& [key, a] : aggregates) {
    out << "# aggregate," << key << ",mean=" << a.mean << ",median=" << a.median
        << ",q1=" << a.q1 << ",q3=" << a.q3 << ",n=" << a.n << '\n';
  }
  for (const std::string& n : notes) out << "# note," << n << '\n';
  return out.str();
}

EvalReport evaluate_items(const std::vector<EvalItem>& items, const std::string& stage) {
  EvalReport report;
  for (const EvalItem& it : items) {
    if (it.gold.size() != it.scores.size())
      throw DataError("gold mask length != score length for " + it.id);
    EvalRecord rec;
    rec.example_id = it.id;
    rec.stage = stage;
    std::vector<bool> pred(it.scores.size(), false);
    for (int i : it.selected) {
      if (i < 0 || static_cast<std::size_t>(i) >= pred.size())
        throw DataError("selected index outside scores for " + it.id);
      pred[i] = true;
    }
    rec.macro_f1 = token_macro_f1(it.gold, pred);
    rec.auprc = auprc(it.gold, it.scores);
    rec.n_gold_positive =
        static_cast<int>(std::count(it.gold.begin(), it.gold.end(), true));
    if (std::isnan(rec.auprc))
      rec.warnings.push_back("no gold positives; AUPRC undefined");
    report.records.push_back(std::move(rec));
  }
  report.finalize();
  return report;
}

EvalReport evaluate_cti(const std::vector<CTIResult>& results,
                        const std::vector<std::vector<bool>>& gold_masks,
                        const std::vector<std::string>& ids) {
  if (results.size() != gold_masks.size())
    throw DataError("evaluate_cti: results/gold count mismatch");
  std::vector<EvalItem> items;
  for (std::size_t i = 0; i < results.size(); ++i) {
    EvalItem it;
    it.id = i < ids.size() ? ids[i] : "ex" + std::to_string(i);
    it.scores = results[i].column(results[i].selector.metric);
    it.selected = results[i].selected;
    it.gold = gold_masks[i];
    items.push_back(std::move(it));
  }
  return evaluate_items(items, "cti");
}

namespace {

bool word_char(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

std::vector<std::string> words_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !word_char(text[i])) ++i;
    std::size_t j = i;
    std::string w;
    while (j < text.size() && word_char(text[j])) {
      w += static_cast<char>(std::tolower(static_cast<unsigned char>(text[j])));
      ++j;
    }
    if (!w.empty()) out.push_back(std::move(w));
    i = j;
  }
  return out;
}

bool contains_all_words(const std::set<std::string>& haystack,
                        const std::vector<std::string>& needles) {
  for (const std::string& w : needles)
    if (!haystack.count(w)) return false;
  return true;
}

}  // namespace

AccuracyResult disambiguation_accuracy(const std::vector<std::string>& references,
                                       const std::vector<std::vector<Span>>& gold_spans,
                                       const std::vector<std::string>& outputs_ctx,
                                       const std::vector<std::string>& outputs_noctx) {
  if (references.size() != gold_spans.size() ||
      references.size() != outputs_ctx.size() ||
      references.size() != outputs_noctx.size())
    throw DataError("disambiguation_accuracy: input arity mismatch");
  AccuracyResult res;
  for (std::size_t i = 0; i < references.size(); ++i) {
    std::vector<std::string> needles;
    for (const Span& s : gold_spans[i]) {
      if (s.end > references[i].size() || s.end < s.begin)
        throw DataError("gold span outside reference for example " + std::to_string(i));
      for (std::string& w : words_of(references[i].substr(s.begin, s.length())))
        needles.push_back(std::move(w));
    }
    if (needles.empty()) continue;
    ++res.n;
    const std::vector<std::string> cw = words_of(outputs_ctx[i]);
    const std::vector<std::string> nw = words_of(outputs_noctx[i]);
    const std::set<std::string> ctx_set(cw.begin(), cw.end());
    const std::set<std::string> noctx_set(nw.begin(), nw.end());
    const bool ok = contains_all_words(ctx_set, needles);
    const bool noctx_ok = contains_all_words(noctx_set, needles);
    res.n_ok += ok;
    res.n_ok_cs += ok && !noctx_ok;
  }
  if (res.n > 0) {
    res.ok = static_cast<double>(res.n_ok) / res.n;
    res.ok_cs = static_cast<double>(res.n_ok_cs) / res.n;
  }
  return res;
}

}  // namespace pecore::eval
