#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "pecore/cti.hpp"

namespace pecore::eval {

// Macro F1 over the two token classes. A class absent from both gold and
// prediction scores 1; a class with no true positives but some fp/fn
// scores 0.
double token_macro_f1(const std::vector<bool>& gold, const std::vector<bool>& pred);

// Non-interpolated area under the precision-recall curve: descending score
// order, equal scores processed as one block, area = sum precision *
// delta-recall. NaN when gold has no positives.
double auprc(const std::vector<bool>& gold, const std::vector<double>& scores);

struct EvalRecord {
  std::string example_id;
  std::string stage;  // "cti" or "cci"
  double macro_f1 = 0.0;
  double auprc = 0.0;  // NaN when undefined
  int n_gold_positive = 0;
  std::vector<std::string> warnings;
};

struct Aggregate {
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  int n = 0;
};

// Mean/median/quartiles with linear interpolation; n = values used.
Aggregate aggregate_values(std::vector<double> values);

struct EvalReport {
  std::vector<EvalRecord> records;
  // Keys "<stage>.macro_f1" / "<stage>.auprc"; NaN record values are
  // excluded (with a warning already on the record).
  std::map<std::string, Aggregate> aggregates;
  // Dataset-level messages, e.g. skipped examples.
  std::vector<std::string> notes;

  void finalize();  // recompute aggregates from records
  std::string to_csv() const;
};

// Scores/selection/gold triples, one per evaluated unit.
struct EvalItem {
  std::string id;
  std::vector<double> scores;
  std::set<int> selected;
  std::vector<bool> gold;
};

EvalReport evaluate_items(const std::vector<EvalItem>& items, const std::string& stage);

// CTI evaluation: predicted mask from result.selected, ranking scores from
// the selector metric column. gold_masks[i] must match the generation
// length. ids optional ("ex<i>" default).
EvalReport evaluate_cti(const std::vector<CTIResult>& results,
                        const std::vector<std::vector<bool>>& gold_masks,
                        const std::vector<std::string>& ids = {});

struct AccuracyResult {
  double ok = 0.0;
  double ok_cs = 0.0;
  int n = 0;
  int n_ok = 0;
  int n_ok_cs = 0;
};

// Reference-word disambiguation accuracy: an output counts as ok when every
// gold-span word appears in it as a whole word (ASCII casefold); ok_cs
// additionally requires the context-less output to miss at least one.
// Examples with no gold spans are skipped.
AccuracyResult disambiguation_accuracy(const std::vector<std::string>& references,
                                       const std::vector<std::vector<Span>>& gold_spans,
                                       const std::vector<std::string>& outputs_ctx,
                                       const std::vector<std::string>& outputs_noctx);

}  // namespace pecore::eval
