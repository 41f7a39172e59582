#pragma once

#include "pecore/datasets.hpp"
#include "pecore/evalkit.hpp"
#include "pecore/pipeline.hpp"

namespace pecore::bench {

struct DatasetOptions {
  PecoreConfig config;
  data::TagScheme scheme;
  // CCI target source: "gold" (aligned gold target spans) or "e2e" (the CTI
  // selector's picks).
  std::string start = "e2e";
};

// Generates per example, aligns the gold target spans onto the generation
// and scores the CTI selection against them. Examples without usable gold
// (no current_target, no spans, nothing alignable) are skipped with a note.
eval::EvalReport evaluate_dataset_cti(const GenerativeModel& model,
                                      const std::vector<data::AnnotatedExample>& examples,
                                      const DatasetOptions& options);

// Scores attributed cue positions per target step against the example's
// gold cue mask; one record per (example, target step).
eval::EvalReport evaluate_dataset_cci(const GenerativeModel& model,
                                      const std::vector<data::AnnotatedExample>& examples,
                                      const DatasetOptions& options);

struct E2eReports {
  eval::EvalReport cti;
  eval::EvalReport cci;
};

// Both stages in one pass, CCI started from the CTI selection.
E2eReports evaluate_dataset_e2e(const GenerativeModel& model,
                                const std::vector<data::AnnotatedExample>& examples,
                                const DatasetOptions& options);

// Contextual vs context-less generation accuracy against gold target words.
eval::AccuracyResult dataset_accuracy(const GenerativeModel& model,
                                      const std::vector<data::AnnotatedExample>& examples,
                                      const DatasetOptions& options);

}  // namespace pecore::bench
