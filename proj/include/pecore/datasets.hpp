#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pecore/model.hpp"

namespace pecore::data {

using pecore::Span;

// Inline markers used by annotated corpora. Defaults follow the <p>/</p>
// target-span and <hon>/<hoff> cue-span convention; `brk` separates context
// from current inside model inputs.
struct TagScheme {
  std::string target_open = "<p>";
  std::string target_close = "</p>";
  std::string cue_open = "<hon>";
  std::string cue_close = "<hoff>";
  std::string brk = "<brk>";
};

struct ParsedTags {
  std::string clean;
  std::vector<Span> target_spans;  // into clean
  std::vector<Span> cue_spans;     // into clean
};

// Strips markers and records their spans in clean coordinates. Throws
// TagError (with the byte offset in the raw string) on unbalanced, nested
// or interleaved markers.
ParsedTags parse_tagged(const std::string& raw, const TagScheme& scheme = {});

// Inverse of parse_tagged for non-overlapping spans.
std::string render_tagged(const std::string& clean, const std::vector<Span>& target_spans,
                          const std::vector<Span>& cue_spans, const TagScheme& scheme = {});

// Token i is true iff its character span overlaps any input span.
std::vector<bool> spans_to_token_mask(const std::vector<Span>& spans,
                                      const TokenSeq& seq);

struct AnnotatedExample {
  std::string context_source;
  std::string current_source;
  std::optional<std::string> context_target;
  std::optional<std::string> current_target;
  std::vector<Span> gold_target_spans;           // into current_target
  std::vector<Span> gold_cue_spans_source;       // into context_source
  std::vector<Span> gold_cue_spans_target;       // into context_target
  std::map<std::string, std::string> meta;

  void check() const;  // spans in bounds, fields consistent
};

// Builds the contextual/non-contextual pair with segment-wise tokenization
// so the mask invariant holds exactly. template_id "source" uses
// context_source as context; "source+target" appends context_target after
// another separator. The separator tokens count as context.
InputPair build_input_pair(const AnnotatedExample& ex, const GenerativeModel& model,
                           const TagScheme& scheme = {},
                           const std::string& template_id = "source");

// Gold cue indicator per mask-true position of `pair` (same order as
// AttributionMap.ctx_scores), projected from the example's cue spans.
std::vector<bool> gold_cue_mask(const AnnotatedExample& ex, const InputPair& pair,
                                const GenerativeModel& model,
                                const TagScheme& scheme = {},
                                const std::string& template_id = "source");

// Word aligner contract: result[i] is span i projected onto `generation`,
// or nullopt when unalignable.
class WordAligner {
 public:
  virtual ~WordAligner() = default;
  virtual std::vector<std::optional<Span>> align(const std::string& reference,
                                                 const std::vector<Span>& spans,
                                                 const std::string& generation) const = 0;
};

// Deterministic fallback: exact word match, then ASCII-casefolded match,
// then leftmost unused word-boundary substring; each generation word is
// consumed at most once.
class HeuristicAligner : public WordAligner {
 public:
  std::vector<std::optional<Span>> align(const std::string& reference,
                                         const std::vector<Span>& spans,
                                         const std::string& generation) const override;
};

struct AlignedSpans {
  std::vector<Span> spans;  // successfully projected, in input order
  int dropped = 0;
};

// Projects reference spans onto a generation; unalignable spans are dropped
// and counted.
AlignedSpans align_tags(const std::string& reference, const std::vector<Span>& spans,
                        const std::string& generation,
                        const WordAligner* aligner = nullptr);

// JSONL dataset IO. Malformed lines raise DataError with the 1-based line
// number; blank lines are skipped.
std::vector<AnnotatedExample> load_jsonl(std::istream& in);
std::vector<AnnotatedExample> load_jsonl_file(const std::string& path);
void write_jsonl(std::ostream& out, const std::vector<AnnotatedExample>& examples);
void write_jsonl_file(const std::string& path,
                      const std::vector<AnnotatedExample>& examples);

}  // namespace pecore::data
