#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pecore {

// Error taxonomy. The CLI maps these onto exit codes:
//   ConfigError -> 1, DataError/TagError -> 2, CapabilityError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad metric/method names, invalid selector k, inconsistent option combos.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A model was asked for something its capability flags do not advertise
// (gradients, attention, a decoding strategy it does not serve).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Token id outside [0, vocab_size) or a distribution of the wrong arity.
class VocabMismatchError : public Error {
 public:
  using Error::Error;
};

// Empty model input / zero decode budget.
class LengthError : public Error {
 public:
  using Error::Error;
};

// Malformed dataset rows. `line` is 1-based when known, -1 otherwise.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg, long line = -1)
      : Error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line(line) {}
  long line;
};

// Malformed inline tags; `offset` is the byte position in the raw string.
class TagError : public DataError {
 public:
  TagError(const std::string& msg, std::size_t offset)
      : DataError(msg + " (at byte " + std::to_string(offset) + ")"), offset(offset) {}
  std::size_t offset;
};

// The planted-cue factory exhausted its retry budget.
class PlantInfeasibleError : public Error {
 public:
  using Error::Error;
};

// Half-open byte range [begin, end) into some string.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  Span() = default;
  Span(std::size_t b, std::size_t e) : begin(b), end(e) {}
  std::size_t length() const { return end - begin; }
  bool operator==(const Span& o) const { return begin == o.begin && end == o.end; }
  bool operator<(const Span& o) const {
    return begin != o.begin ? begin < o.begin : end < o.end;
  }
};

// A token sequence plus its surface form. offsets[i] indexes into `text`
// and covers token i; offsets are monotonically increasing and
// non-overlapping. Produced by tokenize (text = the input string) and
// detokenize (text = the rendered string).
struct TokenSeq {
  std::vector<int> tokens;
  std::vector<Span> offsets;
  std::string text;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  // First n tokens; text is cut at the nth token's end.
  TokenSeq prefix(std::size_t n) const;

  // a ++ joiner ++ b with b's offsets shifted.
  static TokenSeq concat(const TokenSeq& a, const TokenSeq& b,
                         const std::string& joiner = " ");

  // Throws VocabMismatchError / Error on violated invariants.
  void check(int vocab_size = -1) const;
};

// Contextual and non-contextual variants of one input. context_mask marks,
// per contextual token, whether it belongs to the context segment (the
// separator between context and current counts as context). Invariant:
// dropping masked tokens from `contextual.tokens` yields exactly
// `non_contextual.tokens`.
struct InputPair {
  TokenSeq contextual;
  TokenSeq non_contextual;
  std::vector<bool> context_mask;
  std::string template_id = "source";

  bool has_context() const;
  std::size_t context_size() const;
  // Absolute positions where context_mask is true, ascending.
  std::vector<int> context_positions() const;
  void check() const;
};

// One next-token distribution. Entries are finite, non-negative and sum to
// 1 within tolerance.
struct StepDistribution {
  std::vector<double> probs;
  int step_index = 0;

  void check(double tol = 1e-6) const;
};

}  // namespace pecore
