#include "pecore/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pecore::data {

using nlohmann::json;

ParsedTags parse_tagged(const std::string& raw, const TagScheme& scheme) {
  struct Marker {
    const std::string* text;
    bool open;
    bool target;
  };
  std::vector<Marker> markers = {{&scheme.target_open, true, true},
                                 {&scheme.target_close, false, true},
                                 {&scheme.cue_open, true, false},
                                 {&scheme.cue_close, false, false}};
  // Longest first so a marker that prefixes another cannot shadow it.
  std::stable_sort(markers.begin(), markers.end(),
                   [](const Marker& a, const Marker& b) {
                     return a.text->size() > b.text->size();
                   });

  ParsedTags out;
  int open_role = -1;  // -1 none, 0 cue, 1 target
  std::size_t open_at = 0, span_begin = 0;
  std::size_t i = 0;
  while (i < raw.size()) {
    const Marker* hit = nullptr;
    for (const Marker& m : markers) {
      if (raw.compare(i, m.text->size(), *m.text) == 0) {
        hit = &m;
        break;
      }
    }
    if (!hit) {
      out.clean += raw[i++];
      continue;
    }
    if (hit->open) {
      if (open_role != -1)
        throw TagError("nested or interleaved tag " + *hit->text, i);
      open_role = hit->target ? 1 : 0;
      open_at = i;
      span_begin = out.clean.size();
    } else {
      if (open_role == -1) throw TagError("closing tag " + *hit->text + " without an open tag", i);
      if ((open_role == 1) != hit->target)
        throw TagError("interleaved closing tag " + *hit->text, i);
      (hit->target ? out.target_spans : out.cue_spans)
          .emplace_back(span_begin, out.clean.size());
      open_role = -1;
    }
    i += hit->text->size();
  }
  if (open_role != -1) throw TagError("unbalanced tag left open", open_at);
  return out;
}

std::string render_tagged(const std::string& clean, const std::vector<Span>& target_spans,
                          const std::vector<Span>& cue_spans, const TagScheme& scheme) {
  struct Event {
    std::size_t pos;
    bool open;
    bool target;
    std::size_t other;  // span end for opens (orders same-position events)
  };
  std::vector<Event> events;
  auto add = [&](const std::vector<Span>& spans, bool target) {
    for (const Span& s : spans) {
      if (s.end < s.begin || s.end > clean.size())
        throw DataError("span outside the clean string");
      events.push_back({s.begin, true, target, s.end});
      events.push_back({s.end, false, target, s.begin});
    }
  };
  add(target_spans, true);
  add(cue_spans, false);
  std::vector<Span> all = target_spans;
  all.insert(all.end(), cue_spans.begin(), cue_spans.end());
  std::sort(all.begin(), all.end());
  for (std::size_t k = 1; k < all.size(); ++k)
    if (all[k].begin < all[k - 1].end)
      throw DataError("overlapping spans cannot be rendered");
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.pos != b.pos) return a.pos < b.pos;
    return !a.open && b.open;  // close before open at the same position
  });
  std::string out;
  std::size_t at = 0;
  for (const Event& e : events) {
    out += clean.substr(at, e.pos - at);
    at = e.pos;
    if (e.open)
      out += e.target ? scheme.target_open : scheme.cue_open;
    else
      out += e.target ? scheme.target_close : scheme.cue_close;
  }
  out += clean.substr(at);
  return out;
}

std::vector<bool> spans_to_token_mask(const std::vector<Span>& spans,
                                      const TokenSeq& seq) {
  std::vector<bool> mask(seq.size(), false);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Span& t = seq.offsets[i];
    for (const Span& s : spans) {
      if (t.begin < s.end && s.begin < t.end) {
        mask[i] = true;
        break;
      }
    }
  }
  return mask;
}

void AnnotatedExample::check() const {
  auto check_spans = [](const std::vector<Span>& spans, const std::string& text,
                        const std::string& what) {
    for (const Span& s : spans)
      if (s.end < s.begin || s.end > text.size())
        throw DataError(what + " span outside its string");
  };
  if (!gold_target_spans.empty() && !current_target)
    throw DataError("gold_target_spans without current_target");
  if (!gold_cue_spans_target.empty() && !context_target)
    throw DataError("target-side cue spans without context_target");
  if (current_target) check_spans(gold_target_spans, *current_target, "gold target");
  check_spans(gold_cue_spans_source, context_source, "source cue");
  if (context_target) check_spans(gold_cue_spans_target, *context_target, "target cue");
}

namespace {

// Context parts for a template, in input order. Empty parts are skipped.
std::vector<const std::string*> context_parts(const AnnotatedExample& ex,
                                              const std::string& template_id) {
  if (template_id != "source" && template_id != "source+target")
    throw ConfigError("unknown template: " + template_id);
  std::vector<const std::string*> parts;
  if (!ex.context_source.empty()) parts.push_back(&ex.context_source);
  if (template_id == "source+target") {
    if (!ex.context_target)
      throw DataError("template source+target needs context_target");
    if (!ex.context_target->empty()) parts.push_back(&*ex.context_target);
  }
  return parts;
}

}  // namespace

InputPair build_input_pair(const AnnotatedExample& ex, const GenerativeModel& model,
                           const TagScheme& scheme, const std::string& template_id) {
  ex.check();
  const TokenSeq current = model.tokenize(ex.current_source);
  if (current.empty()) throw DataError("current segment tokenizes to nothing");
  InputPair pair;
  pair.template_id = template_id;
  pair.non_contextual = current;
  TokenSeq ctx;
  for (const std::string* part : context_parts(ex, template_id)) {
    ctx = TokenSeq::concat(ctx, model.tokenize(*part));
    ctx = TokenSeq::concat(ctx, model.tokenize(scheme.brk));
  }
  if (ctx.empty()) {
    pair.contextual = current;
    pair.context_mask.assign(current.size(), false);
  } else {
    pair.contextual = TokenSeq::concat(ctx, current);
    pair.context_mask.assign(ctx.size(), true);
    pair.context_mask.resize(pair.contextual.size(), false);
  }
  pair.check();
  return pair;
}

std::vector<bool> gold_cue_mask(const AnnotatedExample& ex, const InputPair& pair,
                                const GenerativeModel& model, const TagScheme& scheme,
                                const std::string& template_id) {
  std::vector<bool> mask;
  auto append = [&](const std::string& text, const std::vector<Span>& spans) {
    const TokenSeq seq = model.tokenize(text);
    const std::vector<bool> m = spans_to_token_mask(spans, seq);
    mask.insert(mask.end(), m.begin(), m.end());
    const TokenSeq brk = model.tokenize(scheme.brk);
    mask.insert(mask.end(), brk.size(), false);
  };
  for (const std::string* part : context_parts(ex, template_id)) {
    if (part == &ex.context_source)
      append(*part, ex.gold_cue_spans_source);
    else
      append(*part, ex.gold_cue_spans_target);
  }
  if (mask.size() != pair.context_size())
    throw DataError("gold cue mask does not match the pair's context");
  return mask;
}

namespace {

bool word_char(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

std::string fold(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<Span> word_spans(const std::string& text) {
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !word_char(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && word_char(text[j])) ++j;
    if (j > i) out.emplace_back(i, j);
    i = j;
  }
  return out;
}

}  // namespace

std::vector<std::optional<Span>> HeuristicAligner::align(
    const std::string& reference, const std::vector<Span>& spans,
    const std::string& generation) const {
  const std::vector<Span> gen_words = word_spans(generation);
  std::vector<std::string> gen_exact, gen_fold;
  for (const Span& w : gen_words) {
    gen_exact.push_back(generation.substr(w.begin, w.length()));
    gen_fold.push_back(fold(gen_exact.back()));
  }
  std::vector<bool> used(gen_words.size(), false);
  const std::string gen_folded = fold(generation);

  std::vector<std::optional<Span>> out;
  for (const Span& span : spans) {
    if (span.end < span.begin || span.end > reference.size())
      throw DataError("alignment span outside the reference");
    const std::string ref_text = reference.substr(span.begin, span.length());
    std::vector<std::string> ref_words, ref_fold;
    for (const Span& w : word_spans(ref_text)) {
      ref_words.push_back(ref_text.substr(w.begin, w.length()));
      ref_fold.push_back(fold(ref_words.back()));
    }
    if (ref_words.empty()) {
      out.push_back(std::nullopt);
      continue;
    }

    auto try_words = [&](const std::vector<std::string>& needle,
                         const std::vector<std::string>& haystack) -> std::optional<Span> {
      if (needle.size() > haystack.size()) return std::nullopt;
      for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool all = true;
        for (std::size_t k = 0; k < needle.size() && all; ++k)
          all = !used[i + k] && haystack[i + k] == needle[k];
        if (all) {
          for (std::size_t k = 0; k < needle.size(); ++k) used[i + k] = true;
          return Span(gen_words[i].begin, gen_words[i + needle.size() - 1].end);
        }
      }
      return std::nullopt;
    };

    std::optional<Span> hit = try_words(ref_words, gen_exact);
    if (!hit) hit = try_words(ref_fold, gen_fold);
    if (!hit) {
      // Leftmost unused word-boundary substring of the folded generation.
      std::string needle;
      for (std::size_t k = 0; k < ref_fold.size(); ++k)
        needle += (k ? " " : "") + ref_fold[k];
      for (std::size_t pos = gen_folded.find(needle); pos != std::string::npos;
           pos = gen_folded.find(needle, pos + 1)) {
        if (pos > 0 && word_char(static_cast<unsigned char>(gen_folded[pos - 1])))
          continue;
        bool free = true;
        std::vector<std::size_t> touched;
        for (std::size_t w = 0; w < gen_words.size(); ++w) {
          if (gen_words[w].begin < pos + needle.size() && pos < gen_words[w].end) {
            touched.push_back(w);
            free = free && !used[w];
          }
        }
        if (!free) continue;
        for (std::size_t w : touched) used[w] = true;
        hit = Span(pos, pos + needle.size());
        break;
      }
    }
    out.push_back(hit);
  }
  return out;
}

AlignedSpans align_tags(const std::string& reference, const std::vector<Span>& spans,
                        const std::string& generation, const WordAligner* aligner) {
  static const HeuristicAligner fallback;
  const WordAligner& a = aligner ? *aligner : fallback;
  AlignedSpans out;
  for (const std::optional<Span>& s : a.align(reference, spans, generation)) {
    if (s)
      out.spans.push_back(*s);
    else
      ++out.dropped;
  }
  return out;
}

namespace {

std::vector<Span> spans_from_json(const json& j, long line, const std::string& what) {
  std::vector<Span> out;
  if (!j.is_array()) throw DataError(what + " must be an array of [begin, end]", line);
  for (const json& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer())
      throw DataError(what + " entries must be [begin, end] integer pairs", line);
    const long b = e[0].get<long>(), en = e[1].get<long>();
    if (b < 0 || en < b) throw DataError(what + " has a negative or inverted span", line);
    out.emplace_back(static_cast<std::size_t>(b), static_cast<std::size_t>(en));
  }
  return out;
}

json spans_to_json(const std::vector<Span>& spans) {
  json out = json::array();
  for (const Span& s : spans) out.push_back({s.begin, s.end});
  return out;
}

AnnotatedExample example_from_json(const json& j, long line) {
  if (!j.is_object()) throw DataError("record is not a JSON object", line);
  AnnotatedExample ex;
  auto req_str = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string())
      throw DataError(std::string("missing or non-string field: ") + key, line);
    return j[key].get<std::string>();
  };
  ex.context_source = req_str("context_source");
  ex.current_source = req_str("current_source");
  auto opt_str = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string())
      throw DataError(std::string("field must be a string or null: ") + key, line);
    return j[key].get<std::string>();
  };
  ex.context_target = opt_str("context_target");
  ex.current_target = opt_str("current_target");
  if (j.contains("gold_target_spans"))
    ex.gold_target_spans = spans_from_json(j["gold_target_spans"], line, "gold_target_spans");
  if (j.contains("gold_cue_spans")) {
    const json& c = j["gold_cue_spans"];
    if (!c.is_object()) throw DataError("gold_cue_spans must be an object", line);
    if (c.contains("source"))
      ex.gold_cue_spans_source = spans_from_json(c["source"], line, "gold_cue_spans.source");
    if (c.contains("target"))
      ex.gold_cue_spans_target = spans_from_json(c["target"], line, "gold_cue_spans.target");
  }
  if (j.contains("meta")) {
    if (!j["meta"].is_object()) throw DataError("meta must be an object", line);
    for (const auto& [k, v] : j["meta"].items()) {
      if (!v.is_string()) throw DataError("meta values must be strings", line);
      ex.meta[k] = v.get<std::string>();
    }
  }
  try {
    ex.check();
  } catch (const DataError& e) {
    throw DataError(e.what(), line);
  }
  return ex;
}

}  // namespace

std::vector<AnnotatedExample> load_jsonl(std::istream& in) {
  std::vector<AnnotatedExample> out;
  std::string lineText;
  long line = 0;
  while (std::getline(in, lineText)) {
    ++line;
    if (lineText.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(lineText);
    } catch (const json::exception& e) {
      throw DataError(std::string("invalid JSON: ") + e.what(), line);
    }
    out.push_back(example_from_json(j, line));
  }
  return out;
}

std::vector<AnnotatedExample> load_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  return load_jsonl(in);
}

void write_jsonl(std::ostream& out, const std::vector<AnnotatedExample>& examples) {
  for (const AnnotatedExample& ex : examples) {
    json j;
    j["context_source"] = ex.context_source;
    j["current_source"] = ex.current_source;
    j["context_target"] = ex.context_target ? json(*ex.context_target) : json(nullptr);
    j["current_target"] = ex.current_target ? json(*ex.current_target) : json(nullptr);
    j["gold_target_spans"] = spans_to_json(ex.gold_target_spans);
    j["gold_cue_spans"] = {{"source", spans_to_json(ex.gold_cue_spans_source)},
                           {"target", spans_to_json(ex.gold_cue_spans_target)}};
    j["meta"] = ex.meta;
    out << j.dump() << '\n';
  }
}

void write_jsonl_file(const std::string& path,
                      const std::vector<AnnotatedExample>& examples) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  write_jsonl(out, examples);
}

}  // namespace pecore::data
