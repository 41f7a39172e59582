#include "pecore/render.hpp"

#include <functional>
#include <set>
#include <sstream>

#include "pecore/json_io.hpp"

namespace pecore {

RenderSpec RenderSpec::ansi() {
  RenderSpec s;
  s.format = RenderFormat::Ansi;
  s.styles = {{"context_cue", "36;4"},
              {"target_sensitive", "32;1"},
              {"noncontextual_diff", "31;1"}};
  return s;
}

RenderSpec RenderSpec::html() {
  RenderSpec s = ansi();
  s.format = RenderFormat::Html;
  s.styles = {{"context_cue", "context-cue"},
              {"target_sensitive", "target-sensitive"},
              {"noncontextual_diff", "noncontextual-diff"}};
  return s;
}

RenderSpec RenderSpec::json() {
  RenderSpec s;
  s.format = RenderFormat::Json;
  return s;
}

void RenderSpec::check() const {
  if (format == RenderFormat::Json) return;
  std::set<std::string> seen;
  for (const char* role : {"context_cue", "target_sensitive", "noncontextual_diff"}) {
    auto it = styles.find(role);
    if (it == styles.end())
      throw ConfigError(std::string("render style missing for role ") + role);
    if (!seen.insert(it->second).second)
      throw ConfigError("render styles must be distinct per role");
  }
}

namespace {

std::string escape_html(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

// Wraps the given token indices of seq in open/close markup; everything
// else passes through `plain`.
std::string mark_tokens(const TokenSeq& seq, const std::set<int>& which,
                        const std::string& open, const std::string& close,
                        const std::function<std::string(const std::string&)>& plain) {
  std::string out;
  std::size_t at = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Span& s = seq.offsets[i];
    out += plain(seq.text.substr(at, s.begin - at));
    const std::string tok = plain(seq.text.substr(s.begin, s.length()));
    if (which.count(static_cast<int>(i)))
      out += open + tok + close;
    else
      out += tok;
    at = s.end;
  }
  out += plain(seq.text.substr(at));
  return out;
}

std::set<int> diff_positions(const TokenSeq& y_tilde, const TokenSeq& y_hat) {
  std::set<int> out;
  for (std::size_t i = 0; i < y_tilde.size(); ++i)
    if (i >= y_hat.size() || y_tilde.tokens[i] != y_hat.tokens[i])
      out.insert(static_cast<int>(i));
  return out;
}

std::set<int> cue_positions(const PecoreResult& r) {
  std::set<int> out;
  for (const CueTargetPair& p : r.pairs) out.insert(p.cue_position);
  return out;
}

std::set<int> selected_steps(const PecoreResult& r) {
  return r.cti.selected;
}

}  // namespace

std::string render(const PecoreResult& result, const RenderSpec& spec) {
  spec.check();
  if (spec.format == RenderFormat::Json) return io::dumps(result, 2);

  const std::set<int> cues = cue_positions(result);
  const std::set<int> steps = selected_steps(result);
  const std::set<int> diffs = diff_positions(result.y_tilde, result.y_hat);

  std::ostringstream out;
  if (spec.format == RenderFormat::Ansi) {
    auto plain = [](const std::string& s) { return s; };
    auto style = [&](const char* role) {
      return "\x1b[" + spec.styles.at(role) + "m";
    };
    const std::string reset = "\x1b[0m";
    out << "input   | "
        << mark_tokens(result.input.contextual, cues, style("context_cue"), reset, plain)
        << '\n';
    out << "y_hat   | "
        << mark_tokens(result.y_hat, steps, style("target_sensitive"), reset, plain)
        << '\n';
    out << "y_tilde | "
        << mark_tokens(result.y_tilde, diffs, style("noncontextual_diff"), reset, plain)
        << '\n';
    out << "pairs:\n";
    for (const CueTargetPair& p : result.pairs) {
      out << "  cue \"" << p.cue_text << "\" @" << p.cue_position << " -> target \""
          << p.target_text << "\" @" << p.target_step << "  cue_score=" << p.cue_score
          << " cti_score=" << p.cti_score << '\n';
    }
    return out.str();
  }

  // HTML
  auto cls = [&](const char* role) {
    return "<span class=\"" + spec.styles.at(role) + "\">";
  };
  out << "<div class=\"pecore\">\n<style>\n"
      << "." << spec.styles.at("context_cue")
      << " { text-decoration: underline; color: #0a7; }\n"
      << "." << spec.styles.at("target_sensitive")
      << " { font-weight: bold; color: #070; }\n"
      << "." << spec.styles.at("noncontextual_diff")
      << " { font-weight: bold; color: #a00; }\n</style>\n";
  out << "<p class=\"input\">"
      << mark_tokens(result.input.contextual, cues, cls("context_cue"), "</span>",
                     escape_html)
      << "</p>\n";
  out << "<p class=\"y-hat\">"
      << mark_tokens(result.y_hat, steps, cls("target_sensitive"), "</span>",
                     escape_html)
      << "</p>\n";
  out << "<p class=\"y-tilde\">"
      << mark_tokens(result.y_tilde, diffs, cls("noncontextual_diff"), "</span>",
                     escape_html)
      << "</p>\n<ul class=\"pairs\">\n";
  for (const CueTargetPair& p : result.pairs) {
    out << "  <li>cue \"" << escape_html(p.cue_text) << "\" @" << p.cue_position
        << " &rarr; target \"" << escape_html(p.target_text) << "\" @" << p.target_step
        << " (cue_score=" << p.cue_score << ", cti_score=" << p.cti_score << ")</li>\n";
  }
  out << "</ul>\n</div>\n";
  return out.str();
}

std::string strip_ansi(const std::string& text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '\x1b' && i + 1 < text.size() && text[i + 1] == '[') {
      i += 2;
      while (i < text.size() && text[i] != 'm') ++i;
      if (i < text.size()) ++i;
      continue;
    }
    out += text[i++];
  }
  return out;
}

}  // namespace pecore
