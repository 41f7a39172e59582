#pragma once

#include <map>
#include <string>

#include "pecore/pipeline.hpp"

namespace pecore {

enum class RenderFormat { Ansi, Html, Json };

// Roles: context_cue (attributed context tokens), target_sensitive
// (selected generation steps), noncontextual_diff (y_tilde positions that
// disagree with y_hat). Styles are SGR parameter lists for ANSI and css
// class names for HTML; the three roles must have distinct styles.
struct RenderSpec {
  RenderFormat format = RenderFormat::Ansi;
  std::map<std::string, std::string> styles;

  static RenderSpec ansi();
  static RenderSpec html();
  static RenderSpec json();
  void check() const;
};

// Markup never alters the token surface: stripping it reproduces the raw
// texts exactly.
std::string render(const PecoreResult& result, const RenderSpec& spec);

// Removes ANSI SGR sequences (the inverse used by tests).
std::string strip_ansi(const std::string& text);

}  // namespace pecore
