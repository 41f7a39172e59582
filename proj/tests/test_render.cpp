#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "pecore/json_io.hpp"
#include "pecore/render.hpp"
#include "pecore/toy_model.hpp"

using namespace pecore;

namespace {

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0, at = 0;
  while ((at = hay.find(needle, at)) != std::string::npos) {
    ++n;
    at += needle.size();
  }
  return n;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (at <= text.size()) {
    const std::size_t nl = text.find('\n', at);
    if (nl == std::string::npos) {
      out.push_back(text.substr(at));
      break;
    }
    out.push_back(text.substr(at, nl - at));
    at = nl + 1;
  }
  return out;
}

PecoreResult planted_result(std::uint64_t seed) {
  const ToyCueModel m = make_planted_cue_model(24, {{3, 6, 9}}, seed);
  PecoreConfig cfg = PecoreConfig::benchmark_preset();
  cfg.decode.max_new_tokens = 8;
  return run_pecore(m, m.probe_pair(0), cfg);
}

}  // namespace

TEST_CASE("strip_ansi removes SGR sequences only") {
  CHECK(strip_ansi("\x1b[31mfoo\x1b[0m") == "foo");
  CHECK(strip_ansi("plain text") == "plain text");
  CHECK(strip_ansi("a\x1b[36;4mb\x1b[0mc") == "abc");
  // dangling escape is dropped instead of leaking control bytes
  CHECK(strip_ansi("x\x1b[31") == "x");
}

TEST_CASE("ansi render shows raw texts and styles the planted spans") {
  const PecoreResult res = planted_result(6);
  REQUIRE(res.cti.selected == std::set<int>{6});
  REQUIRE(res.pairs.size() == 1);

  const std::string out = render(res, RenderSpec::ansi());
  const std::vector<std::string> lines = split_lines(strip_ansi(out));
  REQUIRE(lines.size() >= 5);
  CHECK(lines[0] == "input   | " + res.input.contextual.text);
  CHECK(lines[1] == "y_hat   | " + res.y_hat.text);
  CHECK(lines[2] == "y_tilde | " + res.y_tilde.text);
  CHECK(lines[3] == "pairs:");
  CHECK(lines[4].rfind("  cue \"" + res.pairs[0].cue_text + "\" @", 0) == 0);
  CHECK(lines[4].find("-> target \"" + res.pairs[0].target_text + "\"") !=
        std::string::npos);
  CHECK(lines[4].find("cue_score=") != std::string::npos);
  CHECK(lines[4].find("cti_score=") != std::string::npos);

  // one cue, one selected step, at least the flipped step marked in y_tilde
  CHECK(count_occurrences(out, "\x1b[36;4m") == 1);
  CHECK(count_occurrences(out, "\x1b[32;1m") == 1);
  CHECK(count_occurrences(out, "\x1b[31;1m") >= 1);
}

TEST_CASE("ansi render of an uneventful result has no escape codes") {
  const ToyCueModel m(16, 8, 3);
  PecoreConfig cfg = PecoreConfig::benchmark_preset();
  cfg.decode.max_new_tokens = 5;
  const PecoreResult res = run_pecore(m, "", "1 2 3", cfg);
  REQUIRE(res.pairs.empty());
  const std::string out = render(res, RenderSpec::ansi());
  CHECK(out.find('\x1b') == std::string::npos);
  CHECK(strip_ansi(out) == out);
}

TEST_CASE("html render wraps spans, escapes markup, and embeds styles") {
  const PecoreResult res = planted_result(9);
  REQUIRE(res.pairs.size() == 1);
  const std::string out = render(res, RenderSpec::html());

  CHECK(out.rfind("<div class=\"pecore\">", 0) == 0);
  CHECK(out.find("<style>") != std::string::npos);
  CHECK(count_occurrences(out, "<span class=\"context-cue\">") == 1);
  CHECK(count_occurrences(out, "<span class=\"target-sensitive\">") == 1);
  CHECK(count_occurrences(out, "<span class=\"noncontextual-diff\">") >= 1);
  CHECK(out.find("&rarr;") != std::string::npos);

  // separator token must arrive escaped, never as raw markup
  REQUIRE(res.input.contextual.text.find("<brk>") != std::string::npos);
  CHECK(out.find("&lt;brk&gt;") != std::string::npos);
  CHECK(out.find("<brk>") == std::string::npos);
}

TEST_CASE("json render round-trips through the loader") {
  const PecoreResult res = planted_result(11);
  const std::string out = render(res, RenderSpec::json());
  CHECK(out == io::dumps(res, 2));

  const PecoreResult back = io::load_result(out);
  CHECK(io::dumps(back) == io::dumps(res));
  CHECK(back.pairs.size() == res.pairs.size());
  CHECK(back.cti.selected == res.cti.selected);

  std::string tampered = out;
  const std::string key = "\"schema_version\": 1";
  const std::size_t at = tampered.find(key);
  REQUIRE(at != std::string::npos);
  tampered.replace(at, key.size(), "\"schema_version\": 99");
  CHECK_THROWS_AS(io::load_result(tampered), DataError);
  CHECK_THROWS_AS(io::load_result("not json"), DataError);
}

TEST_CASE("report serialization keeps schema discipline") {
  eval::EvalReport rep;
  rep.records.push_back({"a", "cti", 1.0, 0.5, 2, {"w"}});
  rep.notes.push_back("n");
  rep.finalize();
  const eval::EvalReport back = io::load_report(io::dumps(rep));
  CHECK(back.records.size() == 1);
  CHECK(back.records[0].auprc == 0.5);
  CHECK(back.notes == rep.notes);
  CHECK(back.aggregates.count("cti.macro_f1") == 1);
  CHECK_THROWS_AS(io::load_report("{}"), DataError);
}

TEST_CASE("render spec validation") {
  CHECK_NOTHROW(RenderSpec::ansi().check());
  CHECK_NOTHROW(RenderSpec::html().check());
  CHECK_NOTHROW(RenderSpec::json().check());

  RenderSpec missing = RenderSpec::ansi();
  missing.styles.erase("context_cue");
  CHECK_THROWS_AS(missing.check(), ConfigError);

  RenderSpec dup = RenderSpec::ansi();
  dup.styles["context_cue"] = dup.styles["target_sensitive"];
  CHECK_THROWS_AS(dup.check(), ConfigError);

  const PecoreResult res = planted_result(5);
  CHECK_THROWS_AS(render(res, dup), ConfigError);
}
