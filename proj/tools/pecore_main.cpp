#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "pecore/bench.hpp"
#include "pecore/json_io.hpp"
#include "pecore/render.hpp"
#include "pecore/toy_model.hpp"

namespace {

using namespace pecore;

// --model specs:
//   toy[:vocab=24,dim=16,seed=42,pooling=attn|mean,beta=1.0]
//   toy-planted[:cue=5,trigger=6,flip=9,vocab=24,seed=42]
//   toy-planted:rules=5:6:9;2:3:8[,vocab=24,seed=42]
// PECORE_MODEL_CACHE names the weight-cache directory for adapters that
// download models; the built-in toys ignore it.
std::shared_ptr<GenerativeModel> make_model(const std::string& spec,
                                            std::uint64_t default_seed) {
  std::string kind = spec, args;
  if (const auto colon = spec.find(':'); colon != std::string::npos) {
    kind = spec.substr(0, colon);
    args = spec.substr(colon + 1);
  }
  std::map<std::string, std::string> kv;
  std::stringstream ss(args);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("bad model argument: " + item);
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  auto geti = [&](const char* key, long def) {
    auto it = kv.find(key);
    return it == kv.end() ? def : std::stol(it->second);
  };
  auto getd = [&](const char* key, double def) {
    auto it = kv.find(key);
    return it == kv.end() ? def : std::stod(it->second);
  };
  if (kind == "toy") {
    const auto pooling = kv.count("pooling") && kv["pooling"] == "mean"
                             ? ToyCueModel::Pooling::Mean
                             : ToyCueModel::Pooling::PseudoAttention;
    if (kv.count("pooling") && kv["pooling"] != "mean" && kv["pooling"] != "attn")
      throw ConfigError("pooling must be attn or mean");
    return std::make_shared<ToyCueModel>(
        static_cast<int>(geti("vocab", 24)), static_cast<int>(geti("dim", 16)),
        static_cast<std::uint64_t>(geti("seed", static_cast<long>(default_seed))),
        pooling, getd("beta", 1.0));
  }
  if (kind == "toy-planted") {
    std::vector<PlantedRule> rules;
    if (kv.count("rules")) {
      std::stringstream rs(kv["rules"]);
      std::string rule;
      while (std::getline(rs, rule, ';')) {
        PlantedRule r;
        if (std::sscanf(rule.c_str(), "%d:%d:%d", &r.cue_token, &r.trigger_pos,
                        &r.flipped_token) != 3)
          throw ConfigError("rules entries must be cue:trigger:flip");
        rules.push_back(r);
      }
    } else {
      PlantedRule r;
      r.cue_token = static_cast<int>(geti("cue", 3));
      r.trigger_pos = static_cast<int>(geti("trigger", 6));
      r.flipped_token = static_cast<int>(geti("flip", 9));
      rules.push_back(r);
    }
    return std::make_shared<ToyCueModel>(make_planted_cue_model(
        static_cast<int>(geti("vocab", 24)), rules,
        static_cast<std::uint64_t>(geti("seed", static_cast<long>(default_seed)))));
  }
  throw ConfigError("unknown model spec: " + spec +
                    " (expected toy[:...] or toy-planted[:...])");
}

struct Options {
  std::string model = "toy";
  std::string input;
  std::string output;
  std::string format;
  std::string cti_metric, cci_method, cci_tgt_fn, tmpl, separator, start = "e2e";
  double cti_k = -1.0, cci_k = -1.0;
  int workers = 1;
  int max_new_tokens = 0;
  long seed = 42;
  bool benchmark = false;
};

void add_common(CLI::App* cmd, Options& o, bool with_pipeline_opts) {
  cmd->add_option("--model", o.model, "model spec (toy[:...], toy-planted[:...])");
  cmd->add_option("--seed", o.seed, "default model seed");
  cmd->add_option("--output", o.output, "output path (default stdout)");
  if (with_pipeline_opts) {
    cmd->add_option("--cti-metric", o.cti_metric,
                    "prob_diff | lr | pcxmi | kl | ctx_saliency");
    cmd->add_option("--cti-std-k", o.cti_k, "CTI selector k (default 2, benchmark 1)");
    cmd->add_option("--cci-method", o.cci_method,
                    "grad_diff | grad_kl | attn_mean | attn_best");
    cmd->add_option("--cci-tgt-fn", o.cci_tgt_fn, "prob_diff | kl");
    cmd->add_option("--cci-std-k", o.cci_k, "CCI selector k (default 2, benchmark 1)");
    cmd->add_option("--context-separator", o.separator, "separator text (default <brk>)");
    cmd->add_option("--template", o.tmpl, "source | source+target");
    cmd->add_option("--max-new-tokens", o.max_new_tokens, "decode budget (default 64)");
    cmd->add_flag("--benchmark", o.benchmark, "benchmark preset: k = 1 selectors");
  }
}

PecoreConfig build_config(const Options& o) {
  PecoreConfig c = o.benchmark ? PecoreConfig::benchmark_preset() : PecoreConfig();
  if (!o.cti_metric.empty()) c.cti_metric = o.cti_metric;
  if (o.cti_k >= 0.0) c.cti_k = o.cti_k;
  if (!o.cci_method.empty()) c.cci_method = o.cci_method;
  if (!o.cci_tgt_fn.empty()) c.cci_tgt_fn = o.cci_tgt_fn;
  if (o.cci_k >= 0.0) c.cci_k = o.cci_k;
  if (!o.separator.empty()) c.separator = o.separator;
  if (!o.tmpl.empty()) c.template_id = o.tmpl;
  if (o.max_new_tokens > 0) c.decode.max_new_tokens = o.max_new_tokens;
  c.cti_metrics.insert(c.cti_metric);
  c.validate();
  return c;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  out << text;
}

RenderFormat parse_render_format(const std::string& f) {
  if (f == "ansi") return RenderFormat::Ansi;
  if (f == "html") return RenderFormat::Html;
  if (f == "json") return RenderFormat::Json;
  throw ConfigError("render format must be ansi, html or json");
}

std::string render_with(const PecoreResult& r, const std::string& format) {
  RenderSpec spec = RenderSpec::ansi();
  switch (parse_render_format(format)) {
    case RenderFormat::Ansi: spec = RenderSpec::ansi(); break;
    case RenderFormat::Html: spec = RenderSpec::html(); break;
    case RenderFormat::Json: spec = RenderSpec::json(); break;
  }
  return render(r, spec);
}

int cmd_run(const Options& o) {
  const PecoreConfig config = build_config(o);
  const std::string format = o.format.empty() ? "json" : o.format;
  if (o.input.empty()) {
    // stdin mode: first line context (may be empty), second line current.
    std::string context, current;
    if (!std::getline(std::cin, context) || !std::getline(std::cin, current))
      throw DataError("stdin mode expects two lines: context, then current");
    const auto model = make_model(o.model, static_cast<std::uint64_t>(o.seed));
    const PecoreResult res = run_pecore(*model, context, current, config);
    if (format == "json" || format == "jsonl")
      emit(io::dumps(res, 2) + "\n", o.output);
    else
      emit(render_with(res, format), o.output);
    return 0;
  }
  const auto examples = data::load_jsonl_file(o.input);
  std::vector<PecoreInput> inputs;
  for (const auto& ex : examples) {
    PecoreInput in;
    in.context = ex.context_source;
    if (config.template_id == "source+target" && ex.context_target &&
        !ex.context_target->empty()) {
      if (!in.context.empty()) in.context += " " + config.separator + " ";
      in.context += *ex.context_target;
    }
    in.current = ex.current_source;
    inputs.push_back(std::move(in));
  }
  auto factory = [&]() { return make_model(o.model, static_cast<std::uint64_t>(o.seed)); };
  const auto items = run_pecore_batch(factory, inputs, config, o.workers);
  std::ostringstream out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].ok()) {
      nlohmann::json err{{"error", items[i].error}, {"index", i}};
      out << (format == "ansi" || format == "html" ? "" : err.dump() + "\n");
      if (format == "ansi" || format == "html")
        out << "[error] example " << i << ": " << items[i].error << "\n";
      continue;
    }
    if (format == "json" || format == "jsonl")
      out << io::dumps(*items[i].result) << "\n";
    else
      out << render_with(*items[i].result, format) << "\n";
  }
  emit(out.str(), o.output);
  return 0;
}

bench::DatasetOptions dataset_options(const Options& o) {
  bench::DatasetOptions d;
  d.config = build_config(o);
  d.scheme.brk = d.config.separator;
  d.start = o.start;
  return d;
}

int cmd_eval(const Options& o, const std::string& which) {
  const auto model = make_model(o.model, static_cast<std::uint64_t>(o.seed));
  const auto examples = data::load_jsonl_file(o.input);
  const bench::DatasetOptions d = dataset_options(o);
  const std::string format = o.format.empty() ? "json" : o.format;
  if (format != "json" && format != "csv")
    throw ConfigError("eval format must be json or csv");
  std::string text;
  if (which == "cti") {
    const auto report = bench::evaluate_dataset_cti(*model, examples, d);
    text = format == "csv" ? report.to_csv() : io::dumps(report, 2) + "\n";
  } else if (which == "cci") {
    const auto report = bench::evaluate_dataset_cci(*model, examples, d);
    text = format == "csv" ? report.to_csv() : io::dumps(report, 2) + "\n";
  } else {
    const auto reports = bench::evaluate_dataset_e2e(*model, examples, d);
    if (format == "csv") {
      text = reports.cti.to_csv() + reports.cci.to_csv();
    } else {
      nlohmann::json j{{"schema_version", io::kSchemaVersion}};
      j["cti"] = reports.cti;
      j["cci"] = reports.cci;
      text = j.dump(2) + "\n";
    }
  }
  emit(text, o.output);
  return 0;
}

int cmd_accuracy(const Options& o) {
  const auto model = make_model(o.model, static_cast<std::uint64_t>(o.seed));
  const auto examples = data::load_jsonl_file(o.input);
  const auto res = bench::dataset_accuracy(*model, examples, dataset_options(o));
  emit(nlohmann::json(res).dump(2) + "\n", o.output);
  return 0;
}

int cmd_render(const Options& o) {
  std::string text;
  if (o.input.empty()) {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    text = buf.str();
  } else {
    std::ifstream in(o.input);
    if (!in) throw DataError("cannot open result file: " + o.input);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  const PecoreResult res = io::load_result(text);
  emit(render_with(res, o.format.empty() ? "ansi" : o.format), o.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context reliance detection and attribution for generative models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  Options o;
  if (const char* cache = std::getenv("PECORE_MODEL_CACHE"); cache && *cache)
    (void)cache;  // reserved for downloading adapters

  CLI::App* run = app.add_subcommand(
      "run", "end-to-end analysis (stdin pair or --input JSONL)");
  add_common(run, o, true);
  run->add_option("--input", o.input, "JSONL dataset (omit for stdin mode)");
  run->add_option("--workers", o.workers, "parallel workers for --input mode");
  run->add_option("--format", o.format, "json | jsonl | ansi | html");

  CLI::App* ecti = app.add_subcommand("eval-cti", "score CTI selection against gold");
  add_common(ecti, o, true);
  ecti->add_option("--input", o.input, "JSONL dataset")->required();
  ecti->add_option("--format", o.format, "json | csv");

  CLI::App* ecci = app.add_subcommand("eval-cci", "score CCI attribution against gold");
  add_common(ecci, o, true);
  ecci->add_option("--input", o.input, "JSONL dataset")->required();
  ecci->add_option("--format", o.format, "json | csv");
  ecci->add_option("--start", o.start, "gold | e2e target steps");

  CLI::App* ee2e = app.add_subcommand("eval-e2e", "both stages, CCI from CTI picks");
  add_common(ee2e, o, true);
  ee2e->add_option("--input", o.input, "JSONL dataset")->required();
  ee2e->add_option("--format", o.format, "json | csv");

  CLI::App* acc = app.add_subcommand("accuracy", "contextual vs context-less accuracy");
  add_common(acc, o, true);
  acc->add_option("--input", o.input, "JSONL dataset")->required();

  CLI::App* rnd = app.add_subcommand("render", "render a saved run result");
  add_common(rnd, o, false);
  rnd->add_option("--input", o.input, "result JSON (omit for stdin)");
  rnd->add_option("--format", o.format, "ansi | html | json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(o);
    if (ecti->parsed()) return cmd_eval(o, "cti");
    if (ecci->parsed()) return cmd_eval(o, "cci");
    if (ee2e->parsed()) return cmd_eval(o, "e2e");
    if (acc->parsed()) return cmd_accuracy(o);
    if (rnd->parsed()) return cmd_render(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const CapabilityError& e) {
    std::cerr << "capability error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
