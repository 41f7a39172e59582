#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "pecore/bench.hpp"
#include "pecore/json_io.hpp"
#include "pecore/render.hpp"
#include "pecore/toy_model.hpp"

namespace py = pybind11;
using namespace pecore;

namespace {

// Lets Python classes implement the adapter contract. Pure methods must be
// overridden; gradient/attention fall back to the CapabilityError defaults.
class PyGenerativeModel : public GenerativeModel {
 public:
  using GenerativeModel::GenerativeModel;

  int vocab_size() const override {
    PYBIND11_OVERRIDE_PURE(int, GenerativeModel, vocab_size);
  }
  ModelCapabilities capabilities() const override {
    PYBIND11_OVERRIDE_PURE(ModelCapabilities, GenerativeModel, capabilities);
  }
  TokenSeq tokenize(const std::string& text) const override {
    PYBIND11_OVERRIDE_PURE(TokenSeq, GenerativeModel, tokenize, text);
  }
  TokenSeq detokenize(const std::vector<int>& ids) const override {
    PYBIND11_OVERRIDE_PURE(TokenSeq, GenerativeModel, detokenize, ids);
  }
  StepDistribution next_distribution(const TokenSeq& input,
                                     const TokenSeq& prefix) const override {
    PYBIND11_OVERRIDE_PURE(StepDistribution, GenerativeModel, next_distribution,
                           input, prefix);
  }
  std::vector<double> gradient_norms(const TokenSeq& input, const TokenSeq& prefix,
                                     const ScalarTarget& target) const override {
    PYBIND11_OVERRIDE(std::vector<double>, GenerativeModel, gradient_norms, input,
                      prefix, target);
  }
  AttentionTensor attention_weights(const TokenSeq& input,
                                    const TokenSeq& prefix) const override {
    PYBIND11_OVERRIDE(AttentionTensor, GenerativeModel, attention_weights, input,
                      prefix);
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Context reliance detection and attribution for generative models";
  m.attr("SCHEMA_VERSION") = io::kSchemaVersion;

  // --- errors ---------------------------------------------------------------
  auto err = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", err.ptr());
  py::register_exception<CapabilityError>(m, "CapabilityError", err.ptr());
  py::register_exception<VocabMismatchError>(m, "VocabMismatchError", err.ptr());
  py::register_exception<LengthError>(m, "LengthError", err.ptr());
  auto data_err = py::register_exception<DataError>(m, "DataError", err.ptr());
  py::register_exception<TagError>(m, "TagError", data_err.ptr());
  py::register_exception<PlantInfeasibleError>(m, "PlantInfeasibleError", err.ptr());

  // --- core types -------------------------------------------------------------
  py::class_<Span>(m, "Span")
      .def(py::init<>())
      .def(py::init<std::size_t, std::size_t>(), py::arg("begin"), py::arg("end"))
      .def_readwrite("begin", &Span::begin)
      .def_readwrite("end", &Span::end)
      .def("length", &Span::length)
      .def("__eq__", [](const Span& a, const Span& b) { return a == b; })
      .def("__lt__", [](const Span& a, const Span& b) { return a < b; })
      .def("__hash__", [](const Span& s) { return s.begin * 1000003 + s.end; })
      .def("__repr__", [](const Span& s) {
        return "Span(" + std::to_string(s.begin) + ", " + std::to_string(s.end) + ")";
      });

  py::class_<TokenSeq>(m, "TokenSeq")
      .def(py::init<>())
      .def_readwrite("tokens", &TokenSeq::tokens)
      .def_readwrite("offsets", &TokenSeq::offsets)
      .def_readwrite("text", &TokenSeq::text)
      .def("__len__", &TokenSeq::size)
      .def("empty", &TokenSeq::empty)
      .def("prefix", &TokenSeq::prefix, py::arg("n"))
      .def_static("concat", &TokenSeq::concat, py::arg("a"), py::arg("b"),
                  py::arg("joiner") = " ")
      .def("check", &TokenSeq::check, py::arg("vocab_size") = -1);

  py::class_<InputPair>(m, "InputPair")
      .def(py::init<>())
      .def_readwrite("contextual", &InputPair::contextual)
      .def_readwrite("non_contextual", &InputPair::non_contextual)
      .def_readwrite("context_mask", &InputPair::context_mask)
      .def_readwrite("template_id", &InputPair::template_id)
      .def("has_context", &InputPair::has_context)
      .def("context_size", &InputPair::context_size)
      .def("context_positions", &InputPair::context_positions)
      .def("check", &InputPair::check);

  py::class_<StepDistribution>(m, "StepDistribution")
      .def(py::init<>())
      .def_readwrite("probs", &StepDistribution::probs)
      .def_readwrite("step_index", &StepDistribution::step_index)
      .def("check", &StepDistribution::check, py::arg("tol") = 1e-6);

  py::enum_<DecodeStrategy>(m, "DecodeStrategy").value("Greedy", DecodeStrategy::Greedy);

  py::class_<DecodeConfig>(m, "DecodeConfig")
      .def(py::init<>())
      .def_readwrite("strategy", &DecodeConfig::strategy)
      .def_readwrite("max_new_tokens", &DecodeConfig::max_new_tokens)
      .def_readwrite("eos_token", &DecodeConfig::eos_token)
      .def("check", &DecodeConfig::check);

  py::class_<ScalarTarget> target(m, "ScalarTarget");
  py::enum_<ScalarTarget::Kind>(target, "Kind")
      .value("TokenProb", ScalarTarget::Kind::TokenProb)
      .value("TokenProbMinusConst", ScalarTarget::Kind::TokenProbMinusConst)
      .value("KlToFixed", ScalarTarget::Kind::KlToFixed);
  target.def(py::init<>())
      .def_readwrite("kind", &ScalarTarget::kind)
      .def_readwrite("token", &ScalarTarget::token)
      .def_readwrite("constant", &ScalarTarget::constant)
      .def_readwrite("fixed", &ScalarTarget::fixed)
      .def_static("token_prob", &ScalarTarget::token_prob, py::arg("token"))
      .def_static("token_prob_minus_const", &ScalarTarget::token_prob_minus_const,
                  py::arg("token"), py::arg("constant"))
      .def_static("kl_to_fixed", &ScalarTarget::kl_to_fixed, py::arg("fixed"))
      .def("evaluate", &ScalarTarget::evaluate, py::arg("probs"))
      .def("grad_probs", &ScalarTarget::grad_probs, py::arg("probs"))
      .def("check", &ScalarTarget::check, py::arg("vocab_size"));

  py::class_<AttentionTensor>(m, "AttentionTensor")
      .def(py::init<>())
      .def(py::init<int, int, int>(), py::arg("layers"), py::arg("heads"),
           py::arg("positions"))
      .def_readwrite("layers", &AttentionTensor::layers)
      .def_readwrite("heads", &AttentionTensor::heads)
      .def_readwrite("positions", &AttentionTensor::positions)
      .def_readwrite("data", &AttentionTensor::data)
      .def("at",
           [](const AttentionTensor& t, int l, int h, int p) { return t.at(l, h, p); },
           py::arg("layer"), py::arg("head"), py::arg("position"))
      .def("set",
           [](AttentionTensor& t, int l, int h, int p, double v) { t.at(l, h, p) = v; },
           py::arg("layer"), py::arg("head"), py::arg("position"), py::arg("value"))
      .def("slice", &AttentionTensor::slice, py::arg("layer"), py::arg("head"))
      .def("mean_all", &AttentionTensor::mean_all)
      .def("check", &AttentionTensor::check, py::arg("tol") = 1e-5);

  py::class_<ModelCapabilities>(m, "ModelCapabilities")
      .def(py::init<>())
      .def(py::init([](bool gradients, bool attention) {
             return ModelCapabilities{gradients, attention};
           }),
           py::arg("gradients"), py::arg("attention"))
      .def_readwrite("gradients", &ModelCapabilities::gradients)
      .def_readwrite("attention", &ModelCapabilities::attention);

  // --- model bridge -----------------------------------------------------------
  py::class_<GenerativeModel, PyGenerativeModel, std::shared_ptr<GenerativeModel>>(
      m, "GenerativeModel")
      .def(py::init<>())
      .def("vocab_size", &GenerativeModel::vocab_size)
      .def("capabilities", &GenerativeModel::capabilities)
      .def("tokenize", &GenerativeModel::tokenize, py::arg("text"))
      .def("detokenize", &GenerativeModel::detokenize, py::arg("ids"))
      .def("next_distribution", &GenerativeModel::next_distribution, py::arg("input"),
           py::arg("prefix"))
      .def("gradient_norms", &GenerativeModel::gradient_norms, py::arg("input"),
           py::arg("prefix"), py::arg("target"))
      .def("attention_weights", &GenerativeModel::attention_weights, py::arg("input"),
           py::arg("prefix"));

  m.def("generate", &generate, py::arg("model"), py::arg("input"), py::arg("config"));
  m.def("checked_next_distribution", &checked_next_distribution, py::arg("model"),
        py::arg("input"), py::arg("prefix"));
  m.def("force_decode_scores", &force_decode_scores, py::arg("model"), py::arg("input"),
        py::arg("target"));
  m.def("make_input_pair", &make_input_pair, py::arg("model"), py::arg("context_ids"),
        py::arg("current_ids"), py::arg("separator_id") = -1);

  // --- toy model ----------------------------------------------------------------
  py::class_<Mat>(m, "Mat")
      .def(py::init<>())
      .def(py::init<int, int>(), py::arg("rows"), py::arg("cols"))
      .def_readwrite("rows", &Mat::rows)
      .def_readwrite("cols", &Mat::cols)
      .def_readwrite("a", &Mat::a)
      .def("at", [](const Mat& mat, int r, int c) { return mat.at(r, c); },
           py::arg("row"), py::arg("col"))
      .def("set", [](Mat& mat, int r, int c, double v) { mat.at(r, c) = v; },
           py::arg("row"), py::arg("col"), py::arg("value"));

  py::class_<PlantedRule>(m, "PlantedRule")
      .def(py::init<>())
      .def(py::init([](int cue, int trigger, int flip) {
             return PlantedRule{cue, trigger, flip};
           }),
           py::arg("cue_token"), py::arg("trigger_pos"), py::arg("flipped_token"))
      .def_readwrite("cue_token", &PlantedRule::cue_token)
      .def_readwrite("trigger_pos", &PlantedRule::trigger_pos)
      .def_readwrite("flipped_token", &PlantedRule::flipped_token);

  py::class_<PlantedProbe>(m, "PlantedProbe")
      .def_readonly("context", &PlantedProbe::context)
      .def_readonly("current", &PlantedProbe::current)
      .def_readonly("trigger_pos", &PlantedProbe::trigger_pos)
      .def_readonly("flipped_token", &PlantedProbe::flipped_token)
      .def_readonly("natural_token", &PlantedProbe::natural_token)
      .def_readonly("cue_slot", &PlantedProbe::cue_slot);

  py::class_<ToyCueModel, GenerativeModel, std::shared_ptr<ToyCueModel>> toy(
      m, "ToyCueModel");
  py::enum_<ToyCueModel::Pooling>(toy, "Pooling")
      .value("Mean", ToyCueModel::Pooling::Mean)
      .value("PseudoAttention", ToyCueModel::Pooling::PseudoAttention);
  toy.def(py::init<int, int, std::uint64_t, ToyCueModel::Pooling, double>(),
          py::arg("vocab"), py::arg("dim"), py::arg("seed"),
          py::arg("pooling") = ToyCueModel::Pooling::PseudoAttention,
          py::arg("beta") = 1.0)
      .def_static("from_weights", &ToyCueModel::from_weights, py::arg("embedding"),
                  py::arg("projection"), py::arg("pooling"), py::arg("beta") = 1.0)
      .def_property_readonly("pooling", &ToyCueModel::pooling)
      .def_property_readonly("beta", &ToyCueModel::beta)
      .def_property_readonly("dim", &ToyCueModel::dim)
      .def_property_readonly("embedding", &ToyCueModel::embedding)
      .def_property_readonly("projection", &ToyCueModel::projection)
      .def("separator_id", &ToyCueModel::separator_id)
      .def("rules", &ToyCueModel::rules)
      .def("probes", &ToyCueModel::probes)
      .def("probe_pair", &ToyCueModel::probe_pair, py::arg("rule_idx"))
      .def("embeddings_for", &ToyCueModel::embeddings_for, py::arg("ids"))
      .def("forward_from_embeddings",
           [](const ToyCueModel& mdl, const std::vector<std::vector<double>>& xs) {
             return mdl.forward_from_embeddings(xs);
           },
           py::arg("xs"))
      .def("embedding_grads", &ToyCueModel::embedding_grads, py::arg("ids"),
           py::arg("target"));

  m.def("make_planted_cue_model", &make_planted_cue_model, py::arg("vocab"),
        py::arg("rules"), py::arg("seed"));

  // --- cti ------------------------------------------------------------------------
  m.def("metric_prob_diff", &metric_prob_diff, py::arg("p_ctx"), py::arg("p_noctx"));
  m.def("metric_lr", &metric_lr, py::arg("p_ctx"), py::arg("p_noctx"));
  m.def("metric_pcxmi", &metric_pcxmi, py::arg("p_ctx"), py::arg("p_noctx"),
        py::arg("sign_flip") = false);
  m.def("metric_kl", &metric_kl, py::arg("p_ctx"), py::arg("p_noctx"));
  m.def("metric_context_saliency", &metric_context_saliency, py::arg("grad_norms"),
        py::arg("context_mask"));
  m.def("std_selector", &std_selector, py::arg("scores"), py::arg("k"));
  m.def("stratified_random_baseline", &stratified_random_baseline, py::arg("n"),
        py::arg("rate"), py::arg("seed"));
  m.def("is_cti_metric", &is_cti_metric, py::arg("name"));

  py::class_<SelectorConfig>(m, "SelectorConfig")
      .def(py::init<>())
      .def(py::init([](const std::string& metric, double k) {
             return SelectorConfig{metric, k};
           }),
           py::arg("metric"), py::arg("k"))
      .def_readwrite("metric", &SelectorConfig::metric)
      .def_readwrite("k", &SelectorConfig::k);

  py::class_<MetricScoreRow>(m, "MetricScoreRow")
      .def(py::init<>())
      .def_readwrite("step", &MetricScoreRow::step)
      .def_readwrite("scores", &MetricScoreRow::scores);

  py::class_<CtiOptions>(m, "CtiOptions")
      .def(py::init<>())
      .def_readwrite("metrics", &CtiOptions::metrics)
      .def_readwrite("selector", &CtiOptions::selector)
      .def_readwrite("pcxmi_sign_flip", &CtiOptions::pcxmi_sign_flip);

  py::class_<CTIResult>(m, "CTIResult")
      .def(py::init<>())
      .def_readwrite("target", &CTIResult::target)
      .def_readwrite("rows", &CTIResult::rows)
      .def_readwrite("selected", &CTIResult::selected)
      .def_readwrite("selector", &CTIResult::selector)
      .def("column", &CTIResult::column, py::arg("metric"));

  m.def("run_cti", &run_cti, py::arg("model"), py::arg("pair"), py::arg("y_hat"),
        py::arg("options") = CtiOptions());

  // --- cci ------------------------------------------------------------------------
  py::class_<AttributionMap>(m, "AttributionMap")
      .def(py::init<>())
      .def_readwrite("target_step", &AttributionMap::target_step)
      .def_readwrite("scores", &AttributionMap::scores)
      .def_readwrite("ctx_scores", &AttributionMap::ctx_scores)
      .def_readwrite("ctx_positions", &AttributionMap::ctx_positions)
      .def_readwrite("method", &AttributionMap::method)
      .def_readwrite("tgt_fn", &AttributionMap::tgt_fn);

  py::class_<CueTargetPair>(m, "CueTargetPair")
      .def(py::init<>())
      .def_readwrite("cue_position", &CueTargetPair::cue_position)
      .def_readwrite("target_step", &CueTargetPair::target_step)
      .def_readwrite("cue_score", &CueTargetPair::cue_score)
      .def_readwrite("cti_score", &CueTargetPair::cti_score)
      .def_readwrite("cue_token", &CueTargetPair::cue_token)
      .def_readwrite("target_token", &CueTargetPair::target_token)
      .def_readwrite("cue_text", &CueTargetPair::cue_text)
      .def_readwrite("target_text", &CueTargetPair::target_text)
      .def("__repr__", [](const CueTargetPair& p) {
        return "CueTargetPair(cue @" + std::to_string(p.cue_position) + " -> target @" +
               std::to_string(p.target_step) + ")";
      });

  py::class_<HeadSelection>(m, "HeadSelection")
      .def(py::init<>())
      .def(py::init([](int layer, int head) {
             return HeadSelection{layer, head};
           }),
           py::arg("layer"), py::arg("head"))
      .def_readwrite("layer", &HeadSelection::layer)
      .def_readwrite("head", &HeadSelection::head);

  m.def("is_cci_method", &is_cci_method, py::arg("name"));
  m.def("default_tgt_fn", &default_tgt_fn, py::arg("method"));
  m.def("attribute_contrastive_grad", &attribute_contrastive_grad, py::arg("model"),
        py::arg("pair"), py::arg("prefix"), py::arg("token"), py::arg("tgt_fn"));
  m.def("attribute_attention", &attribute_attention, py::arg("model"), py::arg("pair"),
        py::arg("prefix"), py::arg("method"),
        py::arg("head") = std::optional<HeadSelection>());

  py::class_<HeadCalibrationItem>(m, "HeadCalibrationItem")
      .def(py::init<>())
      .def_readwrite("pair", &HeadCalibrationItem::pair)
      .def_readwrite("prefix", &HeadCalibrationItem::prefix)
      .def_readwrite("gold_cue_mask", &HeadCalibrationItem::gold_cue_mask);

  m.def("fit_best_head", &fit_best_head, py::arg("model"), py::arg("items"));
  m.def("constrained_continuation", &constrained_continuation, py::arg("model"),
        py::arg("input"), py::arg("forced_prefix"), py::arg("config"));

  py::class_<CciOptions>(m, "CciOptions")
      .def(py::init<>())
      .def_readwrite("method", &CciOptions::method)
      .def_readwrite("tgt_fn", &CciOptions::tgt_fn)
      .def_readwrite("k", &CciOptions::k)
      .def_readwrite("head", &CciOptions::head);

  m.def(
      "run_cci",
      [](const GenerativeModel& model, const InputPair& pair, const TokenSeq& y_hat,
         const std::set<int>& targets, const CciOptions& options,
         const std::optional<std::vector<double>>& cti_scores) {
        std::map<int, AttributionMap> maps;
        std::vector<CueTargetPair> pairs =
            run_cci(model, pair, y_hat, targets, options, &maps,
                    cti_scores ? &*cti_scores : nullptr);
        return py::make_tuple(std::move(pairs), std::move(maps));
      },
      py::arg("model"), py::arg("pair"), py::arg("y_hat"), py::arg("targets"),
      py::arg("options") = CciOptions(),
      py::arg("cti_scores") = std::optional<std::vector<double>>(),
      "Returns (pairs, attribution_maps keyed by target step).");

  // --- pipeline ----------------------------------------------------------------------
  py::class_<PecoreConfig>(m, "PecoreConfig")
      .def(py::init<>())
      .def_readwrite("cti_metric", &PecoreConfig::cti_metric)
      .def_readwrite("cti_k", &PecoreConfig::cti_k)
      .def_readwrite("cti_metrics", &PecoreConfig::cti_metrics)
      .def_readwrite("pcxmi_sign_flip", &PecoreConfig::pcxmi_sign_flip)
      .def_readwrite("cci_method", &PecoreConfig::cci_method)
      .def_readwrite("cci_tgt_fn", &PecoreConfig::cci_tgt_fn)
      .def_readwrite("cci_k", &PecoreConfig::cci_k)
      .def_readwrite("attn_head", &PecoreConfig::attn_head)
      .def_readwrite("decode", &PecoreConfig::decode)
      .def_readwrite("template_id", &PecoreConfig::template_id)
      .def_readwrite("separator", &PecoreConfig::separator)
      .def_readwrite("compute_y_star", &PecoreConfig::compute_y_star)
      .def("validate",
           [](const PecoreConfig& c, const GenerativeModel* model) { c.validate(model); },
           py::arg("model") = nullptr)
      .def_static("benchmark_preset", &PecoreConfig::benchmark_preset);

  py::class_<PecoreResult>(m, "PecoreResult")
      .def(py::init<>())
      .def_readwrite("input", &PecoreResult::input)
      .def_readwrite("y_hat", &PecoreResult::y_hat)
      .def_readwrite("y_tilde", &PecoreResult::y_tilde)
      .def_readwrite("cti", &PecoreResult::cti)
      .def_readwrite("attribution_maps", &PecoreResult::attribution_maps)
      .def_readwrite("pairs", &PecoreResult::pairs)
      .def_readwrite("y_star", &PecoreResult::y_star)
      .def_readwrite("config", &PecoreResult::config);

  m.def("run_pecore",
        py::overload_cast<const GenerativeModel&, const InputPair&, const PecoreConfig&>(
            &run_pecore),
        py::arg("model"), py::arg("pair"), py::arg("config") = PecoreConfig());
  m.def("run_pecore",
        py::overload_cast<const GenerativeModel&, const std::string&, const std::string&,
                          const PecoreConfig&>(&run_pecore),
        py::arg("model"), py::arg("context"), py::arg("current"),
        py::arg("config") = PecoreConfig());

  py::class_<PecoreInput>(m, "PecoreInput")
      .def(py::init<>())
      .def(py::init([](const std::string& context, const std::string& current) {
             return PecoreInput{context, current};
           }),
           py::arg("context"), py::arg("current"))
      .def_readwrite("context", &PecoreInput::context)
      .def_readwrite("current", &PecoreInput::current);

  py::class_<BatchItem>(m, "BatchItem")
      .def_readonly("result", &BatchItem::result)
      .def_readonly("error", &BatchItem::error)
      .def("ok", &BatchItem::ok);

  m.def(
      "run_pecore_batch",
      [](const std::vector<std::shared_ptr<GenerativeModel>>& worker_models,
         const std::vector<PecoreInput>& inputs, const PecoreConfig& config,
         int workers) {
        py::gil_scoped_release release;
        return run_pecore_batch(worker_models, inputs, config, workers);
      },
      py::arg("worker_models"), py::arg("inputs"), py::arg("config") = PecoreConfig(),
      py::arg("workers") = 1,
      "Parallel map over inputs; worker_models must hold one handle per worker.");

  // --- datasets ------------------------------------------------------------------------
  py::module_ data = m.def_submodule("data", "annotated corpora, tags, JSONL IO");

  py::class_<data::TagScheme>(data, "TagScheme")
      .def(py::init<>())
      .def_readwrite("target_open", &data::TagScheme::target_open)
      .def_readwrite("target_close", &data::TagScheme::target_close)
      .def_readwrite("cue_open", &data::TagScheme::cue_open)
      .def_readwrite("cue_close", &data::TagScheme::cue_close)
      .def_readwrite("brk", &data::TagScheme::brk);

  py::class_<data::ParsedTags>(data, "ParsedTags")
      .def(py::init<>())
      .def_readwrite("clean", &data::ParsedTags::clean)
      .def_readwrite("target_spans", &data::ParsedTags::target_spans)
      .def_readwrite("cue_spans", &data::ParsedTags::cue_spans);

  data.def("parse_tagged", &data::parse_tagged, py::arg("raw"),
           py::arg("scheme") = data::TagScheme());
  data.def("render_tagged", &data::render_tagged, py::arg("clean"),
           py::arg("target_spans"), py::arg("cue_spans"),
           py::arg("scheme") = data::TagScheme());
  data.def("spans_to_token_mask", &data::spans_to_token_mask, py::arg("spans"),
           py::arg("seq"));

  py::class_<data::AnnotatedExample>(data, "AnnotatedExample")
      .def(py::init<>())
      .def_readwrite("context_source", &data::AnnotatedExample::context_source)
      .def_readwrite("current_source", &data::AnnotatedExample::current_source)
      .def_readwrite("context_target", &data::AnnotatedExample::context_target)
      .def_readwrite("current_target", &data::AnnotatedExample::current_target)
      .def_readwrite("gold_target_spans", &data::AnnotatedExample::gold_target_spans)
      .def_readwrite("gold_cue_spans_source",
                     &data::AnnotatedExample::gold_cue_spans_source)
      .def_readwrite("gold_cue_spans_target",
                     &data::AnnotatedExample::gold_cue_spans_target)
      .def_readwrite("meta", &data::AnnotatedExample::meta)
      .def("check", &data::AnnotatedExample::check);

  data.def("build_input_pair", &data::build_input_pair, py::arg("example"),
           py::arg("model"), py::arg("scheme") = data::TagScheme(),
           py::arg("template_id") = "source");
  data.def("gold_cue_mask", &data::gold_cue_mask, py::arg("example"), py::arg("pair"),
           py::arg("model"), py::arg("scheme") = data::TagScheme(),
           py::arg("template_id") = "source");

  py::class_<data::HeuristicAligner>(data, "HeuristicAligner")
      .def(py::init<>())
      .def("align", &data::HeuristicAligner::align, py::arg("reference"),
           py::arg("spans"), py::arg("generation"));

  py::class_<data::AlignedSpans>(data, "AlignedSpans")
      .def_readonly("spans", &data::AlignedSpans::spans)
      .def_readonly("dropped", &data::AlignedSpans::dropped);

  data.def(
      "align_tags",
      [](const std::string& reference, const std::vector<Span>& spans,
         const std::string& generation) {
        return data::align_tags(reference, spans, generation);
      },
      py::arg("reference"), py::arg("spans"), py::arg("generation"));

  data.def("load_jsonl_file", &data::load_jsonl_file, py::arg("path"));
  data.def("write_jsonl_file", &data::write_jsonl_file, py::arg("path"),
           py::arg("examples"));

  // --- evalkit -----------------------------------------------------------------------
  py::module_ ev = m.def_submodule("eval", "plausibility metrics and reports");

  ev.def("token_macro_f1", &eval::token_macro_f1, py::arg("gold"), py::arg("pred"));
  ev.def("auprc", &eval::auprc, py::arg("gold"), py::arg("scores"));

  py::class_<eval::EvalRecord>(ev, "EvalRecord")
      .def(py::init<>())
      .def_readwrite("example_id", &eval::EvalRecord::example_id)
      .def_readwrite("stage", &eval::EvalRecord::stage)
      .def_readwrite("macro_f1", &eval::EvalRecord::macro_f1)
      .def_readwrite("auprc", &eval::EvalRecord::auprc)
      .def_readwrite("n_gold_positive", &eval::EvalRecord::n_gold_positive)
      .def_readwrite("warnings", &eval::EvalRecord::warnings);

  py::class_<eval::Aggregate>(ev, "Aggregate")
      .def(py::init<>())
      .def_readwrite("mean", &eval::Aggregate::mean)
      .def_readwrite("median", &eval::Aggregate::median)
      .def_readwrite("q1", &eval::Aggregate::q1)
      .def_readwrite("q3", &eval::Aggregate::q3)
      .def_readwrite("n", &eval::Aggregate::n);

  ev.def("aggregate_values", &eval::aggregate_values, py::arg("values"));

  py::class_<eval::EvalReport>(ev, "EvalReport")
      .def(py::init<>())
      .def_readwrite("records", &eval::EvalReport::records)
      .def_readwrite("aggregates", &eval::EvalReport::aggregates)
      .def_readwrite("notes", &eval::EvalReport::notes)
      .def("finalize", &eval::EvalReport::finalize)
      .def("to_csv", &eval::EvalReport::to_csv);

  py::class_<eval::EvalItem>(ev, "EvalItem")
      .def(py::init<>())
      .def_readwrite("id", &eval::EvalItem::id)
      .def_readwrite("scores", &eval::EvalItem::scores)
      .def_readwrite("selected", &eval::EvalItem::selected)
      .def_readwrite("gold", &eval::EvalItem::gold);

  ev.def("evaluate_items", &eval::evaluate_items, py::arg("items"), py::arg("stage"));
  ev.def("evaluate_cti", &eval::evaluate_cti, py::arg("results"), py::arg("gold_masks"),
         py::arg("ids") = std::vector<std::string>());

  py::class_<eval::AccuracyResult>(ev, "AccuracyResult")
      .def(py::init<>())
      .def_readwrite("ok", &eval::AccuracyResult::ok)
      .def_readwrite("ok_cs", &eval::AccuracyResult::ok_cs)
      .def_readwrite("n", &eval::AccuracyResult::n)
      .def_readwrite("n_ok", &eval::AccuracyResult::n_ok)
      .def_readwrite("n_ok_cs", &eval::AccuracyResult::n_ok_cs);

  ev.def("disambiguation_accuracy", &eval::disambiguation_accuracy,
         py::arg("references"), py::arg("gold_spans"), py::arg("outputs_ctx"),
         py::arg("outputs_noctx"));

  // --- dataset benchmarks ----------------------------------------------------------------
  py::module_ bench = m.def_submodule("bench", "dataset-level evaluation drivers");

  py::class_<bench::DatasetOptions>(bench, "DatasetOptions")
      .def(py::init<>())
      .def_readwrite("config", &bench::DatasetOptions::config)
      .def_readwrite("scheme", &bench::DatasetOptions::scheme)
      .def_readwrite("start", &bench::DatasetOptions::start);

  py::class_<bench::E2eReports>(bench, "E2eReports")
      .def_readonly("cti", &bench::E2eReports::cti)
      .def_readonly("cci", &bench::E2eReports::cci);

  bench.def("evaluate_dataset_cti", &bench::evaluate_dataset_cti, py::arg("model"),
            py::arg("examples"), py::arg("options") = bench::DatasetOptions());
  bench.def("evaluate_dataset_cci", &bench::evaluate_dataset_cci, py::arg("model"),
            py::arg("examples"), py::arg("options") = bench::DatasetOptions());
  bench.def("evaluate_dataset_e2e", &bench::evaluate_dataset_e2e, py::arg("model"),
            py::arg("examples"), py::arg("options") = bench::DatasetOptions());
  bench.def("dataset_accuracy", &bench::dataset_accuracy, py::arg("model"),
            py::arg("examples"), py::arg("options") = bench::DatasetOptions());

  // --- render + result IO -----------------------------------------------------------------
  py::enum_<RenderFormat>(m, "RenderFormat")
      .value("Ansi", RenderFormat::Ansi)
      .value("Html", RenderFormat::Html)
      .value("Json", RenderFormat::Json);

  py::class_<RenderSpec>(m, "RenderSpec")
      .def(py::init<>())
      .def_readwrite("format", &RenderSpec::format)
      .def_readwrite("styles", &RenderSpec::styles)
      .def_static("ansi", &RenderSpec::ansi)
      .def_static("html", &RenderSpec::html)
      .def_static("json", &RenderSpec::json)
      .def("check", &RenderSpec::check);

  m.def("render", &render, py::arg("result"), py::arg("spec"));
  m.def("strip_ansi", &strip_ansi, py::arg("text"));

  m.def("dumps",
        py::overload_cast<const PecoreResult&, int>(&io::dumps), py::arg("result"),
        py::arg("indent") = -1);
  m.def("dumps",
        py::overload_cast<const eval::EvalReport&, int>(&io::dumps), py::arg("report"),
        py::arg("indent") = -1);
  m.def("load_result", &io::load_result, py::arg("text"));
  m.def("load_report", &io::load_report, py::arg("text"));
}
