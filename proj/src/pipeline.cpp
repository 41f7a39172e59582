#include "pecore/pipeline.hpp"

#include <atomic>
#include <thread>

namespace pecore {

void PecoreConfig::validate(const GenerativeModel* model) const {
  if (!is_cti_metric(cti_metric)) throw ConfigError("unknown CTI metric: " + cti_metric);
  for (const std::string& m : cti_metrics)
    if (!is_cti_metric(m)) throw ConfigError("unknown CTI metric: " + m);
  if (!is_cci_method(cci_method)) throw ConfigError("unknown CCI method: " + cci_method);
  if (cti_k < 0.0 || cci_k < 0.0) throw ConfigError("selector k must be >= 0");
  if (!cci_tgt_fn.empty() && cci_tgt_fn != default_tgt_fn(cci_method))
    throw ConfigError("cci_tgt_fn " + cci_tgt_fn + " conflicts with method " + cci_method);
  if (cci_method == "attn_best" && !attn_head)
    throw ConfigError("attn_best needs a fitted attention head");
  if (template_id != "source" && template_id != "source+target")
    throw ConfigError("unknown template: " + template_id);
  decode.check();
  if (model) {
    const ModelCapabilities caps = model->capabilities();
    const bool needs_grad = cti_metric == "ctx_saliency" ||
                            cti_metrics.count("ctx_saliency") > 0 ||
                            cci_method == "grad_diff" || cci_method == "grad_kl";
    const bool needs_attn = cci_method == "attn_mean" || cci_method == "attn_best";
    if (needs_grad && !caps.gradients)
      throw CapabilityError("configuration needs gradients, model has none");
    if (needs_attn && !caps.attention)
      throw CapabilityError("configuration needs attention, model has none");
  }
}

PecoreConfig PecoreConfig::benchmark_preset() {
  PecoreConfig c;
  c.cti_k = 1.0;
  c.cci_k = 1.0;
  return c;
}

PecoreResult run_pecore(const GenerativeModel& model, const InputPair& pair,
                        const PecoreConfig& config) {
  config.validate(&model);
  pair.check();
  PecoreResult res;
  res.config = config;
  res.input = pair;
  res.input.template_id = pair.template_id;
  res.y_hat = generate(model, pair.contextual, config.decode);
  res.y_tilde = generate(model, pair.non_contextual, config.decode);

  CtiOptions cti_opts;
  cti_opts.metrics = config.cti_metrics;
  cti_opts.selector = {config.cti_metric, config.cti_k};
  cti_opts.pcxmi_sign_flip = config.pcxmi_sign_flip;
  res.cti = run_cti(model, pair, res.y_hat, cti_opts);

  CciOptions cci_opts;
  cci_opts.method = config.cci_method;
  cci_opts.tgt_fn = config.cci_tgt_fn;
  cci_opts.k = config.cci_k;
  cci_opts.head = config.attn_head;
  const std::vector<double> cti_col = res.cti.column(config.cti_metric);
  res.pairs = run_cci(model, pair, res.y_hat, res.cti.selected, cci_opts,
                      &res.attribution_maps, &cti_col);

  if (config.compute_y_star) {
    for (int t : res.cti.selected) {
      DecodeConfig cont = config.decode;
      cont.max_new_tokens = std::max(1, config.decode.max_new_tokens - t);
      res.y_star[t] = constrained_continuation(
          model, pair.non_contextual, res.y_hat.prefix(static_cast<std::size_t>(t)),
          cont);
    }
  }
  return res;
}

PecoreResult run_pecore(const GenerativeModel& model, const std::string& context,
                        const std::string& current, const PecoreConfig& config) {
  config.validate(&model);
  const TokenSeq cur = model.tokenize(current);
  if (cur.empty()) throw LengthError("current segment tokenizes to nothing");
  InputPair pair;
  pair.non_contextual = cur;
  const TokenSeq ctx = model.tokenize(context);
  if (ctx.empty()) {
    pair.contextual = cur;
    pair.context_mask.assign(cur.size(), false);
  } else {
    const TokenSeq with_sep = TokenSeq::concat(ctx, model.tokenize(config.separator));
    pair.contextual = TokenSeq::concat(with_sep, cur);
    pair.context_mask.assign(with_sep.size(), true);
    pair.context_mask.resize(pair.contextual.size(), false);
  }
  return run_pecore(model, pair, config);
}

std::vector<BatchItem> run_pecore_batch(
    const std::vector<std::shared_ptr<GenerativeModel>>& worker_models,
    const std::vector<PecoreInput>& inputs, const PecoreConfig& config, int workers) {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (worker_models.size() < static_cast<std::size_t>(workers))
    throw ConfigError("need one model handle per worker");
  for (const auto& m : worker_models)
    if (!m) throw ConfigError("null model handle");
  config.validate(worker_models[0].get());

  std::vector<BatchItem> out(inputs.size());
  std::atomic<std::size_t> cursor{0};
  auto work = [&](int wi) {
    const GenerativeModel& model = *worker_models[wi];
    for (std::size_t i = cursor.fetch_add(1); i < inputs.size();
         i = cursor.fetch_add(1)) {
      try {
        out[i].result = run_pecore(model, inputs[i].context, inputs[i].current, config);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  if (workers == 1 || inputs.size() <= 1) {
    work(0);
    return out;
  }
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) threads.emplace_back(work, w);
  for (std::thread& t : threads) t.join();
  return out;
}

std::vector<BatchItem> run_pecore_batch(
    const std::function<std::shared_ptr<GenerativeModel>()>& factory,
    const std::vector<PecoreInput>& inputs, const PecoreConfig& config, int workers) {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  std::vector<std::shared_ptr<GenerativeModel>> models;
  for (int w = 0; w < workers; ++w) {
    models.push_back(factory());
    if (!models.back()) throw ConfigError("model factory returned null");
  }
  return run_pecore_batch(models, inputs, config, workers);
}

}  // namespace pecore
