#include "zevi/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "text_io.hpp"
#include "zevi/rng.hpp"

namespace zevi {

void validate_config(const TrainConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
    throw InvalidInputError("train config: alpha must be in [0, 1]");
  if (!(cfg.learning_rate > 0.0))
    throw InvalidInputError("train config: learning rate must be > 0");
  if (cfg.batch_size < 1)
    throw InvalidInputError("train config: batch size must be >= 1");
  if (cfg.epochs < 1)
    throw InvalidInputError("train config: epochs must be >= 1");
  if (!(cfg.mu_init > 0.0))
    throw InvalidInputError("train config: mu init must be > 0");
}

namespace {

struct InverseCache {
  std::vector<double> ctx;  // kept coordinates, changed zeroed
  std::vector<double> s;    // scale net output on ctx
  std::vector<double> out;  // value after this inverse step
};

// g^-1 of one sample with everything the backward pass needs.
double inverse_with_cache(const FlowModel& flow, std::span<const double> x,
                          std::vector<InverseCache>& cache) {
  const std::size_t L = flow.layers.size();
  cache.resize(L);
  double logdet = 0.0;
  std::vector<double> u(x.begin(), x.end());
  for (std::size_t k = L; k-- > 0;) {
    const CouplingLayer& layer = flow.layers[k];
    InverseCache& c = cache[k];
    c.ctx.assign(u.size(), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i)
      if (layer.mask[i]) c.ctx[i] = u[i];
    c.s = mlp_forward(layer.scale_net, c.ctx);
    std::vector<double> t = mlp_forward(layer.translate_net, c.ctx);
    c.out = u;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!layer.mask[i]) {
        c.out[i] = (u[i] - t[i]) * std::exp(-c.s[i]);
        logdet -= c.s[i];
      }
    }
    u = c.out;
  }
  return logdet;
}

void check_batch(const FlowModel& flow, const LabeledVectors& batch) {
  if (batch.x.empty()) throw InvalidInputError("nll_batch: empty batch");
  if (batch.x.size() != batch.y.size())
    throw InvalidInputError("nll_batch: labels/vectors length mismatch");
  for (const auto& v : batch.x)
    if (static_cast<int>(v.size()) != flow.dim)
      throw InvalidInputError("nll_batch: vector length != flow dim");
}

}  // namespace

double nll_batch(const FlowModel& flow, const LatentModel& latent,
                 const LabeledVectors& batch) {
  validate_flow(flow);
  check_batch(flow, batch);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.x.size(); ++i) {
    LatentResult r = flow_to_latent(flow, batch.x[i]);
    total -= class_log_density(latent, r.z, batch.y[i]) + r.logdet;
  }
  double nll = total / batch.x.size();
  if (!std::isfinite(nll))
    throw TrainingDivergedError("nll_batch: non-finite loss");
  return nll;
}

FlowGrads make_zero_grads(const FlowModel& model) {
  FlowGrads g;
  g.scale.reserve(model.layers.size());
  g.translate.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    g.scale.push_back(make_zero_grads(layer.scale_net));
    g.translate.push_back(make_zero_grads(layer.translate_net));
  }
  return g;
}

double nll_batch_grad(const FlowModel& flow, const LatentModel& latent,
                      const LabeledVectors& batch, FlowGrads& grads,
                      std::vector<std::vector<double>>* z_out) {
  validate_flow(flow);
  check_batch(flow, batch);
  if (grads.scale.size() != flow.layers.size() ||
      grads.translate.size() != flow.layers.size())
    throw InvalidInputError("nll_batch_grad: gradient shape mismatch");

  const std::size_t L = flow.layers.size();
  const double inv_b = 1.0 / batch.x.size();
  const std::size_t n = static_cast<std::size_t>(flow.dim);
  if (z_out) z_out->assign(batch.x.size(), {});

  double total = 0.0;
  std::vector<InverseCache> cache;
  for (std::size_t i = 0; i < batch.x.size(); ++i) {
    double logdet = inverse_with_cache(flow, batch.x[i], cache);
    const std::vector<double>& z = cache[0].out;
    total -= class_log_density(latent, z, batch.y[i]) + logdet;
    if (z_out) (*z_out)[i] = z;

    // dLoss/dz of the per-sample term.
    std::vector<double> g = class_log_density_grad(latent, z, batch.y[i]);
    for (double& gi : g) gi = -gi;

    // Walk the inverse steps in reverse (latent side back to feature side).
    std::vector<double> up_s(n), up_t(n), next(n);
    for (std::size_t k = 0; k < L; ++k) {
      const CouplingLayer& layer = flow.layers[k];
      const InverseCache& c = cache[k];
      for (std::size_t j = 0; j < n; ++j) {
        if (layer.mask[j]) {
          up_s[j] = 0.0;
          up_t[j] = 0.0;
        } else {
          double einv = std::exp(-c.s[j]);
          // the +1 is the -logdet term's own dependence on s
          up_s[j] = -g[j] * c.out[j] + 1.0;
          up_t[j] = -g[j] * einv;
        }
      }
      std::vector<double> gm_s = mlp_backward_accum(layer.scale_net, c.ctx,
                                                    up_s, grads.scale[k], inv_b);
      std::vector<double> gm_t = mlp_backward_accum(
          layer.translate_net, c.ctx, up_t, grads.translate[k], inv_b);
      for (std::size_t j = 0; j < n; ++j) {
        if (layer.mask[j])
          next[j] = g[j] + gm_s[j] + gm_t[j];
        else
          next[j] = g[j] * std::exp(-c.s[j]);
      }
      g.swap(next);
    }
  }
  return total * inv_b;
}

std::vector<double> flow_grads_flat(const FlowModel& model,
                                    const FlowGrads& grads) {
  if (grads.scale.size() != model.layers.size() ||
      grads.translate.size() != model.layers.size())
    throw InvalidInputError("flow_grads_flat: shape mismatch");
  std::vector<double> flat;
  flat.reserve(flow_param_count(model));
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    for (const MlpGrads* g : {&grads.scale[k], &grads.translate[k]}) {
      for (std::size_t l = 0; l < g->weights.size(); ++l) {
        flat.insert(flat.end(), g->weights[l].begin(), g->weights[l].end());
        flat.insert(flat.end(), g->bias[l].begin(), g->bias[l].end());
      }
    }
  }
  return flat;
}

double update_mu(double mu, const std::vector<std::vector<double>>& latent_batch,
                 double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InvalidInputError("update_mu: alpha must be in [0, 1]");
  return alpha * mu + (1.0 - alpha) * mu_mle(latent_batch);
}

TrainResult train(const EmbeddingDataset& dataset, const TrainConfig& cfg,
                  int coupling_layers) {
  validate_config(cfg);
  validate_dataset(dataset);
  bool has0 = false, has1 = false;
  for (const auto& r : dataset.records) (r.attr == 0 ? has0 : has1) = true;
  if (!has0 || !has1)
    throw InvalidInputError("train: dataset must contain both classes");

  const std::size_t N = dataset.records.size();
  std::vector<const EmbeddingRecord*> recs(N);
  for (std::size_t i = 0; i < N; ++i) recs[i] = &dataset.records[i];

  TrainResult result;
  result.flow = make_flow(dataset.dim, coupling_layers,
                          Rng::derive(cfg.seed, 1));
  result.latent = LatentModel{cfg.mu_init, dataset.dim};

  std::vector<double> params = flow_params(result.flow);
  AdamState opt(params.size());
  Rng shuffle_rng(Rng::derive(cfg.seed, 2));

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::vector<double>> zbatch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_nll = 0.0;
    int batches_in_epoch = 0;
    for (std::size_t start = 0; start < N; start += bs) {
      std::size_t stop = std::min(start + bs, N);
      LabeledVectors batch;
      batch.x.reserve(stop - start);
      batch.y.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        batch.x.push_back(recs[order[i]]->vec);
        batch.y.push_back(recs[order[i]]->attr == 0 ? AttrClass::kC0
                                                    : AttrClass::kC1);
      }

      FlowGrads grads = make_zero_grads(result.flow);
      double nll = nll_batch_grad(result.flow, result.latent, batch, grads,
                                  &zbatch);
      if (!std::isfinite(nll) || nll > 1e6)
        throw TrainingAbortedError(
            "train: loss diverged (nll = " + detail::dtos(nll) + ")",
            std::move(result.history));

      std::vector<double> flat = flow_grads_flat(result.flow, grads);
      adam_step(params, flat, opt, cfg.learning_rate);
      flow_set_params(result.flow, params);

      // mu update from the latents of the pre-step flow, per the two-stage
      // scheme; clamped away from the degenerate sigma^2 = 0 corner.
      double mu = update_mu(result.latent.mu, zbatch, cfg.alpha);
      result.latent.mu = std::max(mu, 1e-6);

      result.history.batches.push_back(
          {epoch, batches_in_epoch, nll, result.latent.mu});
      epoch_nll += nll;
      ++batches_in_epoch;
    }
    result.history.epochs.push_back(
        {epoch, epoch_nll / batches_in_epoch, result.latent.mu});
  }
  return result;
}

void write_history_csv(const TrainHistory& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot open history file: " + path);
  out << "epoch,batch,nll,mu\n";
  for (const auto& b : history.batches)
    out << b.epoch << ',' << b.batch << ',' << detail::dtos(b.nll) << ','
        << detail::dtos(b.mu) << '\n';
  if (!out) throw InvalidInputError("failed writing history file: " + path);
}

}  // namespace zevi
