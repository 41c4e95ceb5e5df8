#include "zevi/flow.hpp"

#include <cmath>
#include <string>

#include "zevi/errors.hpp"

namespace zevi {

namespace {

void check_layer(const CouplingLayer& layer, std::size_t n) {
  if (layer.mask.size() != n)
    throw InvalidInputError("coupling: mask length != input length");
  int kept = 0, changed = 0;
  for (auto m : layer.mask) (m ? kept : changed)++;
  if (kept == 0 || changed == 0)
    throw InvalidInputError("coupling: mask must keep and change >= 1 coord");
  if (layer.scale_net.input_dim() != static_cast<int>(n) ||
      layer.scale_net.output_dim() != static_cast<int>(n) ||
      layer.translate_net.input_dim() != static_cast<int>(n) ||
      layer.translate_net.output_dim() != static_cast<int>(n))
    throw InvalidInputError("coupling: net dimensions must equal mask length");
}

std::vector<double> masked_context(const CouplingLayer& layer,
                                   std::span<const double> v) {
  std::vector<double> m(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (layer.mask[i]) m[i] = v[i];
  return m;
}

void check_finite(const std::vector<double>& v, const char* where) {
  for (double x : v)
    if (!std::isfinite(x))
      throw NumericOverflowError(std::string(where) +
                                 ": non-finite coordinate");
}

}  // namespace

CouplingResult coupling_forward(const CouplingLayer& layer,
                                std::span<const double> v) {
  check_layer(layer, v.size());
  std::vector<double> ctx = masked_context(layer, v);
  std::vector<double> s = mlp_forward(layer.scale_net, ctx);
  std::vector<double> t = mlp_forward(layer.translate_net, ctx);
  CouplingResult r;
  r.value.assign(v.begin(), v.end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!layer.mask[i]) {
      r.value[i] = v[i] * std::exp(s[i]) + t[i];
      r.logdet += s[i];
    }
  }
  check_finite(r.value, "coupling_forward");
  return r;
}

CouplingResult coupling_inverse(const CouplingLayer& layer,
                                std::span<const double> v) {
  check_layer(layer, v.size());
  std::vector<double> ctx = masked_context(layer, v);
  std::vector<double> s = mlp_forward(layer.scale_net, ctx);
  std::vector<double> t = mlp_forward(layer.translate_net, ctx);
  CouplingResult r;
  r.value.assign(v.begin(), v.end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!layer.mask[i]) {
      r.value[i] = (v[i] - t[i]) * std::exp(-s[i]);
      r.logdet -= s[i];
    }
  }
  check_finite(r.value, "coupling_inverse");
  return r;
}

LatentResult flow_to_latent(const FlowModel& model, std::span<const double> x) {
  validate_flow(model);
  if (static_cast<int>(x.size()) != model.dim)
    throw InvalidInputError("flow_to_latent: input length != model dim");
  LatentResult r;
  r.z.assign(x.begin(), x.end());
  for (std::size_t k = model.layers.size(); k-- > 0;) {
    CouplingResult step = coupling_inverse(model.layers[k], r.z);
    r.z = std::move(step.value);
    r.logdet += step.logdet;
  }
  return r;
}

std::vector<double> flow_to_feature(const FlowModel& model,
                                    std::span<const double> z) {
  validate_flow(model);
  if (static_cast<int>(z.size()) != model.dim)
    throw InvalidInputError("flow_to_feature: input length != model dim");
  std::vector<double> x(z.begin(), z.end());
  for (const auto& layer : model.layers) {
    CouplingResult step = coupling_forward(layer, x);
    x = std::move(step.value);
  }
  return x;
}

FlowModel make_flow(int dim, int layers, std::uint64_t seed) {
  if (dim < 2) throw InvalidInputError("make_flow: dim must be >= 2");
  if (layers < 1) throw InvalidInputError("make_flow: need >= 1 layer");
  FlowModel model;
  model.dim = dim;
  Rng rng(Rng::derive(seed, 0x666c6f77));  // independent init stream
  const int net_dims[4] = {dim, dim, dim, dim};
  for (int k = 0; k < layers; ++k) {
    CouplingLayer layer;
    layer.mask.assign(dim, 0);
    for (int i = 0; i < dim; ++i)
      layer.mask[i] = (i % 2 == k % 2) ? 1 : 0;
    layer.scale_net = make_mlp(net_dims, Activation::kLeakyRelu,
                               Activation::kTanh, rng, /*zero_init_last=*/true);
    layer.translate_net =
        make_mlp(net_dims, Activation::kLeakyRelu, Activation::kNone, rng,
                 /*zero_init_last=*/true);
    model.layers.push_back(std::move(layer));
  }
  validate_flow(model);
  return model;
}

void validate_flow(const FlowModel& model) {
  if (model.dim < 2) throw InvalidInputError("flow: dim must be >= 2");
  if (model.layers.empty()) throw InvalidInputError("flow: no layers");
  for (const auto& layer : model.layers)
    check_layer(layer, static_cast<std::size_t>(model.dim));
}

std::size_t flow_param_count(const FlowModel& model) {
  std::size_t n = 0;
  for (const auto& layer : model.layers)
    n += layer.scale_net.param_count() + layer.translate_net.param_count();
  return n;
}

namespace {

template <typename F>
void visit_nets(FlowModel& model, F&& f) {
  for (auto& layer : model.layers) {
    f(layer.scale_net);
    f(layer.translate_net);
  }
}

}  // namespace

std::vector<double> flow_params(const FlowModel& model) {
  std::vector<double> flat;
  flat.reserve(flow_param_count(model));
  for (const auto& layer : model.layers) {
    for (const Mlp* net : {&layer.scale_net, &layer.translate_net}) {
      for (const auto& l : net->layers) {
        flat.insert(flat.end(), l.weights.begin(), l.weights.end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
      }
    }
  }
  return flat;
}

void flow_set_params(FlowModel& model, std::span<const double> flat) {
  if (flat.size() != flow_param_count(model))
    throw InvalidInputError("flow_set_params: flat length mismatch");
  std::size_t pos = 0;
  visit_nets(model, [&](Mlp& net) {
    for (auto& l : net.layers) {
      for (auto& w : l.weights) w = flat[pos++];
      for (auto& b : l.bias) b = flat[pos++];
    }
  });
}

}  // namespace zevi
