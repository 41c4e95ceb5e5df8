#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zevi/nn.hpp"

namespace zevi {

// Affine coupling layer. mask[i] == 1 marks a kept coordinate; the scale and
// translate nets read the kept coordinates (full-length input with the
// changed ones zeroed) and emit full-length outputs, of which only the
// changed positions are consumed. The scale net ends in tanh, so per-layer
// stretch factors stay inside (1/e, e).
struct CouplingLayer {
  std::vector<std::uint8_t> mask;
  Mlp scale_net;
  Mlp translate_net;
};

// Stack of coupling layers realizing a bijection g between the latent space
// (flow "input") and the feature space. flow_to_feature applies the layers
// in order; flow_to_latent applies their inverses in reverse order.
struct FlowModel {
  int dim = 0;
  std::vector<CouplingLayer> layers;
};

struct CouplingResult {
  std::vector<double> value;
  double logdet = 0.0;  // of the direction that was applied
};

// v' = v on kept coordinates; v' = v * exp(s) + t on the changed ones.
// logdet is the sum of s over changed coordinates.
CouplingResult coupling_forward(const CouplingLayer& layer,
                                std::span<const double> v);

// Exact inverse of coupling_forward; logdet is the inverse direction's
// (the negated forward sum, evaluated at the same kept coordinates).
CouplingResult coupling_inverse(const CouplingLayer& layer,
                                std::span<const double> v);

struct LatentResult {
  std::vector<double> z;
  double logdet = 0.0;  // log |det dz/dx|
};

// z = g^-1(x). The returned logdet makes
//   log p_X(x) = log p_Z(z) + logdet
// hold for any latent density.
LatentResult flow_to_latent(const FlowModel& model, std::span<const double> x);

// x = g(z).
std::vector<double> flow_to_feature(const FlowModel& model,
                                    std::span<const double> z);

// Builds a flow of `layers` coupling layers over dimension dim. Layer k keeps
// the coordinates with index parity k mod 2. Scale/translate nets are three
// linear layers of width dim with two LeakyReLU(0.01) activations; the scale
// net ends in tanh, the translate net has no output activation. Final linear
// layers start at zero, so the whole flow starts as the identity.
FlowModel make_flow(int dim, int layers = 6, std::uint64_t seed = 0);

void validate_flow(const FlowModel& model);

// Flat parameter view in a fixed order (per layer: scale net then translate
// net; per net: layer weights then bias). Used by the optimizer and by
// checkpointing.
std::size_t flow_param_count(const FlowModel& model);
std::vector<double> flow_params(const FlowModel& model);
void flow_set_params(FlowModel& model, std::span<const double> flat);

}  // namespace zevi
