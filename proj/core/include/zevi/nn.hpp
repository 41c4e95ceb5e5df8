#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "zevi/rng.hpp"

namespace zevi {

enum class Activation { kNone, kLeakyRelu, kTanh };

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
  Activation act = Activation::kNone;
  double leaky_slope = 0.01;
};

// Plain fully-connected net. Consecutive layer dimensions must chain; this is
// checked by validate() and on every forward/backward call entry.
struct Mlp {
  std::vector<DenseLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t param_count() const;
  void validate() const;
};

// Builds a net with the given layer widths (dims.size() >= 2). Hidden layers
// get hidden_act, the last layer output_act. Weights are Xavier-uniform in
// +-sqrt(6/(fan_in+fan_out)), biases zero; zero_init_last forces the final
// layer to all zeros so the net starts as the constant-zero function.
Mlp make_mlp(std::span<const int> dims, Activation hidden_act,
             Activation output_act, Rng& rng, bool zero_init_last = false,
             double leaky_slope = 0.01);

std::vector<double> mlp_forward(const Mlp& mlp, std::span<const double> input);

struct MlpGrads {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
};

MlpGrads make_zero_grads(const Mlp& mlp);

// Exact reverse-mode pass. Recomputes the forward intermediates, accumulates
// scale * dLoss/dParam into acc and returns dLoss/dInput. upstream is
// dLoss/dOutput.
std::vector<double> mlp_backward_accum(const Mlp& mlp,
                                       std::span<const double> input,
                                       std::span<const double> upstream,
                                       MlpGrads& acc, double scale = 1.0);

struct MlpBackwardResult {
  MlpGrads grads;
  std::vector<double> input_grad;
};

MlpBackwardResult mlp_backward(const Mlp& mlp, std::span<const double> input,
                               std::span<const double> upstream);

struct AdamState {
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update, in place. Throws TrainingDivergedError on a
// non-finite gradient.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr);

// Max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|,
// 1e-12), with the numeric gradient from central differences of fn at point.
double finite_diff_check(const std::function<double(std::span<const double>)>& fn,
                         std::span<const double> point,
                         std::span<const double> analytic_grad, double eps);

}  // namespace zevi
