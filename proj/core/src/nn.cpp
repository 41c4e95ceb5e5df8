#include "zevi/nn.hpp"

#include <cmath>
#include <string>

#include "zevi/errors.hpp"

namespace zevi {

namespace {

double apply_act(Activation act, double x, double slope) {
  switch (act) {
    case Activation::kNone:
      return x;
    case Activation::kLeakyRelu:
      return x > 0.0 ? x : slope * x;
    case Activation::kTanh:
      return std::tanh(x);
  }
  return x;
}

// Derivative expressed from the pre-activation value.
double act_deriv(Activation act, double pre, double slope) {
  switch (act) {
    case Activation::kNone:
      return 1.0;
    case Activation::kLeakyRelu:
      return pre > 0.0 ? 1.0 : slope;
    case Activation::kTanh: {
      double t = std::tanh(pre);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

}  // namespace

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

void Mlp::validate() const {
  if (layers.empty()) throw InvalidInputError("mlp has no layers");
  int prev = layers.front().in;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.in <= 0 || l.out <= 0)
      throw InvalidInputError("mlp layer " + std::to_string(k) +
                              " has non-positive dimensions");
    if (l.in != prev)
      throw InvalidInputError("mlp layer " + std::to_string(k) +
                              " input dimension does not chain");
    if (l.weights.size() != static_cast<std::size_t>(l.in) * l.out ||
        l.bias.size() != static_cast<std::size_t>(l.out))
      throw InvalidInputError("mlp layer " + std::to_string(k) +
                              " parameter shapes inconsistent");
    prev = l.out;
  }
}

Mlp make_mlp(std::span<const int> dims, Activation hidden_act,
             Activation output_act, Rng& rng, bool zero_init_last,
             double leaky_slope) {
  if (dims.size() < 2) throw InvalidInputError("mlp needs at least one layer");
  Mlp mlp;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    DenseLayer l;
    l.in = dims[k];
    l.out = dims[k + 1];
    l.act = (k + 2 == dims.size()) ? output_act : hidden_act;
    l.leaky_slope = leaky_slope;
    l.weights.assign(static_cast<std::size_t>(l.in) * l.out, 0.0);
    l.bias.assign(l.out, 0.0);
    bool last = (k + 2 == dims.size());
    if (!(last && zero_init_last)) {
      double bound = std::sqrt(6.0 / (l.in + l.out));
      for (auto& w : l.weights) w = rng.uniform(-bound, bound);
    }
    mlp.layers.push_back(std::move(l));
  }
  mlp.validate();
  return mlp;
}

std::vector<double> mlp_forward(const Mlp& mlp, std::span<const double> input) {
  mlp.validate();
  if (static_cast<int>(input.size()) != mlp.input_dim())
    throw InvalidInputError("mlp_forward: input length " +
                            std::to_string(input.size()) + " != " +
                            std::to_string(mlp.input_dim()));
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  for (const auto& l : mlp.layers) {
    next.assign(l.out, 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double* wrow = &l.weights[static_cast<std::size_t>(o) * l.in];
      double acc = l.bias[o];
      for (int i = 0; i < l.in; ++i) acc += wrow[i] * cur[i];
      next[o] = apply_act(l.act, acc, l.leaky_slope);
    }
    cur.swap(next);
  }
  return cur;
}

MlpGrads make_zero_grads(const Mlp& mlp) {
  MlpGrads g;
  g.weights.reserve(mlp.layers.size());
  g.bias.reserve(mlp.layers.size());
  for (const auto& l : mlp.layers) {
    g.weights.emplace_back(l.weights.size(), 0.0);
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

std::vector<double> mlp_backward_accum(const Mlp& mlp,
                                       std::span<const double> input,
                                       std::span<const double> upstream,
                                       MlpGrads& acc, double scale) {
  mlp.validate();
  if (static_cast<int>(input.size()) != mlp.input_dim())
    throw InvalidInputError("mlp_backward: input length mismatch");
  if (static_cast<int>(upstream.size()) != mlp.output_dim())
    throw InvalidInputError("mlp_backward: upstream length " +
                            std::to_string(upstream.size()) + " != " +
                            std::to_string(mlp.output_dim()));
  if (acc.weights.size() != mlp.layers.size())
    throw InvalidInputError("mlp_backward: gradient accumulator shape");

  const std::size_t L = mlp.layers.size();
  // Forward pass keeping inputs and pre-activations per layer.
  std::vector<std::vector<double>> ins(L);
  std::vector<std::vector<double>> pre(L);
  std::vector<double> cur(input.begin(), input.end());
  for (std::size_t k = 0; k < L; ++k) {
    const auto& l = mlp.layers[k];
    ins[k] = cur;
    pre[k].assign(l.out, 0.0);
    std::vector<double> post(l.out, 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double* wrow = &l.weights[static_cast<std::size_t>(o) * l.in];
      double a = l.bias[o];
      for (int i = 0; i < l.in; ++i) a += wrow[i] * cur[i];
      pre[k][o] = a;
      post[o] = apply_act(l.act, a, l.leaky_slope);
    }
    cur.swap(post);
  }

  // Reverse accumulation.
  std::vector<double> g(upstream.begin(), upstream.end());
  for (std::size_t kk = L; kk-- > 0;) {
    const auto& l = mlp.layers[kk];
    std::vector<double> gpre(l.out);
    for (int o = 0; o < l.out; ++o)
      gpre[o] = g[o] * act_deriv(l.act, pre[kk][o], l.leaky_slope);
    auto& gw = acc.weights[kk];
    auto& gb = acc.bias[kk];
    std::vector<double> gin(l.in, 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double go = gpre[o];
      const double* wrow = &l.weights[static_cast<std::size_t>(o) * l.in];
      double* gwrow = &gw[static_cast<std::size_t>(o) * l.in];
      const std::vector<double>& x = ins[kk];
      for (int i = 0; i < l.in; ++i) {
        gwrow[i] += scale * go * x[i];
        gin[i] += go * wrow[i];
      }
      gb[o] += scale * go;
    }
    g.swap(gin);
  }
  return g;
}

MlpBackwardResult mlp_backward(const Mlp& mlp, std::span<const double> input,
                               std::span<const double> upstream) {
  MlpBackwardResult r;
  r.grads = make_zero_grads(mlp);
  r.input_grad = mlp_backward_accum(mlp, input, upstream, r.grads, 1.0);
  return r;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size())
    throw InvalidInputError("adam_step: shape mismatch");
  if (!(lr > 0.0)) throw InvalidInputError("adam_step: lr must be > 0");
  for (double gi : grads)
    if (!std::isfinite(gi))
      throw TrainingDivergedError("adam_step: non-finite gradient");

  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
    double mhat = state.m[i] / c1;
    double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

double finite_diff_check(const std::function<double(std::span<const double>)>& fn,
                         std::span<const double> point,
                         std::span<const double> analytic_grad, double eps) {
  if (point.size() != analytic_grad.size())
    throw InvalidInputError("finite_diff_check: gradient length mismatch");
  if (!(eps > 0.0)) throw InvalidInputError("finite_diff_check: eps must be > 0");
  std::vector<double> x(point.begin(), point.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double keep = x[i];
    x[i] = keep + eps;
    double fp = fn(x);
    x[i] = keep - eps;
    double fm = fn(x);
    x[i] = keep;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw InvalidInputError("finite_diff_check: non-finite evaluation");
    double numeric = (fp - fm) / (2.0 * eps);
    double denom = std::max({std::fabs(analytic_grad[i]), std::fabs(numeric),
                             1e-12});
    worst = std::max(worst, std::fabs(analytic_grad[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace zevi
