#include "zevi/latent.hpp"

#include <cmath>

#include "zevi/errors.hpp"
#include "zevi/rng.hpp"

namespace zevi {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_model(const LatentModel& model, std::size_t zlen) {
  if (!(model.mu > 0.0))
    throw DegenerateModelError("latent model: mu must be > 0");
  if (model.dim < 1 || static_cast<std::size_t>(model.dim) != zlen)
    throw InvalidInputError("latent model: vector length != dim");
}

double class_mean(const LatentModel& model, AttrClass cls) {
  return cls == AttrClass::kC0 ? model.mu : -model.mu;
}

}  // namespace

double class_log_density(const LatentModel& model, std::span<const double> z,
                         AttrClass cls) {
  check_model(model, z.size());
  const double var0 = 2.0 * model.mu;
  const double m = class_mean(model, cls);
  double quad = (z[0] - m) * (z[0] - m) / var0;
  for (std::size_t i = 1; i < z.size(); ++i) quad += z[i] * z[i];
  return -0.5 * (model.dim * kLog2Pi + std::log(var0) + quad);
}

std::vector<double> class_log_density_grad(const LatentModel& model,
                                           std::span<const double> z,
                                           AttrClass cls) {
  check_model(model, z.size());
  std::vector<double> g(z.size());
  g[0] = -(z[0] - class_mean(model, cls)) / (2.0 * model.mu);
  for (std::size_t i = 1; i < z.size(); ++i) g[i] = -z[i];
  return g;
}

double llr_of(std::span<const double> z) {
  if (z.empty()) throw InvalidInputError("llr_of: empty vector");
  return z[0];
}

double mu_mle(const std::vector<std::vector<double>>& latent_batch) {
  if (latent_batch.empty()) throw InvalidInputError("mu_mle: empty batch");
  double sumsq = 0.0;
  for (const auto& z : latent_batch) {
    if (z.empty()) throw InvalidInputError("mu_mle: empty vector in batch");
    sumsq += z[0] * z[0];
  }
  return -1.0 + std::sqrt(1.0 + sumsq / latent_batch.size());
}

std::vector<std::vector<double>> sample_latent(const LatentModel& model,
                                               AttrClass cls, int count,
                                               std::uint64_t seed) {
  if (count < 1) throw InvalidInputError("sample_latent: count must be >= 1");
  check_model(model, static_cast<std::size_t>(model.dim));
  Rng rng(seed);
  const double sd0 = std::sqrt(2.0 * model.mu);
  const double m = class_mean(model, cls);
  std::vector<std::vector<double>> batch(count);
  for (auto& z : batch) {
    z.resize(model.dim);
    z[0] = m + sd0 * rng.gaussian();
    for (int i = 1; i < model.dim; ++i) z[i] = rng.gaussian();
  }
  return batch;
}

}  // namespace zevi
