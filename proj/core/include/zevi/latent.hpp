#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace zevi {

enum class AttrClass : int { kC0 = 0, kC1 = 1 };

// Class-conditional latent family: z|c0 ~ N(+mu*e1, S), z|c1 ~ N(-mu*e1, S)
// with S = diag(2*mu, 1, ..., 1). The shared 2*mu first-coordinate variance
// is what makes coordinate 0 of z an exact log-likelihood-ratio, so the one
// scalar mu fixes both densities.
struct LatentModel {
  double mu = 10.0;
  int dim = 0;
};

// Exact multivariate Gaussian log-density of z under the class's parameters.
// Throws DegenerateModelError when mu <= 0 (coordinate-0 variance vanishes).
double class_log_density(const LatentModel& model, std::span<const double> z,
                         AttrClass cls);

// d/dz of class_log_density, needed for likelihood gradients.
std::vector<double> class_log_density_grad(const LatentModel& model,
                                           std::span<const double> z,
                                           AttrClass cls);

// The strength-of-evidence of a latent vector: its first coordinate. Equals
// class_log_density(z, c0) - class_log_density(z, c1) for every mu > 0.
double llr_of(std::span<const double> z);

// Closed-form maximum likelihood estimate of mu from a pooled batch:
// -1 + sqrt(1 + mean of squared first coordinates). Labels are not needed;
// the likelihood depends on the first coordinates only through their squares.
double mu_mle(const std::vector<std::vector<double>>& latent_batch);

// i.i.d. class-conditional draws, deterministic given seed.
std::vector<std::vector<double>> sample_latent(const LatentModel& model,
                                               AttrClass cls, int count,
                                               std::uint64_t seed);

}  // namespace zevi
