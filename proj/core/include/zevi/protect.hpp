#pragma once

#include <span>
#include <vector>

#include "zevi/flow.hpp"

namespace zevi {

// Three-step evidence removal: map to latent, zero the strength-of-evidence
// coordinate, map back. Coordinates 1..n-1 of the latent image are untouched.
std::vector<double> protect_zero_llr(const FlowModel& flow,
                                     std::span<const double> x);

// Same, but with an arbitrary target value for the latent LLR coordinate.
std::vector<double> set_llr(const FlowModel& flow, std::span<const double> x,
                            double target);

// Gaussian shared-covariance two-class baseline. Class 0 is F, class 1 is M;
// positive LLR favors class 0.
struct LdaModel {
  int dim = 0;
  std::vector<double> mean_f;   // class-0 mean
  std::vector<double> mean_m;   // class-1 mean
  std::vector<double> sigma_w;  // pooled within-class covariance, dim x dim row-major (ridged)
  std::vector<double> sigma_b;  // between-class covariance, dim x dim row-major
  std::vector<double> w;        // sigma_w^-1 (mean_f - mean_m)
  double bias = 0.0;            // lda_llr(x) = w.x + bias
  double offset = 0.0;          // boundary offset used by lda_protect
};

// Empirical fit with a small ridge on the pooled covariance. Throws
// DegenerateModelError when the class means coincide (w would be zero) or
// the covariance stays singular after the ridge.
LdaModel lda_fit(const std::vector<std::vector<double>>& embeddings,
                 const std::vector<int>& labels);

// Whitening that zeroes the estimated linear LLR:
//   x' = x - (w w^T / |w|^2) x + offset * w,
// an idempotent affine map whose linear part annihilates w and fixes its
// orthogonal complement. The offset term uses sigma_w^-1 in the quadratic
// forms so that lda_llr(lda_protect(x)) == 0 exactly.
std::vector<double> lda_protect(const LdaModel& model,
                                std::span<const double> x);

// log N(x; mean_f, sigma_w) - log N(x; mean_m, sigma_w) = w.x + bias.
double lda_llr(const LdaModel& model, std::span<const double> x);

}  // namespace zevi
