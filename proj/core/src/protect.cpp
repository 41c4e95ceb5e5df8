#include "zevi/protect.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "zevi/errors.hpp"

namespace zevi {

std::vector<double> protect_zero_llr(const FlowModel& flow,
                                     std::span<const double> x) {
  return set_llr(flow, x, 0.0);
}

std::vector<double> set_llr(const FlowModel& flow, std::span<const double> x,
                            double target) {
  if (!std::isfinite(target))
    throw InvalidInputError("set_llr: target must be finite");
  LatentResult r = flow_to_latent(flow, x);
  r.z[0] = target;
  return flow_to_feature(flow, r.z);
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const VectorXd>(v.data(),
                                    static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_eigen(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

std::vector<double> from_eigen(const MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()) * m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out[static_cast<std::size_t>(r) * m.cols() + c] = m(r, c);
  return out;
}

}  // namespace

LdaModel lda_fit(const std::vector<std::vector<double>>& embeddings,
                 const std::vector<int>& labels) {
  if (embeddings.empty() || embeddings.size() != labels.size())
    throw InvalidInputError("lda_fit: empty input or label length mismatch");
  const Eigen::Index n = static_cast<Eigen::Index>(embeddings.front().size());
  if (n < 1) throw InvalidInputError("lda_fit: zero-dimensional vectors");

  VectorXd sum_f = VectorXd::Zero(n), sum_m = VectorXd::Zero(n);
  long n_f = 0, n_m = 0;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (static_cast<Eigen::Index>(embeddings[i].size()) != n)
      throw InvalidInputError("lda_fit: inconsistent vector lengths");
    if (labels[i] != 0 && labels[i] != 1)
      throw InvalidInputError("lda_fit: labels must be 0 or 1");
    VectorXd x = to_eigen(embeddings[i]);
    if (labels[i] == 0) {
      sum_f += x;
      ++n_f;
    } else {
      sum_m += x;
      ++n_m;
    }
  }
  if (n_f == 0 || n_m == 0)
    throw InvalidInputError("lda_fit: both classes must be present");
  const long N = n_f + n_m;
  if (N < 3) throw InvalidInputError("lda_fit: too few samples");

  VectorXd mu_f = sum_f / n_f;
  VectorXd mu_m = sum_m / n_m;

  MatrixXd scatter = MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    VectorXd d = to_eigen(embeddings[i]) - (labels[i] == 0 ? mu_f : mu_m);
    scatter.noalias() += d * d.transpose();
  }
  MatrixXd sigma_w = scatter / static_cast<double>(N - 2);

  // Ridge keeps the inverse well defined for rank-deficient samples.
  double ridge = 1e-6 * sigma_w.trace() / static_cast<double>(n);
  sigma_w.diagonal().array() += ridge;

  VectorXd mu_bar = (static_cast<double>(n_f) * mu_f +
                     static_cast<double>(n_m) * mu_m) /
                    static_cast<double>(N);
  MatrixXd sigma_b =
      (static_cast<double>(n_f) / N) * (mu_f - mu_bar) * (mu_f - mu_bar).transpose() +
      (static_cast<double>(n_m) / N) * (mu_m - mu_bar) * (mu_m - mu_bar).transpose();

  VectorXd diff = mu_f - mu_m;
  if (diff.norm() < 1e-12)
    throw DegenerateModelError("lda_fit: class means coincide, w = 0");

  Eigen::LLT<MatrixXd> llt(sigma_w);
  if (llt.info() != Eigen::Success)
    throw DegenerateModelError("lda_fit: within-class covariance not PD");
  VectorXd w = llt.solve(diff);
  double qf_f = mu_f.dot(llt.solve(mu_f));
  double qf_m = mu_m.dot(llt.solve(mu_m));

  LdaModel model;
  model.dim = static_cast<int>(n);
  model.mean_f = from_eigen(mu_f);
  model.mean_m = from_eigen(mu_m);
  model.sigma_w = from_eigen(sigma_w);
  model.sigma_b = from_eigen(sigma_b);
  model.w = from_eigen(w);
  model.bias = -0.5 * (qf_f - qf_m);
  model.offset = (qf_f - qf_m) / (2.0 * w.squaredNorm());
  return model;
}

std::vector<double> lda_protect(const LdaModel& model,
                                std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.dim)
    throw InvalidInputError("lda_protect: vector length != model dim");
  VectorXd xv = to_eigen(x);
  VectorXd w = to_eigen(model.w);
  double wn2 = w.squaredNorm();
  VectorXd out = xv - (w.dot(xv) / wn2) * w + model.offset * w;
  return from_eigen(out);
}

double lda_llr(const LdaModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.dim)
    throw InvalidInputError("lda_llr: vector length != model dim");
  VectorXd w = to_eigen(model.w);
  return w.dot(to_eigen(x)) + model.bias;
}

}  // namespace zevi
