#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "zevi/nn.hpp"

namespace zevi {

// Paired scores and binary labels (target = 1). Higher score is supposed to
// mean "more likely target"; calibration metrics only use the ordering.
struct ScoreSet {
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t size() const { return scores.size(); }
};

// Pool-adjacent-violators calibration to log-likelihood-ratios. Equal scores
// share one block (so any strictly increasing transform of the scores leaves
// the output unchanged) and a virtual target/non-target pair is pooled in at
// each end, which keeps extreme blocks off infinite odds; posteriors are
// additionally clamped to [1/(N+2), 1-1/(N+2)]. LLRs are posterior log-odds
// minus the (padded) label log-odds of the set, in input order.
std::vector<double> pav_calibrate(const ScoreSet& s);

// 0.5 * [mean over targets of log2(1+e^-llr) + mean over non of log2(1+e^llr)].
double cllr(const std::vector<double>& llrs, const std::vector<int>& labels);

// cllr of the PAV-calibrated scores: discrimination loss only.
double cllr_min(const ScoreSet& s);

// Calibration sweep across attacker priors, on PAV-calibrated LLRs.
// d_ece in bits is the area between the prior entropy H(pi) and the observed
// expected cross-entropy, i.e. the expected information the scores disclose.
// Categorical tags follow the max |log10 LR| boundaries below.
struct EceReport {
  std::vector<double> priors;
  std::vector<double> ece_observed;
  std::vector<double> ece_default;  // H(pi)
  double d_ece = 0.0;
  double max_abs_log10_lr = 0.0;  // delta
  char tag = 'A';                 // worst per-sample tag present
  std::array<long, 6> tag_counts{};  // A..F, summing to N
};

// Tag boundaries on delta = |log10 LR|:
// A: <= 1e-9, B: (0,1], C: (1,2], D: (2,4], E: (4,5], F: > 5.
char zebra_tag(double delta);

EceReport ece_report(const ScoreSet& s, int prior_grid = 999);

// Equal error rate in percent, linear interpolation between ROC points.
double eer_percent(const ScoreSet& s);

// Continuous-feature / discrete-label kNN mutual information (digamma form),
// one value per dimension, negatives clamped to zero, in bits. Chebyshev
// distance degenerates to |difference| per dimension; exact ties are broken
// by a tiny fixed-seed jitter. Requires more than k samples in each class.
std::vector<double> mi_knn_dims(const std::vector<std::vector<double>>& features,
                                const std::vector<int>& labels, int k = 3);

// Average of mi_knn_dims over dimensions: bits per dimension.
double mi_knn(const std::vector<std::vector<double>>& features,
              const std::vector<int>& labels, int k = 3);

struct AttackerConfig {
  int hidden = 64;  // 0 trains a plain linear (logistic) scorer
  double learning_rate = 1e-3;
  int epochs = 50;
  int batch_size = 128;
  std::uint64_t seed = 0;
};

// Binary classifier returning a real logit score for class 1.
struct Attacker {
  Mlp net;
  double score(std::span<const double> x) const;
};

// Perceptron attribute classifier (one hidden LeakyReLU layer of
// cfg.hidden units, logistic loss, Adam), retrained from scratch on the
// given data; deterministic given cfg.seed.
Attacker train_attacker(const std::vector<std::vector<double>>& features,
                        const std::vector<int>& labels,
                        const AttackerConfig& cfg);

// a.b / (|a| |b|); rejects zero vectors.
double cosine_score(std::span<const double> a, std::span<const double> b);

}  // namespace zevi
