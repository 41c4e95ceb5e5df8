#include "zevi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zevi/errors.hpp"
#include "zevi/rng.hpp"

namespace zevi {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

void check_scoreset(const ScoreSet& s, bool need_both_classes) {
  if (s.scores.size() != s.labels.size())
    throw InvalidInputError("score set: scores/labels length mismatch");
  if (s.scores.empty()) throw InvalidInputError("score set: empty");
  long tar = 0, non = 0;
  for (int l : s.labels) {
    if (l != 0 && l != 1)
      throw InvalidInputError("score set: labels must be 0 or 1");
    (l == 1 ? tar : non)++;
  }
  if (need_both_classes && (tar == 0 || non == 0))
    throw InvalidInputError("score set: both classes required");
}

double logit(double p) { return std::log(p / (1.0 - p)); }

// log2(1 + e^x) without overflow.
double softplus2(double x) {
  if (x > 0.0) return (x + std::log1p(std::exp(-x))) / kLn2;
  return std::log1p(std::exp(x)) / kLn2;
}

struct PavBlock {
  double sum;     // of labels
  double weight;  // count
  double value() const { return sum / weight; }
};

}  // namespace

std::vector<double> pav_calibrate(const ScoreSet& s) {
  check_scoreset(s, true);
  const std::size_t n = s.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.scores[a] < s.scores[b];
  });

  // Items in score order; exact ties pre-merged so they calibrate together.
  // One virtual (non-target, target) pair below everything plus one above
  // keeps the extreme blocks away from probability 0/1.
  std::vector<PavBlock> items;
  items.reserve(n + 4);
  items.push_back({0.0, 1.0});
  items.push_back({1.0, 1.0});
  std::vector<std::size_t> item_of(n);  // item index per sorted position
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t idx = order[i];
    if (i > 0 && s.scores[idx] == s.scores[order[i - 1]]) {
      items.back().sum += s.labels[idx];
      items.back().weight += 1.0;
    } else {
      items.push_back({static_cast<double>(s.labels[idx]), 1.0});
    }
    item_of[i] = items.size() - 1;
  }
  items.push_back({0.0, 1.0});
  items.push_back({1.0, 1.0});

  // Pool adjacent violators on the item sequence.
  std::vector<PavBlock> stack;
  std::vector<std::size_t> first_item;  // first item index of each block
  stack.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    stack.push_back(items[i]);
    first_item.push_back(i);
    while (stack.size() > 1 &&
           stack[stack.size() - 2].value() >= stack.back().value()) {
      stack[stack.size() - 2].sum += stack.back().sum;
      stack[stack.size() - 2].weight += stack.back().weight;
      stack.pop_back();
      first_item.pop_back();
    }
  }

  // Posterior log-odds per item, straight from the integer block sums. The
  // virtual pairs guarantee every block holding real samples is mixed, so
  // both logs are finite; the clamp is the posterior clipping bound
  // [1/(N+2), 1-1/(N+2)] expressed in log-odds.
  const double odds_bound = std::log(n + 1.0);
  std::vector<double> fit(items.size());
  for (std::size_t b = 0; b < stack.size(); ++b) {
    std::size_t lo = first_item[b];
    std::size_t hi = (b + 1 < stack.size()) ? first_item[b + 1] : items.size();
    double log_odds = std::log(stack[b].sum) -
                      std::log(stack[b].weight - stack[b].sum);
    log_odds = std::clamp(log_odds, -odds_bound, odds_bound);
    for (std::size_t i = lo; i < hi; ++i) fit[i] = log_odds;
  }

  long tar = 0;
  for (int l : s.labels) tar += l;
  const long non = static_cast<long>(n) - tar;
  // Label log-odds of the padded set; with it, a one-block (no-signal) fit
  // maps to exactly zero LLRs.
  const double prior_log_odds = std::log(tar + 1.0) - std::log(non + 1.0);

  std::vector<double> llrs(n);
  for (std::size_t i = 0; i < n; ++i)
    llrs[order[i]] = fit[item_of[i]] - prior_log_odds;
  return llrs;
}

double cllr(const std::vector<double>& llrs, const std::vector<int>& labels) {
  ScoreSet s{llrs, labels};
  check_scoreset(s, true);
  double tar_cost = 0.0, non_cost = 0.0;
  long tar = 0, non = 0;
  for (std::size_t i = 0; i < llrs.size(); ++i) {
    if (labels[i] == 1) {
      tar_cost += softplus2(-llrs[i]);
      ++tar;
    } else {
      non_cost += softplus2(llrs[i]);
      ++non;
    }
  }
  return 0.5 * (tar_cost / tar + non_cost / non);
}

double cllr_min(const ScoreSet& s) { return cllr(pav_calibrate(s), s.labels); }

char zebra_tag(double delta) {
  if (delta <= 1e-9) return 'A';
  if (delta <= 1.0) return 'B';
  if (delta <= 2.0) return 'C';
  if (delta <= 4.0) return 'D';
  if (delta <= 5.0) return 'E';
  return 'F';
}

EceReport ece_report(const ScoreSet& s, int prior_grid) {
  check_scoreset(s, true);
  if (prior_grid < 1) throw InvalidInputError("ece_report: empty prior grid");
  std::vector<double> llrs = pav_calibrate(s);

  std::vector<double> tar_llrs, non_llrs;
  for (std::size_t i = 0; i < llrs.size(); ++i)
    (s.labels[i] == 1 ? tar_llrs : non_llrs).push_back(llrs[i]);

  EceReport rep;
  rep.priors.resize(prior_grid);
  rep.ece_observed.resize(prior_grid);
  rep.ece_default.resize(prior_grid);
  const double h = 1.0 / (prior_grid + 1.0);
  double area = 0.0;
  for (int k = 0; k < prior_grid; ++k) {
    double pi = (k + 1) * h;
    double lo = logit(pi);
    double tar_cost = 0.0;
    for (double l : tar_llrs) tar_cost += softplus2(-(l + lo));
    double non_cost = 0.0;
    for (double l : non_llrs) non_cost += softplus2(l + lo);
    double ece = pi * tar_cost / tar_llrs.size() +
                 (1.0 - pi) * non_cost / non_llrs.size();
    double entropy = -(pi * std::log2(pi) + (1.0 - pi) * std::log2(1.0 - pi));
    rep.priors[k] = pi;
    rep.ece_observed[k] = ece;
    rep.ece_default[k] = entropy;
    area += entropy - ece;
  }
  // Trapezoid over [0,1]; the integrand vanishes at both endpoints.
  rep.d_ece = area * h;

  for (double l : llrs) {
    double delta = std::fabs(l) / std::log(10.0);
    rep.max_abs_log10_lr = std::max(rep.max_abs_log10_lr, delta);
    char t = zebra_tag(delta);
    rep.tag_counts[t - 'A'] += 1;
    rep.tag = std::max(rep.tag, t);
  }
  return rep;
}

double eer_percent(const ScoreSet& s) {
  check_scoreset(s, true);
  std::vector<double> tar, non;
  for (std::size_t i = 0; i < s.size(); ++i)
    (s.labels[i] == 1 ? tar : non).push_back(s.scores[i]);
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());

  // Thresholds swept over all scores; accept means score >= threshold.
  std::vector<double> thresholds(s.scores);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  double prev_far = 1.0, prev_frr = 0.0;
  for (double t : thresholds) {
    // FRR: targets below t; FAR: non-targets at or above t.
    double frr = static_cast<double>(std::lower_bound(tar.begin(), tar.end(), t) -
                                     tar.begin()) /
                 tar.size();
    double far = static_cast<double>(non.end() -
                                     std::lower_bound(non.begin(), non.end(), t)) /
                 non.size();
    if (frr >= far) {
      double d1 = prev_far - prev_frr;
      double d2 = far - frr;
      double alpha = (d1 - d2) != 0.0 ? d1 / (d1 - d2) : 0.0;
      double eer = prev_far + alpha * (far - prev_far);
      return 100.0 * eer;
    }
    prev_far = far;
    prev_frr = frr;
  }
  // All targets above all thresholds never happens (last threshold is the
  // max score, FRR there is (tar-1)/tar or 1); kept for safety.
  return 100.0 * 0.5 * (prev_far + prev_frr);
}

namespace {

// psi(n) for integer n >= 1 via harmonic numbers: psi(n) = -gamma + H_{n-1}.
struct DigammaTable {
  std::vector<double> psi;
  explicit DigammaTable(std::size_t n_max) {
    constexpr double kGamma = 0.57721566490153286061;
    psi.resize(n_max + 1, 0.0);
    double h = 0.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
      psi[n] = -kGamma + h;
      h += 1.0 / static_cast<double>(n);
    }
  }
  double operator()(long n) const { return psi[static_cast<std::size_t>(n)]; }
};

}  // namespace

std::vector<double> mi_knn_dims(const std::vector<std::vector<double>>& features,
                                const std::vector<int>& labels, int k) {
  if (k < 1) throw InvalidInputError("mi_knn: k must be >= 1");
  if (features.empty() || features.size() != labels.size())
    throw InvalidInputError("mi_knn: empty input or label length mismatch");
  const std::size_t n = features.size();
  const std::size_t dim = features.front().size();
  long count[2] = {0, 0};
  for (int l : labels) {
    if (l != 0 && l != 1)
      throw InvalidInputError("mi_knn: labels must be 0 or 1");
    count[l]++;
  }
  if (count[0] <= k || count[1] <= k)
    throw InvalidInputError("mi_knn: need more than k samples per class");

  DigammaTable psi(n);
  Rng jitter_rng(0x6d695f6a69747465ULL);  // fixed stream; ties only
  std::vector<double> out(dim, 0.0);
  std::vector<double> x(n);
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < n; ++i)
    by_class[labels[i]].push_back(i);

  for (std::size_t d = 0; d < dim; ++d) {
    double mean_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (features[i].size() != dim)
        throw InvalidInputError("mi_knn: inconsistent vector lengths");
      x[i] = features[i][d];
      mean_abs += std::fabs(x[i]);
    }
    mean_abs /= n;
    double eps = 1e-10 * std::max(1.0, mean_abs);
    for (std::size_t i = 0; i < n; ++i) x[i] += eps * jitter_rng.gaussian();

    std::vector<double> all_sorted(x);
    std::sort(all_sorted.begin(), all_sorted.end());

    double sum_psi_m = 0.0, sum_psi_label = 0.0;
    for (int c = 0; c < 2; ++c) {
      std::vector<double> cls;
      cls.reserve(by_class[c].size());
      for (std::size_t i : by_class[c]) cls.push_back(x[i]);
      std::sort(cls.begin(), cls.end());
      const std::size_t m = cls.size();
      for (std::size_t i : by_class[c]) {
        double xi = x[i];
        std::size_t pos = static_cast<std::size_t>(
            std::lower_bound(cls.begin(), cls.end(), xi) - cls.begin());
        // k-th nearest same-class neighbor in 1-D by widening a window.
        std::size_t lo = pos, hi = pos + 1;  // cls[pos] == xi is "self"
        double radius = 0.0;
        for (int step = 0; step < k; ++step) {
          double dl = lo > 0 ? xi - cls[lo - 1] : -1.0;
          double dr = hi < m ? cls[hi] - xi : -1.0;
          if (dl >= 0.0 && (dr < 0.0 || dl <= dr)) {
            radius = dl;
            --lo;
          } else {
            radius = dr;
            ++hi;
          }
        }
        // Count over all samples at distance strictly inside the k-th
        // neighbor distance (nextafter shrink), self included.
        double r = std::nextafter(radius, 0.0);
        auto lo_it = std::lower_bound(all_sorted.begin(), all_sorted.end(),
                                      xi - r);
        auto hi_it = std::upper_bound(all_sorted.begin(), all_sorted.end(),
                                      xi + r);
        long m_i = static_cast<long>(hi_it - lo_it);
        sum_psi_m += psi(std::max(m_i, 1L));
        sum_psi_label += psi(static_cast<long>(m));
      }
    }
    double nats = psi(static_cast<long>(n)) + psi(k) -
                  (sum_psi_label + sum_psi_m) / static_cast<double>(n);
    out[d] = std::max(nats, 0.0) / kLn2;
  }
  return out;
}

double mi_knn(const std::vector<std::vector<double>>& features,
              const std::vector<int>& labels, int k) {
  std::vector<double> dims = mi_knn_dims(features, labels, k);
  return std::accumulate(dims.begin(), dims.end(), 0.0) / dims.size();
}

double Attacker::score(std::span<const double> x) const {
  return mlp_forward(net, x)[0];
}

Attacker train_attacker(const std::vector<std::vector<double>>& features,
                        const std::vector<int>& labels,
                        const AttackerConfig& cfg) {
  if (features.empty() || features.size() != labels.size())
    throw InvalidInputError("train_attacker: empty input or label mismatch");
  if (cfg.hidden < 0 || cfg.epochs < 1 || cfg.batch_size < 1 ||
      !(cfg.learning_rate > 0.0))
    throw InvalidInputError("train_attacker: bad config");
  bool has0 = false, has1 = false;
  for (int l : labels) {
    if (l != 0 && l != 1)
      throw InvalidInputError("train_attacker: labels must be 0 or 1");
    (l == 0 ? has0 : has1) = true;
  }
  if (!has0 || !has1)
    throw InvalidInputError("train_attacker: both classes required");

  const int dim = static_cast<int>(features.front().size());
  Rng init_rng(Rng::derive(cfg.seed, 11));
  Attacker atk;
  if (cfg.hidden > 0) {
    const int dims[3] = {dim, cfg.hidden, 1};
    atk.net = make_mlp(dims, Activation::kLeakyRelu, Activation::kNone,
                       init_rng);
  } else {
    const int dims[2] = {dim, 1};
    atk.net = make_mlp(dims, Activation::kNone, Activation::kNone, init_rng);
  }

  std::vector<double> params;
  params.reserve(atk.net.param_count());
  for (const auto& l : atk.net.layers) {
    params.insert(params.end(), l.weights.begin(), l.weights.end());
    params.insert(params.end(), l.bias.begin(), l.bias.end());
  }
  AdamState opt(params.size());
  Rng shuffle_rng(Rng::derive(cfg.seed, 12));

  const std::size_t N = features.size();
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<double> flat(params.size());

  auto scatter = [&](const std::vector<double>& p) {
    std::size_t pos = 0;
    for (auto& l : atk.net.layers) {
      for (auto& w : l.weights) w = p[pos++];
      for (auto& b : l.bias) b = p[pos++];
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < N; start += bs) {
      std::size_t stop = std::min(start + bs, N);
      MlpGrads grads = make_zero_grads(atk.net);
      double inv_b = 1.0 / static_cast<double>(stop - start);
      double loss = 0.0;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& xi = features[order[i]];
        if (static_cast<int>(xi.size()) != dim)
          throw InvalidInputError("train_attacker: inconsistent vector length");
        double logit_out = mlp_forward(atk.net, xi)[0];
        double y = static_cast<double>(labels[order[i]]);
        // logistic loss; d/dlogit = sigmoid(logit) - y
        double p = 1.0 / (1.0 + std::exp(-logit_out));
        loss += (logit_out > 0 ? logit_out : 0.0) -
                logit_out * y + std::log1p(std::exp(-std::fabs(logit_out)));
        double up[1] = {p - y};
        mlp_backward_accum(atk.net, xi, up, grads, inv_b);
      }
      if (!std::isfinite(loss))
        throw TrainingDivergedError("train_attacker: non-finite loss");
      std::size_t pos = 0;
      for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        for (double g : grads.weights[l]) flat[pos++] = g;
        for (double g : grads.bias[l]) flat[pos++] = g;
      }
      adam_step(params, flat, opt, cfg.learning_rate);
      scatter(params);
    }
  }
  return atk;
}

double cosine_score(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    throw InvalidInputError("cosine_score: length mismatch or empty");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw InvalidInputError("cosine_score: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace zevi
