#include "zevi/data.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "text_io.hpp"
#include "zevi/errors.hpp"
#include "zevi/rng.hpp"

namespace zevi {

void validate_dataset(const EmbeddingDataset& ds) {
  if (ds.dim < 1) throw InvalidInputError("dataset: dim must be >= 1");
  if (ds.records.empty()) throw InvalidInputError("dataset: empty");
  std::map<std::string, int> spk_attr;
  for (const auto& r : ds.records) {
    if (static_cast<int>(r.vec.size()) != ds.dim)
      throw InvalidInputError("dataset: vector length != dim for " + r.utt);
    if (r.attr != 0 && r.attr != 1)
      throw InvalidInputError("dataset: attr must be 0 or 1 for " + r.utt);
    auto [it, inserted] = spk_attr.emplace(r.spk, r.attr);
    if (!inserted && it->second != r.attr)
      throw InvalidInputError("dataset: speaker " + r.spk +
                              " has conflicting attribute values");
  }
}

namespace {

void validate_synth(const SynthConfig& cfg) {
  if (cfg.dim < 2 || cfg.speakers < 2 || cfg.utts_per_speaker < 1)
    throw InvalidInputError("synth config: dim/speakers/utts out of range");
  if (cfg.attr_offset < 0.0 || cfg.speaker_spread <= 0.0 ||
      cfg.residual_noise <= 0.0 || cfg.warp < 0.0)
    throw InvalidInputError("synth config: scales out of range");
}

std::vector<double> random_unit(Rng& rng, int dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.gaussian();
      norm += x * x;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

// Remove the components of v along each u (assumed unit) and renormalize.
void orthonormalize(std::vector<double>& v,
                    const std::vector<std::vector<double>>& basis) {
  for (const auto& u : basis) {
    double dot = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * u[i];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * u[i];
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm < 1e-9)
    throw DegenerateModelError("synth: cannot build orthonormal directions");
  for (auto& x : v) x /= norm;
}

std::string pad_id(const char* prefix, int i, int width) {
  std::string num = std::to_string(i);
  std::string out(prefix);
  out.append(width > static_cast<int>(num.size())
                 ? width - static_cast<int>(num.size())
                 : 0,
             '0');
  return out + num;
}

}  // namespace

EmbeddingDataset generate_synthetic(const SynthConfig& cfg) {
  validate_synth(cfg);
  Rng dir_rng(Rng::derive(cfg.seed, 100));
  std::vector<double> v = random_unit(dir_rng, cfg.dim);
  std::vector<double> v2 = random_unit(dir_rng, cfg.dim);
  orthonormalize(v2, {v});
  std::vector<double> v3 = random_unit(dir_rng, cfg.dim);
  orthonormalize(v3, {v, v2});

  // Balanced attribute assignment over a seeded speaker permutation.
  std::vector<int> attr_of(cfg.speakers);
  for (int s = 0; s < cfg.speakers; ++s) attr_of[s] = s < (cfg.speakers + 1) / 2 ? 0 : 1;
  Rng perm_rng(Rng::derive(cfg.seed, 101));
  perm_rng.shuffle(attr_of);

  EmbeddingDataset ds;
  ds.dim = cfg.dim;
  ds.records.reserve(static_cast<std::size_t>(cfg.speakers) *
                     cfg.utts_per_speaker);
  for (int s = 0; s < cfg.speakers; ++s) {
    // Per-speaker stream keeps generation order-independent.
    Rng rng(Rng::derive(cfg.seed, 1000 + static_cast<std::uint64_t>(s)));
    std::vector<double> mean(cfg.dim);
    for (auto& x : mean) x = cfg.speaker_spread * rng.gaussian();
    double sign = attr_of[s] == 0 ? -1.0 : 1.0;
    for (int u = 0; u < cfg.utts_per_speaker; ++u) {
      EmbeddingRecord rec;
      rec.spk = pad_id("spk", s, 4);
      rec.utt = rec.spk + "-utt" + pad_id("", u, 3);
      rec.attr = attr_of[s];
      rec.vec.resize(cfg.dim);
      for (int i = 0; i < cfg.dim; ++i)
        rec.vec[i] = mean[i] + cfg.attr_offset * sign * v[i] +
                     cfg.residual_noise * rng.gaussian();
      if (cfg.warp > 0.0) {
        double a = 0.0;
        for (int i = 0; i < cfg.dim; ++i) a += v[i] * rec.vec[i];
        double q2 = (a - cfg.attr_offset) * (a - cfg.attr_offset);
        double q3 = (a + cfg.attr_offset) * (a + cfg.attr_offset);
        for (int i = 0; i < cfg.dim; ++i)
          rec.vec[i] += cfg.warp * (q2 * v2[i] + q3 * v3[i]);
      }
      ds.records.push_back(std::move(rec));
    }
  }
  validate_dataset(ds);
  return ds;
}

std::pair<EmbeddingDataset, EmbeddingDataset> split_by_speaker(
    const EmbeddingDataset& ds, double train_fraction, std::uint64_t seed) {
  validate_dataset(ds);
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidInputError("split: fraction must be in (0, 1)");

  std::vector<std::string> speakers;
  std::set<std::string> seen;
  for (const auto& r : ds.records)
    if (seen.insert(r.spk).second) speakers.push_back(r.spk);

  Rng rng(seed);
  rng.shuffle(speakers);
  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(speakers.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, speakers.size() - 1);
  std::set<std::string> train_set(speakers.begin(), speakers.begin() + n_train);

  EmbeddingDataset train, test;
  train.dim = test.dim = ds.dim;
  for (const auto& r : ds.records)
    (train_set.count(r.spk) ? train : test).records.push_back(r);

  for (const EmbeddingDataset* part : {&train, &test}) {
    bool has0 = false, has1 = false;
    for (const auto& r : part->records) (r.attr == 0 ? has0 : has1) = true;
    if (!has0 || !has1)
      throw InvalidInputError(
          "split: a side would not contain both attribute values");
  }
  return {std::move(train), std::move(test)};
}

TrialList make_trials(const EmbeddingDataset& ds, int max_per_type,
                      std::uint64_t seed) {
  validate_dataset(ds);
  if (max_per_type < 1)
    throw InvalidInputError("make_trials: max per type must be >= 1");

  std::map<std::string, std::vector<std::size_t>> by_spk;
  for (std::size_t i = 0; i < ds.records.size(); ++i)
    by_spk[ds.records[i].spk].push_back(i);

  // All same-speaker pairs, the target pool.
  std::vector<std::pair<std::size_t, std::size_t>> target_pool;
  for (const auto& [spk, utts] : by_spk)
    for (std::size_t a = 0; a < utts.size(); ++a)
      for (std::size_t b = a + 1; b < utts.size(); ++b)
        target_pool.emplace_back(utts[a], utts[b]);
  if (target_pool.empty())
    throw InvalidInputError("make_trials: no same-speaker pair exists");
  if (by_spk.size() < 2)
    throw InvalidInputError("make_trials: no impostor pair exists");

  Rng rng(seed);
  rng.shuffle(target_pool);
  std::size_t n_target =
      std::min<std::size_t>(target_pool.size(), max_per_type);

  TrialList out;
  for (std::size_t i = 0; i < n_target; ++i) {
    out.trials.push_back({ds.records[target_pool[i].first].utt,
                          ds.records[target_pool[i].second].utt, true});
  }

  // Impostors by rejection sampling over utterance pairs.
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::size_t wanted = n_target;  // balanced
  std::size_t attempts = 0, max_attempts = 1000 * wanted + 1000;
  while (seen.size() < wanted && attempts++ < max_attempts) {
    std::size_t a = rng.below(ds.records.size());
    std::size_t b = rng.below(ds.records.size());
    if (a == b || ds.records[a].spk == ds.records[b].spk) continue;
    if (a > b) std::swap(a, b);
    seen.insert({a, b});
  }
  if (seen.empty())
    throw InvalidInputError("make_trials: no impostor pair exists");
  for (const auto& [a, b] : seen)
    out.trials.push_back({ds.records[a].utt, ds.records[b].utt, false});
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

EmbeddingDataset read_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open embedding file: " + path);

  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "utt" || header[1] != "spk" ||
      header[2] != "attr")
    throw ParseError("header must start with utt,spk,attr,f0,...", 1);
  const int dim = static_cast<int>(header.size()) - 3;
  for (int i = 0; i < dim; ++i)
    if (header[3 + i] != "f" + std::to_string(i))
      throw ParseError("feature column " + std::to_string(i) +
                           " must be named f" + std::to_string(i),
                       1);

  EmbeddingDataset ds;
  ds.dim = dim;
  std::map<std::string, int> spk_attr;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (static_cast<int>(f.size()) != dim + 3)
      throw ParseError("expected " + std::to_string(dim + 3) +
                           " fields, got " + std::to_string(f.size()),
                       lineno);
    EmbeddingRecord rec;
    rec.utt = f[0];
    rec.spk = f[1];
    if (rec.utt.empty() || rec.spk.empty())
      throw ParseError("empty utterance or speaker id", lineno);
    long attr = detail::parse_long(f[2], lineno);
    if (attr != 0 && attr != 1)
      throw ParseError("attr must be 0 or 1", lineno);
    rec.attr = static_cast<int>(attr);
    auto [it, inserted] = spk_attr.emplace(rec.spk, rec.attr);
    if (!inserted && it->second != rec.attr)
      throw ParseError("speaker " + rec.spk +
                           " has conflicting attribute values (each speaker "
                           "carries exactly one)",
                       lineno);
    rec.vec.resize(dim);
    for (int i = 0; i < dim; ++i)
      rec.vec[i] = detail::parse_double(f[3 + i], lineno);
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) throw ParseError("no data rows", lineno);
  return ds;
}

void write_embeddings(const EmbeddingDataset& ds, const std::string& path) {
  validate_dataset(ds);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot open output file: " + path);
  out << "utt,spk,attr";
  for (int i = 0; i < ds.dim; ++i) out << ",f" << i;
  out << '\n';
  for (const auto& r : ds.records) {
    out << r.utt << ',' << r.spk << ',' << r.attr;
    for (double x : r.vec) out << ',' << detail::dtos(x);
    out << '\n';
  }
  if (!out) throw InvalidInputError("failed writing embedding file: " + path);
}

PcaResult pca_project(const EmbeddingDataset& ds, int components) {
  validate_dataset(ds);
  if (components < 1)
    throw InvalidInputError("pca: components must be >= 1");
  const long N = static_cast<long>(ds.records.size());
  if (N <= components)
    throw InvalidInputError("pca: need more samples than components");
  if (components > ds.dim)
    throw InvalidInputError("pca: components must be <= dim");

  Eigen::MatrixXd X(N, ds.dim);
  for (long i = 0; i < N; ++i)
    for (int j = 0; j < ds.dim; ++j) X(i, j) = ds.records[i].vec[j];
  Eigen::RowVectorXd mean = X.colwise().mean();
  X.rowwise() -= mean;

  Eigen::MatrixXd cov = (X.transpose() * X) / static_cast<double>(N - 1);
  if (cov.trace() <= 1e-300)
    throw DegenerateModelError("pca: zero-variance data");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw DegenerateModelError("pca: eigendecomposition failed");

  PcaResult res;
  res.mean.assign(mean.data(), mean.data() + ds.dim);
  res.components.resize(components);
  res.variances.resize(components);
  Eigen::MatrixXd proj(ds.dim, components);
  for (int c = 0; c < components; ++c) {
    // Eigenvalues come out ascending.
    Eigen::VectorXd dir = eig.eigenvectors().col(ds.dim - 1 - c);
    int arg = 0;
    for (int j = 1; j < ds.dim; ++j)
      if (std::fabs(dir[j]) > std::fabs(dir[arg])) arg = j;
    if (dir[arg] < 0.0) dir = -dir;
    proj.col(c) = dir;
    res.components[c].assign(dir.data(), dir.data() + ds.dim);
    res.variances[c] = eig.eigenvalues()[ds.dim - 1 - c];
  }
  Eigen::MatrixXd coords = X * proj;
  res.coords.resize(N);
  for (long i = 0; i < N; ++i) {
    res.coords[i].resize(components);
    for (int c = 0; c < components; ++c) res.coords[i][c] = coords(i, c);
  }
  return res;
}

}  // namespace zevi
