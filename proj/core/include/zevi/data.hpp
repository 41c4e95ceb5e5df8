#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace zevi {

// One utterance-level embedding. attr is the binary attribute, 0 = c0
// (female), 1 = c1 (male); every speaker carries exactly one attr value.
struct EmbeddingRecord {
  std::string utt;
  std::string spk;
  int attr = 0;
  std::vector<double> vec;
};

struct EmbeddingDataset {
  int dim = 0;
  std::vector<EmbeddingRecord> records;

  std::size_t size() const { return records.size(); }
};

void validate_dataset(const EmbeddingDataset& ds);

// Synthetic stand-in for extracted speaker embeddings. Per speaker s a mean
// m_s ~ N(0, speaker_spread^2 I) is drawn and an attribute a_s assigned so
// the classes stay balanced; each utterance is
//   x = m_s + attr_offset * (2 a_s - 1) * v + noise,
// with v a seeded unit direction and noise ~ N(0, residual_noise^2 I).
// warp > 0 additionally feeds two quadratic functions of the attribute
// coordinate into two further seeded directions, which bends the attribute
// information away from any single linear direction:
//   x += warp * (v^T x - attr_offset)^2 * v2 + warp * (v^T x + attr_offset)^2 * v3.
struct SynthConfig {
  int dim = 32;
  int speakers = 200;
  int utts_per_speaker = 20;
  double attr_offset = 2.0;
  double speaker_spread = 1.0;
  double residual_noise = 0.5;
  double warp = 0.0;
  std::uint64_t seed = 0;
};

EmbeddingDataset generate_synthetic(const SynthConfig& cfg);

// Speaker-disjoint split; throws InvalidInputError when either side would
// end up without both attribute values.
std::pair<EmbeddingDataset, EmbeddingDataset> split_by_speaker(
    const EmbeddingDataset& ds, double train_fraction, std::uint64_t seed);

struct Trial {
  std::string utt_a;
  std::string utt_b;
  bool target = false;  // same speaker
};

struct TrialList {
  std::vector<Trial> trials;
};

// Balanced sampled target/impostor pairs, at most max_per_type of each,
// deterministic given seed. Throws when either type is impossible.
TrialList make_trials(const EmbeddingDataset& ds, int max_per_type,
                      std::uint64_t seed);

// CSV interchange format, header "utt,spk,attr,f0,...,f{n-1}", floats as
// shortest round-trip decimals. Write-then-read reproduces vectors exactly.
EmbeddingDataset read_embeddings(const std::string& path);
void write_embeddings(const EmbeddingDataset& ds, const std::string& path);

struct PcaResult {
  std::vector<std::vector<double>> coords;      // N x components
  std::vector<std::vector<double>> components;  // components x dim
  std::vector<double> variances;                // eigenvalues, descending
  std::vector<double> mean;
};

// Projection onto the top principal directions of the centered data. Sign of
// each component is fixed by making its largest-magnitude loading positive.
PcaResult pca_project(const EmbeddingDataset& ds, int components = 2);

}  // namespace zevi
