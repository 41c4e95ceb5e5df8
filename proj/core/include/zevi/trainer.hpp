#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zevi/data.hpp"
#include "zevi/errors.hpp"
#include "zevi/flow.hpp"
#include "zevi/latent.hpp"

namespace zevi {

struct TrainConfig {
  double alpha = 0.99;         // mu adaptation, in [0, 1]
  double learning_rate = 1e-4;
  int batch_size = 64;
  int epochs = 250;
  double mu_init = 10.0;
  std::uint64_t seed = 0;
};

void validate_config(const TrainConfig& cfg);

struct TrainHistory {
  struct BatchRecord {
    int epoch = 0;
    int batch = 0;
    double nll = 0.0;
    double mu = 0.0;  // after this batch's update
  };
  struct EpochRecord {
    int epoch = 0;
    double mean_nll = 0.0;
    double mu = 0.0;
  };
  std::vector<BatchRecord> batches;
  std::vector<EpochRecord> epochs;
};

// training-diverged error carrying the partial history.
class TrainingAbortedError : public TrainingDivergedError {
 public:
  TrainingAbortedError(const std::string& msg, TrainHistory h)
      : TrainingDivergedError(msg), history(std::move(h)) {}
  TrainHistory history;
};

struct LabeledVectors {
  std::vector<std::vector<double>> x;
  std::vector<AttrClass> y;
};

// Mean over the batch of -[class log-density of g^-1(x) + logdet(x->z)].
double nll_batch(const FlowModel& flow, const LatentModel& latent,
                 const LabeledVectors& batch);

struct FlowGrads {
  std::vector<MlpGrads> scale;      // per coupling layer
  std::vector<MlpGrads> translate;
};

FlowGrads make_zero_grads(const FlowModel& model);

// Computes nll_batch and its exact gradient with respect to every flow
// parameter. When z_out is non-null, the latent images of the batch are
// stored there (they come out of the same inverse pass).
double nll_batch_grad(const FlowModel& flow, const LatentModel& latent,
                      const LabeledVectors& batch, FlowGrads& grads,
                      std::vector<std::vector<double>>* z_out = nullptr);

// Flattened in the same order as flow_params().
std::vector<double> flow_grads_flat(const FlowModel& model,
                                    const FlowGrads& grads);

// alpha * mu + (1 - alpha) * mu_mle(batch).
double update_mu(double mu, const std::vector<std::vector<double>>& latent_batch,
                 double alpha);

struct TrainResult {
  FlowModel flow;
  LatentModel latent;
  TrainHistory history;
};

// Alternating optimization: per batch, map to latent, one Adam step on the
// flow parameters against the batch NLL (at the pre-update mu), then the
// exponential mu update toward the batch MLE. Deterministic given cfg.seed.
TrainResult train(const EmbeddingDataset& dataset, const TrainConfig& cfg,
                  int coupling_layers = 6);

void write_history_csv(const TrainHistory& history, const std::string& path);

}  // namespace zevi
