#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvmi/featgraph.hpp"
#include "mvmi/graph.hpp"
#include "mvmi/model.hpp"
#include "mvmi/objectives.hpp"

namespace mvmi {

enum class ModelKind { kMvmift, kDgi };

ModelKind parse_model_kind(const std::string& name);
std::string model_kind_name(ModelKind kind);

struct TrainConfig {
  ModelKind model = ModelKind::kMvmift;
  int hidden = 512;
  float lr = 0.001f;
  int epochs = 500;
  int knn_k = 3;
  float lambda_c = 0.3f;
  float lambda_d = 0.01f;
  KnnMetric metric = KnnMetric::kCosine;
  std::uint64_t seed = 1;
  bool use_reconstruction = true;
  bool use_disagreement = true;
  int pairs_per_node = 1;
  int patience = 0;  // 0 disables early stopping
  int threads = 1;   // 1 is the bit-deterministic mode

  nlohmann::json to_json() const;
  // Unknown keys are rejected with the list of valid ones.
  void apply_json(const nlohmann::json& j);
};

struct TrainedModel {
  ModelKind kind = ModelKind::kMvmift;
  ModelParams params;  // used when kind == kMvmift
  DgiParams dgi;       // used when kind == kDgi
  std::vector<LossBreakdown> history;
  TrainConfig config;
  std::uint64_t fingerprint = 0;
};

using EpochLogFn = std::function<void(int epoch, const LossBreakdown&)>;

// Full-batch training, one gradient step per epoch. The feature graph
// and both normalized adjacencies are built once up front. A non-finite
// loss aborts with the offending epoch's term values in the message.
TrainedModel train_mvmift(const GraphDataset& ds, const TrainConfig& config,
                          const EpochLogFn& log = nullptr);
// Single-view baseline: corruption, summary and the discrimination
// objective over the topology view only.
TrainedModel train_dgi(const GraphDataset& ds, const TrainConfig& config,
                       const EpochLogFn& log = nullptr);
TrainedModel train(const GraphDataset& ds, const TrainConfig& config,
                   const EpochLogFn& log = nullptr);

// Clean forward pass (no corruption); the three representations are
// averaged elementwise for the two-view model, the single encoder
// output is returned for the baseline. Refuses a dataset whose
// fingerprint differs from the one trained on.
DenseMatrix export_embeddings(const TrainedModel& model, const GraphDataset& ds);

// Binary checkpoint: magic/version header, config snapshot JSON,
// dataset fingerprint, then named tensors as 32-bit little-endian
// floats. Layout details in the README.
void save_checkpoint(const TrainedModel& model, const std::string& path);
TrainedModel load_checkpoint(const std::string& path);

void write_losses_csv(const std::vector<LossBreakdown>& history, const std::string& path);

void write_embeddings_csv(const DenseMatrix& m, const std::string& path);
void write_embeddings_bin(const DenseMatrix& m, const std::string& path);
DenseMatrix load_embeddings(const std::string& path);  // .bin or .csv

}  // namespace mvmi
