#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepmatch/dataset.hpp"
#include "deepmatch/gradcheck.hpp"
#include "deepmatch/model.hpp"
#include "deepmatch/text.hpp"

namespace deepmatch {

/// Mean negated log-likelihood over the batch:
///   -(1/n) [ sum_{c=1} log p + sum_{c=0} log(1-p) ]
/// with every p clamped into [clamp, 1-clamp] before the logs.
double cross_entropy_loss(std::span<const double> probs,
                          std::span<const int> labels, double clamp = 1e-7);

/// dL/dp_i = (p_i - c_i) / (p_i (1 - p_i)) / n at the clamped p. Composed
/// with a sigmoid output this reduces to dL/dz_i = (p_i - c_i) / n.
std::vector<double> cross_entropy_loss_grad(std::span<const double> probs,
                                            std::span<const int> labels,
                                            double clamp = 1e-7);

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates per parameter block plus the shared step
/// counter. Slots are lazily sized from the block list on the first step.
struct AdamState {
  AdamConfig config;
  std::size_t step = 0;
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  std::vector<Moments> slots;
};

/// One Adam update over all blocks using their accumulated grads. A NaN or
/// Inf gradient aborts the whole step (no partial update) and names the
/// offending block.
void adam_step(std::span<ParamBlock> blocks, AdamState& state);

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 1;
  std::size_t max_steps = 0;  // 0 = bounded by epochs only
  double learning_rate = 1e-3;
  std::uint64_t shuffle_seed = 1;
  std::size_t eval_every = 0;  // heldout AUC cadence in steps; 0 = never
  double prob_clamp = 1e-7;

  void validate() const;
};

struct TrainHistoryEntry {
  std::size_t step = 0;
  double loss = 0.0;
  std::optional<double> heldout_auc;
};

/// step \t loss \t heldout_auc (blank when absent).
void write_history_tsv(const std::string& path,
                       const std::vector<TrainHistoryEntry>& history);

/// Builds the (query, ad) input tensors for one record according to a model
/// config. Word-level configs need an embedding table.
class PairEncoder {
 public:
  PairEncoder(const ModelConfig& config, const EmbeddingTable* embeddings);
  std::pair<Tensor2, Tensor2> encode(const QueryAdRecord& record) const;

 private:
  const ModelConfig* config_;
  const EmbeddingTable* embeddings_;
  Alphabet alphabet_;
};

/// Mini-batch training: per epoch, shuffles with the seeded rng, then for
/// each batch zeroes grads, runs a train-mode forward, cross-entropy loss,
/// backward, and one Adam step. Deterministic under a fixed seed.
std::vector<TrainHistoryEntry> train_deep_model(
    DeepModel& model, const std::vector<QueryAdRecord>& train,
    const std::vector<QueryAdRecord>* heldout, const TrainConfig& config,
    const EmbeddingTable* embeddings);

/// Infer-mode scores, one per record, order preserved, no state mutation.
/// `threads` > 1 fans the pure forward passes out over worker threads;
/// results are identical for any thread count.
std::vector<double> predict_batch(DeepModel& model,
                                  std::span<const QueryAdRecord> records,
                                  const EmbeddingTable* embeddings,
                                  std::size_t threads = 1);

}  // namespace deepmatch
