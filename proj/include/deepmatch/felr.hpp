#pragma once

#include <span>
#include <vector>

#include "deepmatch/dataset.hpp"
#include "deepmatch/features.hpp"
#include "deepmatch/training.hpp"

namespace deepmatch {

/// Feature-engineered logistic regression over the content features:
/// p = sigmoid(w . standardize(x) + b). The default model uses all 42
/// features (43 learnable scalars with the bias); a restricted model keeps a
/// subset.
struct FELRModel {
  std::vector<std::size_t> feature_indices;  // into the 42-feature vector
  std::vector<double> weights;               // aligned with feature_indices
  double bias = 0.0;
  std::vector<double> means;  // standardization, from the training split
  std::vector<double> stds;   // zero-variance features use std 1

  std::size_t parameter_count() const { return weights.size() + 1; }
};

struct FELROptions {
  /// Empty means all 42 features.
  std::vector<std::size_t> feature_indices;
};

/// Trains with the same mini-batch Adam loop and cross-entropy loss as the
/// deep models. Deterministic under config.shuffle_seed.
FELRModel felr_train(std::span<const QueryAdRecord> records,
                     const CorpusStats& stats, const TrainConfig& config,
                     const FELROptions& options = {});

double felr_predict(const FELRModel& model,
                    std::span<const double> features);
std::vector<double> felr_predict_records(const FELRModel& model,
                                         std::span<const QueryAdRecord> records,
                                         const CorpusStats& stats);

/// (p_deep + p_external) / 2; both inputs must lie in [0, 1].
double combine_average(double p_deep, double p_external);

}  // namespace deepmatch
