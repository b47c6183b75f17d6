#include "deepmatch/felr.hpp"

#include <algorithm>
#include <cmath>

#include "deepmatch/errors.hpp"
#include "deepmatch/layers.hpp"
#include "deepmatch/rng.hpp"

namespace deepmatch {

FELRModel felr_train(std::span<const QueryAdRecord> records,
                     const CorpusStats& stats, const TrainConfig& config,
                     const FELROptions& options) {
  config.validate();
  if (records.empty()) throw ConfigError("felr_train: empty dataset");

  FELRModel model;
  model.feature_indices = options.feature_indices;
  if (model.feature_indices.empty()) {
    model.feature_indices.resize(kFeatureCount);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      model.feature_indices[i] = i;
    }
  }
  for (std::size_t idx : model.feature_indices) {
    if (idx >= kFeatureCount) {
      throw ConfigError("felr_train: feature index " + std::to_string(idx) +
                        " out of range");
    }
  }
  const std::size_t dim = model.feature_indices.size();

  // Extract once; training touches only the selected columns.
  std::vector<std::vector<double>> rows;
  rows.reserve(records.size());
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const QueryAdRecord& record : records) {
    const auto full = extract_features(record, stats);
    std::vector<double> row(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      row[j] = full[model.feature_indices[j]];
    }
    rows.push_back(std::move(row));
    labels.push_back(record.click);
  }

  model.means.assign(dim, 0.0);
  model.stds.assign(dim, 1.0);
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < dim; ++j) model.means[j] += row[j];
  }
  for (std::size_t j = 0; j < dim; ++j) {
    model.means[j] /= static_cast<double>(rows.size());
  }
  std::vector<double> var(dim, 0.0);
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = row[j] - model.means[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    var[j] /= static_cast<double>(rows.size());
    model.stds[j] = var[j] > 0.0 ? std::sqrt(var[j]) : 1.0;
  }
  for (auto& row : rows) {
    for (std::size_t j = 0; j < dim; ++j) {
      row[j] = (row[j] - model.means[j]) / model.stds[j];
    }
  }

  model.weights.assign(dim, 0.0);
  std::vector<double> bias_vec{0.0};
  std::vector<double> weight_grads(dim, 0.0);
  std::vector<double> bias_grads{0.0};
  std::vector<ParamBlock> blocks = {
      {"felr.w", &model.weights, &weight_grads},
      {"felr.b", &bias_vec, &bias_grads},
  };
  AdamState adam;
  adam.config.alpha = config.learning_rate;
  Rng shuffle_rng(config.shuffle_seed);

  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t step = 0;
  bool done = false;
  for (std::size_t epoch = 0; epoch < std::max<std::size_t>(config.epochs, 1);
       ++epoch) {
    if (done) break;
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end =
          std::min(start + config.batch_size, order.size());
      const double n = static_cast<double>(end - start);
      std::fill(weight_grads.begin(), weight_grads.end(), 0.0);
      bias_grads[0] = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const std::vector<double>& x = rows[order[i]];
        double z = bias_vec[0];
        for (std::size_t j = 0; j < dim; ++j) z += model.weights[j] * x[j];
        const double p = sigmoid(z);
        const double dz =
            (p - static_cast<double>(labels[order[i]])) / n;
        for (std::size_t j = 0; j < dim; ++j) weight_grads[j] += dz * x[j];
        bias_grads[0] += dz;
      }
      adam_step(blocks, adam);
      ++step;
      if (config.max_steps > 0 && step >= config.max_steps) {
        done = true;
        break;
      }
    }
  }
  model.bias = bias_vec[0];
  return model;
}

double felr_predict(const FELRModel& model, std::span<const double> features) {
  if (features.size() != kFeatureCount) {
    throw ShapeError("felr_predict: expected " +
                     std::to_string(kFeatureCount) + " features, got " +
                     std::to_string(features.size()));
  }
  if (model.means.size() != model.weights.size()) {
    throw ShapeError("felr_predict: model has no standardization stats");
  }
  double z = model.bias;
  for (std::size_t j = 0; j < model.feature_indices.size(); ++j) {
    const double x =
        (features[model.feature_indices[j]] - model.means[j]) / model.stds[j];
    z += model.weights[j] * x;
  }
  return sigmoid(z);
}

std::vector<double> felr_predict_records(const FELRModel& model,
                                         std::span<const QueryAdRecord> records,
                                         const CorpusStats& stats) {
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const QueryAdRecord& record : records) {
    scores.push_back(felr_predict(model, extract_features(record, stats)));
  }
  return scores;
}

double combine_average(double p_deep, double p_external) {
  if (!(p_deep >= 0.0 && p_deep <= 1.0) ||
      !(p_external >= 0.0 && p_external <= 1.0)) {
    throw ShapeError("combine_average: inputs must lie in [0,1]");
  }
  return (p_deep + p_external) / 2.0;
}

}  // namespace deepmatch
