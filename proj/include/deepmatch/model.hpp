#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deepmatch/gradcheck.hpp"
#include "deepmatch/layers.hpp"
#include "deepmatch/tensor.hpp"
#include "deepmatch/text.hpp"

namespace deepmatch {

enum class ModelKind { char_level, word_level };
enum class Activation { relu, linear };

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);
std::string activation_name(Activation activation);
Activation parse_activation(const std::string& name);

/// Two consecutive sub-blocks, each temporal convolution -> temporal batch
/// normalization -> ReLU. Shortens its input by four rows.
struct ConvBlockParams {
  ConvParams conv1;
  BatchNormParams bn1;
  ConvParams conv2;
  BatchNormParams bn2;
};

/// Query or ad bloc: a lead temporal convolution followed by two
/// convolutional blocks. Shortens its input by ten rows.
struct SubNetParams {
  ConvParams lead;
  ConvBlockParams block1;
  ConvBlockParams block2;
};

/// Convolution over the row-pair cross product, followed by temporal max
/// pooling.
struct CrossConvParams {
  ConvParams conv;
  std::size_t pool_k = 1;
};

/// Two (conv block + max pool) stages, row-major flatten, then three fully
/// connected layers ending in a single sigmoid output.
struct FinalBlocParams {
  ConvBlockParams block1;
  std::size_t pool1 = 1;
  ConvBlockParams block2;
  std::size_t pool2 = 1;
  DenseParams fc1;
  DenseParams fc2;
  DenseParams fc3;
};

struct ModelConfig {
  ModelKind kind = ModelKind::char_level;
  std::uint64_t seed = 0;

  // Character-level input shape. |V| is the alphabet string length.
  std::size_t query_length = 35;
  std::size_t ad_length = 140;
  std::string alphabet;  // empty means Alphabet::default_chars()

  // Word-level input shape.
  std::size_t query_words = 7;
  std::size_t ad_words = 40;
  std::size_t word_dim = 50;

  // Stage widths.
  std::size_t lead_filters = 64;
  std::size_t block_filters = 64;
  std::size_t cross_filters = 128;
  std::size_t final_filters = 128;
  std::size_t dense1 = 512;
  std::size_t dense2 = 256;

  // Pool sizes. The word model pins all three to 2.
  std::size_t cross_pool = 4;
  std::size_t final_pool1 = 2;
  std::size_t final_pool2 = 2;

  /// Activation applied after the standalone (lead and cross) convolutions;
  /// the conv blocks always use ReLU.
  Activation standalone_activation = Activation::relu;

  static ModelConfig char_defaults();
  static ModelConfig word_defaults();

  const std::string& alphabet_chars() const;
  std::size_t alphabet_size() const { return alphabet_chars().size(); }

  std::string to_json() const;
  static ModelConfig from_json(const std::string& json_text);
};

/// Row counts and channel widths at every stage, derived from a config.
/// plan_shapes rejects any config whose chain does not keep every stage at
/// one row or more.
struct ShapePlan {
  std::size_t q_rows = 0, q_cols = 0;  // representation entering the cross
  std::size_t a_rows = 0, a_cols = 0;  // product: k x l and m x r
  std::size_t cross_rows = 0, cross_cols = 0;
  std::size_t cross_conv_rows = 0;
  std::size_t cross_pooled_rows = 0;
  std::size_t fb1_rows = 0, fb1_pooled = 0;
  std::size_t fb2_rows = 0, fb2_pooled = 0;
  std::size_t flatten_dim = 0;
};

ShapePlan plan_shapes(const ModelConfig& config);

/// Exact count of learnable scalars for a valid config, computed from shape
/// arithmetic alone: conv F*(3C)+F, batch norm 2C, dense out*in+out.
std::size_t count_parameters(const ModelConfig& config);

struct DeepModel {
  ModelConfig config;
  SubNetParams query_net;  // char model only
  SubNetParams ad_net;     // char model only
  CrossConvParams cross;
  FinalBlocParams final_bloc;

  /// Validates the config, then He-initializes all weights from config.seed
  /// (biases zero, batch-norm gamma 1 / beta 0).
  static DeepModel create(const ModelConfig& config);

  /// Every learnable array in checkpoint order. Pointers into this model.
  std::vector<ParamBlock> param_blocks();
  /// Batch-norm running statistics, in checkpoint order.
  std::vector<ParamBlock> state_blocks();
  void zero_grads();
};

// ---- Batched stage caches -------------------------------------------------

struct ConvBlockCache {
  std::vector<ConvCache> conv1;
  BatchNormCache bn1;
  std::vector<ReluCache> relu1;
  std::vector<ConvCache> conv2;
  BatchNormCache bn2;
  std::vector<ReluCache> relu2;
};

struct SubNetCache {
  std::vector<ConvCache> lead;
  std::vector<ReluCache> lead_act;
  Activation activation = Activation::linear;
  ConvBlockCache block1;
  ConvBlockCache block2;
};

struct CrossConvCache {
  std::vector<std::size_t> k, l, m, r;  // per-example input shapes
  std::vector<ConvCache> conv;
  std::vector<ReluCache> act;
  Activation activation = Activation::linear;
  std::vector<MaxPoolCache> pool;
};

struct FinalBlocCache {
  ConvBlockCache block1;
  std::vector<MaxPoolCache> pool1;
  ConvBlockCache block2;
  std::vector<MaxPoolCache> pool2;
  std::vector<std::size_t> flat_rows, flat_cols;
  std::vector<DenseCache> fc1, fc2, fc3;
  std::vector<std::vector<double>> fc1_pre, fc2_pre;  // pre-ReLU activations
  std::vector<double> p;                              // sigmoid outputs
};

struct DeepModelCache {
  SubNetCache query;
  SubNetCache ad;
  CrossConvCache cross;
  FinalBlocCache final_bloc;
};

// ---- Batched stage ops ----------------------------------------------------
// All stage ops process a batch jointly so that batch normalization pools
// statistics over batch x time. Backward passes accumulate parameter grads
// and return gradients w.r.t. their inputs.

std::vector<Tensor2> conv_block_forward(const std::vector<Tensor2>& input,
                                        ConvBlockParams& params, Mode mode,
                                        ConvBlockCache* cache = nullptr);
std::vector<Tensor2> conv_block_backward(const std::vector<Tensor2>& grad_out,
                                         ConvBlockParams& params,
                                         ConvBlockCache& cache);

std::vector<Tensor2> subnet_forward(const std::vector<Tensor2>& input,
                                    SubNetParams& params, Mode mode,
                                    Activation lead_activation,
                                    SubNetCache* cache = nullptr);
std::vector<Tensor2> subnet_backward(const std::vector<Tensor2>& grad_out,
                                     SubNetParams& params,
                                     SubNetCache& cache);

/// The (k*m) x (l+r) matrix whose 1-indexed row i is the concatenation of
/// query row ceil(i/m) and ad row i - m*(ceil(i/m) - 1).
Tensor2 cross_product(const Tensor2& h_q, const Tensor2& h_a);
/// Scatters grad slices back: each query row accumulates m contributions,
/// each ad row k contributions.
void cross_product_backward(const Tensor2& grad, std::size_t k, std::size_t l,
                            std::size_t m, std::size_t r, Tensor2& grad_q,
                            Tensor2& grad_a);

std::vector<Tensor2> cross_conv_forward(const std::vector<Tensor2>& h_q,
                                        const std::vector<Tensor2>& h_a,
                                        CrossConvParams& params, Mode mode,
                                        Activation activation,
                                        CrossConvCache* cache = nullptr);
std::pair<std::vector<Tensor2>, std::vector<Tensor2>> cross_conv_backward(
    const std::vector<Tensor2>& grad_out, CrossConvParams& params,
    CrossConvCache& cache);

/// Returns one probability in (0,1) per batch member.
std::vector<double> final_bloc_forward(const std::vector<Tensor2>& input,
                                       FinalBlocParams& params, Mode mode,
                                       FinalBlocCache* cache = nullptr);
/// Backward from gradients w.r.t. the pre-sigmoid logit z.
std::vector<Tensor2> final_bloc_backward_logit(
    const std::vector<double>& grad_z, FinalBlocParams& params,
    FinalBlocCache& cache);
/// Backward from gradients w.r.t. the probability p (chain through sigmoid).
std::vector<Tensor2> final_bloc_backward(const std::vector<double>& grad_p,
                                         FinalBlocParams& params,
                                         FinalBlocCache& cache);

// ---- Whole-model ops -------------------------------------------------------

/// Dispatches on config.kind; validates input shapes against the config.
std::vector<double> deep_model_forward(DeepModel& model,
                                       const std::vector<Tensor2>& query_enc,
                                       const std::vector<Tensor2>& ad_enc,
                                       Mode mode,
                                       DeepModelCache* cache = nullptr);
/// Accumulates all parameter grads from per-example logit gradients.
void deep_model_backward_logit(DeepModel& model,
                               const std::vector<double>& grad_z,
                               DeepModelCache& cache);

std::vector<double> deepcharmatch_forward(DeepModel& model,
                                          const std::vector<Tensor2>& query_enc,
                                          const std::vector<Tensor2>& ad_enc,
                                          Mode mode,
                                          DeepModelCache* cache = nullptr);
std::vector<double> deepwordmatch_forward(DeepModel& model,
                                          const std::vector<Tensor2>& query_enc,
                                          const std::vector<Tensor2>& ad_enc,
                                          Mode mode,
                                          DeepModelCache* cache = nullptr);

}  // namespace deepmatch
