#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "deepmatch/rng.hpp"
#include "deepmatch/tensor.hpp"

namespace deepmatch {

enum class Mode { train, infer };

/// All temporal convolutions slide a width-3 filter with stride 1 and no
/// padding, so every conv shortens its input by exactly two rows.
inline constexpr std::size_t kConvFilterWidth = 3;

/// Temporal convolution parameters. Weights are stored row-major per filter:
/// weights[f * 3C + d * C + c] multiplies input[t + d, c].
struct ConvParams {
  std::size_t filter_count = 0;
  std::size_t in_channels = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  std::vector<double> weight_grads;
  std::vector<double> bias_grads;

  static ConvParams create(std::size_t filter_count, std::size_t in_channels,
                           Rng& rng);
  void zero_grads();
};

struct BatchNormParams {
  std::size_t channels = 0;
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.99;
  double epsilon = 1e-5;
  std::vector<double> gamma_grads;
  std::vector<double> beta_grads;

  static BatchNormParams create(std::size_t channels);
  void zero_grads();
};

struct DenseParams {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weights;  // out_dim x in_dim, row-major
  std::vector<double> bias;     // out_dim
  std::vector<double> weight_grads;
  std::vector<double> bias_grads;

  static DenseParams create(std::size_t in_dim, std::size_t out_dim, Rng& rng);
  void zero_grads();
};

// Each forward op may fill a cache; the matching backward consumes it.
// A backward call without a preceding forward (valid == false) throws.

struct ConvCache {
  Tensor2 input;
  bool valid = false;
};

struct MaxPoolCache {
  std::size_t in_rows = 0;
  std::size_t cols = 0;
  std::size_t k = 0;
  std::vector<std::size_t> argmax;  // input row index per output entry
  bool valid = false;
};

struct BatchNormCache {
  std::vector<Tensor2> normalized;  // x-hat per batch member
  std::vector<double> mean;
  std::vector<double> inv_std;
  std::size_t total_rows = 0;
  bool train_mode = false;
  bool valid = false;
};

struct ReluCache {
  Tensor2 input;
  bool valid = false;
};

struct DenseCache {
  std::vector<double> input;
  bool valid = false;
};

/// out[t,f] = bias[f] + sum_{d<3,c} input[t+d,c] * weights[f, d*C+c].
/// Requires input.rows() >= 3 and input.cols() == params.in_channels.
Tensor2 temporal_conv_forward(const Tensor2& input, const ConvParams& params,
                              ConvCache* cache = nullptr);
/// Accumulates weight/bias grads and returns the gradient w.r.t. the input.
Tensor2 temporal_conv_backward(const Tensor2& grad_out, ConvParams& params,
                               ConvCache& cache);

/// Non-overlapping max pool over k consecutive rows; the trailing
/// rows % k remainder is dropped. Ties break to the lowest row index.
Tensor2 maxpool_forward(const Tensor2& input, std::size_t k,
                        MaxPoolCache* cache = nullptr);
Tensor2 maxpool_backward(const Tensor2& grad_out, MaxPoolCache& cache);

/// Normalizes per channel over all time steps of all batch members jointly.
/// Train mode uses batch statistics (population variance) and updates the
/// running estimates; infer mode uses the running estimates and mutates
/// nothing. Train mode requires at least two total rows.
std::vector<Tensor2> batchnorm_forward(const std::vector<Tensor2>& batch,
                                       BatchNormParams& params, Mode mode,
                                       BatchNormCache* cache = nullptr);
/// Only valid after a train-mode forward.
std::vector<Tensor2> batchnorm_backward(const std::vector<Tensor2>& grad_out,
                                        BatchNormParams& params,
                                        BatchNormCache& cache);

Tensor2 relu_forward(const Tensor2& input, ReluCache* cache = nullptr);
/// Derivative at exactly 0 is defined as 0.
Tensor2 relu_backward(const Tensor2& grad_out, ReluCache& cache);

/// y = W x + b.
std::vector<double> dense_forward(std::span<const double> x,
                                  const DenseParams& params,
                                  DenseCache* cache = nullptr);
/// Accumulates W, b grads and returns W^T grad_out.
std::vector<double> dense_backward(std::span<const double> grad_out,
                                   DenseParams& params, DenseCache& cache);

/// Numerically stable logistic; output strictly in (0, 1) for finite z.
double sigmoid(double z);

/// Fills `out` with i.i.d. zero-mean Gaussians of std sqrt(2 / fan_in).
void he_init(std::span<double> out, std::size_t fan_in, Rng& rng);

}  // namespace deepmatch
