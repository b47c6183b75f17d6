#include "deepmatch/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deepmatch/errors.hpp"

namespace deepmatch {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

}  // namespace

ConvParams ConvParams::create(std::size_t filter_count,
                              std::size_t in_channels, Rng& rng) {
  require(filter_count >= 1 && in_channels >= 1,
          "ConvParams::create: filter_count and in_channels must be >= 1");
  ConvParams p;
  p.filter_count = filter_count;
  p.in_channels = in_channels;
  p.weights.resize(filter_count * kConvFilterWidth * in_channels);
  p.bias.assign(filter_count, 0.0);
  p.weight_grads.assign(p.weights.size(), 0.0);
  p.bias_grads.assign(filter_count, 0.0);
  he_init(p.weights, kConvFilterWidth * in_channels, rng);
  return p;
}

void ConvParams::zero_grads() {
  std::fill(weight_grads.begin(), weight_grads.end(), 0.0);
  std::fill(bias_grads.begin(), bias_grads.end(), 0.0);
}

BatchNormParams BatchNormParams::create(std::size_t channels) {
  require(channels >= 1, "BatchNormParams::create: channels must be >= 1");
  BatchNormParams p;
  p.channels = channels;
  p.gamma.assign(channels, 1.0);
  p.beta.assign(channels, 0.0);
  p.running_mean.assign(channels, 0.0);
  p.running_var.assign(channels, 1.0);
  p.gamma_grads.assign(channels, 0.0);
  p.beta_grads.assign(channels, 0.0);
  return p;
}

void BatchNormParams::zero_grads() {
  std::fill(gamma_grads.begin(), gamma_grads.end(), 0.0);
  std::fill(beta_grads.begin(), beta_grads.end(), 0.0);
}

DenseParams DenseParams::create(std::size_t in_dim, std::size_t out_dim,
                                Rng& rng) {
  require(in_dim >= 1 && out_dim >= 1,
          "DenseParams::create: dims must be >= 1");
  DenseParams p;
  p.in_dim = in_dim;
  p.out_dim = out_dim;
  p.weights.resize(out_dim * in_dim);
  p.bias.assign(out_dim, 0.0);
  p.weight_grads.assign(p.weights.size(), 0.0);
  p.bias_grads.assign(out_dim, 0.0);
  he_init(p.weights, in_dim, rng);
  return p;
}

void DenseParams::zero_grads() {
  std::fill(weight_grads.begin(), weight_grads.end(), 0.0);
  std::fill(bias_grads.begin(), bias_grads.end(), 0.0);
}

Tensor2 temporal_conv_forward(const Tensor2& input, const ConvParams& params,
                              ConvCache* cache) {
  const std::size_t t_in = input.rows();
  const std::size_t c = params.in_channels;
  require(input.cols() == c,
          "temporal_conv_forward: input has " + std::to_string(input.cols()) +
              " channels, params expect " + std::to_string(c));
  require(t_in >= kConvFilterWidth,
          "temporal_conv_forward: input too short (" + std::to_string(t_in) +
              " rows, need >= 3)");

  const std::size_t t_out = t_in - kConvFilterWidth + 1;
  const std::size_t f_count = params.filter_count;
  const std::size_t window = kConvFilterWidth * c;
  Tensor2 out(t_out, f_count);
  for (std::size_t t = 0; t < t_out; ++t) {
    // Rows t..t+2 are contiguous in row-major storage.
    const double* win = input.row(t);
    double* out_row = out.row(t);
    for (std::size_t f = 0; f < f_count; ++f) {
      const double* w = params.weights.data() + f * window;
      double acc = params.bias[f];
      for (std::size_t i = 0; i < window; ++i) acc += win[i] * w[i];
      out_row[f] = acc;
    }
  }
  if (cache != nullptr) {
    cache->input = input;
    cache->valid = true;
  }
  return out;
}

Tensor2 temporal_conv_backward(const Tensor2& grad_out, ConvParams& params,
                               ConvCache& cache) {
  if (!cache.valid) {
    throw ShapeError("temporal_conv_backward: no matching forward cache");
  }
  const Tensor2& input = cache.input;
  const std::size_t t_in = input.rows();
  const std::size_t c = params.in_channels;
  const std::size_t t_out = t_in - kConvFilterWidth + 1;
  const std::size_t f_count = params.filter_count;
  require(grad_out.rows() == t_out && grad_out.cols() == f_count,
          "temporal_conv_backward: grad_out shape mismatch");

  const std::size_t window = kConvFilterWidth * c;
  Tensor2 grad_in(t_in, c);
  for (std::size_t t = 0; t < t_out; ++t) {
    const double* win = input.row(t);
    double* gwin = grad_in.row(t);
    const double* g_row = grad_out.row(t);
    for (std::size_t f = 0; f < f_count; ++f) {
      const double g = g_row[f];
      if (g == 0.0) continue;
      const double* w = params.weights.data() + f * window;
      double* wg = params.weight_grads.data() + f * window;
      for (std::size_t i = 0; i < window; ++i) {
        wg[i] += g * win[i];
        gwin[i] += g * w[i];
      }
      params.bias_grads[f] += g;
    }
  }
  cache.valid = false;
  return grad_in;
}

Tensor2 maxpool_forward(const Tensor2& input, std::size_t k,
                        MaxPoolCache* cache) {
  require(k >= 1, "maxpool_forward: k must be >= 1");
  const std::size_t t_out = input.rows() / k;
  const std::size_t c = input.cols();
  Tensor2 out(t_out, c);
  std::vector<std::size_t> argmax(t_out * c, 0);
  for (std::size_t t = 0; t < t_out; ++t) {
    for (std::size_t col = 0; col < c; ++col) {
      std::size_t best_row = t * k;
      double best = input(best_row, col);
      for (std::size_t d = 1; d < k; ++d) {
        const double v = input(t * k + d, col);
        if (v > best) {  // strict: ties keep the lowest row index
          best = v;
          best_row = t * k + d;
        }
      }
      out(t, col) = best;
      argmax[t * c + col] = best_row;
    }
  }
  if (cache != nullptr) {
    cache->in_rows = input.rows();
    cache->cols = c;
    cache->k = k;
    cache->argmax = std::move(argmax);
    cache->valid = true;
  }
  return out;
}

Tensor2 maxpool_backward(const Tensor2& grad_out, MaxPoolCache& cache) {
  if (!cache.valid) {
    throw ShapeError("maxpool_backward: no matching forward cache");
  }
  const std::size_t t_out = cache.in_rows / cache.k;
  require(grad_out.rows() == t_out && grad_out.cols() == cache.cols,
          "maxpool_backward: grad_out shape mismatch");
  Tensor2 grad_in(cache.in_rows, cache.cols);
  for (std::size_t t = 0; t < t_out; ++t) {
    for (std::size_t col = 0; col < cache.cols; ++col) {
      grad_in(cache.argmax[t * cache.cols + col], col) += grad_out(t, col);
    }
  }
  cache.valid = false;
  return grad_in;
}

std::vector<Tensor2> batchnorm_forward(const std::vector<Tensor2>& batch,
                                       BatchNormParams& params, Mode mode,
                                       BatchNormCache* cache) {
  require(!batch.empty(), "batchnorm_forward: empty batch");
  const std::size_t c = params.channels;
  std::size_t total_rows = 0;
  for (const Tensor2& t : batch) {
    require(t.cols() == c, "batchnorm_forward: channel mismatch (input has " +
                               std::to_string(t.cols()) + ", params expect " +
                               std::to_string(c) + ")");
    total_rows += t.rows();
  }

  std::vector<double> mean(c, 0.0);
  std::vector<double> inv_std(c, 0.0);
  if (mode == Mode::train) {
    require(total_rows >= 2,
            "batchnorm_forward: train mode needs at least 2 total rows");
    std::vector<double> var(c, 0.0);
    for (const Tensor2& t : batch) {
      for (std::size_t r = 0; r < t.rows(); ++r) {
        const double* row = t.row(r);
        for (std::size_t ch = 0; ch < c; ++ch) mean[ch] += row[ch];
      }
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] /= static_cast<double>(total_rows);
    }
    for (const Tensor2& t : batch) {
      for (std::size_t r = 0; r < t.rows(); ++r) {
        const double* row = t.row(r);
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double d = row[ch] - mean[ch];
          var[ch] += d * d;
        }
      }
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      var[ch] /= static_cast<double>(total_rows);
      inv_std[ch] = 1.0 / std::sqrt(var[ch] + params.epsilon);
      params.running_mean[ch] = params.momentum * params.running_mean[ch] +
                                (1.0 - params.momentum) * mean[ch];
      params.running_var[ch] = params.momentum * params.running_var[ch] +
                               (1.0 - params.momentum) * var[ch];
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = params.running_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(params.running_var[ch] + params.epsilon);
    }
  }

  std::vector<Tensor2> out;
  out.reserve(batch.size());
  std::vector<Tensor2> normalized;
  if (cache != nullptr) normalized.reserve(batch.size());
  for (const Tensor2& t : batch) {
    Tensor2 y(t.rows(), c);
    Tensor2 xhat(t.rows(), c);
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const double* row = t.row(r);
      double* y_row = y.row(r);
      double* n_row = xhat.row(r);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double norm = (row[ch] - mean[ch]) * inv_std[ch];
        n_row[ch] = norm;
        y_row[ch] = params.gamma[ch] * norm + params.beta[ch];
      }
    }
    out.push_back(std::move(y));
    if (cache != nullptr) normalized.push_back(std::move(xhat));
  }
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->mean = std::move(mean);
    cache->inv_std = std::move(inv_std);
    cache->total_rows = total_rows;
    cache->train_mode = (mode == Mode::train);
    cache->valid = true;
  }
  return out;
}

std::vector<Tensor2> batchnorm_backward(const std::vector<Tensor2>& grad_out,
                                        BatchNormParams& params,
                                        BatchNormCache& cache) {
  if (!cache.valid) {
    throw ShapeError("batchnorm_backward: no matching forward cache");
  }
  if (!cache.train_mode) {
    throw ShapeError("batchnorm_backward: forward was run in infer mode");
  }
  require(grad_out.size() == cache.normalized.size(),
          "batchnorm_backward: batch size mismatch");

  const std::size_t c = params.channels;
  const double n = static_cast<double>(cache.total_rows);
  std::vector<double> sum_g(c, 0.0);
  std::vector<double> sum_g_xhat(c, 0.0);
  for (std::size_t b = 0; b < grad_out.size(); ++b) {
    const Tensor2& g = grad_out[b];
    const Tensor2& xhat = cache.normalized[b];
    require(g.rows() == xhat.rows() && g.cols() == c,
            "batchnorm_backward: grad_out shape mismatch");
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const double* g_row = g.row(r);
      const double* n_row = xhat.row(r);
      for (std::size_t ch = 0; ch < c; ++ch) {
        sum_g[ch] += g_row[ch];
        sum_g_xhat[ch] += g_row[ch] * n_row[ch];
      }
    }
  }
  for (std::size_t ch = 0; ch < c; ++ch) {
    params.beta_grads[ch] += sum_g[ch];
    params.gamma_grads[ch] += sum_g_xhat[ch];
  }

  std::vector<Tensor2> grad_in;
  grad_in.reserve(grad_out.size());
  for (std::size_t b = 0; b < grad_out.size(); ++b) {
    const Tensor2& g = grad_out[b];
    const Tensor2& xhat = cache.normalized[b];
    Tensor2 gi(g.rows(), c);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const double* g_row = g.row(r);
      const double* n_row = xhat.row(r);
      double* o_row = gi.row(r);
      for (std::size_t ch = 0; ch < c; ++ch) {
        o_row[ch] = params.gamma[ch] * cache.inv_std[ch] *
                    (g_row[ch] - sum_g[ch] / n - n_row[ch] * sum_g_xhat[ch] / n);
      }
    }
    grad_in.push_back(std::move(gi));
  }
  cache.valid = false;
  return grad_in;
}

Tensor2 relu_forward(const Tensor2& input, ReluCache* cache) {
  Tensor2 out(input.rows(), input.cols());
  const std::size_t n = input.size();
  const double* in = input.data().data();
  double* o = out.data().data();
  for (std::size_t i = 0; i < n; ++i) o[i] = in[i] > 0.0 ? in[i] : 0.0;
  if (cache != nullptr) {
    cache->input = input;
    cache->valid = true;
  }
  return out;
}

Tensor2 relu_backward(const Tensor2& grad_out, ReluCache& cache) {
  if (!cache.valid) {
    throw ShapeError("relu_backward: no matching forward cache");
  }
  require(grad_out.rows() == cache.input.rows() &&
              grad_out.cols() == cache.input.cols(),
          "relu_backward: grad_out shape mismatch");
  Tensor2 grad_in(grad_out.rows(), grad_out.cols());
  const std::size_t n = grad_out.size();
  const double* g = grad_out.data().data();
  const double* x = cache.input.data().data();
  double* o = grad_in.data().data();
  for (std::size_t i = 0; i < n; ++i) o[i] = x[i] > 0.0 ? g[i] : 0.0;
  cache.valid = false;
  return grad_in;
}

std::vector<double> dense_forward(std::span<const double> x,
                                  const DenseParams& params,
                                  DenseCache* cache) {
  require(x.size() == params.in_dim,
          "dense_forward: input dim " + std::to_string(x.size()) +
              " != " + std::to_string(params.in_dim));
  std::vector<double> y(params.out_dim);
  for (std::size_t o = 0; o < params.out_dim; ++o) {
    const double* w = params.weights.data() + o * params.in_dim;
    double acc = params.bias[o];
    for (std::size_t i = 0; i < params.in_dim; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
  if (cache != nullptr) {
    cache->input.assign(x.begin(), x.end());
    cache->valid = true;
  }
  return y;
}

std::vector<double> dense_backward(std::span<const double> grad_out,
                                   DenseParams& params, DenseCache& cache) {
  if (!cache.valid) {
    throw ShapeError("dense_backward: no matching forward cache");
  }
  require(grad_out.size() == params.out_dim,
          "dense_backward: grad dim mismatch");
  std::vector<double> grad_in(params.in_dim, 0.0);
  for (std::size_t o = 0; o < params.out_dim; ++o) {
    const double g = grad_out[o];
    params.bias_grads[o] += g;
    const double* w = params.weights.data() + o * params.in_dim;
    double* wg = params.weight_grads.data() + o * params.in_dim;
    const double* x = cache.input.data();
    for (std::size_t i = 0; i < params.in_dim; ++i) {
      wg[i] += g * x[i];
      grad_in[i] += g * w[i];
    }
  }
  cache.valid = false;
  return grad_in;
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void he_init(std::span<double> out, std::size_t fan_in, Rng& rng) {
  if (fan_in < 1) throw ShapeError("he_init: fan_in must be >= 1");
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& v : out) v = stddev * rng.normal();
}

}  // namespace deepmatch
