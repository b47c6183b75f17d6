#include "deepmatch/model.hpp"

#include <cstring>
#include <utility>

#include <json.hpp>

#include "deepmatch/errors.hpp"

namespace deepmatch {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

std::vector<double> relu_vec(const std::vector<double>& x) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

std::vector<double> relu_vec_backward(const std::vector<double>& grad,
                                      const std::vector<double>& pre) {
  std::vector<double> g(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    g[i] = pre[i] > 0.0 ? grad[i] : 0.0;
  }
  return g;
}

std::size_t conv_param_count(std::size_t filters, std::size_t in_channels) {
  return filters * kConvFilterWidth * in_channels + filters;
}

std::size_t block_param_count(std::size_t filters, std::size_t in_channels) {
  return conv_param_count(filters, in_channels) + 2 * filters +
         conv_param_count(filters, filters) + 2 * filters;
}

std::size_t dense_param_count(std::size_t in_dim, std::size_t out_dim) {
  return out_dim * in_dim + out_dim;
}

ConvBlockParams make_block(std::size_t filters, std::size_t in_channels,
                           Rng& rng) {
  ConvBlockParams block;
  block.conv1 = ConvParams::create(filters, in_channels, rng);
  block.bn1 = BatchNormParams::create(filters);
  block.conv2 = ConvParams::create(filters, filters, rng);
  block.bn2 = BatchNormParams::create(filters);
  return block;
}

void append_conv_blocks(std::vector<ParamBlock>& out, const std::string& name,
                        ConvParams& conv) {
  out.push_back({name + ".w", &conv.weights, &conv.weight_grads});
  out.push_back({name + ".b", &conv.bias, &conv.bias_grads});
}

void append_bn_blocks(std::vector<ParamBlock>& out, const std::string& name,
                      BatchNormParams& bn) {
  out.push_back({name + ".gamma", &bn.gamma, &bn.gamma_grads});
  out.push_back({name + ".beta", &bn.beta, &bn.beta_grads});
}

void append_dense_blocks(std::vector<ParamBlock>& out, const std::string& name,
                         DenseParams& dense) {
  out.push_back({name + ".w", &dense.weights, &dense.weight_grads});
  out.push_back({name + ".b", &dense.bias, &dense.bias_grads});
}

void append_block_blocks(std::vector<ParamBlock>& out, const std::string& name,
                         ConvBlockParams& block) {
  append_conv_blocks(out, name + ".conv1", block.conv1);
  append_bn_blocks(out, name + ".bn1", block.bn1);
  append_conv_blocks(out, name + ".conv2", block.conv2);
  append_bn_blocks(out, name + ".bn2", block.bn2);
}

void append_subnet_blocks(std::vector<ParamBlock>& out,
                          const std::string& name, SubNetParams& net) {
  append_conv_blocks(out, name + ".lead", net.lead);
  append_block_blocks(out, name + ".block1", net.block1);
  append_block_blocks(out, name + ".block2", net.block2);
}

void append_bn_state(std::vector<ParamBlock>& out, const std::string& name,
                     BatchNormParams& bn) {
  out.push_back({name + ".running_mean", &bn.running_mean, nullptr});
  out.push_back({name + ".running_var", &bn.running_var, nullptr});
}

void append_block_state(std::vector<ParamBlock>& out, const std::string& name,
                        ConvBlockParams& block) {
  append_bn_state(out, name + ".bn1", block.bn1);
  append_bn_state(out, name + ".bn2", block.bn2);
}

Tensor2 apply_activation(const Tensor2& x, Activation act, ReluCache* cache) {
  if (act == Activation::relu) return relu_forward(x, cache);
  return x;
}

Tensor2 activation_backward(const Tensor2& grad, Activation act,
                            ReluCache& cache) {
  if (act == Activation::relu) return relu_backward(grad, cache);
  return grad;
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
  return kind == ModelKind::char_level ? "char" : "word";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "char") return ModelKind::char_level;
  if (name == "word") return ModelKind::word_level;
  throw ConfigError("unknown model kind '" + name + "' (expected char|word)");
}

std::string activation_name(Activation activation) {
  return activation == Activation::relu ? "relu" : "linear";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "linear") return Activation::linear;
  throw ConfigError("unknown activation '" + name +
                    "' (expected relu|linear)");
}

ModelConfig ModelConfig::char_defaults() { return ModelConfig{}; }

ModelConfig ModelConfig::word_defaults() {
  ModelConfig config;
  config.kind = ModelKind::word_level;
  config.cross_pool = 2;
  config.final_pool1 = 2;
  config.final_pool2 = 2;
  return config;
}

const std::string& ModelConfig::alphabet_chars() const {
  return alphabet.empty() ? Alphabet::default_chars() : alphabet;
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["kind"] = model_kind_name(kind);
  j["seed"] = seed;
  j["query_length"] = query_length;
  j["ad_length"] = ad_length;
  j["alphabet"] = alphabet_chars();
  j["query_words"] = query_words;
  j["ad_words"] = ad_words;
  j["word_dim"] = word_dim;
  j["lead_filters"] = lead_filters;
  j["block_filters"] = block_filters;
  j["cross_filters"] = cross_filters;
  j["final_filters"] = final_filters;
  j["dense1"] = dense1;
  j["dense2"] = dense2;
  j["cross_pool"] = cross_pool;
  j["final_pool1"] = final_pool1;
  j["final_pool2"] = final_pool2;
  j["activation"] = activation_name(standalone_activation);
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: invalid JSON: ") + e.what());
  }
  ModelConfig config;
  try {
    config.kind = parse_model_kind(j.at("kind").get<std::string>());
    config.seed = j.at("seed").get<std::uint64_t>();
    config.query_length = j.at("query_length").get<std::size_t>();
    config.ad_length = j.at("ad_length").get<std::size_t>();
    config.alphabet = j.at("alphabet").get<std::string>();
    config.query_words = j.at("query_words").get<std::size_t>();
    config.ad_words = j.at("ad_words").get<std::size_t>();
    config.word_dim = j.at("word_dim").get<std::size_t>();
    config.lead_filters = j.at("lead_filters").get<std::size_t>();
    config.block_filters = j.at("block_filters").get<std::size_t>();
    config.cross_filters = j.at("cross_filters").get<std::size_t>();
    config.final_filters = j.at("final_filters").get<std::size_t>();
    config.dense1 = j.at("dense1").get<std::size_t>();
    config.dense2 = j.at("dense2").get<std::size_t>();
    config.cross_pool = j.at("cross_pool").get<std::size_t>();
    config.final_pool1 = j.at("final_pool1").get<std::size_t>();
    config.final_pool2 = j.at("final_pool2").get<std::size_t>();
    config.standalone_activation =
        parse_activation(j.at("activation").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return config;
}

ShapePlan plan_shapes(const ModelConfig& config) {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };

  check(config.cross_filters >= 1, "cross_filters must be >= 1");
  check(config.final_filters >= 1, "final_filters must be >= 1");
  check(config.dense1 >= 1, "dense1 must be >= 1");
  check(config.dense2 >= 1, "dense2 must be >= 1");
  check(config.cross_pool >= 1, "cross_pool must be >= 1");
  check(config.final_pool1 >= 1, "final_pool1 must be >= 1");
  check(config.final_pool2 >= 1, "final_pool2 must be >= 1");

  ShapePlan plan;
  if (config.kind == ModelKind::char_level) {
    check(config.lead_filters >= 1, "lead_filters must be >= 1");
    check(config.block_filters >= 1, "block_filters must be >= 1");
    try {
      Alphabet validate{config.alphabet_chars()};
      (void)validate;
    } catch (const ConfigError& e) {
      problems.emplace_back(e.what());
    }
    // A query/ad bloc stacks five width-3 convolutions: ten rows consumed.
    check(config.query_length >= 11,
          "query_length must be >= 11 (subnet consumes 10 rows)");
    check(config.ad_length >= 11,
          "ad_length must be >= 11 (subnet consumes 10 rows)");
    if (!problems.empty()) {
      goto report;
    }
    plan.q_rows = config.query_length - 10;
    plan.q_cols = config.block_filters;
    plan.a_rows = config.ad_length - 10;
    plan.a_cols = config.block_filters;
  } else {
    check(config.query_words >= 1, "query_words must be >= 1");
    check(config.ad_words >= 1, "ad_words must be >= 1");
    check(config.word_dim >= 1, "word_dim must be >= 1");
    if (!problems.empty()) {
      goto report;
    }
    plan.q_rows = config.query_words;
    plan.q_cols = config.word_dim;
    plan.a_rows = config.ad_words;
    plan.a_cols = config.word_dim;
  }

  plan.cross_rows = plan.q_rows * plan.a_rows;
  plan.cross_cols = plan.q_cols + plan.a_cols;
  check(plan.cross_rows >= 3,
        "cross product has " + std::to_string(plan.cross_rows) +
            " rows; the cross convolution needs >= 3");
  if (problems.empty()) {
    plan.cross_conv_rows = plan.cross_rows - 2;
    plan.cross_pooled_rows = plan.cross_conv_rows / config.cross_pool;
    check(plan.cross_pooled_rows >= 5,
          "cross stage leaves " + std::to_string(plan.cross_pooled_rows) +
              " rows; final bloc block 1 needs >= 5");
  }
  if (problems.empty()) {
    plan.fb1_rows = plan.cross_pooled_rows - 4;
    plan.fb1_pooled = plan.fb1_rows / config.final_pool1;
    check(plan.fb1_pooled >= 5,
          "final bloc pool 1 leaves " + std::to_string(plan.fb1_pooled) +
              " rows; block 2 needs >= 5");
  }
  if (problems.empty()) {
    plan.fb2_rows = plan.fb1_pooled - 4;
    plan.fb2_pooled = plan.fb2_rows / config.final_pool2;
    check(plan.fb2_pooled >= 1,
          "final bloc pool 2 leaves no rows");
    plan.flatten_dim = plan.fb2_pooled * config.final_filters;
  }

report:
  if (!problems.empty()) {
    std::string msg = "invalid model config:";
    for (const std::string& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  return plan;
}

std::size_t count_parameters(const ModelConfig& config) {
  const ShapePlan plan = plan_shapes(config);
  std::size_t total = 0;
  if (config.kind == ModelKind::char_level) {
    const std::size_t v = config.alphabet_size();
    const std::size_t subnet = conv_param_count(config.lead_filters, v) +
                               block_param_count(config.block_filters,
                                                 config.lead_filters) +
                               block_param_count(config.block_filters,
                                                 config.block_filters);
    total += 2 * subnet;
  }
  total += conv_param_count(config.cross_filters, plan.cross_cols);
  total += block_param_count(config.final_filters, config.cross_filters);
  total += block_param_count(config.final_filters, config.final_filters);
  total += dense_param_count(plan.flatten_dim, config.dense1);
  total += dense_param_count(config.dense1, config.dense2);
  total += dense_param_count(config.dense2, 1);
  return total;
}

DeepModel DeepModel::create(const ModelConfig& config) {
  const ShapePlan plan = plan_shapes(config);
  Rng rng(config.seed);

  DeepModel model;
  model.config = config;
  if (config.kind == ModelKind::char_level) {
    const std::size_t v = config.alphabet_size();
    model.query_net.lead = ConvParams::create(config.lead_filters, v, rng);
    model.query_net.block1 =
        make_block(config.block_filters, config.lead_filters, rng);
    model.query_net.block2 =
        make_block(config.block_filters, config.block_filters, rng);
    model.ad_net.lead = ConvParams::create(config.lead_filters, v, rng);
    model.ad_net.block1 =
        make_block(config.block_filters, config.lead_filters, rng);
    model.ad_net.block2 =
        make_block(config.block_filters, config.block_filters, rng);
  }
  model.cross.conv =
      ConvParams::create(config.cross_filters, plan.cross_cols, rng);
  model.cross.pool_k = config.cross_pool;
  model.final_bloc.block1 =
      make_block(config.final_filters, config.cross_filters, rng);
  model.final_bloc.pool1 = config.final_pool1;
  model.final_bloc.block2 =
      make_block(config.final_filters, config.final_filters, rng);
  model.final_bloc.pool2 = config.final_pool2;
  model.final_bloc.fc1 =
      DenseParams::create(plan.flatten_dim, config.dense1, rng);
  model.final_bloc.fc2 = DenseParams::create(config.dense1, config.dense2, rng);
  model.final_bloc.fc3 = DenseParams::create(config.dense2, 1, rng);
  return model;
}

std::vector<ParamBlock> DeepModel::param_blocks() {
  std::vector<ParamBlock> blocks;
  if (config.kind == ModelKind::char_level) {
    append_subnet_blocks(blocks, "query", query_net);
    append_subnet_blocks(blocks, "ad", ad_net);
  }
  append_conv_blocks(blocks, "cross.conv", cross.conv);
  append_block_blocks(blocks, "final.block1", final_bloc.block1);
  append_block_blocks(blocks, "final.block2", final_bloc.block2);
  append_dense_blocks(blocks, "final.fc1", final_bloc.fc1);
  append_dense_blocks(blocks, "final.fc2", final_bloc.fc2);
  append_dense_blocks(blocks, "final.fc3", final_bloc.fc3);
  return blocks;
}

std::vector<ParamBlock> DeepModel::state_blocks() {
  std::vector<ParamBlock> blocks;
  if (config.kind == ModelKind::char_level) {
    append_block_state(blocks, "query.block1", query_net.block1);
    append_block_state(blocks, "query.block2", query_net.block2);
    append_block_state(blocks, "ad.block1", ad_net.block1);
    append_block_state(blocks, "ad.block2", ad_net.block2);
  }
  append_block_state(blocks, "final.block1", final_bloc.block1);
  append_block_state(blocks, "final.block2", final_bloc.block2);
  return blocks;
}

void DeepModel::zero_grads() {
  auto blocks = param_blocks();
  deepmatch::zero_grads(blocks);
}

std::vector<Tensor2> conv_block_forward(const std::vector<Tensor2>& input,
                                        ConvBlockParams& params, Mode mode,
                                        ConvBlockCache* cache) {
  for (const Tensor2& t : input) {
    require(t.rows() >= 5, "conv block input needs >= 5 rows, got " +
                               std::to_string(t.rows()));
  }
  const std::size_t n = input.size();
  if (cache != nullptr) {
    cache->conv1.assign(n, {});
    cache->relu1.assign(n, {});
    cache->conv2.assign(n, {});
    cache->relu2.assign(n, {});
  }
  std::vector<Tensor2> x;
  x.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    x.push_back(temporal_conv_forward(input[i], params.conv1,
                                      cache ? &cache->conv1[i] : nullptr));
  }
  x = batchnorm_forward(x, params.bn1, mode, cache ? &cache->bn1 : nullptr);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = relu_forward(x[i], cache ? &cache->relu1[i] : nullptr);
  }
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = temporal_conv_forward(x[i], params.conv2,
                                 cache ? &cache->conv2[i] : nullptr);
  }
  x = batchnorm_forward(x, params.bn2, mode, cache ? &cache->bn2 : nullptr);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = relu_forward(x[i], cache ? &cache->relu2[i] : nullptr);
  }
  return x;
}

std::vector<Tensor2> conv_block_backward(const std::vector<Tensor2>& grad_out,
                                         ConvBlockParams& params,
                                         ConvBlockCache& cache) {
  const std::size_t n = grad_out.size();
  require(cache.relu2.size() == n, "conv_block_backward: batch size mismatch");
  std::vector<Tensor2> grad = grad_out;
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = relu_backward(grad[i], cache.relu2[i]);
  }
  grad = batchnorm_backward(grad, params.bn2, cache.bn2);
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = temporal_conv_backward(grad[i], params.conv2, cache.conv2[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = relu_backward(grad[i], cache.relu1[i]);
  }
  grad = batchnorm_backward(grad, params.bn1, cache.bn1);
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = temporal_conv_backward(grad[i], params.conv1, cache.conv1[i]);
  }
  return grad;
}

std::vector<Tensor2> subnet_forward(const std::vector<Tensor2>& input,
                                    SubNetParams& params, Mode mode,
                                    Activation lead_activation,
                                    SubNetCache* cache) {
  for (const Tensor2& t : input) {
    require(t.rows() >= 11, "subnet input needs >= 11 rows, got " +
                                std::to_string(t.rows()));
  }
  const std::size_t n = input.size();
  if (cache != nullptr) {
    cache->lead.assign(n, {});
    cache->lead_act.assign(n, {});
    cache->activation = lead_activation;
  }
  std::vector<Tensor2> x;
  x.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor2 y = temporal_conv_forward(input[i], params.lead,
                                      cache ? &cache->lead[i] : nullptr);
    x.push_back(apply_activation(y, lead_activation,
                                 cache ? &cache->lead_act[i] : nullptr));
  }
  x = conv_block_forward(x, params.block1, mode,
                         cache ? &cache->block1 : nullptr);
  x = conv_block_forward(x, params.block2, mode,
                         cache ? &cache->block2 : nullptr);
  return x;
}

std::vector<Tensor2> subnet_backward(const std::vector<Tensor2>& grad_out,
                                     SubNetParams& params, SubNetCache& cache) {
  std::vector<Tensor2> grad =
      conv_block_backward(grad_out, params.block2, cache.block2);
  grad = conv_block_backward(grad, params.block1, cache.block1);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = activation_backward(grad[i], cache.activation, cache.lead_act[i]);
    grad[i] = temporal_conv_backward(grad[i], params.lead, cache.lead[i]);
  }
  return grad;
}

Tensor2 cross_product(const Tensor2& h_q, const Tensor2& h_a) {
  require(!h_q.empty() && !h_a.empty(), "cross_product: empty input");
  const std::size_t k = h_q.rows();
  const std::size_t l = h_q.cols();
  const std::size_t m = h_a.rows();
  const std::size_t r = h_a.cols();
  Tensor2 out(k * m, l + r);
  for (std::size_t q = 0; q < k; ++q) {
    const double* q_row = h_q.row(q);
    for (std::size_t a = 0; a < m; ++a) {
      double* o = out.row(q * m + a);
      std::memcpy(o, q_row, l * sizeof(double));
      std::memcpy(o + l, h_a.row(a), r * sizeof(double));
    }
  }
  return out;
}

void cross_product_backward(const Tensor2& grad, std::size_t k, std::size_t l,
                            std::size_t m, std::size_t r, Tensor2& grad_q,
                            Tensor2& grad_a) {
  require(grad.rows() == k * m && grad.cols() == l + r,
          "cross_product_backward: grad shape mismatch");
  grad_q = Tensor2(k, l);
  grad_a = Tensor2(m, r);
  for (std::size_t q = 0; q < k; ++q) {
    double* gq = grad_q.row(q);
    for (std::size_t a = 0; a < m; ++a) {
      const double* g = grad.row(q * m + a);
      for (std::size_t i = 0; i < l; ++i) gq[i] += g[i];
      double* ga = grad_a.row(a);
      for (std::size_t i = 0; i < r; ++i) ga[i] += g[l + i];
    }
  }
}

std::vector<Tensor2> cross_conv_forward(const std::vector<Tensor2>& h_q,
                                        const std::vector<Tensor2>& h_a,
                                        CrossConvParams& params, Mode mode,
                                        Activation activation,
                                        CrossConvCache* cache) {
  (void)mode;  // no batch statistics in this stage
  require(h_q.size() == h_a.size(), "cross_conv_forward: batch size mismatch");
  const std::size_t n = h_q.size();
  if (cache != nullptr) {
    cache->k.assign(n, 0);
    cache->l.assign(n, 0);
    cache->m.assign(n, 0);
    cache->r.assign(n, 0);
    cache->conv.assign(n, {});
    cache->act.assign(n, {});
    cache->activation = activation;
    cache->pool.assign(n, {});
  }
  std::vector<Tensor2> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(h_q[i].cols() + h_a[i].cols() == params.conv.in_channels,
            "cross_conv_forward: l+r = " +
                std::to_string(h_q[i].cols() + h_a[i].cols()) +
                " does not match conv channels " +
                std::to_string(params.conv.in_channels));
    Tensor2 crossed = cross_product(h_q[i], h_a[i]);
    if (cache != nullptr) {
      cache->k[i] = h_q[i].rows();
      cache->l[i] = h_q[i].cols();
      cache->m[i] = h_a[i].rows();
      cache->r[i] = h_a[i].cols();
    }
    Tensor2 y = temporal_conv_forward(crossed, params.conv,
                                      cache ? &cache->conv[i] : nullptr);
    y = apply_activation(y, activation, cache ? &cache->act[i] : nullptr);
    out.push_back(
        maxpool_forward(y, params.pool_k, cache ? &cache->pool[i] : nullptr));
  }
  return out;
}

std::pair<std::vector<Tensor2>, std::vector<Tensor2>> cross_conv_backward(
    const std::vector<Tensor2>& grad_out, CrossConvParams& params,
    CrossConvCache& cache) {
  const std::size_t n = grad_out.size();
  require(cache.conv.size() == n, "cross_conv_backward: batch size mismatch");
  std::vector<Tensor2> grad_q(n);
  std::vector<Tensor2> grad_a(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor2 g = maxpool_backward(grad_out[i], cache.pool[i]);
    g = activation_backward(g, cache.activation, cache.act[i]);
    g = temporal_conv_backward(g, params.conv, cache.conv[i]);
    cross_product_backward(g, cache.k[i], cache.l[i], cache.m[i], cache.r[i],
                           grad_q[i], grad_a[i]);
  }
  return {std::move(grad_q), std::move(grad_a)};
}

std::vector<double> final_bloc_forward(const std::vector<Tensor2>& input,
                                       FinalBlocParams& params, Mode mode,
                                       FinalBlocCache* cache) {
  const std::size_t n = input.size();
  if (cache != nullptr) {
    cache->pool1.assign(n, {});
    cache->pool2.assign(n, {});
    cache->flat_rows.assign(n, 0);
    cache->flat_cols.assign(n, 0);
    cache->fc1.assign(n, {});
    cache->fc2.assign(n, {});
    cache->fc3.assign(n, {});
    cache->fc1_pre.assign(n, {});
    cache->fc2_pre.assign(n, {});
    cache->p.assign(n, 0.0);
  }

  std::vector<Tensor2> x = conv_block_forward(input, params.block1, mode,
                                              cache ? &cache->block1 : nullptr);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = maxpool_forward(x[i], params.pool1,
                           cache ? &cache->pool1[i] : nullptr);
  }
  x = conv_block_forward(x, params.block2, mode,
                         cache ? &cache->block2 : nullptr);
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor2 pooled = maxpool_forward(x[i], params.pool2,
                                     cache ? &cache->pool2[i] : nullptr);
    require(pooled.size() == params.fc1.in_dim,
            "final bloc flatten dim " + std::to_string(pooled.size()) +
                " does not match fc1 input " +
                std::to_string(params.fc1.in_dim));
    // Row-major flatten: the pooled tensor's storage is already the vector.
    std::vector<double> v1 = dense_forward(pooled.data(), params.fc1,
                                           cache ? &cache->fc1[i] : nullptr);
    std::vector<double> a1 = relu_vec(v1);
    std::vector<double> v2 =
        dense_forward(a1, params.fc2, cache ? &cache->fc2[i] : nullptr);
    std::vector<double> a2 = relu_vec(v2);
    std::vector<double> z =
        dense_forward(a2, params.fc3, cache ? &cache->fc3[i] : nullptr);
    p[i] = sigmoid(z[0]);
    if (cache != nullptr) {
      cache->flat_rows[i] = pooled.rows();
      cache->flat_cols[i] = pooled.cols();
      cache->fc1_pre[i] = std::move(v1);
      cache->fc2_pre[i] = std::move(v2);
      cache->p[i] = p[i];
    }
  }
  return p;
}

std::vector<Tensor2> final_bloc_backward_logit(
    const std::vector<double>& grad_z, FinalBlocParams& params,
    FinalBlocCache& cache) {
  const std::size_t n = grad_z.size();
  require(cache.fc3.size() == n, "final_bloc_backward: batch size mismatch");
  std::vector<Tensor2> grad(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> g3{grad_z[i]};
    std::vector<double> g2 = dense_backward(g3, params.fc3, cache.fc3[i]);
    g2 = relu_vec_backward(g2, cache.fc2_pre[i]);
    std::vector<double> g1 = dense_backward(g2, params.fc2, cache.fc2[i]);
    g1 = relu_vec_backward(g1, cache.fc1_pre[i]);
    std::vector<double> gflat = dense_backward(g1, params.fc1, cache.fc1[i]);
    Tensor2 gt = Tensor2::from_data(cache.flat_rows[i], cache.flat_cols[i],
                                    std::move(gflat));
    grad[i] = maxpool_backward(gt, cache.pool2[i]);
  }
  grad = conv_block_backward(grad, params.block2, cache.block2);
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = maxpool_backward(grad[i], cache.pool1[i]);
  }
  return conv_block_backward(grad, params.block1, cache.block1);
}

std::vector<Tensor2> final_bloc_backward(const std::vector<double>& grad_p,
                                         FinalBlocParams& params,
                                         FinalBlocCache& cache) {
  require(cache.p.size() == grad_p.size(),
          "final_bloc_backward: batch size mismatch");
  std::vector<double> grad_z(grad_p.size());
  for (std::size_t i = 0; i < grad_p.size(); ++i) {
    grad_z[i] = grad_p[i] * cache.p[i] * (1.0 - cache.p[i]);
  }
  return final_bloc_backward_logit(grad_z, params, cache);
}

std::vector<double> deep_model_forward(DeepModel& model,
                                       const std::vector<Tensor2>& query_enc,
                                       const std::vector<Tensor2>& ad_enc,
                                       Mode mode, DeepModelCache* cache) {
  require(query_enc.size() == ad_enc.size() && !query_enc.empty(),
          "deep_model_forward: query/ad batch sizes must match and be >= 1");
  const ModelConfig& config = model.config;
  const bool char_kind = config.kind == ModelKind::char_level;
  const std::size_t expect_q_rows =
      char_kind ? config.query_length : config.query_words;
  const std::size_t expect_a_rows =
      char_kind ? config.ad_length : config.ad_words;
  const std::size_t expect_cols =
      char_kind ? config.alphabet_size() : config.word_dim;
  for (std::size_t i = 0; i < query_enc.size(); ++i) {
    require(query_enc[i].rows() == expect_q_rows &&
                query_enc[i].cols() == expect_cols,
            "deep_model_forward: query encoding shape mismatch");
    require(ad_enc[i].rows() == expect_a_rows &&
                ad_enc[i].cols() == expect_cols,
            "deep_model_forward: ad encoding shape mismatch");
  }

  const Activation act = config.standalone_activation;
  std::vector<double> p;
  if (char_kind) {
    std::vector<Tensor2> h_q = subnet_forward(
        query_enc, model.query_net, mode, act, cache ? &cache->query : nullptr);
    std::vector<Tensor2> h_a = subnet_forward(
        ad_enc, model.ad_net, mode, act, cache ? &cache->ad : nullptr);
    std::vector<Tensor2> crossed = cross_conv_forward(
        h_q, h_a, model.cross, mode, act, cache ? &cache->cross : nullptr);
    p = final_bloc_forward(crossed, model.final_bloc, mode,
                           cache ? &cache->final_bloc : nullptr);
  } else {
    std::vector<Tensor2> crossed =
        cross_conv_forward(query_enc, ad_enc, model.cross, mode, act,
                           cache ? &cache->cross : nullptr);
    p = final_bloc_forward(crossed, model.final_bloc, mode,
                           cache ? &cache->final_bloc : nullptr);
  }
  return p;
}

void deep_model_backward_logit(DeepModel& model,
                               const std::vector<double>& grad_z,
                               DeepModelCache& cache) {
  std::vector<Tensor2> grad_cross =
      final_bloc_backward_logit(grad_z, model.final_bloc, cache.final_bloc);
  auto [grad_q, grad_a] =
      cross_conv_backward(grad_cross, model.cross, cache.cross);
  if (model.config.kind == ModelKind::char_level) {
    subnet_backward(grad_q, model.query_net, cache.query);
    subnet_backward(grad_a, model.ad_net, cache.ad);
  }
}

std::vector<double> deepcharmatch_forward(DeepModel& model,
                                          const std::vector<Tensor2>& query_enc,
                                          const std::vector<Tensor2>& ad_enc,
                                          Mode mode, DeepModelCache* cache) {
  if (model.config.kind != ModelKind::char_level) {
    throw ConfigError("deepcharmatch_forward: model is word-level");
  }
  return deep_model_forward(model, query_enc, ad_enc, mode, cache);
}

std::vector<double> deepwordmatch_forward(DeepModel& model,
                                          const std::vector<Tensor2>& query_enc,
                                          const std::vector<Tensor2>& ad_enc,
                                          Mode mode, DeepModelCache* cache) {
  if (model.config.kind != ModelKind::word_level) {
    throw ConfigError("deepwordmatch_forward: model is char-level");
  }
  return deep_model_forward(model, query_enc, ad_enc, mode, cache);
}

}  // namespace deepmatch
