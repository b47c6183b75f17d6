#include "deepmatch/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "deepmatch/errors.hpp"
#include "deepmatch/metrics.hpp"
#include "deepmatch/rng.hpp"

namespace deepmatch {

namespace {

double clamp_prob(double p, double clamp) {
  return std::min(std::max(p, clamp), 1.0 - clamp);
}

void check_labels(std::span<const double> probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) {
    throw ShapeError("cross_entropy_loss: " + std::to_string(probs.size()) +
                     " probabilities vs " + std::to_string(labels.size()) +
                     " labels");
  }
  if (probs.empty()) {
    throw ShapeError("cross_entropy_loss: empty batch");
  }
  for (int label : labels) {
    if (label != 0 && label != 1) {
      throw ShapeError("cross_entropy_loss: label " + std::to_string(label) +
                       " outside {0,1}");
    }
  }
}

}  // namespace

double cross_entropy_loss(std::span<const double> probs,
                          std::span<const int> labels, double clamp) {
  check_labels(probs, labels);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = clamp_prob(probs[i], clamp);
    total += labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return -total / static_cast<double>(probs.size());
}

std::vector<double> cross_entropy_loss_grad(std::span<const double> probs,
                                            std::span<const int> labels,
                                            double clamp) {
  check_labels(probs, labels);
  const double n = static_cast<double>(probs.size());
  std::vector<double> grad(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = clamp_prob(probs[i], clamp);
    grad[i] = (p - static_cast<double>(labels[i])) / (p * (1.0 - p)) / n;
  }
  return grad;
}

void adam_step(std::span<ParamBlock> blocks, AdamState& state) {
  if (state.slots.empty()) {
    state.slots.resize(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      state.slots[i].m.assign(blocks[i].values->size(), 0.0);
      state.slots[i].v.assign(blocks[i].values->size(), 0.0);
    }
  }
  if (state.slots.size() != blocks.size()) {
    throw ShapeError("adam_step: block count changed between steps");
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].grads->size() != state.slots[i].m.size()) {
      throw ShapeError("adam_step: block '" + blocks[i].name +
                       "' changed size");
    }
    for (double g : *blocks[i].grads) {
      if (!std::isfinite(g)) {
        throw Error("adam_step: non-finite gradient in block '" +
                    blocks[i].name + "'; step aborted");
      }
    }
  }

  ++state.step;
  const AdamConfig& c = state.config;
  const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    std::vector<double>& theta = *blocks[i].values;
    const std::vector<double>& grad = *blocks[i].grads;
    AdamState::Moments& mom = state.slots[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double g = grad[j];
      mom.m[j] = c.beta1 * mom.m[j] + (1.0 - c.beta1) * g;
      mom.v[j] = c.beta2 * mom.v[j] + (1.0 - c.beta2) * g * g;
      const double m_hat = mom.m[j] / bias1;
      const double v_hat = mom.v[j] / bias2;
      theta[j] -= c.alpha * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(prob_clamp > 0.0 && prob_clamp < 0.5)) {
    throw ConfigError("train: prob_clamp must lie in (0, 0.5)");
  }
  if (epochs < 1 && max_steps == 0) {
    throw ConfigError("train: need epochs >= 1 or max_steps > 0");
  }
}

void write_history_tsv(const std::string& path,
                       const std::vector<TrainHistoryEntry>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("history: cannot write " + path);
  out << "step\tloss\theldout_auc\n";
  char buf[64];
  for (const TrainHistoryEntry& e : history) {
    std::snprintf(buf, sizeof(buf), "%zu\t%.9g\t", e.step, e.loss);
    out << buf;
    if (e.heldout_auc) {
      std::snprintf(buf, sizeof(buf), "%.9g", *e.heldout_auc);
      out << buf;
    }
    out << '\n';
  }
}

PairEncoder::PairEncoder(const ModelConfig& config,
                         const EmbeddingTable* embeddings)
    : config_(&config),
      embeddings_(embeddings),
      alphabet_(config.alphabet_chars()) {
  if (config.kind == ModelKind::word_level) {
    if (embeddings == nullptr) {
      throw ConfigError("word-level model needs an embedding table");
    }
    if (embeddings->dim() != config.word_dim) {
      throw ConfigError("embedding dimension " +
                        std::to_string(embeddings->dim()) +
                        " does not match config word_dim " +
                        std::to_string(config.word_dim));
    }
  }
}

std::pair<Tensor2, Tensor2> PairEncoder::encode(
    const QueryAdRecord& record) const {
  const std::string query = canonicalize(record.query);
  const std::string ad = canonicalize(concat_ad_fields(
      canonicalize(record.ad_title), canonicalize(record.ad_description),
      canonicalize(record.ad_display_url)));
  if (config_->kind == ModelKind::char_level) {
    return {encode_chars(query, config_->query_length, alphabet_),
            encode_chars(ad, config_->ad_length, alphabet_)};
  }
  return {encode_words(tokenize(query), *embeddings_, config_->query_words),
          encode_words(tokenize(ad), *embeddings_, config_->ad_words)};
}

std::vector<TrainHistoryEntry> train_deep_model(
    DeepModel& model, const std::vector<QueryAdRecord>& train,
    const std::vector<QueryAdRecord>* heldout, const TrainConfig& config,
    const EmbeddingTable* embeddings) {
  config.validate();
  if (train.empty()) throw ConfigError("train: empty dataset");

  const PairEncoder encoder(model.config, embeddings);
  std::vector<ParamBlock> blocks = model.param_blocks();
  AdamState adam;
  adam.config.alpha = config.learning_rate;
  Rng shuffle_rng(config.shuffle_seed);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<TrainHistoryEntry> history;
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
      std::vector<Tensor2> q_batch, a_batch;
      std::vector<int> labels;
      q_batch.reserve(end - start);
      a_batch.reserve(end - start);
      labels.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const QueryAdRecord& record = train[order[i]];
        try {
          auto [q, a] = encoder.encode(record);
          q_batch.push_back(std::move(q));
          a_batch.push_back(std::move(a));
        } catch (const Error& e) {
          throw Error("train: record " + std::to_string(order[i]) + ": " +
                      e.what());
        }
        labels.push_back(record.click);
      }

      model.zero_grads();
      DeepModelCache cache;
      const std::vector<double> probs =
          deep_model_forward(model, q_batch, a_batch, Mode::train, &cache);
      const double loss =
          cross_entropy_loss(probs, labels, config.prob_clamp);
      // d loss / d logit for sigmoid composed with the clamped
      // cross-entropy: (p - c) / n.
      std::vector<double> grad_z(probs.size());
      for (std::size_t i = 0; i < probs.size(); ++i) {
        grad_z[i] = (probs[i] - static_cast<double>(labels[i])) /
                    static_cast<double>(probs.size());
      }
      deep_model_backward_logit(model, grad_z, cache);
      adam_step(blocks, adam);
      ++step;

      TrainHistoryEntry entry;
      entry.step = step;
      entry.loss = loss;
      if (heldout != nullptr && config.eval_every > 0 &&
          step % config.eval_every == 0) {
        const std::vector<double> scores =
            predict_batch(model, *heldout, embeddings);
        std::vector<int> clicks(heldout->size());
        for (std::size_t i = 0; i < heldout->size(); ++i) {
          clicks[i] = (*heldout)[i].click;
        }
        entry.heldout_auc = auc_scores(scores, clicks);
      }
      history.push_back(entry);

      if (config.max_steps > 0 && step >= config.max_steps) {
        done = true;
        break;
      }
    }
  }

  if (heldout != nullptr && !history.empty() && !history.back().heldout_auc) {
    const std::vector<double> scores =
        predict_batch(model, *heldout, embeddings);
    std::vector<int> clicks(heldout->size());
    for (std::size_t i = 0; i < heldout->size(); ++i) {
      clicks[i] = (*heldout)[i].click;
    }
    history.back().heldout_auc = auc_scores(scores, clicks);
  }
  return history;
}

std::vector<double> predict_batch(DeepModel& model,
                                  std::span<const QueryAdRecord> records,
                                  const EmbeddingTable* embeddings,
                                  std::size_t threads) {
  const PairEncoder encoder(model.config, embeddings);
  std::vector<double> scores(records.size(), 0.0);
  std::vector<std::string> failures;

  auto score_range = [&](std::size_t begin, std::size_t end,
                         std::vector<std::string>& sink) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        auto [q, a] = encoder.encode(records[i]);
        const std::vector<double> p = deep_model_forward(
            model, {std::move(q)}, {std::move(a)}, Mode::infer);
        scores[i] = p[0];
      } catch (const Error& e) {
        sink.push_back("record " + std::to_string(i) + ": " + e.what());
        scores[i] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  };

  if (threads <= 1 || records.size() < 2 * threads) {
    score_range(0, records.size(), failures);
  } else {
    const std::size_t n_threads = std::min(threads, records.size());
    std::vector<std::vector<std::string>> sinks(n_threads);
    std::vector<std::thread> workers;
    const std::size_t chunk = (records.size() + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(begin + chunk, records.size());
      if (begin >= end) break;
      workers.emplace_back(score_range, begin, end, std::ref(sinks[t]));
    }
    for (std::thread& w : workers) w.join();
    for (auto& sink : sinks) {
      failures.insert(failures.end(), sink.begin(), sink.end());
    }
  }

  if (!failures.empty()) {
    std::string msg = "predict_batch: " + std::to_string(failures.size()) +
                      " record(s) failed:";
    for (const std::string& f : failures) msg += "\n  " + f;
    throw Error(msg);
  }
  return scores;
}

}  // namespace deepmatch
