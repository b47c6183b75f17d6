#include "deepmatch/runconfig.hpp"

#include <charconv>
#include <cstdlib>

#include "deepmatch/errors.hpp"
#include "deepmatch/kvconfig.hpp"

namespace deepmatch {

RunConfig RunConfig::load(const std::string& path) {
  KvConfig kv = KvConfig::parse_file(path);
  RunConfig run;

  const std::string kind = kv.require_string("model.kind");
  if (!kind.empty()) {
    try {
      run.model = parse_model_kind(kind) == ModelKind::word_level
                      ? ModelConfig::word_defaults()
                      : ModelConfig::char_defaults();
    } catch (const ConfigError& e) {
      kv.add_problem(e.what());
    }
  }
  run.model.seed = kv.get_u64("model.seed", run.model.seed);
  run.model.query_length =
      kv.get_u64("model.query_length", run.model.query_length);
  run.model.ad_length = kv.get_u64("model.ad_length", run.model.ad_length);
  run.model.alphabet = kv.get_string("model.alphabet", run.model.alphabet);
  run.model.query_words =
      kv.get_u64("model.query_words", run.model.query_words);
  run.model.ad_words = kv.get_u64("model.ad_words", run.model.ad_words);
  run.model.word_dim = kv.get_u64("model.word_dim", run.model.word_dim);
  run.model.lead_filters =
      kv.get_u64("model.lead_filters", run.model.lead_filters);
  run.model.block_filters =
      kv.get_u64("model.block_filters", run.model.block_filters);
  run.model.cross_filters =
      kv.get_u64("model.cross_filters", run.model.cross_filters);
  run.model.final_filters =
      kv.get_u64("model.final_filters", run.model.final_filters);
  run.model.dense1 = kv.get_u64("model.dense1", run.model.dense1);
  run.model.dense2 = kv.get_u64("model.dense2", run.model.dense2);
  run.model.cross_pool = kv.get_u64("model.cross_pool", run.model.cross_pool);
  run.model.final_pool1 =
      kv.get_u64("model.final_pool1", run.model.final_pool1);
  run.model.final_pool2 =
      kv.get_u64("model.final_pool2", run.model.final_pool2);
  const std::string activation = kv.get_string(
      "model.activation", activation_name(run.model.standalone_activation));
  try {
    run.model.standalone_activation = parse_activation(activation);
  } catch (const ConfigError& e) {
    kv.add_problem(e.what());
  }

  run.train.batch_size = kv.get_u64("train.batch_size", run.train.batch_size);
  run.train.epochs = kv.get_u64("train.epochs", run.train.epochs);
  run.train.max_steps = kv.get_u64("train.max_steps", run.train.max_steps);
  run.train.learning_rate =
      kv.get_double("train.learning_rate", run.train.learning_rate);
  run.train.shuffle_seed =
      kv.get_u64("train.shuffle_seed", run.train.shuffle_seed);
  run.train.eval_every = kv.get_u64("train.eval_every", run.train.eval_every);
  run.train.prob_clamp =
      kv.get_double("train.prob_clamp", run.train.prob_clamp);

  run.train_path = kv.get_string("data.train");
  run.test_path = kv.get_string("data.test");
  run.reference_path = kv.get_string("data.reference");
  run.embedding_path = kv.get_string("data.embeddings");
  run.output_dir = kv.get_string("output.dir", run.output_dir);
  run.threads = kv.get_u64("threads", run.threads);

  if (const char* env = std::getenv("DEEPMATCH_OUTPUT_DIR");
      env != nullptr && *env != '\0') {
    run.output_dir = env;
  }
  if (const char* env = std::getenv("DEEPMATCH_THREADS");
      env != nullptr && *env != '\0') {
    std::size_t threads = 0;
    const std::string s = env;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), threads);
    if (ec != std::errc() || ptr != s.data() + s.size() || threads < 1) {
      kv.add_problem("DEEPMATCH_THREADS='" + s +
                     "' is not a positive integer");
    } else {
      run.threads = threads;
    }
  }
  if (run.threads < 1) kv.add_problem("threads must be >= 1");

  if (run.model.kind == ModelKind::word_level && run.embedding_path.empty()) {
    kv.add_problem("word-level model requires data.embeddings");
  }
  try {
    run.train.validate();
  } catch (const ConfigError& e) {
    kv.add_problem(e.what());
  }
  try {
    plan_shapes(run.model);
  } catch (const ConfigError& e) {
    kv.add_problem(e.what());
  }

  kv.check_complete();
  return run;
}

}  // namespace deepmatch
