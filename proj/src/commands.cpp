#include "deepmatch/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "deepmatch/checkpoint.hpp"
#include "deepmatch/errors.hpp"
#include "deepmatch/metrics.hpp"
#include "deepmatch/rng.hpp"
#include "deepmatch/synthetic.hpp"

namespace deepmatch {

namespace {

std::filesystem::path out_path(const RunConfig& run, const std::string& name) {
  std::filesystem::create_directories(run.output_dir);
  return std::filesystem::path(run.output_dir) / name;
}

void require_file(const std::string& path, const std::string& what,
                  std::vector<std::string>& problems) {
  if (path.empty()) {
    problems.push_back("missing " + what + " path");
  } else if (!std::filesystem::exists(path)) {
    problems.push_back(what + " path does not exist: " + path);
  }
}

void fail_if_any(const std::vector<std::string>& problems) {
  if (problems.empty()) return;
  std::string msg = "cannot run command:";
  for (const std::string& p : problems) msg += "\n  - " + p;
  throw ConfigError(msg);
}

EmbeddingTable load_embeddings_if_needed(const RunConfig& run,
                                         const ModelConfig& model,
                                         bool* loaded) {
  *loaded = false;
  if (model.kind != ModelKind::word_level) return EmbeddingTable{};
  EmbeddingTable table = EmbeddingTable::load(run.embedding_path);
  *loaded = true;
  return table;
}

std::vector<ScoredImpression> score_impressions(
    DeepModel& model, const std::vector<QueryAdRecord>& records,
    const EmbeddingTable* embeddings, std::size_t threads) {
  const std::vector<double> scores =
      predict_batch(model, records, embeddings, threads);
  std::vector<ScoredImpression> impressions;
  impressions.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    impressions.push_back(make_impression(records[i], scores[i]));
  }
  return impressions;
}

}  // namespace

void cmd_gen_data(const std::string& spec_path, const std::string& out_dir) {
  const SyntheticSpec spec = parse_synthetic_spec(spec_path);
  const SyntheticOutput output = gen_synthetic(spec, out_dir);
  std::cout << "wrote " << output.train_path << " (" << spec.pair_count
            << " pairs)\n";
  std::cout << "wrote " << output.test_path << " (" << spec.test_count
            << " pairs)\n";
  if (!output.embedding_path.empty()) {
    std::cout << "wrote " << output.embedding_path << '\n';
  }
}

void cmd_train(const RunConfig& run) {
  std::vector<std::string> problems;
  require_file(run.train_path, "data.train", problems);
  if (run.model.kind == ModelKind::word_level) {
    require_file(run.embedding_path, "data.embeddings", problems);
  }
  if (!run.test_path.empty()) {
    require_file(run.test_path, "data.test", problems);
  }
  fail_if_any(problems);

  const Dataset train = read_dataset(run.train_path);
  Dataset heldout;
  if (!run.test_path.empty()) heldout = read_dataset(run.test_path);

  bool has_embeddings = false;
  const EmbeddingTable embeddings =
      load_embeddings_if_needed(run, run.model, &has_embeddings);

  DeepModel model = DeepModel::create(run.model);
  const std::vector<TrainHistoryEntry> history = train_deep_model(
      model, train.records,
      heldout.records.empty() ? nullptr : &heldout.records, run.train,
      has_embeddings ? &embeddings : nullptr);

  const std::string ckpt = out_path(run, "model.ckpt").string();
  save_checkpoint(model, ckpt);
  const std::string hist = out_path(run, "history.tsv").string();
  write_history_tsv(hist, history);
  std::cout << "wrote " << ckpt << '\n' << "wrote " << hist << '\n';
  if (!history.empty()) {
    std::cout << "final loss " << history.back().loss;
    if (history.back().heldout_auc) {
      std::cout << ", held-out auc " << *history.back().heldout_auc;
    }
    std::cout << '\n';
  }
}

void cmd_eval(const RunConfig& run, const std::string& checkpoint_path) {
  std::vector<std::string> problems;
  require_file(run.test_path, "data.test", problems);
  require_file(checkpoint_path, "checkpoint", problems);
  if (!run.reference_path.empty()) {
    require_file(run.reference_path, "data.reference", problems);
  }
  fail_if_any(problems);

  DeepModel model = load_checkpoint(checkpoint_path);
  if (model.config.kind == ModelKind::word_level &&
      run.embedding_path.empty()) {
    throw ConfigError("word-level checkpoint requires data.embeddings");
  }
  bool has_embeddings = false;
  const EmbeddingTable embeddings =
      load_embeddings_if_needed(run, model.config, &has_embeddings);

  const Dataset test = read_dataset(run.test_path);
  const std::vector<ScoredImpression> impressions = score_impressions(
      model, test.records, has_embeddings ? &embeddings : nullptr,
      run.threads);

  const FrequencyIndex index =
      run.reference_path.empty()
          ? FrequencyIndex::build(test.records)
          : FrequencyIndex::build(read_dataset(run.reference_path).records);

  std::vector<double> external;
  const std::vector<double>* external_ptr = nullptr;
  if (test.columns.external_score) {
    external.reserve(test.records.size());
    for (const QueryAdRecord& r : test.records) {
      external.push_back(*r.external_score);
    }
    external_ptr = &external;
  }

  const EvalReport report = make_report(impressions, index, external_ptr);
  const std::string tsv = out_path(run, "report.tsv").string();
  const std::string json = out_path(run, "report.json").string();
  write_report_files(report, tsv, json);
  std::cout << "wrote " << tsv << '\n' << "wrote " << json << '\n';
  if (report.auc_all) std::cout << "auc " << *report.auc_all << '\n';
}

void cmd_predict(const RunConfig& run, const std::string& checkpoint_path) {
  std::vector<std::string> problems;
  require_file(run.test_path, "data.test", problems);
  require_file(checkpoint_path, "checkpoint", problems);
  fail_if_any(problems);

  DeepModel model = load_checkpoint(checkpoint_path);
  if (model.config.kind == ModelKind::word_level &&
      run.embedding_path.empty()) {
    throw ConfigError("word-level checkpoint requires data.embeddings");
  }
  bool has_embeddings = false;
  const EmbeddingTable embeddings =
      load_embeddings_if_needed(run, model.config, &has_embeddings);

  const Dataset input = read_dataset(run.test_path);
  const std::vector<double> scores =
      predict_batch(model, input.records,
                    has_embeddings ? &embeddings : nullptr, run.threads);

  const std::string path = out_path(run, "predictions.tsv").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("predict: cannot write " + path);
  out << "score\n";
  char buf[40];
  for (double s : scores) {
    std::snprintf(buf, sizeof(buf), "%.9g\n", s);
    out << buf;
  }
  std::cout << "wrote " << path << " (" << scores.size() << " rows)\n";
}

std::vector<CompareCell> cmd_compare(const std::vector<RunConfig>& runs,
                                     const std::vector<std::size_t>& sizes) {
  if (runs.empty()) throw ConfigError("compare: no run configs");
  if (sizes.size() < 2) throw ConfigError("compare: need >= 2 sizes");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) {
      throw ConfigError("compare: sizes must be strictly increasing");
    }
  }
  std::vector<std::string> problems;
  require_file(runs[0].train_path, "data.train", problems);
  require_file(runs[0].test_path, "data.test", problems);
  for (const RunConfig& run : runs) {
    if (run.model.kind == ModelKind::word_level) {
      require_file(run.embedding_path, "data.embeddings", problems);
    }
  }
  fail_if_any(problems);

  // All kinds share the same training points: one seeded shuffle, then size
  // prefixes (the 10^3 set is a prefix of the 10^4 set).
  const Dataset train = read_dataset(runs[0].train_path);
  const Dataset test = read_dataset(runs[0].test_path);
  if (sizes.back() > train.records.size()) {
    throw ConfigError("compare: size " + std::to_string(sizes.back()) +
                      " exceeds training set (" +
                      std::to_string(train.records.size()) + ")");
  }
  std::vector<std::size_t> order(train.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(runs[0].train.shuffle_seed);
  rng.shuffle(order);

  std::vector<int> test_clicks(test.records.size());
  for (std::size_t i = 0; i < test.records.size(); ++i) {
    test_clicks[i] = test.records[i].click;
  }

  std::vector<CompareCell> cells;
  for (const RunConfig& run : runs) {
    bool has_embeddings = false;
    const EmbeddingTable embeddings =
        load_embeddings_if_needed(run, run.model, &has_embeddings);
    const EmbeddingTable* table = has_embeddings ? &embeddings : nullptr;
    for (std::size_t size : sizes) {
      std::vector<QueryAdRecord> prefix;
      prefix.reserve(size);
      for (std::size_t i = 0; i < size; ++i) {
        prefix.push_back(train.records[order[i]]);
      }
      DeepModel model = DeepModel::create(run.model);
      train_deep_model(model, prefix, nullptr, run.train, table);
      const std::vector<double> scores =
          predict_batch(model, test.records, table, run.threads);
      const auto auc_value = auc_scores(scores, test_clicks);
      if (!auc_value) {
        throw Error("compare: AUC undefined on the test set");
      }
      CompareCell cell;
      cell.kind = model_kind_name(run.model.kind);
      cell.size = size;
      cell.auc = *auc_value;
      cells.push_back(cell);
      std::cout << "compare " << cell.kind << " size " << cell.size << " auc "
                << cell.auc << '\n';
    }
  }

  const std::string path = out_path(runs[0], "learning_curve.tsv").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("compare: cannot write " + path);
  out << "model_kind\tsize\tauc\n";
  char buf[64];
  for (const CompareCell& cell : cells) {
    std::snprintf(buf, sizeof(buf), "%s\t%zu\t%.9g\n", cell.kind.c_str(),
                  cell.size, cell.auc);
    out << buf;
  }
  std::cout << "wrote " << path << '\n';
  return cells;
}

}  // namespace deepmatch
