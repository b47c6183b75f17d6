#pragma once

#include <string>
#include <vector>

#include "deepmatch/runconfig.hpp"

namespace deepmatch {

/// CLI command bodies. Each writes its outputs under the run's output
/// directory and throws (ConfigError, ParseError, ...) on any failure; the
/// CLI wrapper turns exceptions into nonzero exit codes.

/// Writes train.tsv / test.tsv / embeddings.tsv from a synthetic spec file.
void cmd_gen_data(const std::string& spec_path, const std::string& out_dir);

/// Trains the configured model on data.train and writes model.ckpt and
/// history.tsv. When data.test is set it is used as the held-out set for the
/// history's AUC column.
void cmd_train(const RunConfig& run);

/// Scores data.test with a checkpoint and writes report.tsv / report.json.
/// The frequency index comes from data.reference when set, else from the
/// evaluated file itself. An external_score column in the input additionally
/// produces the combined (deep + external averaged) metrics.
void cmd_eval(const RunConfig& run, const std::string& checkpoint_path);

/// Writes predictions.tsv with one score per input row of data.test.
void cmd_predict(const RunConfig& run, const std::string& checkpoint_path);

struct CompareCell {
  std::string kind;
  std::size_t size = 0;
  double auc = 0.0;
};

/// Learning-curve protocol: shuffles the shared training set once (seed of
/// the first config), then trains every configured model kind on each size
/// prefix and evaluates AUC on the shared test set. Writes
/// learning_curve.tsv under the first config's output directory.
std::vector<CompareCell> cmd_compare(const std::vector<RunConfig>& runs,
                                     const std::vector<std::size_t>& sizes);

}  // namespace deepmatch
