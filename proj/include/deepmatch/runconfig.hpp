#pragma once

#include <string>

#include "deepmatch/model.hpp"
#include "deepmatch/training.hpp"

namespace deepmatch {

/// One training/evaluation run: model settings, training settings, and data
/// paths, loaded from a flat key=value file. DEEPMATCH_OUTPUT_DIR and
/// DEEPMATCH_THREADS environment variables override output.dir and threads.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::string train_path;
  std::string test_path;
  std::string reference_path;  // frequency index source; empty = use input
  std::string embedding_path;  // required for word-level models
  std::string output_dir = "out";
  std::size_t threads = 1;

  static RunConfig load(const std::string& path);
};

}  // namespace deepmatch
