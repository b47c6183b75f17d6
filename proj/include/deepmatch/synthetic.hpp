#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deepmatch/dataset.hpp"

namespace deepmatch {

/// Deterministic query-ad log generator with known ground-truth CTR. Queries
/// are 1-4 vocabulary tokens drawn from a Zipf-weighted pool (so the
/// frequency distribution has a head and a tail); ads are templated
/// title/description/URL sharing 0..|query| tokens with the query. The
/// Bernoulli click parameter is
///   sigmoid(bias + w_overlap * overlapFraction + w_brand * brandMatch
///           + w_url * urlMatch + noise).
struct SyntheticSpec {
  std::size_t vocab_size = 300;
  std::size_t brand_count = 30;
  std::size_t pair_count = 1000;  // training pairs
  std::size_t test_count = 200;
  double noise_scale = 0.2;
  std::uint64_t seed = 1;

  // CTR link parameters.
  double bias = -2.8;
  double weight_overlap = 4.5;
  double weight_brand = 1.0;
  double weight_url = 0.5;

  /// When > 0, an external_score column carrying scale * true_ctr is
  /// emitted (a deliberately miscalibrated external scorer).
  double external_score_scale = 0.0;
  /// Dimension of the synthetic word vectors written next to the data;
  /// 0 disables the embeddings file.
  std::size_t embedding_dim = 16;
  /// Distinct queries in the pool; 0 picks pair_count/50, at least 20.
  std::size_t query_pool = 0;

  void validate() const;
};

SyntheticSpec parse_synthetic_spec(const std::string& path);

struct SyntheticOutput {
  std::string train_path;
  std::string test_path;
  std::string embedding_path;  // empty when disabled
};

/// Writes train.tsv, test.tsv, and (unless disabled) embeddings.tsv under
/// `out_dir`. Byte-identical output under a fixed spec. Rejects specs whose
/// generated true CTR is degenerate (all pairs equal).
SyntheticOutput gen_synthetic(const SyntheticSpec& spec,
                              const std::string& out_dir);

/// The generator's in-memory form, for tests and the acceptance suite.
struct SyntheticData {
  std::vector<QueryAdRecord> train;
  std::vector<QueryAdRecord> test;
  std::vector<std::string> vocabulary;
  DatasetColumns columns;
};

SyntheticData gen_synthetic_records(const SyntheticSpec& spec);

/// Deterministic unit-scale Gaussian word vectors for a vocabulary.
void write_synthetic_embeddings(const std::string& path,
                                const std::vector<std::string>& vocabulary,
                                std::size_t dim, std::uint64_t seed);

}  // namespace deepmatch
