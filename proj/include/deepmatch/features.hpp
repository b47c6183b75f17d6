#pragma once

#include <array>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "deepmatch/dataset.hpp"

namespace deepmatch {

/// The four ad-side targets every pairwise feature is computed against.
enum class AdTarget { title = 0, description = 1, url = 2, all = 3 };
inline constexpr std::size_t kAdTargetCount = 4;

/// 42 content features in fixed order:
///   0..11   common counts, target-major x {word unigram, word bigram,
///           char trigram}
///   12..23  Jaccard, same layout
///   24..33  lengths: query chars, query words, then per target chars, words
///   34..37  TF cosine over word unigrams, per target
///   38..41  BM25 of the query against each target
inline constexpr std::size_t kFeatureCount = 42;

const std::array<std::string, kFeatureCount>& feature_names();

/// Indices of the 10 length features (for restricted baselines).
std::vector<std::size_t> length_feature_indices();

/// Document statistics required by BM25. A document is one ad (the token set
/// of its concatenated fields); average lengths are kept per target.
struct CorpusStats {
  std::size_t document_count = 0;
  std::unordered_map<std::string, std::size_t> doc_frequency;
  std::array<double, kAdTargetCount> avg_field_length{};
};

CorpusStats build_corpus_stats(std::span<const QueryAdRecord> records);

/// Okapi BM25 with k1 = 1.2, b = 0.75 and the non-negative idf variant
/// ln((N - df + 0.5)/(df + 0.5) + 1). Unseen terms use df = 0.
double bm25(const std::vector<std::string>& query_tokens,
            const std::vector<std::string>& field_tokens, AdTarget field,
            const CorpusStats& stats);

std::array<double, kFeatureCount> extract_features(const QueryAdRecord& record,
                                                   const CorpusStats& stats);

/// Audit dump: 42 named feature columns plus the click label.
void write_feature_dump(const std::string& path,
                        std::span<const QueryAdRecord> records,
                        const CorpusStats& stats);

}  // namespace deepmatch
