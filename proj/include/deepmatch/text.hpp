#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "deepmatch/tensor.hpp"

namespace deepmatch {

/// Ordered set of distinct characters; position in the string is the one-hot
/// column index.
class Alphabet {
 public:
  explicit Alphabet(std::string_view chars);

  /// 26 lowercase letters, 10 digits, and the punctuation set
  /// { space - _ . / : ' & , ! ? } -- 47 symbols total.
  static const Alphabet& default_alphabet();
  static const std::string& default_chars();

  std::size_t size() const { return chars_.size(); }
  const std::string& chars() const { return chars_; }
  /// Column index of `c`, or nullopt for out-of-alphabet characters.
  std::optional<std::size_t> index_of(char c) const {
    const int idx = index_[static_cast<unsigned char>(c)];
    if (idx < 0) return std::nullopt;
    return static_cast<std::size_t>(idx);
  }

 private:
  std::string chars_;
  std::array<int, 256> index_{};
};

/// Lowercases ASCII letters, collapses whitespace runs to a single space,
/// and strips leading/trailing spaces. Idempotent.
std::string canonicalize(std::string_view text);

/// One-hot matrix of shape length x |V|. Row i encodes character i;
/// characters past `length` are ignored, short text leaves zero rows, and
/// out-of-alphabet characters leave an all-zero row in place.
Tensor2 encode_chars(std::string_view text, std::size_t length,
                     const Alphabet& alphabet);

/// Title, description, and display URL joined in that order with single
/// spaces.
std::string concat_ad_fields(std::string_view title,
                             std::string_view description,
                             std::string_view display_url);

/// Whitespace split with punctuation stripped from token edges; empty tokens
/// dropped. Expects canonicalized input.
std::vector<std::string> tokenize(std::string_view text);

/// token -> dense vector table loaded from a whitespace-separated text file
/// (one token plus d_w decimal reals per line).
class EmbeddingTable {
 public:
  static EmbeddingTable load(const std::string& path);
  static EmbeddingTable from_entries(
      const std::vector<std::pair<std::string, std::vector<double>>>& entries);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vocab_.size(); }
  /// Pointer to the dim() doubles for `token`, or nullptr if out of
  /// vocabulary.
  const double* find(const std::string& token) const;

 private:
  std::unordered_map<std::string, std::size_t> vocab_;
  std::vector<double> vectors_;
  std::size_t dim_ = 0;
};

/// Embedding matrix of shape length x dim. Row i is the vector of token i;
/// out-of-vocabulary tokens map to the zero vector, truncation and zero
/// padding as in encode_chars.
Tensor2 encode_words(const std::vector<std::string>& tokens,
                     const EmbeddingTable& table, std::size_t length);

}  // namespace deepmatch
