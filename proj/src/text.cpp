#include "deepmatch/text.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "deepmatch/errors.hpp"

namespace deepmatch {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9');
}

}  // namespace

Alphabet::Alphabet(std::string_view chars) : chars_(chars) {
  if (chars_.empty()) throw ConfigError("Alphabet: empty character set");
  index_.fill(-1);
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    const auto u = static_cast<unsigned char>(chars_[i]);
    if (index_[u] >= 0) {
      throw ConfigError(std::string("Alphabet: duplicate character '") +
                        chars_[i] + "'");
    }
    index_[u] = static_cast<int>(i);
  }
}

const std::string& Alphabet::default_chars() {
  static const std::string chars =
      "abcdefghijklmnopqrstuvwxyz0123456789 -_./:'&,!?";
  return chars;
}

const Alphabet& Alphabet::default_alphabet() {
  static const Alphabet alphabet{default_chars()};
  return alphabet;
}

std::string canonicalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    out.push_back(c);
  }
  return out;
}

Tensor2 encode_chars(std::string_view text, std::size_t length,
                     const Alphabet& alphabet) {
  if (length < 1) throw ConfigError("encode_chars: length must be >= 1");
  Tensor2 out(length, alphabet.size());
  const std::size_t n = std::min(length, text.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto idx = alphabet.index_of(text[i])) out(i, *idx) = 1.0;
  }
  return out;
}

std::string concat_ad_fields(std::string_view title,
                             std::string_view description,
                             std::string_view display_url) {
  std::string out;
  out.reserve(title.size() + description.size() + display_url.size() + 2);
  out.append(title);
  out.push_back(' ');
  out.append(description);
  out.push_back(' ');
  out.append(display_url);
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) {
      std::size_t begin = i;
      std::size_t end = j;
      while (begin < end && !is_alnum(text[begin])) ++begin;
      while (end > begin && !is_alnum(text[end - 1])) --end;
      if (end > begin) {
        tokens.emplace_back(text.substr(begin, end - begin));
      }
    }
    i = j;
  }
  return tokens;
}

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("embeddings: cannot open " + path);

  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    if (token.empty()) {
      throw ParseError("embeddings: line " + std::to_string(line_no) +
                       ": missing token");
    }
    std::vector<double> vec;
    std::string field;
    while (fields >> field) {
      double value = 0.0;
      const auto* begin = field.data();
      const auto* end = field.data() + field.size();
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc() || ptr != end) {
        throw ParseError("embeddings: line " + std::to_string(line_no) +
                         ": unparsable real '" + field + "'");
      }
      vec.push_back(value);
    }
    if (vec.empty()) {
      throw ParseError("embeddings: line " + std::to_string(line_no) +
                       ": no vector components");
    }
    if (table.dim_ == 0) {
      table.dim_ = vec.size();
    } else if (vec.size() != table.dim_) {
      throw ParseError("embeddings: line " + std::to_string(line_no) +
                       ": dimension " + std::to_string(vec.size()) +
                       " != " + std::to_string(table.dim_));
    }
    if (table.vocab_.contains(token)) continue;  // keep first occurrence
    table.vocab_.emplace(token, table.vectors_.size() / table.dim_);
    table.vectors_.insert(table.vectors_.end(), vec.begin(), vec.end());
  }
  if (table.vocab_.empty()) {
    throw ParseError("embeddings: empty vocabulary in " + path);
  }
  return table;
}

EmbeddingTable EmbeddingTable::from_entries(
    const std::vector<std::pair<std::string, std::vector<double>>>& entries) {
  EmbeddingTable table;
  for (const auto& [token, vec] : entries) {
    if (vec.empty()) throw ConfigError("embeddings: empty vector");
    if (table.dim_ == 0) {
      table.dim_ = vec.size();
    } else if (vec.size() != table.dim_) {
      throw ConfigError("embeddings: inconsistent dimensions");
    }
    if (table.vocab_.contains(token)) continue;
    table.vocab_.emplace(token, table.vectors_.size() / table.dim_);
    table.vectors_.insert(table.vectors_.end(), vec.begin(), vec.end());
  }
  if (table.vocab_.empty()) throw ConfigError("embeddings: empty vocabulary");
  return table;
}

const double* EmbeddingTable::find(const std::string& token) const {
  const auto it = vocab_.find(token);
  if (it == vocab_.end()) return nullptr;
  return vectors_.data() + it->second * dim_;
}

Tensor2 encode_words(const std::vector<std::string>& tokens,
                     const EmbeddingTable& table, std::size_t length) {
  if (length < 1) throw ConfigError("encode_words: length must be >= 1");
  Tensor2 out(length, table.dim());
  const std::size_t n = std::min(length, tokens.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (const double* vec = table.find(tokens[i])) {
      double* row = out.row(i);
      for (std::size_t d = 0; d < table.dim(); ++d) row[d] = vec[d];
    }
  }
  return out;
}

}  // namespace deepmatch
