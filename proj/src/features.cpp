#include "deepmatch/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "deepmatch/errors.hpp"
#include "deepmatch/text.hpp"

namespace deepmatch {

namespace {

constexpr double kBm25K1 = 1.2;
constexpr double kBm25B = 0.75;

std::set<std::string> unigram_set(const std::vector<std::string>& tokens) {
  return {tokens.begin(), tokens.end()};
}

std::set<std::string> bigram_set(const std::vector<std::string>& tokens) {
  std::set<std::string> grams;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    grams.insert(tokens[i] + ' ' + tokens[i + 1]);
  }
  return grams;
}

std::set<std::string> char_trigram_set(const std::string& text) {
  std::set<std::string> grams;
  for (std::size_t i = 0; i + 2 < text.size(); ++i) {
    grams.insert(text.substr(i, 3));
  }
  return grams;
}

std::size_t intersection_size(const std::set<std::string>& a,
                              const std::set<std::string>& b) {
  const std::set<std::string>& small = a.size() <= b.size() ? a : b;
  const std::set<std::string>& big = a.size() <= b.size() ? b : a;
  std::size_t n = 0;
  for (const std::string& s : small) n += big.count(s);
  return n;
}

/// |A n B| / |A u B|; 0 when both sets are empty.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  const std::size_t inter = intersection_size(a, b);
  const std::size_t uni = a.size() + b.size() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::unordered_map<std::string, std::size_t> term_counts(
    const std::vector<std::string>& tokens) {
  std::unordered_map<std::string, std::size_t> tf;
  for (const std::string& t : tokens) ++tf[t];
  return tf;
}

double tf_cosine(const std::vector<std::string>& a,
                 const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  const auto tf_a = term_counts(a);
  const auto tf_b = term_counts(b);
  double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (const auto& [term, count] : tf_a) {
    norm_a += static_cast<double>(count) * static_cast<double>(count);
    const auto it = tf_b.find(term);
    if (it != tf_b.end()) {
      dot += static_cast<double>(count) * static_cast<double>(it->second);
    }
  }
  for (const auto& [term, count] : tf_b) {
    norm_b += static_cast<double>(count) * static_cast<double>(count);
  }
  if (dot == 0.0) return 0.0;
  return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

struct AdTexts {
  std::array<std::string, kAdTargetCount> text;
  std::array<std::vector<std::string>, kAdTargetCount> tokens;
};

AdTexts ad_texts(const QueryAdRecord& record) {
  AdTexts t;
  t.text[0] = canonicalize(record.ad_title);
  t.text[1] = canonicalize(record.ad_description);
  t.text[2] = canonicalize(record.ad_display_url);
  t.text[3] = canonicalize(concat_ad_fields(t.text[0], t.text[1], t.text[2]));
  for (std::size_t i = 0; i < kAdTargetCount; ++i) {
    t.tokens[i] = tokenize(t.text[i]);
  }
  return t;
}

}  // namespace

const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = [] {
    std::array<std::string, kFeatureCount> n;
    const char* targets[] = {"title", "description", "url", "all"};
    const char* grams[] = {"unigram", "bigram", "chartrigram"};
    std::size_t i = 0;
    for (const char* t : targets) {
      for (const char* g : grams) {
        n[i++] = std::string("common_") + t + '_' + g;
      }
    }
    for (const char* t : targets) {
      for (const char* g : grams) {
        n[i++] = std::string("jaccard_") + t + '_' + g;
      }
    }
    n[i++] = "len_query_chars";
    n[i++] = "len_query_words";
    for (const char* t : targets) {
      n[i++] = std::string("len_") + t + "_chars";
      n[i++] = std::string("len_") + t + "_words";
    }
    for (const char* t : targets) n[i++] = std::string("cosine_") + t;
    for (const char* t : targets) n[i++] = std::string("bm25_") + t;
    return n;
  }();
  return names;
}

std::vector<std::size_t> length_feature_indices() {
  std::vector<std::size_t> idx(10);
  for (std::size_t i = 0; i < 10; ++i) idx[i] = 24 + i;
  return idx;
}

CorpusStats build_corpus_stats(std::span<const QueryAdRecord> records) {
  CorpusStats stats;
  stats.document_count = records.size();
  std::array<double, kAdTargetCount> total_length{};
  for (const QueryAdRecord& record : records) {
    const AdTexts ad = ad_texts(record);
    for (std::size_t t = 0; t < kAdTargetCount; ++t) {
      total_length[t] += static_cast<double>(ad.tokens[t].size());
    }
    for (const std::string& token : unigram_set(ad.tokens[3])) {
      ++stats.doc_frequency[token];
    }
  }
  for (std::size_t t = 0; t < kAdTargetCount; ++t) {
    stats.avg_field_length[t] =
        records.empty() ? 0.0
                        : total_length[t] / static_cast<double>(records.size());
  }
  return stats;
}

double bm25(const std::vector<std::string>& query_tokens,
            const std::vector<std::string>& field_tokens, AdTarget field,
            const CorpusStats& stats) {
  if (query_tokens.empty() || field_tokens.empty()) return 0.0;
  const auto tf = term_counts(field_tokens);
  const double n_docs = static_cast<double>(stats.document_count);
  const double field_len = static_cast<double>(field_tokens.size());
  const double avg_len =
      stats.avg_field_length[static_cast<std::size_t>(field)];
  const double len_norm =
      avg_len > 0.0 ? 1.0 - kBm25B + kBm25B * field_len / avg_len : 1.0;

  double score = 0.0;
  for (const std::string& term : unigram_set(query_tokens)) {
    const auto it = tf.find(term);
    if (it == tf.end()) continue;
    const double term_freq = static_cast<double>(it->second);
    const auto df_it = stats.doc_frequency.find(term);
    const double df =
        df_it == stats.doc_frequency.end() ? 0.0
                                           : static_cast<double>(df_it->second);
    const double idf = std::log((n_docs - df + 0.5) / (df + 0.5) + 1.0);
    score += idf * term_freq * (kBm25K1 + 1.0) /
             (term_freq + kBm25K1 * len_norm);
  }
  return score;
}

std::array<double, kFeatureCount> extract_features(const QueryAdRecord& record,
                                                   const CorpusStats& stats) {
  const std::string query = canonicalize(record.query);
  const std::vector<std::string> query_tokens = tokenize(query);
  const auto query_uni = unigram_set(query_tokens);
  const auto query_bi = bigram_set(query_tokens);
  const auto query_tri = char_trigram_set(query);
  const AdTexts ad = ad_texts(record);

  std::array<double, kFeatureCount> f{};
  std::size_t i = 0;
  // Common counts then Jaccard, both over unigram/bigram/char-trigram sets.
  std::array<std::array<std::set<std::string>, 3>, kAdTargetCount> grams;
  for (std::size_t t = 0; t < kAdTargetCount; ++t) {
    grams[t][0] = unigram_set(ad.tokens[t]);
    grams[t][1] = bigram_set(ad.tokens[t]);
    grams[t][2] = char_trigram_set(ad.text[t]);
  }
  const std::array<const std::set<std::string>*, 3> query_grams = {
      &query_uni, &query_bi, &query_tri};
  for (std::size_t t = 0; t < kAdTargetCount; ++t) {
    for (std::size_t g = 0; g < 3; ++g) {
      f[i++] = static_cast<double>(
          intersection_size(*query_grams[g], grams[t][g]));
    }
  }
  for (std::size_t t = 0; t < kAdTargetCount; ++t) {
    for (std::size_t g = 0; g < 3; ++g) {
      f[i++] = jaccard(*query_grams[g], grams[t][g]);
    }
  }
  // Lengths.
  f[i++] = static_cast<double>(query.size());
  f[i++] = static_cast<double>(query_tokens.size());
  for (std::size_t t = 0; t < kAdTargetCount; ++t) {
    f[i++] = static_cast<double>(ad.text[t].size());
    f[i++] = static_cast<double>(ad.tokens[t].size());
  }
  // Cosine and BM25.
  for (std::size_t t = 0; t < kAdTargetCount; ++t) {
    f[i++] = tf_cosine(query_tokens, ad.tokens[t]);
  }
  for (std::size_t t = 0; t < kAdTargetCount; ++t) {
    f[i++] = bm25(query_tokens, ad.tokens[t], static_cast<AdTarget>(t), stats);
  }
  return f;
}

void write_feature_dump(const std::string& path,
                        std::span<const QueryAdRecord> records,
                        const CorpusStats& stats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("feature dump: cannot write " + path);
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << names[i] << '\t';
  }
  out << "click\n";
  char buf[40];
  for (const QueryAdRecord& record : records) {
    const auto features = extract_features(record, stats);
    for (double v : features) {
      std::snprintf(buf, sizeof(buf), "%.9g\t", v);
      out << buf;
    }
    out << record.click << '\n';
  }
}

}  // namespace deepmatch
