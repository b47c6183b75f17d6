#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "deepmatch/errors.hpp"
#include "deepmatch/features.hpp"
#include "deepmatch/felr.hpp"
#include "deepmatch/metrics.hpp"
#include "deepmatch/rng.hpp"
#include "deepmatch/synthetic.hpp"

using namespace deepmatch;

namespace {

QueryAdRecord make_record(const std::string& query, const std::string& title,
                          const std::string& description,
                          const std::string& url, int click = 0) {
  QueryAdRecord r;
  r.query = query;
  r.ad_title = title;
  r.ad_description = description;
  r.ad_display_url = url;
  r.click = click;
  return r;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("feature vector layout: 42 named features, 10 of them lengths") {
  const auto& names = feature_names();
  CHECK(names.size() == 42);
  CHECK(names[0] == "common_title_unigram");
  CHECK(names[12] == "jaccard_title_unigram");
  CHECK(names[24] == "len_query_chars");
  CHECK(names[34] == "cosine_title");
  CHECK(names[38] == "bm25_title");
  const auto lengths = length_feature_indices();
  CHECK(lengths.size() == 10);
  for (std::size_t idx : lengths) {
    CHECK(names[idx].substr(0, 4) == "len_");
  }
}

TEST_CASE("unigram Jaccard worked example: {red, shoes} vs {red, shoes, sale}") {
  const auto record =
      make_record("red shoes", "red shoes sale", "other words here",
                  "example.com");
  const CorpusStats stats = build_corpus_stats(std::vector<QueryAdRecord>{record});
  const auto f = extract_features(record, stats);
  CHECK(f[12] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));  // jaccard title
  CHECK(f[0] == 2.0);                                         // common title
}

TEST_CASE("identical query and target: Jaccard and cosine are 1") {
  const auto record =
      make_record("red shoes", "red shoes", "red shoes", "red shoes");
  const CorpusStats stats = build_corpus_stats(std::vector<QueryAdRecord>{record});
  const auto f = extract_features(record, stats);
  // Per-field targets (title/description/url) are literally the query; the
  // `all` target is their concatenation, so only its unigram set matches.
  for (std::size_t target = 0; target < 3; ++target) {
    for (std::size_t g = 0; g < 3; ++g) {
      CHECK(f[12 + target * 3 + g] == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(f[34 + target] == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(f[12 + 3 * 3] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("disjoint texts: overlap features 0, lengths still positive") {
  const auto record = make_record("red shoes", "blue hat", "green sock",
                                  "purple.org");
  const CorpusStats stats = build_corpus_stats(std::vector<QueryAdRecord>{record});
  const auto f = extract_features(record, stats);
  for (std::size_t i = 0; i < 24; ++i) CHECK(f[i] == 0.0);
  for (std::size_t i = 34; i < 42; ++i) CHECK(f[i] == 0.0);
  for (std::size_t idx : length_feature_indices()) CHECK(f[idx] > 0.0);
}

TEST_CASE("features are deterministic and all finite") {
  const auto record = make_record("a b'c", "a a a", "", "x-y.com/z", 1);
  const CorpusStats stats = build_corpus_stats(std::vector<QueryAdRecord>{record});
  const auto f1 = extract_features(record, stats);
  const auto f2 = extract_features(record, stats);
  CHECK(f1 == f2);
  for (double v : f1) CHECK(std::isfinite(v));
}

TEST_CASE("bm25: absent query term contributes nothing") {
  const auto doc = make_record("zebra", "lion tiger", "cats", "cats.com");
  const CorpusStats stats = build_corpus_stats(std::vector<QueryAdRecord>{doc});
  CHECK(bm25({"zebra"}, {"lion", "tiger"}, AdTarget::title, stats) == 0.0);
}

TEST_CASE("bm25: single-document hand computation") {
  // One document whose every field is the single token "a". Then for the
  // query "a": tf=1, |field|=1, avgLen=1, N=1, df=1.
  //   idf = ln((1 - 1 + 0.5)/(1 + 0.5) + 1) = ln(4/3)
  //   tf term = 1*(k1+1) / (1 + k1*(1 - b + b*1/1)) = 2.2/2.2 = 1
  const auto doc = make_record("a", "a", "a", "a");
  const CorpusStats stats = build_corpus_stats(std::vector<QueryAdRecord>{doc});
  const double expected = 0.2876820724517809;  // ln(4/3)
  CHECK(bm25({"a"}, {"a"}, AdTarget::title, stats) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bm25: term frequency monotonicity at fixed length normalization") {
  const auto doc = make_record("a", "a b c d", "x", "y.com");
  const CorpusStats stats = build_corpus_stats(std::vector<QueryAdRecord>{doc});
  // Raising tf while keeping the field length fixed never lowers the score.
  const double one = bm25({"a"}, {"a", "b", "c", "d"}, AdTarget::title, stats);
  const double two = bm25({"a"}, {"a", "a", "c", "d"}, AdTarget::title, stats);
  const double three = bm25({"a"}, {"a", "a", "a", "d"}, AdTarget::title, stats);
  CHECK(two >= one);
  CHECK(three >= two);
}

TEST_CASE("jaccard features are symmetric in their token sets") {
  // Swapping query and title must swap nothing for the Jaccard value.
  const auto ab = make_record("red shoes", "shoes sale red", "d", "u.com");
  const auto ba = make_record("shoes sale red", "red shoes", "d", "u.com");
  const CorpusStats stats = build_corpus_stats(std::vector<QueryAdRecord>{ab});
  const auto f_ab = extract_features(ab, stats);
  const auto f_ba = extract_features(ba, stats);
  CHECK(f_ab[12] == doctest::Approx(f_ba[12]).epsilon(1e-12));
}

TEST_CASE("felr: full model has 43 parameters, restricted fewer") {
  const SyntheticData data = [&] {
    SyntheticSpec spec;
    spec.vocab_size = 40;
    spec.brand_count = 5;
    spec.pair_count = 100;
    spec.test_count = 10;
    spec.seed = 21;
    return gen_synthetic_records(spec);
  }();
  const CorpusStats stats = build_corpus_stats(data.train);
  TrainConfig config;
  config.epochs = 1;

  const FELRModel full = felr_train(data.train, stats, config);
  CHECK(full.parameter_count() == 43);

  FELROptions options;
  options.feature_indices = length_feature_indices();
  const FELRModel lengths = felr_train(data.train, stats, config, options);
  CHECK(lengths.parameter_count() == 11);
}

TEST_CASE("felr: separable single-feature toy set is learnt") {
  // Strong clean signal: clicks exactly when query token appears in title.
  std::vector<QueryAdRecord> records;
  for (int i = 0; i < 200; ++i) {
    const bool match = i % 2 == 0;
    records.push_back(make_record("tok",
                                  match ? "tok here" : "other words",
                                  "filler text", "site.com", match ? 1 : 0));
  }
  const CorpusStats stats = build_corpus_stats(records);
  TrainConfig config;
  config.epochs = 60;
  config.learning_rate = 0.05;
  const FELRModel model = felr_train(records, stats, config);

  std::size_t correct = 0;
  for (const auto& r : records) {
    const double p = felr_predict(model, extract_features(r, stats));
    if ((p > 0.5) == (r.click == 1)) ++correct;
  }
  CHECK(correct == records.size());

  // Determinism under the fixed seed.
  const FELRModel again = felr_train(records, stats, config);
  CHECK(model.weights == again.weights);
  CHECK(model.bias == again.bias);
}

TEST_CASE("felr: zero-variance features use std 1 and stay harmless") {
  std::vector<QueryAdRecord> records;
  for (int i = 0; i < 50; ++i) {
    records.push_back(
        make_record("q", "q title", "always same", "fixed.com", i % 3 == 0));
  }
  const CorpusStats stats = build_corpus_stats(records);
  TrainConfig config;
  config.epochs = 2;
  const FELRModel model = felr_train(records, stats, config);
  for (double s : model.stds) CHECK(s > 0.0);
  const double p = felr_predict(model, extract_features(records[0], stats));
  CHECK(std::isfinite(p));
}

TEST_CASE("felr_predict: affine edge cases") {
  FELRModel model;
  model.feature_indices = {0, 1};
  model.weights = {0.0, 0.0};
  model.bias = 0.0;
  model.means = {0.0, 0.0};
  model.stds = {1.0, 1.0};
  std::array<double, kFeatureCount> features{};
  CHECK(felr_predict(model, features) == 0.5);

  model.bias = 1.2;
  CHECK(felr_predict(model, features) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-1.2))).epsilon(1e-12));

  // Monotone in a positively weighted feature.
  model.weights = {2.0, 0.0};
  features[0] = 0.1;
  const double low = felr_predict(model, features);
  features[0] = 0.9;
  const double high = felr_predict(model, features);
  CHECK(high > low);

  CHECK_THROWS_AS(felr_predict(model, std::vector<double>{1.0, 2.0}),
                  ShapeError);
}

TEST_CASE("felr on label-independent features lands near AUC 0.5") {
  SyntheticSpec spec;
  spec.vocab_size = 100;
  spec.brand_count = 10;
  spec.pair_count = 10000;
  spec.test_count = 2000;
  spec.seed = 31;
  SyntheticData data = gen_synthetic_records(spec);
  // Break any feature-label relationship: labels re-drawn independently.
  Rng rng(32);
  for (auto& r : data.train) r.click = rng.bernoulli(0.3) ? 1 : 0;
  for (auto& r : data.test) r.click = rng.bernoulli(0.3) ? 1 : 0;

  const CorpusStats stats = build_corpus_stats(data.train);
  TrainConfig config;
  config.epochs = 2;
  const FELRModel model = felr_train(data.train, stats, config);
  const std::vector<double> scores =
      felr_predict_records(model, data.test, stats);
  std::vector<int> clicks(data.test.size());
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    clicks[i] = data.test[i].click;
  }
  const auto auc_value = auc_scores(scores, clicks);
  REQUIRE(auc_value.has_value());
  CHECK(*auc_value > 0.45);
  CHECK(*auc_value < 0.55);
}

TEST_CASE("combine_average: worked cases and range property") {
  CHECK(combine_average(0.2, 0.6) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(combine_average(0.37, 0.37) == 0.37);
  CHECK(combine_average(0.2, 0.6) == combine_average(0.6, 0.2));
  Rng rng(33);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform01();
    const double b = rng.uniform01();
    const double combined = combine_average(a, b);
    CHECK(combined >= std::min(a, b));
    CHECK(combined <= std::max(a, b));
  }
  CHECK_THROWS_AS(combine_average(-0.1, 0.5), ShapeError);
  CHECK_THROWS_AS(combine_average(0.5, 1.5), ShapeError);
}

TEST_CASE("feature dump: 42 named columns plus label, re-readable") {
  const SyntheticData data = [&] {
    SyntheticSpec spec;
    spec.vocab_size = 30;
    spec.brand_count = 5;
    spec.pair_count = 20;
    spec.test_count = 5;
    spec.seed = 34;
    return gen_synthetic_records(spec);
  }();
  const CorpusStats stats = build_corpus_stats(data.train);
  const auto path =
      (std::filesystem::temp_directory_path() / "dm_features.tsv").string();
  write_feature_dump(path, data.train, stats);

  std::ifstream in(path);
  std::string header;
  REQUIRE(std::getline(in, header));
  std::size_t tabs = 0;
  for (char c : header) tabs += c == '\t';
  CHECK(tabs == 42);  // 42 features + click = 43 columns
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == data.train.size());
}

}  // TEST_SUITE
