#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "deepmatch/dataset.hpp"
#include "deepmatch/errors.hpp"
#include "deepmatch/rng.hpp"
#include "deepmatch/text.hpp"

using namespace deepmatch;

namespace {

std::filesystem::path temp_file(const std::string& name,
                                const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

std::string random_text(Rng& rng, std::size_t max_len) {
  static const std::string pool =
      "abcXYZ 012 \t .,!?-_/:'&  \n  shoes sale";
  std::string s;
  const std::size_t len = rng.uniform_index(max_len + 1);
  for (std::size_t i = 0; i < len; ++i) {
    s.push_back(pool[rng.uniform_index(pool.size())]);
  }
  return s;
}

}  // namespace

TEST_SUITE("text_encoding") {

TEST_CASE("canonicalize: lowercasing, space collapsing, trimming") {
  CHECK(canonicalize("Red  SHOES ") == "red shoes");
  CHECK(canonicalize("") == "");
  CHECK(canonicalize("  \t ") == "");
  CHECK(canonicalize("a\tb\nc") == "a b c");
}

TEST_CASE("canonicalize is idempotent on random strings") {
  Rng rng(41);
  for (int i = 0; i < 300; ++i) {
    const std::string text = random_text(rng, 40);
    const std::string once = canonicalize(text);
    CHECK(canonicalize(once) == once);
  }
}

TEST_CASE("default alphabet has 47 distinct symbols") {
  const Alphabet& alphabet = Alphabet::default_alphabet();
  CHECK(alphabet.size() == 47);
  CHECK(alphabet.index_of('a') == 0);
  CHECK(alphabet.index_of(' ').has_value());
  CHECK(!alphabet.index_of('Z').has_value());
  CHECK_THROWS_AS(Alphabet("aa"), ConfigError);
  CHECK_THROWS_AS(Alphabet(""), ConfigError);
}

TEST_CASE("encode_chars: one-hot rows with zero padding") {
  const Alphabet abc("abc");
  const Tensor2 enc = encode_chars("ab", 4, abc);
  REQUIRE(enc.rows() == 4);
  REQUIRE(enc.cols() == 3);
  CHECK(enc(0, 0) == 1.0);
  CHECK(enc(1, 1) == 1.0);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(enc(2, c) == 0.0);
    CHECK(enc(3, c) == 0.0);
  }
}

TEST_CASE("encode_chars: truncation keeps exactly L rows") {
  const Alphabet abc("abc");
  const Tensor2 enc = encode_chars("abcabcabc", 4, abc);
  CHECK(enc.rows() == 4);
  double ones = 0.0;
  for (double v : enc.data()) ones += v;
  CHECK(ones == 4.0);  // all four visible characters are in-alphabet
}

TEST_CASE("encode_chars: out-of-alphabet characters leave zero rows in place") {
  const Alphabet abc("abc");
  const Tensor2 enc = encode_chars("aXb", 3, abc);
  CHECK(enc(0, 0) == 1.0);
  for (std::size_t c = 0; c < 3; ++c) CHECK(enc(1, c) == 0.0);
  CHECK(enc(2, 1) == 1.0);
}

TEST_CASE("encode_chars row sums and one-count invariant on random text") {
  Rng rng(42);
  const Alphabet& alphabet = Alphabet::default_alphabet();
  for (int i = 0; i < 200; ++i) {
    const std::string text = canonicalize(random_text(rng, 60));
    const std::size_t length = 1 + rng.uniform_index(50);
    const Tensor2 enc = encode_chars(text, length, alphabet);
    std::size_t in_alphabet = 0;
    const std::size_t visible = std::min(length, text.size());
    for (std::size_t j = 0; j < visible; ++j) {
      if (alphabet.index_of(text[j])) ++in_alphabet;
    }
    std::size_t one_rows = 0;
    for (std::size_t r = 0; r < enc.rows(); ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < enc.cols(); ++c) sum += enc(r, c);
      CHECK((sum == 0.0 || sum == 1.0));
      if (sum == 1.0) ++one_rows;
    }
    CHECK(one_rows == in_alphabet);
  }
}

TEST_CASE("paper input shapes: query 35 x 47, ad 140 x 47") {
  const Alphabet& alphabet = Alphabet::default_alphabet();
  const Tensor2 q = encode_chars("red shoes", 35, alphabet);
  const Tensor2 a = encode_chars("buy red shoes", 140, alphabet);
  CHECK(q.rows() == 35);
  CHECK(q.cols() == 47);
  CHECK(a.rows() == 140);
  CHECK(a.cols() == 47);
}

TEST_CASE("concat_ad_fields: order title, description, url") {
  CHECK(concat_ad_fields("buy shoes", "best deals", "shoes.com") ==
        "buy shoes best deals shoes.com");
  CHECK(canonicalize(concat_ad_fields("buy shoes", "", "shoes.com")) ==
        "buy shoes shoes.com");
  CHECK(concat_ad_fields("a", "b", "c") != concat_ad_fields("c", "b", "a"));
}

TEST_CASE("tokenize: splitting and edge punctuation") {
  CHECK(tokenize("red shoes, sale!") ==
        std::vector<std::string>{"red", "shoes", "sale"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("a  b") == std::vector<std::string>{"a", "b"});
  CHECK(tokenize("shoes.com") == std::vector<std::string>{"shoes.com"});
  CHECK(tokenize("... !!!").empty());
}

TEST_CASE("tokenize of canonicalize is idempotent at the token level") {
  Rng rng(43);
  for (int i = 0; i < 200; ++i) {
    const std::string text = random_text(rng, 50);
    const auto tokens = tokenize(canonicalize(text));
    std::string joined;
    for (const auto& t : tokens) {
      if (!joined.empty()) joined.push_back(' ');
      joined += t;
    }
    CHECK(tokenize(canonicalize(joined)) == tokens);
  }
}

TEST_CASE("embedding table: load, lookups, duplicate handling") {
  const auto path = temp_file("dm_emb_ok.tsv",
                              "dog 1 2 3\n"
                              "cat 4 5 6\n"
                              "dog 7 8 9\n");
  const EmbeddingTable table = EmbeddingTable::load(path.string());
  CHECK(table.size() == 2);
  CHECK(table.dim() == 3);
  const double* dog = table.find("dog");
  REQUIRE(dog != nullptr);
  CHECK(dog[0] == 1.0);  // first occurrence wins
  CHECK(table.find("fox") == nullptr);
}

TEST_CASE("embedding table: malformed files") {
  const auto bad_dim = temp_file("dm_emb_dim.tsv", "dog 1 2 3\ncat 1 2\n");
  CHECK_THROWS_WITH_AS(EmbeddingTable::load(bad_dim.string()),
                       doctest::Contains("line 2"), ParseError);

  const auto bad_real = temp_file("dm_emb_real.tsv", "dog 1 x 3\n");
  CHECK_THROWS_AS(EmbeddingTable::load(bad_real.string()), ParseError);

  const auto empty = temp_file("dm_emb_empty.tsv", "");
  CHECK_THROWS_AS(EmbeddingTable::load(empty.string()), ParseError);
}

TEST_CASE("encode_words: defaults, OOV zeros, known token copy") {
  const EmbeddingTable table = EmbeddingTable::from_entries(
      {{"red", {1.0, 2.0}}, {"shoes", {3.0, 4.0}}});

  const Tensor2 all_oov = encode_words({"green", "boots"}, table, 4);
  for (double v : all_oov.data()) CHECK(v == 0.0);

  const Tensor2 one = encode_words({"red"}, table, 3);
  CHECK(one(0, 0) == 1.0);
  CHECK(one(0, 1) == 2.0);
  for (std::size_t r = 1; r < 3; ++r) {
    CHECK(one(r, 0) == 0.0);
    CHECK(one(r, 1) == 0.0);
  }

  // Paper defaults: query 7 x d_w, ad 40 x d_w.
  CHECK(encode_words({"red"}, table, 7).rows() == 7);
  CHECK(encode_words({"red"}, table, 40).rows() == 40);
}

TEST_CASE("read_dataset: well-formed file round trip") {
  const auto path = temp_file(
      "dm_data_ok.tsv",
      "query\ttitle\tdescription\turl\tclick\ttrue_ctr\n"
      "red shoes\tshoes sale\tbest shoes\tshoes.com\t1\t0.25\n"
      "blue hats\thats\tcheap hats\thats.com\t0\t0.5\n"
      "socks\tsocks store\tall socks\tsocks.org\t0\t0.125\n");
  const Dataset data = read_dataset(path.string());
  REQUIRE(data.records.size() == 3);
  CHECK(data.columns.true_ctr);
  CHECK(!data.columns.external_score);
  CHECK(data.records[0].click == 1);
  CHECK(data.records[1].click == 0);
  CHECK(data.records[0].true_ctr == 0.25);
  CHECK(data.records[0].query == "red shoes");

  // Serialization round-trips text fields bit-exactly.
  const auto out_path =
      std::filesystem::temp_directory_path() / "dm_data_rt.tsv";
  write_dataset(out_path.string(), data.records, data.columns);
  const Dataset again = read_dataset(out_path.string());
  REQUIRE(again.records.size() == data.records.size());
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    CHECK(again.records[i].query == data.records[i].query);
    CHECK(again.records[i].ad_title == data.records[i].ad_title);
    CHECK(again.records[i].ad_description == data.records[i].ad_description);
    CHECK(again.records[i].ad_display_url == data.records[i].ad_display_url);
    CHECK(again.records[i].click == data.records[i].click);
  }
}

TEST_CASE("read_dataset: click outside {0,1} names the line") {
  const auto path = temp_file(
      "dm_data_click.tsv",
      "query\ttitle\tdescription\turl\tclick\n"
      "q\tt\td\tu\t1\n"
      "q\tt\td\tu\t2\n");
  CHECK_THROWS_WITH_AS(read_dataset(path.string()), doctest::Contains(":3"),
                       ParseError);
}

TEST_CASE("read_dataset: structural errors") {
  const auto missing = temp_file("dm_data_missing.tsv",
                                 "query\ttitle\tdescription\tclick\nq\tt\td\t1\n");
  CHECK_THROWS_WITH_AS(read_dataset(missing.string()),
                       doctest::Contains("url"), ParseError);

  const auto ragged = temp_file("dm_data_ragged.tsv",
                                "query\ttitle\tdescription\turl\tclick\n"
                                "q\tt\td\tu\t1\textra\n");
  CHECK_THROWS_WITH_AS(read_dataset(ragged.string()), doctest::Contains(":2"),
                       ParseError);

  const auto unknown = temp_file(
      "dm_data_unknown.tsv", "query\ttitle\tdescription\turl\tclick\tbogus\n");
  CHECK_THROWS_AS(read_dataset(unknown.string()), ParseError);
}

TEST_CASE("read_dataset: absent optional column stays absent") {
  const auto path = temp_file("dm_data_noctr.tsv",
                              "query\ttitle\tdescription\turl\tclick\n"
                              "q\tt\td\tu\t0\n");
  const Dataset data = read_dataset(path.string());
  CHECK(!data.columns.true_ctr);
  CHECK(!data.records[0].true_ctr.has_value());
  CHECK(!data.records[0].external_score.has_value());
  CHECK(data.records[0].device == Device::unknown);
}

TEST_CASE("read_dataset: optional device column") {
  const auto path = temp_file("dm_data_device.tsv",
                              "query\ttitle\tdescription\turl\tclick\tdevice\n"
                              "q\tt\td\tu\t0\tmobile\n"
                              "q\tt\td\tu\t1\tdesktop\n");
  const Dataset data = read_dataset(path.string());
  CHECK(data.columns.device);
  CHECK(data.records[0].device == Device::mobile);
  CHECK(data.records[1].device == Device::desktop);

  const auto bad = temp_file("dm_data_baddev.tsv",
                             "query\ttitle\tdescription\turl\tclick\tdevice\n"
                             "q\tt\td\tu\t0\ttablet\n");
  CHECK_THROWS_AS(read_dataset(bad.string()), ParseError);
}

TEST_CASE("encoders are deterministic functions of text and config") {
  Rng rng(44);
  const Alphabet& alphabet = Alphabet::default_alphabet();
  const EmbeddingTable table = EmbeddingTable::from_entries(
      {{"red", {1.0, 2.0}}, {"shoes", {3.0, 4.0}}});
  for (int i = 0; i < 50; ++i) {
    const std::string text = canonicalize(random_text(rng, 30));
    CHECK(encode_chars(text, 20, alphabet) == encode_chars(text, 20, alphabet));
    const auto tokens = tokenize(text);
    CHECK(encode_words(tokens, table, 8) == encode_words(tokens, table, 8));
  }
}

}  // TEST_SUITE
