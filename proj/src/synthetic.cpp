#include "deepmatch/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "deepmatch/errors.hpp"
#include "deepmatch/kvconfig.hpp"
#include "deepmatch/layers.hpp"
#include "deepmatch/rng.hpp"

namespace deepmatch {

namespace {

struct PoolQuery {
  std::vector<std::string> tokens;
};

std::string random_token(Rng& rng) {
  const std::size_t len = 3 + rng.uniform_index(6);  // 3..8
  std::string token(len, 'a');
  for (char& c : token) {
    c = static_cast<char>('a' + rng.uniform_index(26));
  }
  return token;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

bool contains(const std::vector<std::string>& tokens,
              const std::string& token) {
  return std::find(tokens.begin(), tokens.end(), token) != tokens.end();
}

}  // namespace

void SyntheticSpec::validate() const {
  std::vector<std::string> problems;
  if (vocab_size < 10) problems.push_back("vocab_size must be >= 10");
  if (brand_count < 1) problems.push_back("brand_count must be >= 1");
  if (brand_count > vocab_size) {
    problems.push_back("brand_count cannot exceed vocab_size");
  }
  if (pair_count < 1) problems.push_back("pair_count must be >= 1");
  if (noise_scale < 0.0) problems.push_back("noise_scale must be >= 0");
  if (external_score_scale < 0.0 || external_score_scale > 1.0) {
    problems.push_back("external_score_scale must lie in [0,1]");
  }
  if (!problems.empty()) {
    std::string msg = "invalid synthetic spec:";
    for (const std::string& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

SyntheticSpec parse_synthetic_spec(const std::string& path) {
  KvConfig kv = KvConfig::parse_file(path);
  SyntheticSpec spec;
  spec.vocab_size = kv.get_u64("vocab_size", spec.vocab_size);
  spec.brand_count = kv.get_u64("brand_count", spec.brand_count);
  spec.pair_count = kv.get_u64("pair_count", spec.pair_count);
  spec.test_count = kv.get_u64("test_count", spec.test_count);
  spec.noise_scale = kv.get_double("noise_scale", spec.noise_scale);
  spec.seed = kv.get_u64("seed", spec.seed);
  spec.bias = kv.get_double("bias", spec.bias);
  spec.weight_overlap = kv.get_double("weight_overlap", spec.weight_overlap);
  spec.weight_brand = kv.get_double("weight_brand", spec.weight_brand);
  spec.weight_url = kv.get_double("weight_url", spec.weight_url);
  spec.external_score_scale =
      kv.get_double("external_score_scale", spec.external_score_scale);
  spec.embedding_dim = kv.get_u64("embedding_dim", spec.embedding_dim);
  spec.query_pool = kv.get_u64("query_pool", spec.query_pool);
  kv.check_complete();
  spec.validate();
  return spec;
}

SyntheticData gen_synthetic_records(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  // Vocabulary of distinct tokens; the first brand_count act as brands.
  std::vector<std::string> vocab;
  std::set<std::string> seen;
  vocab.reserve(spec.vocab_size);
  while (vocab.size() < spec.vocab_size) {
    std::string token = random_token(rng);
    if (seen.insert(token).second) vocab.push_back(std::move(token));
  }

  // Query pool with Zipf-like popularity, so impression frequencies spread
  // over head and tail.
  const std::size_t pool_size =
      spec.query_pool > 0
          ? spec.query_pool
          : std::max<std::size_t>(20, spec.pair_count / 50);
  std::vector<PoolQuery> pool(pool_size);
  for (PoolQuery& q : pool) {
    const std::size_t n_tokens = 1 + rng.uniform_index(4);  // 1..4
    std::set<std::string> used;
    const bool lead_brand = rng.bernoulli(0.3);
    while (q.tokens.size() < n_tokens) {
      const std::string& candidate =
          (q.tokens.empty() && lead_brand)
              ? vocab[rng.uniform_index(spec.brand_count)]
              : vocab[rng.uniform_index(vocab.size())];
      if (used.insert(candidate).second) q.tokens.push_back(candidate);
    }
  }
  std::vector<double> zipf_cdf(pool_size);
  double total_weight = 0.0;
  for (std::size_t i = 0; i < pool_size; ++i) {
    total_weight += 1.0 / std::pow(static_cast<double>(i + 1), 0.9);
    zipf_cdf[i] = total_weight;
  }
  for (double& w : zipf_cdf) w /= total_weight;
  auto draw_query = [&]() -> const PoolQuery& {
    const double u = rng.uniform01();
    const auto it = std::lower_bound(zipf_cdf.begin(), zipf_cdf.end(), u);
    const std::size_t idx =
        std::min<std::size_t>(it - zipf_cdf.begin(), pool_size - 1);
    return pool[idx];
  };

  SyntheticData data;
  data.vocabulary = vocab;
  data.columns.true_ctr = true;
  data.columns.device = true;
  data.columns.external_score = spec.external_score_scale > 0.0;

  double min_ctr = 1.0;
  double max_ctr = 0.0;
  const std::size_t total = spec.pair_count + spec.test_count;
  for (std::size_t i = 0; i < total; ++i) {
    const PoolQuery& query = draw_query();
    const std::size_t n_query = query.tokens.size();
    const std::size_t shared_count = rng.uniform_index(n_query + 1);  // 0..nq

    // Brand: prefer a brand token already in the query (brand match).
    std::string brand;
    bool brand_match = false;
    std::vector<std::string> query_brands;
    for (const std::string& t : query.tokens) {
      for (std::size_t b = 0; b < spec.brand_count; ++b) {
        if (t == vocab[b]) query_brands.push_back(t);
      }
    }
    if (!query_brands.empty() && rng.bernoulli(0.4)) {
      brand = query_brands[rng.uniform_index(query_brands.size())];
    } else {
      brand = vocab[rng.uniform_index(spec.brand_count)];
    }
    brand_match = contains(query.tokens, brand);

    // URL core token: half the time a shared token (when any), else the
    // brand.
    std::string url_core;
    if (shared_count > 0 && rng.bernoulli(0.5)) {
      url_core = query.tokens[rng.uniform_index(shared_count)];
    } else {
      url_core = brand;
    }
    const bool url_match = contains(query.tokens, url_core);

    // Title: brand + shared tokens + fillers. The token count depends only
    // on the query length, so length features carry no CTR signal.
    const std::size_t title_count = n_query + 1 + rng.uniform_index(3);
    std::vector<std::string> title_tokens;
    title_tokens.push_back(brand);
    for (std::size_t s = 0; s < shared_count; ++s) {
      title_tokens.push_back(query.tokens[s]);
    }
    while (title_tokens.size() < title_count) {
      title_tokens.push_back(vocab[rng.uniform_index(vocab.size())]);
    }
    rng.shuffle(title_tokens);

    // Description: fixed-size filler text, occasionally repeating one shared
    // token.
    const std::size_t desc_count = 4 + rng.uniform_index(5);  // 4..8
    std::vector<std::string> desc_tokens;
    const bool desc_shares = shared_count > 0 && rng.bernoulli(0.3);
    if (desc_shares) desc_tokens.push_back(query.tokens[0]);
    while (desc_tokens.size() < desc_count) {
      desc_tokens.push_back(vocab[rng.uniform_index(vocab.size())]);
    }

    const double overlap_fraction =
        static_cast<double>(shared_count) / static_cast<double>(n_query);
    const double z = spec.bias + spec.weight_overlap * overlap_fraction +
                     spec.weight_brand * (brand_match ? 1.0 : 0.0) +
                     spec.weight_url * (url_match ? 1.0 : 0.0) +
                     spec.noise_scale * rng.normal();
    const double ctr = sigmoid(z);
    min_ctr = std::min(min_ctr, ctr);
    max_ctr = std::max(max_ctr, ctr);

    QueryAdRecord record;
    record.query = join(query.tokens);
    record.ad_title = join(title_tokens);
    record.ad_description = join(desc_tokens);
    record.ad_display_url = "www." + url_core + ".com";
    record.true_ctr = ctr;
    record.click = rng.bernoulli(ctr) ? 1 : 0;
    record.device = rng.bernoulli(0.75) ? Device::desktop : Device::mobile;
    if (data.columns.external_score) {
      record.external_score =
          std::min(1.0, spec.external_score_scale * ctr);
    }
    if (i < spec.pair_count) {
      data.train.push_back(std::move(record));
    } else {
      data.test.push_back(std::move(record));
    }
  }

  if (!(max_ctr > min_ctr)) {
    throw ConfigError(
        "synthetic spec produces a degenerate CTR (all pairs equal); "
        "increase the link weights or noise");
  }
  return data;
}

SyntheticOutput gen_synthetic(const SyntheticSpec& spec,
                              const std::string& out_dir) {
  const SyntheticData data = gen_synthetic_records(spec);
  std::filesystem::create_directories(out_dir);

  SyntheticOutput output;
  output.train_path = (std::filesystem::path(out_dir) / "train.tsv").string();
  output.test_path = (std::filesystem::path(out_dir) / "test.tsv").string();
  write_dataset(output.train_path, data.train, data.columns);
  write_dataset(output.test_path, data.test, data.columns);
  if (spec.embedding_dim > 0) {
    output.embedding_path =
        (std::filesystem::path(out_dir) / "embeddings.tsv").string();
    write_synthetic_embeddings(output.embedding_path, data.vocabulary,
                               spec.embedding_dim, spec.seed ^ 0x9e3779b9u);
  }
  return output;
}

void write_synthetic_embeddings(const std::string& path,
                                const std::vector<std::string>& vocabulary,
                                std::size_t dim, std::uint64_t seed) {
  if (dim < 1) throw ConfigError("embeddings: dim must be >= 1");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("embeddings: cannot write " + path);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  char buf[40];
  for (const std::string& token : vocabulary) {
    out << token;
    for (std::size_t d = 0; d < dim; ++d) {
      std::snprintf(buf, sizeof(buf), " %.9g", scale * rng.normal());
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace deepmatch
