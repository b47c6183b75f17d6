#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "deepmatch/commands.hpp"
#include "deepmatch/errors.hpp"
#include "deepmatch/kvconfig.hpp"
#include "deepmatch/runconfig.hpp"
#include "deepmatch/synthetic.hpp"

using namespace deepmatch;

namespace {

std::filesystem::path write_file(const std::string& name,
                                 const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string find_cli_binary() {
  for (const char* candidate :
       {"./build/tools/deepmatch", "../tools/deepmatch", "tools/deepmatch",
        "./deepmatch"}) {
    if (std::filesystem::exists(candidate)) {
      return std::filesystem::absolute(candidate).string();
    }
  }
  return "";
}

int run(const std::string& command) { return std::system(command.c_str()); }

// Small but valid char config: 14 -> k=4, 24 -> m=14, 56-row cross product.
std::string smoke_model_lines() {
  return "model.kind = char\n"
         "model.seed = 7\n"
         "model.query_length = 14\n"
         "model.ad_length = 24\n"
         "model.lead_filters = 2\n"
         "model.block_filters = 2\n"
         "model.cross_filters = 2\n"
         "model.final_filters = 2\n"
         "model.dense1 = 4\n"
         "model.dense2 = 3\n"
         "model.cross_pool = 2\n"
         "train.epochs = 1\n"
         "train.batch_size = 32\n";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("kv config: parsing rules") {
  KvConfig kv = KvConfig::parse_string(
      "# comment\n"
      "a = 1\n"
      "b=two words\n"
      "\n"
      "c = 2.5\n",
      "test");
  CHECK(kv.get_u64("a", 0) == 1);
  CHECK(kv.get_string("b") == "two words");
  CHECK(kv.get_double("c", 0.0) == 2.5);
  kv.check_complete();

  CHECK_THROWS_AS(KvConfig::parse_string("novalue\n", "t"), ConfigError);
  CHECK_THROWS_AS(KvConfig::parse_string("a=1\na=2\n", "t"), ConfigError);
}

TEST_CASE("kv config: every problem is listed at once") {
  KvConfig kv = KvConfig::parse_string(
      "count = x\n"
      "rate = y\n"
      "stray = 1\n",
      "test");
  kv.get_u64("count", 1);
  kv.get_double("rate", 1.0);
  try {
    kv.check_complete();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("count") != std::string::npos);
    CHECK(msg.find("rate") != std::string::npos);
    CHECK(msg.find("stray") != std::string::npos);
  }
}

TEST_CASE("run config: loads a complete file") {
  const auto data = write_file("dm_run_data.tsv",
                               "query\ttitle\tdescription\turl\tclick\n"
                               "q\tt\td\tu\t1\n");
  const auto path = write_file(
      "dm_run_ok.cfg", smoke_model_lines() + "data.train = " + data.string() +
                           "\noutput.dir = /tmp/dm_run_out\n");
  const RunConfig run = RunConfig::load(path.string());
  CHECK(run.model.kind == ModelKind::char_level);
  CHECK(run.model.query_length == 14);
  CHECK(run.train.batch_size == 32);
  CHECK(run.output_dir == "/tmp/dm_run_out");
  CHECK(run.threads == 1);
}

TEST_CASE("run config: problems are listed exhaustively") {
  const auto path = write_file("dm_run_bad.cfg",
                               "model.kind = tensor\n"
                               "model.query_length = nope\n"
                               "train.batch_size = 0\n"
                               "wat = 1\n");
  try {
    RunConfig::load(path.string());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("tensor") != std::string::npos);
    CHECK(msg.find("model.query_length") != std::string::npos);
    CHECK(msg.find("batch_size") != std::string::npos);
    CHECK(msg.find("wat") != std::string::npos);
  }
}

TEST_CASE("run config: word kind requires embeddings") {
  const auto path = write_file("dm_run_word.cfg", "model.kind = word\n");
  CHECK_THROWS_WITH_AS(RunConfig::load(path.string()),
                       doctest::Contains("embeddings"), ConfigError);
}

TEST_CASE("run config: environment overrides") {
  const auto path = write_file("dm_run_env.cfg",
                               smoke_model_lines() + "output.dir = plain\n");
  setenv("DEEPMATCH_OUTPUT_DIR", "/tmp/dm_env_out", 1);
  setenv("DEEPMATCH_THREADS", "3", 1);
  const RunConfig run = RunConfig::load(path.string());
  unsetenv("DEEPMATCH_OUTPUT_DIR");
  unsetenv("DEEPMATCH_THREADS");
  CHECK(run.output_dir == "/tmp/dm_env_out");
  CHECK(run.threads == 3);

  setenv("DEEPMATCH_THREADS", "zero", 1);
  CHECK_THROWS_AS(RunConfig::load(path.string()), ConfigError);
  unsetenv("DEEPMATCH_THREADS");
}

TEST_CASE("cli pipeline smoke: gen-data, train, eval, predict, compare") {
  const std::string cli = find_cli_binary();
  REQUIRE_MESSAGE(!cli.empty(), "deepmatch binary not found");

  const auto base = std::filesystem::temp_directory_path() / "dm_cli_smoke";
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);

  const auto spec = write_file("dm_cli_spec.cfg",
                               "vocab_size = 60\n"
                               "brand_count = 6\n"
                               "pair_count = 300\n"
                               "test_count = 80\n"
                               "seed = 5\n"
                               "external_score_scale = 0.5\n");
  const std::string data_dir = (base / "data").string();
  REQUIRE(run(cli + " gen-data --spec " + spec.string() + " --out " +
              data_dir + " > /dev/null") == 0);
  CHECK(std::filesystem::exists(data_dir + "/train.tsv"));
  CHECK(std::filesystem::exists(data_dir + "/test.tsv"));
  CHECK(std::filesystem::exists(data_dir + "/embeddings.tsv"));

  const std::string out_dir = (base / "run").string();
  const auto config = write_file(
      "dm_cli_run.cfg", smoke_model_lines() +
                            "data.train = " + data_dir + "/train.tsv\n" +
                            "data.test = " + data_dir + "/test.tsv\n" +
                            "output.dir = " + out_dir + "\n");
  REQUIRE(run(cli + " train --config " + config.string() + " > /dev/null") ==
          0);
  CHECK(std::filesystem::exists(out_dir + "/model.ckpt"));
  CHECK(std::filesystem::exists(out_dir + "/history.tsv"));

  REQUIRE(run(cli + " eval --config " + config.string() + " --checkpoint " +
              out_dir + "/model.ckpt > /dev/null") == 0);
  const std::string report = slurp(out_dir + "/report.tsv");
  CHECK(report.find("# overall") != std::string::npos);
  CHECK(report.find("# slices") != std::string::npos);
  CHECK(report.find("# cumulative") != std::string::npos);
  // The external_score column was present, so combined metrics appear.
  CHECK(report.find("combined_auc") != std::string::npos);
  CHECK(std::filesystem::exists(out_dir + "/report.json"));

  REQUIRE(run(cli + " predict --config " + config.string() + " --checkpoint " +
              out_dir + "/model.ckpt > /dev/null") == 0);
  std::ifstream pred(out_dir + "/predictions.tsv");
  std::string line;
  std::size_t rows = 0;
  std::getline(pred, line);
  CHECK(line == "score");
  while (std::getline(pred, line)) ++rows;
  CHECK(rows == 80);

  REQUIRE(run(cli + " compare --config " + config.string() +
              " --sizes 64,128 > /dev/null") == 0);
  const std::string curve = slurp(out_dir + "/learning_curve.tsv");
  CHECK(curve.find("model_kind\tsize\tauc") != std::string::npos);
  CHECK(curve.find("char\t64\t") != std::string::npos);
  CHECK(curve.find("char\t128\t") != std::string::npos);

  // Bad config exits nonzero with a diagnostic.
  const auto broken = write_file("dm_cli_broken.cfg", "model.kind = what\n");
  CHECK(run(cli + " train --config " + broken.string() +
            " 2> /dev/null") != 0);
}

TEST_CASE("compare rejects bad size lists and enforces the prefix protocol") {
  const auto data = write_file("dm_cmp_data.tsv",
                               "query\ttitle\tdescription\turl\tclick\n"
                               "q\tt\td\tu\t1\n"
                               "q2\tt\td\tu\t0\n");
  const auto config_path = write_file(
      "dm_cmp_run.cfg", smoke_model_lines() + "data.train = " + data.string() +
                            "\ndata.test = " + data.string() + "\n");
  const RunConfig run = RunConfig::load(config_path.string());
  CHECK_THROWS_AS(cmd_compare({run}, {10}), ConfigError);
  CHECK_THROWS_AS(cmd_compare({run}, {10, 10}), ConfigError);
  CHECK_THROWS_AS(cmd_compare({run}, {1, 100000}), ConfigError);
  CHECK_THROWS_AS(cmd_compare({}, {1, 2}), ConfigError);
}

TEST_CASE("compare: identical seeds give identical curves") {
  const auto base = std::filesystem::temp_directory_path() / "dm_cmp_det";
  std::filesystem::remove_all(base);
  SyntheticSpec spec;
  spec.vocab_size = 50;
  spec.brand_count = 5;
  spec.pair_count = 400;
  spec.test_count = 100;
  spec.seed = 6;
  const auto out = gen_synthetic(spec, base.string());

  const auto config_path = write_file(
      "dm_cmp_det.cfg",
      smoke_model_lines() + "data.train = " + out.train_path + "\n" +
          "data.test = " + out.test_path + "\n" + "output.dir = " +
          (base / "out").string() + "\n");
  const RunConfig run = RunConfig::load(config_path.string());
  const auto first = cmd_compare({run}, {100, 200});
  const auto second = cmd_compare({run}, {100, 200});
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].auc == second[i].auc);
    CHECK(first[i].size == second[i].size);
  }
}

}  // TEST_SUITE
