#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deepmatch/commands.hpp"
#include "deepmatch/errors.hpp"

namespace {

std::vector<std::size_t> parse_sizes(const std::string& csv) {
  std::vector<std::size_t> sizes;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string part =
        csv.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!part.empty()) sizes.push_back(std::stoull(part));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return sizes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deepmatch: character- and word-level CTR prediction"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, config_path, checkpoint_path, sizes_csv;
  std::vector<std::string> config_paths;

  CLI::App* gen = app.add_subcommand("gen-data",
                                     "generate a synthetic query-ad log");
  gen->add_option("--spec", spec_path, "synthetic spec file")->required();
  gen->add_option("--out", out_dir, "output directory")->required();

  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--config", config_path, "run config file")->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--config", config_path, "run config file")->required();
  eval->add_option("--checkpoint", checkpoint_path, "model checkpoint")
      ->required();

  CLI::App* predict = app.add_subcommand("predict", "score a dataset");
  predict->add_option("--config", config_path, "run config file")->required();
  predict->add_option("--checkpoint", checkpoint_path, "model checkpoint")
      ->required();

  CLI::App* compare =
      app.add_subcommand("compare", "learning curve over training sizes");
  compare->add_option("--config", config_paths,
                      "run config file (repeat per model kind)")
      ->required();
  compare->add_option("--sizes", sizes_csv, "comma-separated training sizes")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      deepmatch::cmd_gen_data(spec_path, out_dir);
    } else if (train->parsed()) {
      deepmatch::cmd_train(deepmatch::RunConfig::load(config_path));
    } else if (eval->parsed()) {
      deepmatch::cmd_eval(deepmatch::RunConfig::load(config_path),
                          checkpoint_path);
    } else if (predict->parsed()) {
      deepmatch::cmd_predict(deepmatch::RunConfig::load(config_path),
                             checkpoint_path);
    } else if (compare->parsed()) {
      std::vector<deepmatch::RunConfig> runs;
      runs.reserve(config_paths.size());
      for (const std::string& path : config_paths) {
        runs.push_back(deepmatch::RunConfig::load(path));
      }
      deepmatch::cmd_compare(runs, parse_sizes(sizes_csv));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
