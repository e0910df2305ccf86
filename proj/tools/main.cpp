#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "daf/config.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string seed;
  std::string out;
  std::string train_class;
  std::string test_class;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value run configuration")
      ->required();
  cmd->add_option("--seed", args.seed, "override the seed key");
  cmd->add_option("--out", args.out, "override the output directory");
}

daf::cli::RunConfig load(const CommonArgs& args) {
  auto cfg = daf::cli::RunConfig::parse_file(args.config_path);
  if (!args.seed.empty()) cfg.set("seed", args.seed);
  if (!args.out.empty()) cfg.set("out", args.out);
  if (!args.train_class.empty()) cfg.set("train_class", args.train_class);
  if (!args.test_class.empty()) cfg.set("test_class", args.test_class);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disentangled acoustic fields: synthesis, training, "
               "analysis-by-synthesis inference, navigation"};
  app.require_subcommand(1);

  CommonArgs args;
  int (*handler)(const daf::cli::RunConfig&) = nullptr;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, args);
  synth->callback([&] { handler = daf::cli::cmd_synth; });

  auto* train = app.add_subcommand("train", "train the encoder/generator");
  add_common(train, args);
  train->callback([&] { handler = daf::cli::cmd_train; });

  auto* eval = app.add_subcommand("eval-props",
                                  "position/type/material prediction metrics");
  add_common(eval, args);
  eval->add_option("--train-class", args.train_class,
                   "train in-process on one scene class (cross-scene mode)");
  eval->add_option("--test-class", args.test_class,
                   "restrict evaluation to one scene class");
  eval->callback([&] { handler = daf::cli::cmd_eval_props; });

  auto* lossmap = app.add_subcommand("lossmap",
                                     "export a loss map for one episode");
  add_common(lossmap, args);
  lossmap->callback([&] { handler = daf::cli::cmd_lossmap; });

  auto* nav = app.add_subcommand("navigate", "run navigation episodes");
  add_common(nav, args);
  nav->callback([&] { handler = daf::cli::cmd_navigate; });

  auto* report = app.add_subcommand("report", "collate run metrics");
  add_common(report, args);
  report->callback([&] { handler = daf::cli::cmd_report; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    return handler(load(args));
  } catch (const daf::cli::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
