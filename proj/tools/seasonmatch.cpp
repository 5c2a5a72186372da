#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seasonmatch/error.hpp"
#include "seasonmatch/stages.hpp"

namespace {

struct FlagBinding {
  const char* key;  // RunConfig key
  std::string value;
  CLI::Option* option = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "seasonmatch - cross-season place recognition pipeline\n"
      "Stages: synth, preprocess, partition, mine, train, embed, evaluate, report.\n"
      "Each stage reads its upstream artifacts from the run directory and\n"
      "writes its own atomically."};
  app.require_subcommand(1);

  std::string config_file;
  app.add_option("--config", config_file, "flat key-value config file");

  // Every flag is an alias for a config key; flags override the file.
  std::vector<FlagBinding> flags = {
      {"out.dir", "", nullptr},
      {"seed", "", nullptr},
      {"corpus.manifests", "", nullptr},
      {"synth.places", "", nullptr},
      {"synth.conditions", "", nullptr},
      {"filter.speed-min", "", nullptr},
      {"filter.darkness-min", "", nullptr},
      {"align.tol-m", "", nullptr},
      {"labeling.sep", "", nullptr},
      {"partition.test-segments", "", nullptr},
      {"partition.buffer", "", nullptr},
      {"model.widths", "", nullptr},
      {"model.tap", "", nullptr},
      {"model.mean-subtract", "", nullptr},
      {"model.init-weights", "", nullptr},
      {"train.loss", "", nullptr},
      {"train.epochs", "", nullptr},
      {"train.batch-size", "", nullptr},
      {"train.lr", "", nullptr},
      {"train.margin", "", nullptr},
      {"train.contrastive-margin", "", nullptr},
      {"train.fine-tune", "", nullptr},
      {"train.n-pairs", "", nullptr},
      {"train.n-triplets", "", nullptr},
      {"train.negative-exclusion", "", nullptr},
      {"embed.source", "", nullptr},
      {"eval.tolerance", "", nullptr},
      {"eval.pr-points", "", nullptr},
  };
  const std::map<std::string, std::string> flag_names = {
      {"out.dir", "--outdir"},
      {"seed", "--seed"},
      {"corpus.manifests", "--manifests"},
      {"synth.places", "--places"},
      {"synth.conditions", "--conditions"},
      {"filter.speed-min", "--speed-min"},
      {"filter.darkness-min", "--darkness-min"},
      {"align.tol-m", "--align-tol-m"},
      {"labeling.sep", "--same-place-sep"},
      {"partition.test-segments", "--test-segments"},
      {"partition.buffer", "--buffer"},
      {"model.widths", "--widths"},
      {"model.tap", "--tap"},
      {"model.mean-subtract", "--mean-subtract"},
      {"model.init-weights", "--weights"},
      {"train.loss", "--loss"},
      {"train.epochs", "--epochs"},
      {"train.batch-size", "--batch-size"},
      {"train.lr", "--lr"},
      {"train.margin", "--margin"},
      {"train.contrastive-margin", "--contrastive-margin"},
      {"train.fine-tune", "--fine-tune"},
      {"train.n-pairs", "--n-pairs"},
      {"train.n-triplets", "--n-triplets"},
      {"train.negative-exclusion", "--negative-exclusion"},
      {"embed.source", "--source"},
      {"eval.tolerance", "--tolerance"},
      {"eval.pr-points", "--pr-points"},
  };
  for (FlagBinding& f : flags) {
    const std::string name = flag_names.at(f.key);
    if (std::string(f.key) == "train.fine-tune") {
      f.option = app.add_flag("--fine-tune{true},--no-fine-tune{false}", f.value,
                              "config key train.fine-tune");
    } else if (std::string(f.key) == "model.mean-subtract") {
      f.option = app.add_flag("--mean-subtract{true},--no-mean-subtract{false}", f.value,
                              "config key model.mean-subtract");
    } else {
      f.option = app.add_option(name, f.value, std::string("config key ") + f.key);
    }
  }

  for (const std::string& name : seasonmatch::subcommand_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " stage");
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // usage errors -> 1
  }

  try {
    seasonmatch::RunConfig cfg = config_file.empty()
                                     ? seasonmatch::RunConfig::defaults()
                                     : seasonmatch::RunConfig::from_file(config_file);
    for (const FlagBinding& f : flags)
      if (f.option && f.option->count() > 0) cfg.apply(f.key, f.value);

    for (CLI::App* sub : app.get_subcommands()) {
      seasonmatch::run_subcommand(sub->get_name(), cfg);
      std::fprintf(stderr, "seasonmatch: %s done -> %s\n", sub->get_name().c_str(),
                   cfg.out_dir.string().c_str());
    }
    return 0;
  } catch (const seasonmatch::UsageError& e) {
    std::fprintf(stderr, "seasonmatch: %s\n", e.what());
    return 1;
  } catch (const seasonmatch::NumericalError& e) {
    std::fprintf(stderr, "seasonmatch: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "seasonmatch: %s\n", e.what());
    return 2;
  }
}
