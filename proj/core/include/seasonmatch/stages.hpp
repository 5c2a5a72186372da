#pragma once

#include <string>
#include <vector>

#include "seasonmatch/backbone.hpp"
#include "seasonmatch/config.hpp"

namespace seasonmatch {

// Pipeline stages behind the CLI subcommands. Each stage reads the
// artifacts of its upstream stages from cfg.out_dir, writes its own
// atomically, and finishes with a `<stage>.manifest` listing every
// produced file with a CRC-32. A missing upstream artifact raises a
// DataError naming the stage that produces it.
//
// Stage graph:
//   synth      -> images/, manifests/, corpus_raw.txt
//   preprocess -> aligned/, corpus_aligned.txt, filter_log.csv
//   partition  -> partition.txt
//   mine       -> samples.txt
//   train      -> model.smw, train_log.csv, checkpoints/
//   embed      -> descriptors/<season>.smd (+ .indices.txt)
//   evaluate   -> eval/fc_matrix.csv, eval/pr_curve.csv, eval/matches_*.csv
//   report     -> report/fc_table.txt, report/fc_bars_*.png, report/pr_curve.png
void run_subcommand(const std::string& name, const RunConfig& cfg);

std::vector<std::string> subcommand_names();

// Loads the aligned corpus written by `preprocess` (eagerly, with
// pixels). Exposed for tests and tools.
AlignedCorpus load_aligned_corpus(const RunConfig& cfg);

// Rebuilds the configured model architecture for a corpus image size.
EmbeddingModel make_configured_model(const RunConfig& cfg, int h, int w, int c);

}  // namespace seasonmatch
