#include "seasonmatch/stages.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <map>
#include <sstream>

#include "seasonmatch/descriptor_io.hpp"
#include "seasonmatch/error.hpp"
#include "seasonmatch/manifest.hpp"
#include "seasonmatch/mining.hpp"
#include "seasonmatch/plot.hpp"
#include "seasonmatch/report.hpp"
#include "seasonmatch/retrieval.hpp"
#include "seasonmatch/rng.hpp"
#include "seasonmatch/synth.hpp"
#include "seasonmatch/util.hpp"
#include "seasonmatch/weights_io.hpp"

namespace seasonmatch {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCorpusRaw = "corpus_raw.txt";
constexpr const char* kCorpusAligned = "corpus_aligned.txt";
constexpr const char* kPartition = "partition.txt";
constexpr const char* kSamples = "samples.txt";
constexpr const char* kModel = "model.smw";

// ---- artifact bookkeeping -------------------------------------------------

class StageWriter {
 public:
  StageWriter(const RunConfig& cfg, std::string stage)
      : root_(cfg.out_dir), stage_(std::move(stage)) {
    fs::create_directories(root_);
  }

  fs::path path(const std::string& rel) const { return root_ / rel; }

  void note(const std::string& rel) { produced_.push_back(rel); }

  void write_text(const std::string& rel, std::string_view content) {
    write_file_atomic(path(rel), content);
    note(rel);
  }

  // Final step: manifest of produced files with checksums.
  void finish() {
    std::sort(produced_.begin(), produced_.end());
    std::string out = "# seasonmatch artifacts stage=" + stage_ + "\n";
    char buf[16];
    for (const std::string& rel : produced_) {
      std::snprintf(buf, sizeof(buf), "%08x", file_crc32(path(rel)));
      out += std::string(buf) + "  " + rel + "\n";
    }
    write_file_atomic(path(stage_ + ".manifest"), out);
  }

 private:
  fs::path root_;
  std::string stage_;
  std::vector<std::string> produced_;
};

fs::path require_artifact(const RunConfig& cfg, const std::string& rel,
                          const std::string& producing_stage) {
  const fs::path p = cfg.out_dir / rel;
  if (!fs::exists(p))
    throw DataError("missing artifact '" + rel + "'; run the `" + producing_stage +
                    "` stage first");
  return p;
}

// ---- corpus meta files ----------------------------------------------------

void save_corpus_meta(StageWriter& w, const std::string& rel,
                      const std::vector<std::pair<std::string, std::string>>& seasons) {
  std::string out = "# seasonmatch corpus\n";
  for (const auto& [season, manifest] : seasons) out += "season " + season + " " + manifest + "\n";
  w.write_text(rel, out);
}

std::vector<std::pair<std::string, std::string>> load_corpus_meta(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != "# seasonmatch corpus")
    throw DataError("not a corpus meta file: " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  while (std::getline(in, line)) {
    const std::string l = trim(line);
    if (l.empty() || l[0] == '#') continue;
    const auto cols = split(l, ' ');
    if (cols.size() != 3 || cols[0] != "season")
      throw DataError("bad corpus meta line: '" + l + "'");
    out.emplace_back(cols[1], cols[2]);
  }
  if (out.empty()) throw DataError("corpus meta lists no seasons: " + path.string());
  return out;
}

AlignedCorpus load_corpus_from_meta(const RunConfig& cfg, const fs::path& meta,
                                    ImageLoad mode) {
  AlignedCorpus corpus;
  for (const auto& [season, rel] : load_corpus_meta(meta)) {
    corpus.traverses.push_back(load_traverse(cfg.out_dir / rel, mode, season));
  }
  corpus.validate();
  return corpus;
}

// Manifest image paths are stored relative to the manifest's directory
// so whole run directories stay relocatable.
Traverse with_relative_paths(const Traverse& t, const fs::path& manifest_dir) {
  Traverse out = t;
  for (Frame& f : out.frames)
    f.image_path = fs::relative(fs::path(f.image_path), manifest_dir).generic_string();
  return out;
}

// ---- samples file ---------------------------------------------------------

std::string samples_text(const std::string& loss, const TrainingSamples& samples) {
  std::string out;
  if (const auto* pairs = std::get_if<std::vector<PairSample>>(&samples)) {
    out = "# seasonmatch samples kind=pair loss=" + loss + " count=" +
          std::to_string(pairs->size()) + "\n";
    for (const PairSample& p : *pairs) {
      out += "pair " + std::to_string(p.anchor.traverse) + " " + std::to_string(p.anchor.index) +
             " " + std::to_string(p.other.traverse) + " " + std::to_string(p.other.index) + " " +
             (p.label == PairLabel::positive ? "pos" : "neg") + "\n";
    }
  } else {
    const auto& triplets = std::get<std::vector<TripletSample>>(samples);
    out = "# seasonmatch samples kind=triplet loss=" + loss + " count=" +
          std::to_string(triplets.size()) + "\n";
    for (const TripletSample& t : triplets) {
      out += "triplet " + std::to_string(t.neutral.traverse) + " " +
             std::to_string(t.neutral.index) + " " + std::to_string(t.positive.traverse) + " " +
             std::to_string(t.positive.index) + " " + std::to_string(t.negative.traverse) + " " +
             std::to_string(t.negative.index) + "\n";
    }
  }
  return out;
}

TrainingSamples load_samples(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("# seasonmatch samples", 0) != 0)
    throw DataError("not a samples file: " + path.string());
  const bool is_pair = line.find("kind=pair") != std::string::npos;
  std::vector<PairSample> pairs;
  std::vector<TripletSample> triplets;
  while (std::getline(in, line)) {
    const std::string l = trim(line);
    if (l.empty() || l[0] == '#') continue;
    const auto cols = split(l, ' ');
    if (is_pair && cols.size() == 6 && cols[0] == "pair") {
      PairSample p;
      p.anchor = {static_cast<int>(parse_int(cols[1], "traverse")),
                  static_cast<int>(parse_int(cols[2], "index"))};
      p.other = {static_cast<int>(parse_int(cols[3], "traverse")),
                 static_cast<int>(parse_int(cols[4], "index"))};
      if (cols[5] == "pos") {
        p.label = PairLabel::positive;
      } else if (cols[5] == "neg") {
        p.label = PairLabel::negative;
      } else {
        throw DataError("bad pair label '" + cols[5] + "' in " + path.string());
      }
      pairs.push_back(p);
    } else if (!is_pair && cols.size() == 7 && cols[0] == "triplet") {
      TripletSample t;
      t.neutral = {static_cast<int>(parse_int(cols[1], "traverse")),
                   static_cast<int>(parse_int(cols[2], "index"))};
      t.positive = {static_cast<int>(parse_int(cols[3], "traverse")),
                    static_cast<int>(parse_int(cols[4], "index"))};
      t.negative = {static_cast<int>(parse_int(cols[5], "traverse")),
                    static_cast<int>(parse_int(cols[6], "index"))};
      triplets.push_back(t);
    } else {
      throw DataError("bad samples line: '" + l + "' in " + path.string());
    }
  }
  if (is_pair) {
    if (pairs.empty()) throw DataError("samples file has no pairs: " + path.string());
    return pairs;
  }
  if (triplets.empty()) throw DataError("samples file has no triplets: " + path.string());
  return triplets;
}

// ---- stages ---------------------------------------------------------------

void stage_synth(const RunConfig& cfg) {
  StageWriter w(cfg, "synth");
  const AlignedCorpus corpus = synth_corpus(cfg.synth);
  std::vector<std::pair<std::string, std::string>> seasons;
  for (const Traverse& t : corpus.traverses) {
    Traverse on_disk = t;
    for (Frame& f : on_disk.frames) {
      char name[32];
      std::snprintf(name, sizeof(name), "%06d.png", f.index);
      const std::string rel = "images/" + t.season + "/" + name;
      save_image(f.image, w.path(rel));
      w.note(rel);
      f.image_path = "../images/" + t.season + "/" + name;
    }
    const std::string manifest_rel = "manifests/" + t.season + ".csv";
    w.write_text(manifest_rel, manifest_csv(on_disk));
    seasons.emplace_back(t.season, manifest_rel);
  }
  save_corpus_meta(w, kCorpusRaw, seasons);
  w.finish();
}

void stage_preprocess(const RunConfig& cfg) {
  StageWriter w(cfg, "preprocess");
  std::vector<Traverse> raw;
  if (!cfg.corpus_manifests.empty()) {
    for (const auto& [season, path] : cfg.corpus_manifests)
      raw.push_back(load_traverse(path, ImageLoad::eager, season));
  } else {
    const fs::path meta = require_artifact(cfg, kCorpusRaw, "synth");
    for (const auto& [season, rel] : load_corpus_meta(meta))
      raw.push_back(load_traverse(cfg.out_dir / rel, ImageLoad::eager, season));
  }

  std::string log = "season,frame,speed,intensity,kept\n";
  std::vector<Traverse> filtered;
  for (const Traverse& t : raw) {
    FilterResult fr = filter_frames(t, cfg.speed_min, cfg.darkness_min);
    for (const FilterDecision& d : fr.decisions) {
      log += t.season + "," + std::to_string(d.input_index) + "," + fmt_g17(d.speed_kmh) + "," +
             fmt_g17(d.intensity) + "," + (d.kept ? "1" : "0") + "\n";
    }
    filtered.push_back(std::move(fr.traverse));
  }
  w.write_text("filter_log.csv", log);

  const AlignedCorpus corpus = align(filtered, cfg.align_tol_m);
  std::vector<std::pair<std::string, std::string>> seasons;
  for (const Traverse& t : corpus.traverses) {
    const std::string rel = "aligned/" + t.season + ".csv";
    w.write_text(rel, manifest_csv(with_relative_paths(t, w.path("aligned"))));
    seasons.emplace_back(t.season, rel);
  }
  save_corpus_meta(w, kCorpusAligned, seasons);
  w.finish();
}

int corpus_length_from_meta(const RunConfig& cfg, const fs::path& meta) {
  const auto seasons = load_corpus_meta(meta);
  const Traverse t = load_traverse(cfg.out_dir / seasons.front().second, ImageLoad::deferred,
                                   seasons.front().first);
  return t.size();
}

void stage_partition(const RunConfig& cfg) {
  StageWriter w(cfg, "partition");
  const fs::path meta = require_artifact(cfg, kCorpusAligned, "preprocess");
  const int n = corpus_length_from_meta(cfg, meta);
  if (cfg.test_segments.empty())
    throw UsageError("partition.test-segments is empty; set it via config or --test-segments");
  const Partition p = make_partition(n, cfg.test_segments, cfg.buffer);
  save_partition(p, w.path(kPartition));
  w.note(kPartition);
  w.finish();
}

void stage_mine(const RunConfig& cfg) {
  StageWriter w(cfg, "mine");
  require_artifact(cfg, kCorpusAligned, "preprocess");
  const AlignedCorpus corpus =
      load_corpus_from_meta(cfg, cfg.out_dir / kCorpusAligned, ImageLoad::deferred);
  const Partition partition = load_partition(require_artifact(cfg, kPartition, "partition"));
  const std::uint64_t seed = derive_seed(cfg.seed, "mine");
  TrainingSamples samples;
  if (cfg.loss == "contrastive") {
    samples = mine_pairs(corpus, cfg.labeling, cfg.n_pairs, cfg.n_pairs, seed,
                         cfg.train.negative_exclusion, &partition);
  } else {
    samples = mine_triplets(corpus, cfg.labeling, cfg.n_triplets, seed,
                            cfg.train.negative_exclusion, &partition);
  }
  w.write_text(kSamples, samples_text(cfg.loss, samples));
  w.finish();
}

void stage_train(const RunConfig& cfg) {
  StageWriter w(cfg, "train");
  require_artifact(cfg, kCorpusAligned, "preprocess");
  const AlignedCorpus corpus =
      load_corpus_from_meta(cfg, cfg.out_dir / kCorpusAligned, ImageLoad::eager);
  const TrainingSamples samples = load_samples(require_artifact(cfg, kSamples, "mine"));

  const Image& probe = corpus.traverse(0).frames.front().image;
  EmbeddingModel model = make_configured_model(cfg, probe.h, probe.w, probe.c);
  if (!cfg.init_weights.empty()) load_weights(model, cfg.init_weights);

  const TrainConfig tc = cfg.resolved_train();
  std::vector<EpochStats> history = train(model, corpus, samples, tc,
                                          [&](const EmbeddingModel& m, const EpochStats& st) {
                                            char name[48];
                                            std::snprintf(name, sizeof(name),
                                                          "checkpoints/epoch_%03d.smw", st.epoch);
                                            save_weights(m, w.path(name));
                                            w.note(name);
                                          });
  save_weights(model, w.path(kModel));
  w.note(kModel);
  w.write_text("train_log.csv", training_log_csv(history));
  w.finish();
}

void stage_embed(const RunConfig& cfg) {
  StageWriter w(cfg, "embed");
  require_artifact(cfg, kCorpusAligned, "preprocess");
  const AlignedCorpus corpus =
      load_corpus_from_meta(cfg, cfg.out_dir / kCorpusAligned, ImageLoad::eager);
  const Partition partition = load_partition(require_artifact(cfg, kPartition, "partition"));
  const std::vector<int> test = partition.test_indices();

  const Image& probe = corpus.traverse(0).frames.front().image;
  EmbeddingModel model = make_configured_model(cfg, probe.h, probe.w, probe.c);
  if (!cfg.init_weights.empty()) {
    load_weights(model, cfg.init_weights);
  } else {
    load_weights(model, require_artifact(cfg, kModel, "train"));
  }

  for (const Traverse& t : corpus.traverses) {
    const DescriptorSet set = describe_frames(t, model, test, cfg.embed_source);
    const std::string rel = "descriptors/" + t.season + ".smd";
    save_descriptors(set, w.path(rel));
    w.note(rel);
    std::string idx;
    for (int i : test) idx += std::to_string(i) + "\n";
    w.write_text("descriptors/" + t.season + ".indices.txt", idx);
  }
  w.finish();
}

std::vector<int> load_indices(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<int> out;
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty()) out.push_back(static_cast<int>(parse_int(line, "frame index")));
  if (out.empty()) throw DataError("empty index sidecar: " + path.string());
  return out;
}

void stage_evaluate(const RunConfig& cfg) {
  StageWriter w(cfg, "evaluate");
  const fs::path meta = require_artifact(cfg, kCorpusAligned, "preprocess");
  const auto seasons = load_corpus_meta(meta);

  EvalReport report;
  report.tolerance = cfg.tolerance;
  std::vector<DescriptorSet> sets;
  std::vector<std::vector<int>> indices;
  for (const auto& [season, rel] : seasons) {
    report.seasons.push_back(season);
    const fs::path smd = require_artifact(cfg, "descriptors/" + season + ".smd", "embed");
    sets.push_back(load_descriptors(smd));
    indices.push_back(
        load_indices(require_artifact(cfg, "descriptors/" + season + ".indices.txt", "embed")));
  }

  std::vector<MatchResult> pooled;
  for (std::size_t qi = 0; qi < sets.size(); ++qi) {
    for (std::size_t ri = 0; ri < sets.size(); ++ri) {
      if (qi == ri) continue;
      DescriptorIndex idx = build_index(sets[ri], indices[ri], report.seasons[ri]);
      EvalEntry e;
      e.input = report.seasons[qi];
      e.reference = report.seasons[ri];
      e.matches = query_all(idx, sets[qi], indices[qi]);
      e.fc = fraction_correct(e.matches, cfg.tolerance);
      pooled.insert(pooled.end(), e.matches.begin(), e.matches.end());
      report.entries.push_back(std::move(e));
    }
  }
  report.pr_curve = precision_recall(pooled, linspace_thresholds(pooled, cfg.pr_points));

  w.write_text("eval/fc_matrix.csv", fc_matrix_csv(report));
  w.write_text("eval/pr_curve.csv", pr_curve_csv(report.pr_curve));
  for (const EvalEntry& e : report.entries)
    w.write_text("eval/matches_" + e.input + "_" + e.reference + ".csv", matches_csv(e));
  w.finish();
}

void stage_report(const RunConfig& cfg) {
  StageWriter w(cfg, "report");
  const std::vector<EvalEntry> entries =
      parse_fc_matrix_csv(read_file(require_artifact(cfg, "eval/fc_matrix.csv", "evaluate")));
  const std::vector<PrPoint> curve =
      parse_pr_curve_csv(read_file(require_artifact(cfg, "eval/pr_curve.csv", "evaluate")));

  w.write_text("report/fc_table.txt", fc_table_text(entries));
  std::vector<std::string> references;
  for (const EvalEntry& e : entries)
    if (std::find(references.begin(), references.end(), e.reference) == references.end())
      references.push_back(e.reference);
  for (const std::string& ref : references) {
    const std::string rel = "report/fc_bars_" + ref + ".png";
    save_fc_bar_chart(ref, entries, w.path(rel));
    w.note(rel);
  }
  save_pr_plot(curve, w.path("report/pr_curve.png"));
  w.note("report/pr_curve.png");
  w.finish();
}

}  // namespace

AlignedCorpus load_aligned_corpus(const RunConfig& cfg) {
  const fs::path meta = require_artifact(cfg, kCorpusAligned, "preprocess");
  return load_corpus_from_meta(cfg, meta, ImageLoad::eager);
}

EmbeddingModel make_configured_model(const RunConfig& cfg, int h, int w, int c) {
  const Architecture arch = Architecture::desk(h, w, c, cfg.model_widths);
  EmbeddingModel m = EmbeddingModel::create(arch, cfg.tap, derive_seed(cfg.seed, "model-init"));
  m.mean_subtract = cfg.mean_subtract;
  return m;
}

std::vector<std::string> subcommand_names() {
  return {"synth", "preprocess", "partition", "mine", "train", "embed", "evaluate", "report"};
}

void run_subcommand(const std::string& name, const RunConfig& cfg) {
  if (name == "synth") return stage_synth(cfg);
  if (name == "preprocess") return stage_preprocess(cfg);
  if (name == "partition") return stage_partition(cfg);
  if (name == "mine") return stage_mine(cfg);
  if (name == "train") return stage_train(cfg);
  if (name == "embed") return stage_embed(cfg);
  if (name == "evaluate") return stage_evaluate(cfg);
  if (name == "report") return stage_report(cfg);
  throw UsageError("unknown subcommand '" + name + "'");
}

}  // namespace seasonmatch
