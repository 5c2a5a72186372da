#include "seasonmatch/config.hpp"

#include <sstream>

#include "seasonmatch/error.hpp"
#include "seasonmatch/rng.hpp"
#include "seasonmatch/util.hpp"

namespace seasonmatch {

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError("bad boolean '" + v + "' for " + key);
}

double to_double(const std::string& v, const std::string& key) {
  try {
    return parse_double(v, key);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

long long to_int(const std::string& v, const std::string& key) {
  try {
    return parse_int(v, key);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

std::vector<SynthCondition> parse_conditions(const std::string& v) {
  std::vector<SynthCondition> out;
  for (const std::string& item : split(v, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 5)
      throw UsageError("bad synth condition '" + item +
                       "'; expected name:brightness:hue:noise:whiten");
    SynthCondition c;
    c.name = trim(parts[0]);
    if (c.name.empty()) throw UsageError("synth condition needs a name in '" + item + "'");
    c.brightness = to_double(parts[1], "brightness");
    c.hue = to_double(parts[2], "hue");
    c.noise = to_double(parts[3], "noise");
    c.whiten = to_double(parts[4], "whiten");
    out.push_back(std::move(c));
  }
  if (out.empty()) throw UsageError("synth.conditions is empty");
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_manifests(const std::string& v) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& item : split(v, ',')) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw UsageError("bad corpus manifest '" + item + "'; expected season=path");
    const std::string season = trim(item.substr(0, eq));
    const std::string path = trim(item.substr(eq + 1));
    if (season.empty() || path.empty())
      throw UsageError("bad corpus manifest '" + item + "'; expected season=path");
    out.emplace_back(season, path);
  }
  return out;
}

}  // namespace

RunConfig RunConfig::make_default() {
  RunConfig cfg;
  cfg.synth.conditions = SynthConfig::default_conditions();
  cfg.synth.n_places = 100;
  return cfg;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "out.dir") {
    out_dir = v;
  } else if (key == "seed") {
    seed = static_cast<std::uint64_t>(to_int(v, key));
  } else if (key == "corpus.manifests") {
    corpus_manifests = parse_manifests(v);
  } else if (key == "synth.places") {
    synth.n_places = static_cast<int>(to_int(v, key));
  } else if (key == "synth.conditions") {
    synth.conditions = parse_conditions(v);
  } else if (key == "synth.height") {
    synth.height = static_cast<int>(to_int(v, key));
  } else if (key == "synth.width") {
    synth.width = static_cast<int>(to_int(v, key));
  } else if (key == "synth.channels") {
    synth.channels = static_cast<int>(to_int(v, key));
  } else if (key == "filter.speed-min") {
    speed_min = to_double(v, key);
  } else if (key == "filter.darkness-min") {
    darkness_min = to_double(v, key);
  } else if (key == "align.tol-m") {
    align_tol_m = to_double(v, key);
  } else if (key == "labeling.sep") {
    labeling = PlaceLabeling::with_sep(static_cast<int>(to_int(v, key)));
  } else if (key == "partition.test-segments") {
    try {
      test_segments = parse_segments(v);
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
  } else if (key == "partition.buffer") {
    buffer = static_cast<int>(to_int(v, key));
  } else if (key == "model.widths") {
    model_widths.clear();
    for (const std::string& s : split(v, ','))
      model_widths.push_back(static_cast<int>(to_int(s, key)));
  } else if (key == "model.tap") {
    tap = v;
  } else if (key == "model.mean-subtract") {
    mean_subtract = parse_bool(v, key);
  } else if (key == "model.init-weights") {
    init_weights = v;
  } else if (key == "train.loss") {
    if (v != "triplet" && v != "contrastive")
      throw UsageError("train.loss must be 'triplet' or 'contrastive', got '" + v + "'");
    loss = v;
  } else if (key == "train.epochs") {
    train.epochs = static_cast<int>(to_int(v, key));
  } else if (key == "train.batch-size") {
    train.batch_size = static_cast<int>(to_int(v, key));
  } else if (key == "train.lr") {
    lr = to_double(v, key);
  } else if (key == "train.margin") {
    train.margin = to_double(v, key);
  } else if (key == "train.contrastive-margin") {
    train.contrastive_margin = to_double(v, key);
  } else if (key == "train.fine-tune") {
    train.fine_tune = parse_bool(v, key);
  } else if (key == "train.n-pairs") {
    n_pairs = static_cast<std::uint64_t>(to_int(v, key));
  } else if (key == "train.n-triplets") {
    n_triplets = static_cast<std::uint64_t>(to_int(v, key));
  } else if (key == "train.negative-exclusion") {
    train.negative_exclusion = static_cast<int>(to_int(v, key));
  } else if (key == "embed.source") {
    embed_source = v;
  } else if (key == "eval.tolerance") {
    tolerance = static_cast<int>(to_int(v, key));
  } else if (key == "eval.pr-points") {
    pr_points = static_cast<int>(to_int(v, key));
  } else {
    throw UsageError("unknown config key '" + key + "'");
  }
}

TrainConfig RunConfig::resolved_train() const {
  TrainConfig t = train;
  t.seed = derive_seed(seed, "train");
  t.learning_rate = lr.value_or(TrainConfig::default_lr(t.fine_tune));
  return t;
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string l = trim(line);
    if (l.empty() || l[0] == '#') continue;
    const std::size_t eq = l.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) + " has no '=': " + l);
    out.emplace_back(trim(l.substr(0, eq)), trim(l.substr(eq + 1)));
  }
  return out;
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg = make_default();
  for (const auto& [k, v] : parse_config_text(text)) cfg.apply(k, v);
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw UsageError("config file not found: " + path.string());
  return from_text(read_file(path));
}

}  // namespace seasonmatch
