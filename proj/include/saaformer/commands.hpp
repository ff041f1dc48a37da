#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "saaformer/metrics.hpp"
#include "saaformer/model.hpp"

namespace saaformer {

constexpr const char* kToolVersion = "saaformer 0.1.0";

// Fixed 16-color classification-map palette; class k uses entry (k-1) mod 16
// and unlabeled pixels render black.
inline const std::array<std::array<unsigned char, 3>, 16>& map_palette() {
  static const std::array<std::array<unsigned char, 3>, 16> palette = {{
      {230, 25, 75},   {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
      {245, 130, 48},  {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
      {210, 245, 60},  {250, 190, 190}, {0, 128, 128},  {170, 110, 40},
      {128, 0, 0},     {170, 255, 195}, {128, 128, 0},  {0, 0, 128},
  }};
  return palette;
}

// Binary PPM (P6) class map; row-major, one RGB triple per pixel.
inline void write_map_ppm(const std::string& path, const LabelMap& map) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path);
  os << "P6\n" << map.width << ' ' << map.height << "\n255\n";
  const auto& palette = map_palette();
  for (std::uint16_t id : map.ids) {
    unsigned char rgb[3] = {0, 0, 0};
    if (id > 0) {
      const auto& p = palette[(id - 1) % palette.size()];
      rgb[0] = p[0];
      rgb[1] = p[1];
      rgb[2] = p[2];
    }
    os.write(reinterpret_cast<const char*>(rgb), 3);
  }
  if (!os) throw FormatError("write failed: " + path);
}

// ---- command arguments ------------------------------------------------------------

struct GenArgs {
  std::size_t height = 48;
  std::size_t width = 48;
  std::size_t bands = 32;
  std::size_t classes = 4;
  std::size_t tile = 12;
  double noise = 0.05;
  std::uint64_t seed = 0;
  std::string out;
};

struct SplitArgs {
  std::string data;
  std::string mode = "block";  // random | block
  double train_frac = 0.05;
  std::size_t block = 12;
  std::size_t gap = 4;
  std::size_t patch = 5;
  std::size_t stride = 4;
  std::uint64_t seed = 0;
  std::string out;
};

struct TrainArgs {
  std::string data;
  std::string split;
  std::size_t epochs = 30;
  std::size_t batch = 64;
  double lr = 5e-4;
  std::size_t embed = 128;
  std::size_t heads = 4;
  std::size_t depth = 2;
  std::vector<std::size_t> levels = {128, 64, 32};
  bool multi_level = true;
  double dropout = 0.1;
  std::uint64_t seed = 0;
  std::string out;  // checkpoint path; trace lands at out + ".trace.json"
};

struct EvalArgs {
  std::string data;
  std::string split;
  std::string ckpt;
  std::string report;
  bool audit_overlap = false;
};

struct AuditArgs {
  std::string data;
  std::string split;
  std::size_t patch = 0;  // 0: use the split's patch size
};

struct MapArgs {
  std::string data;
  std::string ckpt;
  std::string out;
};

// ---- run manifests -----------------------------------------------------------------

namespace detail {

inline void write_manifest(const std::string& primary_out, const std::string& command,
                           std::uint64_t seed, const nlohmann::json& config,
                           const nlohmann::json& inputs, const nlohmann::json& outputs) {
  nlohmann::json j;
  j["tool"] = kToolVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  const std::string path = primary_out + ".manifest.json";
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path);
  os << j.dump(2) << '\n';
  if (!os) throw FormatError("write failed: " + path);
}

inline LabelMap require_labels(const std::pair<HsiCube, std::optional<LabelMap>>& loaded,
                               const std::string& path) {
  if (!loaded.second) throw FormatError("cube " + path + " carries no labels");
  return *loaded.second;
}

}  // namespace detail

// ---- commands -----------------------------------------------------------------------

inline void run_gen(const GenArgs& a) {
  if (a.out.empty()) throw ValueError("gen: missing output path");
  auto [cube, labels] =
      generate_synthetic(a.height, a.width, a.bands, a.classes, a.tile, a.noise, a.seed);
  write_cube(a.out, cube, &labels);
  detail::write_manifest(a.out, "gen", a.seed,
                         {{"height", a.height},
                          {"width", a.width},
                          {"bands", a.bands},
                          {"classes", a.classes},
                          {"tile", a.tile},
                          {"noise", a.noise}},
                         nlohmann::json::object(), {{"cube", a.out}});
}

inline void run_split(const SplitArgs& a) {
  if (a.out.empty()) throw ValueError("split: missing output path");
  auto loaded = read_cube(a.data);
  const LabelMap labels = detail::require_labels(loaded, a.data);
  SplitSpec spec;
  if (a.mode == "random") {
    spec = random_split(labels, a.train_frac, a.patch, a.seed);
  } else if (a.mode == "block") {
    spec = block_split(labels, a.block, a.gap, a.patch, a.stride, a.seed);
  } else {
    throw ValueError("split: unknown mode '" + a.mode + "'");
  }
  write_split(a.out, spec);
  nlohmann::json cfg{{"mode", a.mode}, {"patch", a.patch}};
  if (a.mode == "random") {
    cfg["train_frac"] = a.train_frac;
  } else {
    cfg["block"] = a.block;
    cfg["gap"] = a.gap;
    cfg["stride"] = a.stride;
  }
  detail::write_manifest(a.out, "split", a.seed, cfg, {{"data", a.data}}, {{"split", a.out}});
}

inline SaaFormerConfig model_config_from(const TrainArgs& a, std::size_t bands,
                                         std::size_t classes, std::size_t patch) {
  SaaFormerConfig cfg;
  cfg.in_bands = bands;
  cfg.embed_dim = a.embed;
  cfg.heads = a.heads;
  cfg.depth = a.depth;
  cfg.level_lengths = a.multi_level ? a.levels : std::vector<std::size_t>{a.embed};
  cfg.patch = patch;
  cfg.dropout_rate = a.dropout;
  cfg.classes = classes;
  return cfg;
}

inline void run_train(const TrainArgs& a) {
  if (a.out.empty()) throw ValueError("train: missing output path");
  auto loaded = read_cube(a.data);
  const HsiCube& cube = loaded.first;
  const LabelMap labels = detail::require_labels(loaded, a.data);
  const SplitSpec split = read_split(a.split);
  const SaaFormerConfig cfg = model_config_from(a, cube.bands, labels.class_count(), split.patch);
  TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch = a.batch;
  tc.lr = a.lr;
  tc.seed = a.seed;
  auto [params, trace] = train<double>(cube, labels, split, cfg, tc);
  save_checkpoint(a.out, params);

  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : trace) epochs.push_back({{"epoch", e.epoch}, {"loss", e.mean_loss}});
  const std::string trace_path = a.out + ".trace.json";
  std::ofstream ts(trace_path, std::ios::binary);
  if (!ts) throw FormatError("cannot open for writing: " + trace_path);
  ts << nlohmann::json{{"epochs", epochs}}.dump(2) << '\n';

  detail::write_manifest(a.out, "train", a.seed,
                         {{"epochs", a.epochs},
                          {"batch", a.batch},
                          {"lr", a.lr},
                          {"embed", a.embed},
                          {"heads", a.heads},
                          {"depth", a.depth},
                          {"levels", cfg.level_lengths},
                          {"multi_level", a.multi_level},
                          {"dropout", a.dropout}},
                         {{"data", a.data}, {"split", a.split}},
                         {{"checkpoint", a.out}, {"trace", trace_path}});
}

inline nlohmann::json run_eval(const EvalArgs& a) {
  if (a.report.empty()) throw ValueError("eval: missing report path");
  auto loaded = read_cube(a.data);
  const HsiCube& cube = loaded.first;
  const LabelMap labels = detail::require_labels(loaded, a.data);
  const SplitSpec split = read_split(a.split);
  SaaFormerParams<double> params = load_checkpoint<double>(a.ckpt);
  ConfusionMatrix cm(params.config.classes);
  std::vector<ScoredSample> scored;
  scored.reserve(split.test.size());
  OverlapAuditor auditor(split.train, split.patch);
  for (const auto& [r, c] : split.test) {
    const int truth = static_cast<int>(labels.at(r, c));
    if (truth == 0)
      throw ConstraintError("eval: test center (" + std::to_string(r) + "," + std::to_string(c) +
                            ") is unlabeled");
    const int pred = predict_one(cube, r, c, params);
    cm.accumulate(truth, pred);
    if (a.audit_overlap) scored.push_back({truth, pred, auditor.rate({r, c})});
  }
  std::array<BucketAccuracy, 3> buckets{};
  if (a.audit_overlap) buckets = bucketed_accuracy(scored);
  nlohmann::json report = metrics_report_json(cm, a.audit_overlap ? &buckets : nullptr);
  report["test_count"] = split.test.size();
  std::ofstream os(a.report, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + a.report);
  os << report.dump(2) << '\n';
  if (!os) throw FormatError("write failed: " + a.report);
  detail::write_manifest(a.report, "eval", 0, {{"audit_overlap", a.audit_overlap}},
                         {{"data", a.data}, {"split", a.split}, {"checkpoint", a.ckpt}},
                         {{"report", a.report}});
  return report;
}

// Overlap histogram of the split's test samples against its train windows.
// Returns the report; the CLI prints it to stdout.
inline nlohmann::json run_audit(const AuditArgs& a) {
  auto loaded = read_cube(a.data);
  const SplitSpec split = read_split(a.split);
  const std::size_t patch = a.patch ? a.patch : split.patch;
  OverlapAuditor auditor(split.train, patch);
  std::vector<double> rates;
  rates.reserve(split.test.size());
  double sum = 0;
  for (const auto& center : split.test) {
    const double r = auditor.rate(center);
    rates.push_back(r);
    sum += r;
  }
  const OverlapBuckets buckets = bucket_overlap(rates);
  nlohmann::json j;
  j["patch"] = patch;
  j["test_count"] = rates.size();
  j["mean_overlap"] = rates.empty() ? 0.0 : sum / static_cast<double>(rates.size());
  const auto frac = [&](std::size_t n) {
    return rates.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(rates.size());
  };
  j["buckets"] = {{"no_overlap", {{"count", buckets.zero}, {"fraction", frac(buckets.zero)}}},
                  {"overlap_0_to_50", {{"count", buckets.mid}, {"fraction", frac(buckets.mid)}}},
                  {"overlap_above_50", {{"count", buckets.high}, {"fraction", frac(buckets.high)}}}};
  return j;
}

inline void run_map(const MapArgs& a) {
  if (a.out.empty()) throw ValueError("map: missing output path");
  auto loaded = read_cube(a.data);
  const HsiCube& cube = loaded.first;
  const LabelMap labels = detail::require_labels(loaded, a.data);
  SaaFormerParams<double> params = load_checkpoint<double>(a.ckpt);
  const LabelMap prediction = predict_map(cube, labels, params);
  write_map_ppm(a.out, prediction);
  detail::write_manifest(a.out, "map", 0, nlohmann::json::object(),
                         {{"data", a.data}, {"checkpoint", a.ckpt}}, {{"map", a.out}});
}

// Re-runs a command from its manifest; outputs are reproduced bit-exactly
// within one build of the tool.
inline void replay_manifest(const std::string& manifest_path) {
  std::ifstream is(manifest_path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + manifest_path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad manifest " + manifest_path + ": " + e.what());
  }
  try {
    const std::string command = j.at("command").get<std::string>();
    const auto& cfg = j.at("config");
    const auto& inputs = j.at("inputs");
    const auto& outputs = j.at("outputs");
    if (command == "gen") {
      GenArgs a;
      a.height = cfg.at("height").get<std::size_t>();
      a.width = cfg.at("width").get<std::size_t>();
      a.bands = cfg.at("bands").get<std::size_t>();
      a.classes = cfg.at("classes").get<std::size_t>();
      a.tile = cfg.at("tile").get<std::size_t>();
      a.noise = cfg.at("noise").get<double>();
      a.seed = j.at("seed").get<std::uint64_t>();
      a.out = outputs.at("cube").get<std::string>();
      run_gen(a);
    } else if (command == "split") {
      SplitArgs a;
      a.data = inputs.at("data").get<std::string>();
      a.mode = cfg.at("mode").get<std::string>();
      a.patch = cfg.at("patch").get<std::size_t>();
      if (a.mode == "random") {
        a.train_frac = cfg.at("train_frac").get<double>();
      } else {
        a.block = cfg.at("block").get<std::size_t>();
        a.gap = cfg.at("gap").get<std::size_t>();
        a.stride = cfg.at("stride").get<std::size_t>();
      }
      a.seed = j.at("seed").get<std::uint64_t>();
      a.out = outputs.at("split").get<std::string>();
      run_split(a);
    } else if (command == "train") {
      TrainArgs a;
      a.data = inputs.at("data").get<std::string>();
      a.split = inputs.at("split").get<std::string>();
      a.epochs = cfg.at("epochs").get<std::size_t>();
      a.batch = cfg.at("batch").get<std::size_t>();
      a.lr = cfg.at("lr").get<double>();
      a.embed = cfg.at("embed").get<std::size_t>();
      a.heads = cfg.at("heads").get<std::size_t>();
      a.depth = cfg.at("depth").get<std::size_t>();
      a.levels = cfg.at("levels").get<std::vector<std::size_t>>();
      a.multi_level = cfg.at("multi_level").get<bool>();
      a.dropout = cfg.at("dropout").get<double>();
      a.seed = j.at("seed").get<std::uint64_t>();
      a.out = outputs.at("checkpoint").get<std::string>();
      run_train(a);
    } else if (command == "eval") {
      EvalArgs a;
      a.data = inputs.at("data").get<std::string>();
      a.split = inputs.at("split").get<std::string>();
      a.ckpt = inputs.at("checkpoint").get<std::string>();
      a.report = outputs.at("report").get<std::string>();
      a.audit_overlap = cfg.at("audit_overlap").get<bool>();
      run_eval(a);
    } else if (command == "map") {
      MapArgs a;
      a.data = inputs.at("data").get<std::string>();
      a.ckpt = inputs.at("checkpoint").get<std::string>();
      a.out = outputs.at("map").get<std::string>();
      run_map(a);
    } else {
      throw FormatError("bad manifest " + manifest_path + ": unknown command '" + command + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad manifest " + manifest_path + ": " + e.what());
  }
}

}  // namespace saaformer
