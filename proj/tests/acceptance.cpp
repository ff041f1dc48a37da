// Acceptance suite: runs every acceptance criterion end to end and prints
// one PASS/FAIL line per criterion. Exits nonzero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "reference_model.hpp"
#include "saaformer/saaformer.hpp"

using namespace saaformer;
namespace fs = std::filesystem;

namespace {

std::string g_cli_path;
int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, name,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::string("<missing:") + path + ">";
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const char* tag) {
  fs::path dir = fs::temp_directory_path() / (std::string("saaf_accept_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---- criterion 1: full-model gradient check ---------------------------------

void criterion_gradients() {
  using R = long double;
  const auto t0 = std::chrono::steady_clock::now();
  SaaFormerConfig cfg;
  cfg.in_bands = 8;
  cfg.embed_dim = 16;
  cfg.heads = 2;
  cfg.depth = 1;
  cfg.level_lengths = {16, 8};
  cfg.patch = 5;
  cfg.dropout_rate = 0.1;
  cfg.classes = 3;
  auto params = SaaFormerParams<R>::init(cfg, 1);
  auto tensors = trainable_parameters(params);

  RngStream data(776);
  Tensor<R> x(Shape{5, 5, 8});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<R>(data.next_normal());
  const std::vector<int> label{1};

  auto loss_fn = [&](Tape<R>& tape) {
    RngStream drop(4242);  // identical dropout mask on every evaluation
    ForwardCtx<R> ctx{true, static_cast<R>(0.1), &drop};
    Tensor<R> xx = x;
    auto logits = reshape(tape, forward(tape, xx, params, ctx), Shape{1, 3});
    return cross_entropy(tape, logits, label);
  };
  auto rep = grad_check(loss_fn, tensors, static_cast<R>(1e-5));
  const double elapsed = seconds_since(t0);

  std::ostringstream msg;
  msg << parameter_count(params) << " parameters, max rel err " << static_cast<double>(rep.max_rel_error)
      << ", " << elapsed << " s";
  report(1, "full-model gradient suite", rep.max_rel_error < 1e-5 && elapsed < 60.0, msg.str());
}

// ---- criterion 2: attention vs scalar transcription ---------------------------

void criterion_attention_oracle() {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RngStream rng(seed * 17);
    auto p = AxialAttentionParams<double>::make(1, 1, 1, 2, 2, rng);
    for (auto* t : {&p.rq_row, &p.rk_row, &p.rv_row, &p.rq_col, &p.rk_col, &p.rv_col})
      for (std::size_t i = 0; i < t->size(); ++i) (*t)[i] = 0.3 * rng.next_normal();
    Tensor<double> x(Shape{2, 2, 1});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.next_normal();
    Tape<double> tape(false);
    auto y = axial_aggregation_attention(tape, x, p);
    auto ref = refmodel::axial_attention(x.data(), 2, 2, p);
    for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::abs(y[i] - ref[i]));
  }
  std::ostringstream msg;
  msg << "10 instances, worst abs deviation " << worst;
  report(2, "axial attention matches the scalar transcription", worst < 1e-10, msg.str());
}

// ---- criterion 3: shift identity and wrap-mask independence -------------------

void criterion_shift_mask() {
  bool identity_ok = true;
  RngStream rng(31);
  Tape<double> tape(false);
  for (std::size_t embed : {8u, 16u, 128u}) {
    Tensor<double> x(Shape{2, 3, embed});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.next_normal();
    for (std::size_t c = 2; c <= embed; c += 2) {
      if (embed % c != 0) continue;
      auto round = unshift_channels(tape, shift_channels(tape, x, c), c);
      if (round.data() != x.data()) identity_ok = false;
    }
  }

  bool mask_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    auto pair = EncoderBlockPairParams<double>::make(8, 4, 2, 3, rng);
    ForwardCtx<double> ctx;
    Tensor<double> x(Shape{3, 3, 8});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.next_normal();
    auto base = shifted_stage(tape, x, pair, ctx);
    auto xp = x.clone();
    for (std::size_t pos = 0; pos < 9; ++pos) {
      xp[pos * 8 + 6] += rng.next_normal();  // low half of the wrapped partition
      xp[pos * 8 + 7] += rng.next_normal();
    }
    auto moved = shifted_stage(tape, xp, pair, ctx);
    for (std::size_t pos = 0; pos < 9; ++pos)
      if (moved[pos * 8 + 0] != base[pos * 8 + 0] || moved[pos * 8 + 1] != base[pos * 8 + 1])
        mask_ok = false;
  }
  report(3, "shift/unshift identity and wrap-mask independence", identity_ok && mask_ok,
         identity_ok ? (mask_ok ? "bit-exact on all cases" : "cross-half influence detected")
                     : "shift round-trip failed");
}

// ---- criterion 4: leakage theorem ---------------------------------------------

void criterion_leakage() {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng(41);
  int accepted = 0;
  std::size_t leaking_block = 0;
  int attempts = 0;
  while (accepted < 50 && attempts < 400) {
    ++attempts;
    const std::size_t tile = 6 + 2 * rng.uniform_below(4);        // 6..12
    const std::size_t tiles = 4 + rng.uniform_below(4);           // scene = tile * tiles
    const std::size_t hw = tile * tiles;
    const std::size_t classes = 2 + rng.uniform_below(3);
    const std::size_t patch = 5;
    const std::size_t block = patch + rng.uniform_below(8);       // >= patch
    const std::size_t gap = patch - 1 + rng.uniform_below(3);     // >= patch-1
    const std::size_t stride = 2 + rng.uniform_below(3);
    const std::uint64_t seed = rng.next_u64();
    try {
      auto [cube, labels] = generate_synthetic(hw, hw, 4, classes, tile, 0.05, seed);
      (void)cube;
      auto spec = block_split(labels, block, gap, patch, stride, seed);
      OverlapAuditor auditor(spec.train, patch);
      for (const auto& center : spec.test)
        if (auditor.rate(center) != 0.0) ++leaking_block;
      ++accepted;
    } catch (const ConstraintError&) {
      continue;  // geometry cannot host every class; not a valid configuration
    }
  }

  auto [cube, labels] = generate_synthetic(48, 48, 4, 4, 12, 0.05, 99);
  (void)cube;
  auto random = random_split(labels, 0.05, 5, 99);
  OverlapAuditor auditor(random.train, 5);
  std::size_t leaking_random = 0;
  for (const auto& center : random.test)
    if (auditor.rate(center) > 0.0) ++leaking_random;
  const double random_frac =
      static_cast<double>(leaking_random) / static_cast<double>(random.test.size());
  const double elapsed = seconds_since(t0);

  std::ostringstream msg;
  msg << accepted << " block configs with " << leaking_block << " leaking samples; random split "
      << random_frac * 100.0 << "% leaking; " << elapsed << " s";
  report(4, "block sampling eliminates the leakage random sampling exhibits",
         accepted == 50 && leaking_block == 0 && random_frac > 0.5 && elapsed < 30.0, msg.str());
}

// ---- criterion 5: metrics oracle ------------------------------------------------

void criterion_metrics() {
  bool ok = true;
  std::ostringstream msg;

  ConfusionMatrix diag(3);
  diag.accumulate(1, 1);
  diag.accumulate(2, 2);
  diag.accumulate(3, 3);
  ok = ok && oa(diag) == 1.0 && aa(diag) == 1.0 && kappa(diag) == 1.0;

  ConfusionMatrix even(2);
  for (int i = 0; i < 2; ++i) {
    even.accumulate(1, 1);
    even.accumulate(1, 2);
    even.accumulate(2, 1);
    even.accumulate(2, 2);
  }
  ok = ok && oa(even) == 0.5 && std::abs(kappa(even)) < 1e-15;

  ConfusionMatrix worked(2);
  for (int i = 0; i < 3; ++i) worked.accumulate(1, 1);
  worked.accumulate(1, 2);
  for (int i = 0; i < 4; ++i) worked.accumulate(2, 2);
  ok = ok && oa(worked) == 0.875 && aa(worked) == 0.875 && kappa(worked) == 0.75;

  RngStream rng(51);
  double worst = 0;
  int compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng.uniform_below(5);
    ConfusionMatrix cm(k);
    const std::size_t n = 20 + rng.uniform_below(100);
    for (std::size_t s = 0; s < n; ++s)
      cm.accumulate(static_cast<int>(rng.uniform_below(k)) + 1,
                    static_cast<int>(rng.uniform_below(k)) + 1);
    for (std::size_t i = 1; i <= k; ++i)
      if (cm.row_sum(i) == 0) cm.accumulate(static_cast<int>(i), static_cast<int>(i));

    // brute-force recomputation straight from the definitions
    double total = 0, diag_sum = 0, marginal = 0, aa_ref = 0;
    for (std::size_t i = 1; i <= k; ++i) {
      double row = 0, col = 0;
      for (std::size_t j = 1; j <= k; ++j) {
        total += static_cast<double>(cm.at(i, j));
        row += static_cast<double>(cm.at(i, j));
        col += static_cast<double>(cm.at(j, i));
      }
      diag_sum += static_cast<double>(cm.at(i, i));
      marginal += row * col;
      aa_ref += static_cast<double>(cm.at(i, i)) / row;
    }
    aa_ref /= static_cast<double>(k);
    const double po = diag_sum / total;
    const double pe = marginal / (total * total);
    if (pe == 1.0) continue;
    ++compared;
    worst = std::max(worst, std::abs(oa(cm) - po));
    worst = std::max(worst, std::abs(aa(cm) - aa_ref));
    worst = std::max(worst, std::abs(kappa(cm) - (po - pe) / (1.0 - pe)));
  }
  ok = ok && worst <= 1e-12;
  msg << "worked matrices exact; " << compared << " fuzz matrices, worst deviation " << worst;
  report(5, "OA/AA/Kappa match hand values and brute force", ok, msg.str());
}

// ---- criteria 6-8: synthetic end-to-end, ablation, reproducibility ---------------

struct PipelinePaths {
  std::string scene, split, ckpt, trace, rep, map;
};

PipelinePaths run_pipeline(const fs::path& dir, std::uint64_t seed, bool multi_level,
                           std::size_t epochs) {
  PipelinePaths p;
  p.scene = (dir / "scene.hsic").string();
  p.split = (dir / "split.json").string();
  p.ckpt = (dir / "model.saaf").string();
  p.trace = p.ckpt + ".trace.json";
  p.rep = (dir / "report.json").string();
  p.map = (dir / "map.ppm").string();

  GenArgs g;
  g.height = 48;
  g.width = 48;
  g.bands = 32;
  g.classes = 4;
  g.tile = 12;
  g.noise = 0.05;
  g.seed = seed;
  g.out = p.scene;
  run_gen(g);

  SplitArgs s;
  s.data = p.scene;
  s.mode = "block";
  s.block = 12;
  s.gap = 4;
  s.patch = 5;
  s.seed = seed;
  s.out = p.split;
  run_split(s);

  TrainArgs t;
  t.data = p.scene;
  t.split = p.split;
  t.epochs = epochs;
  t.batch = 64;
  t.lr = 5e-4;
  t.embed = 32;
  t.heads = 2;
  t.depth = 1;
  t.levels = {32, 16};
  t.multi_level = multi_level;
  t.seed = seed;
  t.out = p.ckpt;
  run_train(t);

  EvalArgs e;
  e.data = p.scene;
  e.split = p.split;
  e.ckpt = p.ckpt;
  e.report = p.rep;
  e.audit_overlap = true;
  run_eval(e);

  MapArgs m;
  m.data = p.scene;
  m.ckpt = p.ckpt;
  m.out = p.map;
  run_map(m);
  return p;
}

double majority_baseline(const std::string& scene, const std::string& split_path) {
  auto [cube, labels] = read_cube(scene);
  (void)cube;
  auto split = read_split(split_path);
  std::vector<std::size_t> counts;
  for (const auto& [r, c] : split.test) {
    const std::size_t k = labels->at(r, c);
    if (k >= counts.size()) counts.resize(k + 1, 0);
    counts[k]++;
  }
  std::size_t best = 0;
  for (std::size_t v : counts) best = std::max(best, v);
  return static_cast<double>(best) / static_cast<double>(split.test.size());
}

void criterion_end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = fresh_dir("e2e");
  const auto paths = run_pipeline(dir, 7, true, 30);
  const auto report_json = nlohmann::json::parse(slurp(paths.rep));
  const double got_oa = report_json.at("oa").get<double>();
  const double baseline = majority_baseline(paths.scene, paths.split);
  const double elapsed = seconds_since(t0);

  std::ostringstream msg;
  msg << "block-wise test OA " << got_oa << ", majority baseline " << baseline << ", " << elapsed
      << " s";
  report(6, "synthetic end-to-end training run",
         got_oa >= 0.85 && got_oa - baseline >= 0.30 && elapsed < 300.0, msg.str());
}

void criterion_ablation() {
  const auto dir = fresh_dir("ablation");
  try {
    const auto paths = run_pipeline(dir, 7, false, 30);
    const auto report_json = nlohmann::json::parse(slurp(paths.rep));
    std::ostringstream msg;
    msg << "multi-level off: OA " << report_json.at("oa").get<double>() << ", report and map emitted";
    const bool ok = report_json.contains("oa") && report_json.contains("kappa") &&
                    fs::exists(paths.map) && fs::exists(paths.ckpt);
    report(7, "multi-level ablation toggle", ok, msg.str());
  } catch (const std::exception& e) {
    report(7, "multi-level ablation toggle", false, e.what());
  }
}

void criterion_reproducibility() {
  const auto dir_a = fresh_dir("repro_a");
  const auto dir_b = fresh_dir("repro_b");
  const auto a = run_pipeline(dir_a, 21, true, 5);
  const auto b = run_pipeline(dir_b, 21, true, 5);
  const bool scene_ok = slurp(a.scene) == slurp(b.scene);
  const bool split_ok = slurp(a.split) == slurp(b.split);
  const bool ckpt_ok = slurp(a.ckpt) == slurp(b.ckpt);
  const bool rep_ok = slurp(a.rep) == slurp(b.rep);
  const bool map_ok = slurp(a.map) == slurp(b.map);
  std::ostringstream msg;
  msg << "scene " << (scene_ok ? "=" : "!") << " split " << (split_ok ? "=" : "!") << " checkpoint "
      << (ckpt_ok ? "=" : "!") << " report " << (rep_ok ? "=" : "!") << " map "
      << (map_ok ? "=" : "!");
  report(8, "identical seeds give byte-identical artifacts",
         scene_ok && split_ok && ckpt_ok && rep_ok && map_ok, msg.str());
}

// ---- criterion 9: format round-trips and error codes ------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = g_cli_path + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

void criterion_formats() {
  const auto dir = fresh_dir("formats");
  bool ok = true;
  std::ostringstream msg;

  // cube round trip
  auto [cube, labels] = generate_synthetic(24, 24, 8, 2, 6, 0.05, 91);
  const std::string cube_path = (dir / "cube.hsic").string();
  write_cube(cube_path, cube, &labels);
  auto loaded = read_cube(cube_path);
  const std::string cube_again = (dir / "cube2.hsic").string();
  write_cube(cube_again, loaded.first, &*loaded.second);
  ok = ok && slurp(cube_path) == slurp(cube_again);

  // split round trip
  auto spec = block_split(labels, 12, 4, 5, 4, 91);
  const std::string split_path = (dir / "split.json").string();
  write_split(split_path, spec);
  auto spec2 = read_split(split_path);
  const std::string split_again = (dir / "split2.json").string();
  write_split(split_again, spec2);
  ok = ok && slurp(split_path) == slurp(split_again);

  // checkpoint round trip
  SaaFormerConfig cfg;
  cfg.in_bands = 8;
  cfg.embed_dim = 8;
  cfg.heads = 2;
  cfg.depth = 1;
  cfg.level_lengths = {8, 4};
  cfg.patch = 5;
  cfg.classes = 2;
  auto params = SaaFormerParams<double>::init(cfg, 91);
  const std::string ckpt_path = (dir / "model.saaf").string();
  save_checkpoint(ckpt_path, params);
  auto params2 = load_checkpoint<double>(ckpt_path);
  const std::string ckpt_again = (dir / "model2.saaf").string();
  save_checkpoint(ckpt_again, params2);
  ok = ok && slurp(ckpt_path) == slurp(ckpt_again);
  if (!ok) msg << "round-trip mismatch; ";

  // corrupted headers raise the documented errors
  auto expect_format_error = [&](const std::string& path, const char* what) {
    try {
      read_cube(path);
      msg << what << " accepted; ";
      return false;
    } catch (const FormatError&) {
      return true;
    }
  };
  {
    std::ofstream os(dir / "bad_magic.hsic", std::ios::binary);
    os << "JUNKJUNKJUNK";
  }
  ok = ok && expect_format_error((dir / "bad_magic.hsic").string(), "bad magic");
  {
    const std::string bytes = slurp(cube_path);
    std::ofstream os(dir / "trunc.hsic", std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 3));
  }
  ok = ok && expect_format_error((dir / "trunc.hsic").string(), "truncated");
  try {
    load_checkpoint<double>(cube_path);  // wrong magic for a checkpoint
    ok = false;
    msg << "checkpoint magic accepted; ";
  } catch (const FormatError&) {
  }

  // documented CLI exit codes
  if (!g_cli_path.empty()) {
    const std::string missing = (dir / "missing.hsic").string();
    bool codes_ok = true;
    codes_ok = codes_ok && run_cli("audit --data " + missing + " --split " + split_path) == 2;
    codes_ok = codes_ok && run_cli("split --data " + cube_path + " --mode sideways --out " +
                                   (dir / "x.json").string()) == 1;
    codes_ok = codes_ok && run_cli("split --data " + cube_path +
                                   " --mode block --block 24 --gap 4 --patch 5 --out " +
                                   (dir / "x.json").string()) == 3;
    codes_ok = codes_ok && run_cli("audit --data " + cube_path + " --split " + split_path) == 0;
    if (!codes_ok) msg << "exit-code mapping wrong; ";
    ok = ok && codes_ok;
  } else {
    msg << "(no --cli path: exit codes unchecked) ";
  }

  if (ok && msg.str().empty()) msg << "all round trips byte-identical, errors as documented";
  report(9, "file formats round-trip and fail loudly", ok, msg.str());
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--cli") g_cli_path = argv[i + 1];

  struct Entry {
    int number;
    const char* name;
    std::function<void()> fn;
  };
  const std::vector<Entry> criteria{
      {1, "full-model gradient suite", criterion_gradients},
      {2, "axial attention matches the scalar transcription", criterion_attention_oracle},
      {3, "shift/unshift identity and wrap-mask independence", criterion_shift_mask},
      {4, "block sampling eliminates the leakage random sampling exhibits", criterion_leakage},
      {5, "OA/AA/Kappa match hand values and brute force", criterion_metrics},
      {6, "synthetic end-to-end training run", criterion_end_to_end},
      {7, "multi-level ablation toggle", criterion_ablation},
      {8, "identical seeds give byte-identical artifacts", criterion_reproducibility},
      {9, "file formats round-trip and fail loudly", criterion_formats},
  };
  for (const auto& entry : criteria) {
    try {
      entry.fn();
    } catch (const std::exception& e) {
      report(entry.number, entry.name, false, std::string("unexpected exception: ") + e.what());
    }
  }

  if (g_failures == 0)
    std::printf("all acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
