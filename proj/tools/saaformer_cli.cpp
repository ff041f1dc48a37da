#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "saaformer/saaformer.hpp"

namespace {

int fail(const char* kind, const std::string& detail, int code) {
  std::cerr << "error: kind=" << kind << " detail=\"" << detail << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace saaformer;

  CLI::App app{"SaaFormer: axial aggregation transformer toolkit for hyperspectral scenes"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  GenArgs gen;
  auto* cmd_gen = app.add_subcommand("gen", "Generate a synthetic labeled hyperspectral cube");
  cmd_gen->add_option("--height", gen.height, "Scene height in pixels");
  cmd_gen->add_option("--width", gen.width, "Scene width in pixels");
  cmd_gen->add_option("--bands", gen.bands, "Spectral band count");
  cmd_gen->add_option("--classes", gen.classes, "Class count");
  cmd_gen->add_option("--tile", gen.tile, "Class tile edge length");
  cmd_gen->add_option("--noise", gen.noise, "Gaussian noise sigma");
  cmd_gen->add_option("--seed", gen.seed, "Random seed");
  cmd_gen->add_option("--out", gen.out, "Output .hsic path")->required();
  cmd_gen->callback([&] { run_gen(gen); });

  SplitArgs split;
  auto* cmd_split = app.add_subcommand("split", "Partition a labeled cube into train/test sets");
  cmd_split->add_option("--data", split.data, "Input .hsic path")->required();
  cmd_split->add_option("--mode", split.mode, "Sampling mode")
      ->check(CLI::IsMember({"random", "block"}));
  cmd_split->add_option("--train-frac", split.train_frac, "Per-class train fraction (random)");
  cmd_split->add_option("--block", split.block, "Block edge length (block)");
  cmd_split->add_option("--gap", split.gap, "Exclusion strip width (block)");
  cmd_split->add_option("--patch", split.patch, "Sample patch size");
  cmd_split->add_option("--stride", split.stride, "Every stride-th tile trains (block)");
  cmd_split->add_option("--seed", split.seed, "Random seed");
  cmd_split->add_option("--out", split.out, "Output split path")->required();
  cmd_split->callback([&] { run_split(split); });

  TrainArgs train;
  std::string multi_level = "on";
  auto* cmd_train = app.add_subcommand("train", "Train a classifier on a split");
  cmd_train->add_option("--data", train.data, "Input .hsic path")->required();
  cmd_train->add_option("--split", train.split, "Split file path")->required();
  cmd_train->add_option("--epochs", train.epochs, "Training epochs");
  cmd_train->add_option("--batch", train.batch, "Minibatch size");
  cmd_train->add_option("--lr", train.lr, "Initial learning rate");
  cmd_train->add_option("--embed", train.embed, "Embedded spectrum width");
  cmd_train->add_option("--heads", train.heads, "Attention heads");
  cmd_train->add_option("--depth", train.depth, "Encoder block pairs");
  cmd_train->add_option("--levels", train.levels, "Spectral partition lengths")->delimiter(',');
  cmd_train->add_option("--multi-level", multi_level, "Multi-level extraction on|off")
      ->check(CLI::IsMember({"on", "off"}));
  cmd_train->add_option("--dropout", train.dropout, "Dropout rate");
  cmd_train->add_option("--seed", train.seed, "Random seed");
  cmd_train->add_option("--out", train.out, "Output checkpoint path")->required();
  cmd_train->callback([&] {
    train.multi_level = (multi_level == "on");
    run_train(train);
  });

  EvalArgs eval;
  auto* cmd_eval = app.add_subcommand("eval", "Score a checkpoint on a split's test set");
  cmd_eval->add_option("--data", eval.data, "Input .hsic path")->required();
  cmd_eval->add_option("--split", eval.split, "Split file path")->required();
  cmd_eval->add_option("--ckpt", eval.ckpt, "Checkpoint path")->required();
  cmd_eval->add_option("--report", eval.report, "Output report path")->required();
  cmd_eval->add_flag("--audit-overlap", eval.audit_overlap,
                     "Add per-overlap-bucket accuracy to the report");
  cmd_eval->callback([&] {
    const auto report = run_eval(eval);
    std::cout << "oa=" << report.at("oa").get<double>() << " aa=" << report.at("aa").get<double>()
              << " kappa=" << report.at("kappa").get<double>() << '\n';
  });

  AuditArgs audit;
  auto* cmd_audit = app.add_subcommand("audit", "Overlap histogram of test vs train windows");
  cmd_audit->add_option("--data", audit.data, "Input .hsic path")->required();
  cmd_audit->add_option("--split", audit.split, "Split file path")->required();
  cmd_audit->add_option("--patch", audit.patch, "Patch size override");
  cmd_audit->callback([&] { std::cout << run_audit(audit).dump(2) << '\n'; });

  MapArgs map;
  auto* cmd_map = app.add_subcommand("map", "Render a classification map as PPM");
  cmd_map->add_option("--data", map.data, "Input .hsic path")->required();
  cmd_map->add_option("--ckpt", map.ckpt, "Checkpoint path")->required();
  cmd_map->add_option("--out", map.out, "Output .ppm path")->required();
  cmd_map->callback([&] { run_map(map); });

  std::string manifest_path;
  auto* cmd_replay = app.add_subcommand("replay", "Re-run a command from its manifest");
  cmd_replay->add_option("--manifest", manifest_path, "Manifest path")->required();
  cmd_replay->callback([&] { replay_manifest(manifest_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    return fail("usage", e.what(), 1);
  } catch (const ConstraintError& e) {
    return fail("constraint", e.what(), 3);
  } catch (const FormatError& e) {
    return fail("data", e.what(), 2);
  } catch (const ShapeError& e) {
    return fail("data", e.what(), 2);
  } catch (const ValueError& e) {
    return fail("usage", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("data", e.what(), 2);
  }
  return 0;
}
