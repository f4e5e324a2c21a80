// Command-line front end: synthetic data generation, prediction-matrix
// assembly, threshold optimization, fusion, evaluation, a brute-force grid
// oracle, and an optimizer test-function bench.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "entrofuse/clpso.hpp"
#include "entrofuse/documents.hpp"
#include "entrofuse/error.hpp"
#include "entrofuse/fusion.hpp"
#include "entrofuse/manifest.hpp"
#include "entrofuse/metrics.hpp"
#include "entrofuse/pipeline.hpp"
#include "entrofuse/synthetic.hpp"
#include "entrofuse/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace entrofuse;

namespace {

std::uint64_t resolve_seed(std::optional<std::uint64_t> requested) {
  if (requested.has_value()) return *requested;
  std::random_device rd;
  const std::uint64_t seed =
      (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cout << "seed: " << seed << " (generated; pass --seed to reproduce)\n";
  return seed;
}

// "name:base_accuracy:sharpness[:bias]"
SyntheticPredictorSpec parse_model_spec(const std::string& text,
                                        std::uint64_t seed) {
  SyntheticPredictorSpec spec;
  spec.seed = seed;
  std::istringstream in(text);
  std::string field;
  if (!std::getline(in, field, ':') || field.empty()) {
    throw Error(ErrorCode::InvalidConfig,
                "model spec \"" + text + "\" lacks a name");
  }
  spec.name = field;
  try {
    if (std::getline(in, field, ':')) spec.base_accuracy = std::stod(field);
    if (std::getline(in, field, ':')) spec.sharpness = std::stod(field);
    if (std::getline(in, field, ':')) spec.bias = std::stoi(field);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig,
                "model spec \"" + text +
                    "\" is not name:accuracy:sharpness[:bias]");
  }
  spec.validate();
  return spec;
}

struct SplitChoice {
  std::string name = "test";
  Split value() const {
    if (name == "train") return Split::kTrain;
    if (name == "test") return Split::kTest;
    return Split::kAll;
  }
};

// Prepares matrix images for any split (test entries get a dummy fold).
PredictionMatrix matrix_for_split(const DatasetManifest& manifest,
                                  Split split) {
  PredictionMatrix matrix;
  matrix.k_models = manifest.k_models();
  matrix.m_classes = manifest.class_count;
  for (const ManifestEntry* entry : manifest.select(split)) {
    const ProbabilityStack stack = load_entry_stack(manifest, *entry);
    const LabelMask mask = read_mask(manifest.resolve(entry->mask_path));
    matrix.images.push_back(matrix_image_from(stack, mask, entry->image_id,
                                              entry->fold.value_or(0)));
  }
  if (matrix.images.empty()) {
    throw Error(ErrorCode::ManifestInvalid,
                "manifest has no entries in the requested split");
  }
  return matrix;
}

void print_config_echo(const SwarmConfig& config) {
  std::cout << "config: pop=" << config.pop_size << " iters=" << config.max_iter
            << " c=" << config.c << " refresh-gap=" << config.refresh_gap
            << " vmax-frac=" << config.v_max_fraction
            << " pc-mode=" << pc_mode_name(config.pc_mode)
            << " inertia-literal=" << (config.inertia_literal ? "on" : "off")
            << " seed=" << config.seed << "\n";
}

struct SwarmFlags {
  std::size_t pop = 10;
  std::size_t iters = 500;
  double c = 1.49445;
  std::size_t refresh_gap = 7;
  double vmax_frac = 0.2;
  std::string pc_mode = "ramped";
  bool inertia_literal = false;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--pop", pop, "swarm size")->capture_default_str();
    cmd->add_option("--iters", iters, "iterations")->capture_default_str();
    cmd->add_option("--c", c, "acceleration constant")->capture_default_str();
    cmd->add_option("--refresh-gap", refresh_gap,
                    "stagnant iterations before exemplar reassignment")
        ->capture_default_str();
    cmd->add_option("--vmax-frac", vmax_frac,
                    "velocity bound as a fraction of the box width")
        ->capture_default_str();
    cmd->add_option("--pc-mode", pc_mode,
                    "per-dimension learning probability profile")
        ->check(CLI::IsMember({"ramped", "uniform", "paper-literal"}))
        ->capture_default_str();
    cmd->add_flag("--inertia-literal", inertia_literal,
                  "use the multiplicative inertia schedule variant");
    cmd->add_option("--seed", seed, "RNG seed (generated if omitted)");
  }

  SwarmConfig to_config(std::uint64_t resolved_seed) const {
    SwarmConfig config;
    config.pop_size = pop;
    config.max_iter = iters;
    config.c = c;
    config.refresh_gap = refresh_gap;
    config.v_max_fraction = vmax_frac;
    config.pc_mode = pc_mode_from_name(pc_mode);
    config.inertia_literal = inertia_literal;
    config.seed = resolved_seed;
    return config;
  }
};

int run_synth(const std::string& out_dir, std::size_t train, std::size_t test,
              std::size_t height, std::size_t width, std::size_t classes,
              std::size_t folds, std::optional<std::uint64_t> seed_flag,
              const std::vector<std::string>& model_specs) {
  SyntheticDatasetSpec dataset;
  dataset.train_images = train;
  dataset.test_images = test;
  dataset.height = height;
  dataset.width = width;
  dataset.class_count = classes;
  dataset.fold_count = folds;
  dataset.seed = resolve_seed(seed_flag);

  std::vector<std::string> texts = model_specs;
  if (texts.empty()) {
    texts = {"strong:0.9:6.0", "mid:0.75:4.0:1", "weak:0.55:2.5:-1"};
  }
  std::vector<SyntheticPredictorSpec> specs;
  for (std::size_t k = 0; k < texts.size(); ++k) {
    specs.push_back(
        parse_model_spec(texts[k], mix64(dataset.seed + 0x100 + k)));
  }

  const DatasetManifest manifest =
      synthesize_dataset(dataset, specs, fs::path(out_dir));
  std::cout << "wrote " << manifest.entries.size() << " images ("
            << train << " train, " << test << " test), " << specs.size()
            << " models, " << classes << " classes\n"
            << "manifest: " << (fs::path(out_dir) / "manifest.json").string()
            << "\n";
  return 0;
}

int run_stack(const std::string& manifest_path, bool write_combined) {
  DatasetManifest manifest = read_manifest(manifest_path);
  const PredictionMatrix matrix = build_prediction_matrix(manifest);
  std::cout << "prediction matrix: " << matrix.images.size() << " images, "
            << matrix.k_models << " models, " << matrix.m_classes
            << " classes, " << matrix.pixel_count() << " pixels\n";

  if (write_combined) {
    std::size_t written = 0;
    for (const ManifestEntry* entry : manifest.select(Split::kAll)) {
      if (!entry->stack_path.empty() || entry->stack_paths.empty()) continue;
      const ProbabilityStack combined = load_entry_stack(manifest, *entry);
      const fs::path out =
          manifest.base_dir / ("combined_" + entry->image_id + ".pten");
      write_stack(combined, out, manifest.model_names);
      ++written;
    }
    std::cout << "wrote " << written << " combined stacks\n";
  }
  return 0;
}

int run_optimize(const std::string& manifest_path, const SwarmFlags& flags,
                 const std::string& out_path, const std::string& trace_path,
                 unsigned threads) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const SwarmConfig config = flags.to_config(resolve_seed(flags.seed));
  print_config_echo(config);

  auto [doc, trace] = train(manifest, config, threads);
  write_threshold_document(doc, out_path);
  if (!trace_path.empty()) write_trace(trace, trace_path);

  std::cout << "achieved dice: " << doc.achieved_dice << "\n";
  for (std::size_t k = 0; k < doc.thresholds.size(); ++k) {
    std::cout << "  theta[" << manifest.model_names[k]
              << "] = " << doc.thresholds[k] << "\n";
  }
  std::cout << "thresholds: " << out_path << "\n";
  return 0;
}

int run_fuse(const std::string& manifest_path, const std::string& doc_path,
             const SplitChoice& split, const std::string& out_dir,
             unsigned threads) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const ThresholdDocument doc = read_threshold_document(doc_path);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::IoFailure, "cannot create " + out_dir);
  }

  std::size_t written = 0;
  for (const ManifestEntry* entry : manifest.select(split.value())) {
    const ProbabilityStack stack = load_entry_stack(manifest, *entry);
    const LabelMask mask = segment(stack, doc, threads);
    write_mask(mask, fs::path(out_dir) / (entry->image_id + ".pgm"));
    ++written;
  }
  std::cout << "wrote " << written << " fused masks to " << out_dir << "\n";
  return 0;
}

int run_evaluate(const std::string& manifest_path, const std::string& doc_path,
                 const std::string& pred_dir, const SplitChoice& split,
                 unsigned threads) {
  const DatasetManifest manifest = read_manifest(manifest_path);

  if (!pred_dir.empty()) {
    // Compare already-written masks against ground truth.
    std::vector<LabelMask> predicted;
    std::vector<LabelMask> ground;
    for (const ManifestEntry* entry : manifest.select(split.value())) {
      predicted.push_back(
          read_mask(fs::path(pred_dir) / (entry->image_id + ".pgm")));
      ground.push_back(read_mask(manifest.resolve(entry->mask_path)));
    }
    if (predicted.empty()) {
      throw Error(ErrorCode::ManifestInvalid,
                  "manifest has no entries in the requested split");
    }
    const DiceReport report =
        dice_average(predicted, ground, manifest.class_count);
    std::printf("%-16s %8s\n", "class", "dice");
    for (std::size_t m = 0; m < report.per_class.size(); ++m) {
      std::printf("class_%-10zu %8.4f\n", m, report.per_class[m]);
    }
    std::printf("%-16s %8.4f\n", "average", report.average);
    return 0;
  }

  if (doc_path.empty()) {
    throw Error(ErrorCode::InvalidConfig,
                "evaluate needs --thresholds or --pred");
  }
  const ThresholdDocument doc = read_threshold_document(doc_path);
  const PredictionMatrix matrix = matrix_for_split(manifest, split.value());
  if (doc.k_models() != matrix.k_models ||
      doc.class_count != matrix.m_classes) {
    throw Error(ErrorCode::ShapeMismatch,
                "threshold document does not match the manifest's models "
                "and classes");
  }

  const ThresholdVector zeros(std::vector<double>(matrix.k_models, 0.0));
  const GatedReport mean_report = gated_dice_report(zeros, matrix, threads);
  const GatedReport gated_report =
      gated_dice_report(ThresholdVector(doc.thresholds), matrix, threads);

  std::printf("%-20s %8s %10s %16s\n", "source", "dice", "threshold",
              "fallback_pixels");
  for (std::size_t k = 0; k < matrix.k_models; ++k) {
    const DiceReport model = single_model_dice(matrix, k);
    std::printf("model:%-14s %8.4f %10.4f %16s\n",
                manifest.model_names[k].c_str(), model.average,
                doc.thresholds[k], "-");
  }
  std::printf("%-20s %8.4f %10s %16s\n", "ensemble:mean", mean_report.dice.average,
              "-", "-");
  std::printf("%-20s %8.4f %10s %16llu\n", "ensemble:gated",
              gated_report.dice.average, "-",
              static_cast<unsigned long long>(gated_report.fallback_pixels));
  return 0;
}

int run_oracle(const std::string& manifest_path, double delta,
               const std::string& out_path, unsigned threads) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const PredictionMatrix matrix = build_prediction_matrix(manifest);
  GridOracleSpec spec;
  spec.resolution = delta;
  spec.k_models = matrix.k_models;
  spec.m_classes = matrix.m_classes;

  const GridResult result = grid_oracle(matrix, spec, threads);
  std::cout << "grid evaluations: " << result.evaluations << "\n"
            << "best dice: " << result.best_dice << "\n";
  for (std::size_t k = 0; k < result.best.values.size(); ++k) {
    std::cout << "  theta[" << manifest.model_names[k]
              << "] = " << result.best.values[k] << "\n";
  }
  if (!out_path.empty()) {
    ThresholdDocument doc;
    doc.thresholds = result.best.values;
    doc.achieved_dice = result.best_dice;
    doc.class_count = matrix.m_classes;
    doc.model_names = manifest.model_names;
    doc.config.max_iter = 1; // grid search does not iterate
    doc.run_info["method"] = "grid";
    doc.run_info["delta"] = std::to_string(delta);
    doc.run_info["evaluations"] = std::to_string(result.evaluations);
    write_threshold_document(doc, out_path);
    std::cout << "thresholds: " << out_path << "\n";
  }
  return 0;
}

int run_bench(const std::string& function, std::size_t dim,
              const SwarmFlags& flags, std::size_t seeds,
              const std::string& trace_path) {
  struct TestFunction {
    std::string name;
    double lo, hi;
    FitnessFn fitness; // maximized: negative of the usual minimization form
  };
  std::vector<TestFunction> suite;
  if (function == "sphere" || function == "all") {
    suite.push_back({"sphere", -5.0, 5.0, [](std::span<const double> x) {
                       double s = 0.0;
                       for (double v : x) s += v * v;
                       return -s;
                     }});
  }
  if (function == "rastrigin" || function == "all") {
    suite.push_back(
        {"rastrigin", -5.12, 5.12, [](std::span<const double> x) {
           double s = 10.0 * static_cast<double>(x.size());
           for (double v : x) {
             s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
           }
           return -s;
         }});
  }

  const std::uint64_t base_seed = resolve_seed(flags.seed);
  for (const TestFunction& fn : suite) {
    std::vector<double> finals;
    std::uint64_t evals = 0;
    for (std::size_t s = 0; s < seeds; ++s) {
      SwarmConfig config = flags.to_config(base_seed + s);
      const Box box = Box::uniform(dim, fn.lo, fn.hi);
      const SwarmResult result = run_clpso(config, dim, box, fn.fitness);
      finals.push_back(-result.best_fitness);
      evals = result.evaluations;
      if (s == 0 && !trace_path.empty()) {
        write_trace(result.trace, trace_path + "." + fn.name + ".csv");
      }
    }
    std::vector<double> sorted = finals;
    std::sort(sorted.begin(), sorted.end());
    const double median = seeds % 2 == 1
                              ? sorted[seeds / 2]
                              : 0.5 * (sorted[seeds / 2 - 1] + sorted[seeds / 2]);
    std::printf("%-10s dim=%zu seeds=%zu evals/run=%llu best=%.3e median=%.3e worst=%.3e\n",
                fn.name.c_str(), dim, seeds,
                static_cast<unsigned long long>(evals), sorted.front(), median,
                sorted.back());
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-gated fusion of segmentation model ensembles"};
  app.require_subcommand(1);
  // Let --threads (and any future global flag) appear after the subcommand.
  app.fallthrough();
  unsigned threads = 0;
  app.add_option("--threads", threads,
                 "worker threads (0 = hardware concurrency)")
      ->capture_default_str();

  // synth
  auto* synth = app.add_subcommand(
      "synth", "generate a synthetic dataset with a manifest");
  std::string synth_out;
  std::size_t synth_train = 20, synth_test = 0, synth_h = 32, synth_w = 32;
  std::size_t synth_classes = 2, synth_folds = 5;
  std::optional<std::uint64_t> synth_seed;
  std::vector<std::string> synth_models;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--train", synth_train, "training images")
      ->capture_default_str();
  synth->add_option("--test", synth_test, "test images")->capture_default_str();
  synth->add_option("--height", synth_h, "image height")->capture_default_str();
  synth->add_option("--width", synth_w, "image width")->capture_default_str();
  synth->add_option("--classes", synth_classes, "class count")
      ->capture_default_str();
  synth->add_option("--folds", synth_folds, "cross-validation folds")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "RNG seed (generated if omitted)");
  synth->add_option("--model", synth_models,
                    "predictor spec name:accuracy:sharpness[:bias]; "
                    "repeatable");

  // stack
  auto* stack = app.add_subcommand(
      "stack", "validate a manifest and assemble its prediction matrix");
  std::string stack_manifest;
  bool stack_write_combined = false;
  stack->add_option("--manifest", stack_manifest, "manifest file")->required();
  stack->add_flag("--write-combined", stack_write_combined,
                  "write combined stacks for entries listed per model");

  // optimize
  auto* optimize =
      app.add_subcommand("optimize", "search entropy thresholds");
  std::string opt_manifest, opt_out = "thresholds.json", opt_trace;
  SwarmFlags opt_flags;
  optimize->add_option("--manifest", opt_manifest, "manifest file")
      ->required();
  opt_flags.attach(optimize);
  optimize->add_option("--out", opt_out, "threshold document path")
      ->capture_default_str();
  optimize->add_option("--trace", opt_trace, "per-iteration trace CSV path");
  optimize->set_config("--config", "",
                       "config file with the same keys as the flags");

  // fuse
  auto* fuse = app.add_subcommand("fuse", "apply thresholds and write masks");
  std::string fuse_manifest, fuse_doc, fuse_out = "fused";
  SplitChoice fuse_split;
  fuse->add_option("--manifest", fuse_manifest, "manifest file")->required();
  fuse->add_option("--thresholds", fuse_doc, "threshold document")->required();
  fuse->add_option("--split", fuse_split.name, "train|test|all")
      ->check(CLI::IsMember({"train", "test", "all"}))
      ->capture_default_str();
  fuse->add_option("--out", fuse_out, "output mask directory")
      ->capture_default_str();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "report Dice scores");
  std::string eval_manifest, eval_doc, eval_pred;
  SplitChoice eval_split;
  evaluate->add_option("--manifest", eval_manifest, "manifest file")
      ->required();
  evaluate->add_option("--thresholds", eval_doc,
                       "threshold document (model/ensemble table)");
  evaluate->add_option("--pred", eval_pred,
                       "directory of predicted masks to score directly");
  evaluate->add_option("--split", eval_split.name, "train|test|all")
      ->check(CLI::IsMember({"train", "test", "all"}))
      ->capture_default_str();

  // oracle
  auto* oracle =
      app.add_subcommand("oracle", "exhaustive grid search over thresholds");
  std::string oracle_manifest, oracle_out;
  double oracle_delta = 0.0693;
  oracle->add_option("--manifest", oracle_manifest, "manifest file")
      ->required();
  oracle->add_option("--delta", oracle_delta, "grid step")
      ->capture_default_str();
  oracle->add_option("--out", oracle_out, "write best thresholds here");

  // bench-clpso
  auto* bench = app.add_subcommand(
      "bench-clpso", "optimizer sanity suite on standard test functions");
  std::string bench_function = "all", bench_trace;
  std::size_t bench_dim = 10, bench_seeds = 10;
  SwarmFlags bench_flags;
  bench->add_option("--function", bench_function, "sphere|rastrigin|all")
      ->check(CLI::IsMember({"sphere", "rastrigin", "all"}))
      ->capture_default_str();
  bench->add_option("--dim", bench_dim, "dimensions")->capture_default_str();
  bench->add_option("--seeds", bench_seeds, "number of seeds")
      ->capture_default_str();
  bench_flags.attach(bench);
  bench->add_option("--trace", bench_trace,
                    "trace file prefix for the first seed's run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      return run_synth(synth_out, synth_train, synth_test, synth_h, synth_w,
                       synth_classes, synth_folds, synth_seed, synth_models);
    }
    if (stack->parsed()) {
      return run_stack(stack_manifest, stack_write_combined);
    }
    if (optimize->parsed()) {
      return run_optimize(opt_manifest, opt_flags, opt_out, opt_trace,
                          threads);
    }
    if (fuse->parsed()) {
      return run_fuse(fuse_manifest, fuse_doc, fuse_split, fuse_out, threads);
    }
    if (evaluate->parsed()) {
      return run_evaluate(eval_manifest, eval_doc, eval_pred, eval_split,
                          threads);
    }
    if (oracle->parsed()) {
      return run_oracle(oracle_manifest, oracle_delta, oracle_out, threads);
    }
    if (bench->parsed()) {
      return run_bench(bench_function, bench_dim, bench_flags, bench_seeds,
                       bench_trace);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what()
              << "\n";
    return e.is_io() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
