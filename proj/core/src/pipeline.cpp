#include "entrofuse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "entrofuse/error.hpp"
#include "entrofuse/fusion.hpp"
#include "entrofuse/parallel.hpp"
#include "entrofuse/tensor_io.hpp"

namespace entrofuse {

std::size_t PredictionMatrix::pixel_count() const {
  std::size_t total = 0;
  for (const MatrixImage& image : images) total += image.pixel_count();
  return total;
}

MatrixImage matrix_image_from(const ProbabilityStack& stack,
                              const LabelMask& mask, std::string image_id,
                              std::size_t fold) {
  stack.validate();
  if (mask.height != stack.height || mask.width != stack.width) {
    std::ostringstream msg;
    msg << "image " << image_id << ": stack is " << stack.height << "x"
        << stack.width << " but mask is " << mask.height << "x" << mask.width;
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
  mask.validate_labels(stack.m_classes, "image " + image_id);

  MatrixImage out;
  out.image_id = std::move(image_id);
  out.fold = fold;
  out.height = stack.height;
  out.width = stack.width;
  out.mask = mask;

  const std::size_t k_models = stack.k_models;
  const std::size_t m_classes = stack.m_classes;
  const std::size_t pixels = stack.pixel_count();
  out.probabilities.resize(k_models * m_classes * pixels);
  out.entropies.resize(k_models * pixels);

  // Same renormalization as fuse_stack: double sum over the row, then a
  // single reciprocal multiply.
  for (std::size_t k = 0; k < k_models; ++k) {
    for (std::size_t p = 0; p < pixels; ++p) {
      const float* src = stack.data.data() + (k * m_classes) * pixels + p;
      double* dst = out.probabilities.data() + (k * m_classes) * pixels + p;
      double sum = 0.0;
      for (std::size_t m = 0; m < m_classes; ++m) {
        const double v = static_cast<double>(src[m * pixels]);
        dst[m * pixels] = v;
        sum += v;
      }
      const double inv = 1.0 / sum;
      double h = 0.0;
      for (std::size_t m = 0; m < m_classes; ++m) {
        const double q = dst[m * pixels] * inv;
        dst[m * pixels] = q;
        if (q > 0.0) h -= q * std::log(q);
      }
      out.entropies[k * pixels + p] = h;
    }
  }
  return out;
}

ProbabilityStack load_entry_stack(const DatasetManifest& manifest,
                                  const ManifestEntry& entry) {
  if (!entry.has_stack()) {
    throw Error(ErrorCode::MissingFoldPrediction,
                "image " + entry.image_id + " has no prediction stack");
  }
  const std::size_t k_models = manifest.k_models();

  if (!entry.stack_path.empty()) {
    ProbabilityStack stack = read_stack(manifest.resolve(entry.stack_path));
    const std::vector<std::string> names =
        read_stack_model_names(manifest.resolve(entry.stack_path));
    if (!names.empty() && names != manifest.model_names) {
      throw Error(ErrorCode::ManifestInvalid,
                  "image " + entry.image_id +
                      ": stack's embedded model names do not match the "
                      "manifest's model list");
    }
    if (stack.k_models != k_models) {
      std::ostringstream msg;
      msg << "image " << entry.image_id << ": stack holds " << stack.k_models
          << " models but the manifest declares " << k_models;
      throw Error(ErrorCode::DimensionMismatch, msg.str());
    }
    if (stack.m_classes != manifest.class_count) {
      std::ostringstream msg;
      msg << "image " << entry.image_id << ": stack holds " << stack.m_classes
          << " classes but the manifest declares " << manifest.class_count;
      throw Error(ErrorCode::DimensionMismatch, msg.str());
    }
    return stack;
  }

  // Per-model files, each a K=1 stack, concatenated in manifest order.
  ProbabilityStack combined;
  for (std::size_t k = 0; k < k_models; ++k) {
    const auto path = manifest.resolve(entry.stack_paths[k]);
    ProbabilityStack part = read_stack(path);
    if (part.k_models != 1) {
      std::ostringstream msg;
      msg << "image " << entry.image_id << ": per-model file "
          << entry.stack_paths[k] << " holds " << part.k_models
          << " models (expected 1)";
      throw Error(ErrorCode::DimensionMismatch, msg.str());
    }
    const std::vector<std::string> names = read_stack_model_names(path);
    if (!names.empty() && names != std::vector<std::string>{
                              manifest.model_names[k]}) {
      throw Error(ErrorCode::ManifestInvalid,
                  "image " + entry.image_id + ": per-model file " +
                      entry.stack_paths[k] +
                      " names a different model than manifest slot " +
                      manifest.model_names[k]);
    }
    if (k == 0) {
      combined.m_classes = part.m_classes;
      combined.height = part.height;
      combined.width = part.width;
      combined.data.reserve(k_models * part.data.size());
    } else if (part.m_classes != combined.m_classes ||
               part.height != combined.height ||
               part.width != combined.width) {
      throw Error(ErrorCode::DimensionMismatch,
                  "image " + entry.image_id +
                      ": per-model stacks disagree on shape");
    }
    combined.data.insert(combined.data.end(), part.data.begin(),
                         part.data.end());
  }
  combined.k_models = k_models;
  if (combined.m_classes != manifest.class_count) {
    std::ostringstream msg;
    msg << "image " << entry.image_id << ": stacks hold "
        << combined.m_classes << " classes but the manifest declares "
        << manifest.class_count;
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
  return combined;
}

PredictionMatrix build_prediction_matrix(const DatasetManifest& manifest) {
  manifest.validate();
  PredictionMatrix matrix;
  matrix.k_models = manifest.k_models();
  matrix.m_classes = manifest.class_count;

  for (const ManifestEntry* entry : manifest.select(Split::kTrain)) {
    if (!entry->fold.has_value()) {
      throw Error(ErrorCode::ManifestInvalid,
                  "image " + entry->image_id +
                      " carries no fold; assign folds before assembling "
                      "the prediction matrix");
    }
    if (!entry->has_stack()) {
      throw Error(ErrorCode::MissingFoldPrediction,
                  "image " + entry->image_id + " (fold " +
                      std::to_string(*entry->fold) +
                      ") has no out-of-fold prediction stack");
    }
    if (entry->stack_fold.has_value() &&
        *entry->stack_fold != *entry->fold) {
      std::ostringstream msg;
      msg << "image " << entry->image_id << " sits in fold " << *entry->fold
          << " but its stack was produced for fold " << *entry->stack_fold
          << "; the model saw this image during training";
      throw Error(ErrorCode::FoldLeakage, msg.str());
    }
    const ProbabilityStack stack = load_entry_stack(manifest, *entry);
    const LabelMask mask = read_mask(manifest.resolve(entry->mask_path));
    matrix.images.push_back(
        matrix_image_from(stack, mask, entry->image_id, *entry->fold));
  }
  if (matrix.images.empty()) {
    throw Error(ErrorCode::ManifestInvalid,
                "manifest holds no training entries");
  }
  return matrix;
}

namespace {

struct GateTally {
  std::vector<ClassCounts> counts;
  std::uint64_t fallback_pixels = 0;
};

// Core of every fitness evaluation. The pixel loop mirrors fuse_gated
// exactly (same add order, reciprocal multiply, strict-greater argmax), so
// training fitness equals the Dice of fuse_stack output by construction.
void tally_image(const MatrixImage& image, std::size_t k_models,
                 std::size_t m_classes, const std::vector<double>& thresholds,
                 GateTally& tally, std::vector<double>& acc) {
  const std::size_t pixels = image.pixel_count();
  const double* probs = image.probabilities.data();
  const double* entropies = image.entropies.data();
  const std::uint8_t* truth = image.mask.labels.data();

  for (std::size_t p = 0; p < pixels; ++p) {
    std::size_t selected = 0;
    for (std::size_t m = 0; m < m_classes; ++m) acc[m] = 0.0;
    for (std::size_t k = 0; k < k_models; ++k) {
      if (entropies[k * pixels + p] < thresholds[k]) {
        const double* row = probs + (k * m_classes) * pixels + p;
        for (std::size_t m = 0; m < m_classes; ++m) {
          acc[m] += row[m * pixels];
        }
        ++selected;
      }
    }
    std::size_t divisor = selected;
    if (divisor == 0) {
      ++tally.fallback_pixels;
      for (std::size_t k = 0; k < k_models; ++k) {
        const double* row = probs + (k * m_classes) * pixels + p;
        for (std::size_t m = 0; m < m_classes; ++m) {
          acc[m] += row[m * pixels];
        }
      }
      divisor = k_models;
    }
    const double inv = 1.0 / static_cast<double>(divisor);
    std::size_t best = 0;
    double best_value = -1.0;
    for (std::size_t m = 0; m < m_classes; ++m) {
      const double v = acc[m] * inv;
      if (v > best_value) {
        best_value = v;
        best = m;
      }
    }
    const std::uint8_t g = truth[p];
    ++tally.counts[best].predicted;
    ++tally.counts[g].ground;
    if (best == g) ++tally.counts[best].intersection;
  }
}

GateTally tally_gated(const ThresholdVector& thresholds,
                      const PredictionMatrix& matrix, unsigned threads) {
  if (matrix.images.empty()) {
    throw Error(ErrorCode::InvalidConfig, "prediction matrix is empty");
  }
  if (thresholds.values.size() != matrix.k_models) {
    std::ostringstream msg;
    msg << "threshold count " << thresholds.values.size()
        << " does not match model count " << matrix.k_models;
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  thresholds.validate(matrix.m_classes);

  const std::size_t n = matrix.images.size();
  const unsigned n_threads = resolve_threads(threads);

  std::vector<GateTally> per_image(n);
  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(matrix.m_classes);
    for (std::size_t i = begin; i < end; ++i) {
      per_image[i].counts.assign(matrix.m_classes, ClassCounts{});
      tally_image(matrix.images[i], matrix.k_models, matrix.m_classes,
                  thresholds.values, per_image[i], acc);
    }
  };
  if (n_threads <= 1 || n <= 1) {
    work(0, n);
  } else {
    parallel_chunks(n, n_threads, work);
  }

  GateTally total;
  total.counts.assign(matrix.m_classes, ClassCounts{});
  for (const GateTally& t : per_image) {
    total.fallback_pixels += t.fallback_pixels;
    for (std::size_t m = 0; m < matrix.m_classes; ++m) {
      total.counts[m].intersection += t.counts[m].intersection;
      total.counts[m].predicted += t.counts[m].predicted;
      total.counts[m].ground += t.counts[m].ground;
    }
  }
  return total;
}

DiceReport report_from_counts(const std::vector<ClassCounts>& counts) {
  DiceReport report;
  report.per_class.resize(counts.size());
  double sum = 0.0;
  for (std::size_t m = 0; m < counts.size(); ++m) {
    if (counts[m].predicted + counts[m].ground == 0) {
      ++report.both_empty_classes;
    }
    report.per_class[m] = dice_from_counts(counts[m]);
    sum += report.per_class[m];
  }
  report.average = sum / static_cast<double>(counts.size());
  return report;
}

} // namespace

double fitness_of(const ThresholdVector& thresholds,
                  const PredictionMatrix& matrix, unsigned threads) {
  const GateTally tally = tally_gated(thresholds, matrix, threads);
  return report_from_counts(tally.counts).average;
}

GatedReport gated_dice_report(const ThresholdVector& thresholds,
                              const PredictionMatrix& matrix,
                              unsigned threads) {
  const GateTally tally = tally_gated(thresholds, matrix, threads);
  GatedReport report;
  report.dice = report_from_counts(tally.counts);
  report.fallback_pixels = tally.fallback_pixels;
  return report;
}

DiceReport single_model_dice(const PredictionMatrix& matrix, std::size_t k) {
  if (k >= matrix.k_models) {
    throw Error(ErrorCode::DimensionMismatch,
                "model index " + std::to_string(k) + " out of range");
  }
  std::vector<ClassCounts> counts(matrix.m_classes);
  for (const MatrixImage& image : matrix.images) {
    const std::size_t pixels = image.pixel_count();
    const double* probs = image.probabilities.data();
    for (std::size_t p = 0; p < pixels; ++p) {
      const double* row = probs + (k * matrix.m_classes) * pixels + p;
      std::size_t best = 0;
      double best_value = -1.0;
      for (std::size_t m = 0; m < matrix.m_classes; ++m) {
        const double v = row[m * pixels];
        if (v > best_value) {
          best_value = v;
          best = m;
        }
      }
      const std::uint8_t g = image.mask.labels[p];
      ++counts[best].predicted;
      ++counts[g].ground;
      if (best == g) ++counts[best].intersection;
    }
  }
  return report_from_counts(counts);
}

std::pair<ThresholdDocument, SwarmTrace> train(const DatasetManifest& manifest,
                                               const SwarmConfig& config,
                                               unsigned threads) {
  const PredictionMatrix matrix = build_prediction_matrix(manifest);
  const FitnessFn fitness = [&matrix, threads](std::span<const double> point) {
    ThresholdVector candidate(std::vector<double>(point.begin(), point.end()));
    return fitness_of(candidate, matrix, threads);
  };
  auto [doc, trace] = optimize_thresholds(config, fitness, matrix.k_models,
                                          matrix.m_classes);
  doc.model_names = manifest.model_names;
  doc.run_info["training_images"] = std::to_string(matrix.images.size());
  doc.run_info["training_pixels"] = std::to_string(matrix.pixel_count());
  return {std::move(doc), std::move(trace)};
}

LabelMask segment(const ProbabilityStack& stack, const ThresholdDocument& doc,
                  unsigned threads) {
  if (doc.k_models() != stack.k_models) {
    std::ostringstream msg;
    msg << "document holds " << doc.k_models() << " thresholds but the stack "
        << "holds " << stack.k_models << " models";
    throw Error(ErrorCode::ShapeMismatch, msg.str());
  }
  if (doc.class_count != stack.m_classes) {
    std::ostringstream msg;
    msg << "document was trained for " << doc.class_count
        << " classes but the stack holds " << stack.m_classes;
    throw Error(ErrorCode::ShapeMismatch, msg.str());
  }
  return fuse_stack(stack, ThresholdVector(doc.thresholds), threads).mask;
}

GridResult grid_oracle(const PredictionMatrix& matrix,
                       const GridOracleSpec& spec, unsigned threads) {
  if (spec.k_models != matrix.k_models ||
      spec.m_classes != matrix.m_classes) {
    throw Error(ErrorCode::DimensionMismatch,
                "grid spec does not match the prediction matrix shape");
  }
  if (!(spec.resolution > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "grid resolution must be positive");
  }
  const double bound = std::log(static_cast<double>(spec.m_classes));
  const std::size_t cells = static_cast<std::size_t>(
      std::llround(bound / spec.resolution));
  if (cells < 1 ||
      static_cast<double>(cells - 1) * spec.resolution >= bound) {
    throw Error(ErrorCode::InvalidConfig,
                "grid resolution does not divide the threshold range");
  }
  const std::size_t points_per_dim = cells + 1;

  double total_points = 1.0;
  for (std::size_t k = 0; k < spec.k_models; ++k) {
    total_points *= static_cast<double>(points_per_dim);
    if (total_points > 1e6) {
      std::ostringstream msg;
      msg << points_per_dim << "^" << spec.k_models
          << " grid points exceed the 10^6 evaluation guard";
      throw Error(ErrorCode::GridTooLarge, msg.str());
    }
  }
  const std::uint64_t n_points =
      static_cast<std::uint64_t>(total_points + 0.5);

  std::vector<double> axis(points_per_dim);
  for (std::size_t i = 0; i < cells; ++i) {
    axis[i] = static_cast<double>(i) * spec.resolution;
  }
  axis[cells] = bound; // land exactly on ln M

  const unsigned n_threads = resolve_threads(threads);
  struct LocalBest {
    double dice = -1.0;
    std::uint64_t linear = 0;
  };
  std::vector<LocalBest> best_per_chunk;
  std::mutex chunk_mutex;

  auto decode = [&](std::uint64_t linear, std::vector<double>& point) {
    // Dimension 0 is the most significant digit, so ascending linear index
    // is ascending lexicographic order of the threshold vector.
    for (std::size_t k = spec.k_models; k-- > 0;) {
      point[k] = axis[linear % points_per_dim];
      linear /= points_per_dim;
    }
  };

  auto work = [&](std::size_t begin, std::size_t end) {
    LocalBest local;
    ThresholdVector candidate(std::vector<double>(spec.k_models, 0.0));
    for (std::uint64_t linear = begin; linear < end; ++linear) {
      decode(linear, candidate.values);
      const double dice = fitness_of(candidate, matrix, 1);
      if (dice > local.dice) {
        local.dice = dice;
        local.linear = linear;
      }
    }
    std::lock_guard<std::mutex> lock(chunk_mutex);
    best_per_chunk.push_back(local);
  };

  if (n_threads <= 1 || n_points <= 1) {
    work(0, static_cast<std::size_t>(n_points));
  } else {
    parallel_chunks(static_cast<std::size_t>(n_points), n_threads, work);
  }

  LocalBest winner;
  winner.dice = -1.0;
  winner.linear = 0;
  for (const LocalBest& local : best_per_chunk) {
    if (local.dice > winner.dice ||
        (local.dice == winner.dice && local.linear < winner.linear)) {
      winner = local;
    }
  }

  GridResult result;
  result.best.values.resize(spec.k_models);
  decode(winner.linear, result.best.values);
  result.best_dice = winner.dice;
  result.evaluations = n_points;
  return result;
}

} // namespace entrofuse
