#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "entrofuse/clpso.hpp"
#include "entrofuse/documents.hpp"
#include "entrofuse/manifest.hpp"
#include "entrofuse/metrics.hpp"
#include "entrofuse/types.hpp"

namespace entrofuse {

// One training image prepared for threshold search: probabilities are
// renormalized to double precision and per-model entropies precomputed, so
// a fitness evaluation only compares entropies against thresholds. The
// arithmetic here matches fuse_stack operation for operation — training
// scores and deployment masks agree bit for bit.
struct MatrixImage {
  std::string image_id;
  std::size_t fold = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> probabilities; // k_models * m_classes * pixels
  std::vector<double> entropies;     // k_models * pixels
  LabelMask mask;

  std::size_t pixel_count() const { return height * width; }
};

struct PredictionMatrix {
  std::size_t k_models = 0;
  std::size_t m_classes = 0;
  std::vector<MatrixImage> images;

  std::size_t pixel_count() const;
};

// Prepares one stack/mask pair (validates, renormalizes, precomputes
// entropies). Exposed so in-memory instances skip the manifest round trip.
MatrixImage matrix_image_from(const ProbabilityStack& stack,
                              const LabelMask& mask, std::string image_id,
                              std::size_t fold);

// Loads an entry's stack: either the combined file or K per-model files
// concatenated in manifest model order. Checks shapes and any embedded
// model names against the manifest.
ProbabilityStack load_entry_stack(const DatasetManifest& manifest,
                                  const ManifestEntry& entry);

// Assembles the out-of-fold prediction matrix over the training split.
// Raises MissingFoldPrediction when an image lacks its stack and
// FoldLeakage when a stack's declared fold disagrees with its image's fold.
PredictionMatrix build_prediction_matrix(const DatasetManifest& manifest);

// Mean Dice over all classes of the gated fusion of every training pixel.
// Pure: same thresholds + same matrix give bit-identical results.
double fitness_of(const ThresholdVector& thresholds,
                  const PredictionMatrix& matrix, unsigned threads = 1);

struct GatedReport {
  DiceReport dice;
  std::uint64_t fallback_pixels = 0;
};

GatedReport gated_dice_report(const ThresholdVector& thresholds,
                              const PredictionMatrix& matrix,
                              unsigned threads = 1);

// Dice of model k's plain argmax over the matrix (evaluation baseline).
DiceReport single_model_dice(const PredictionMatrix& matrix, std::size_t k);

// Full training pass: matrix assembly, CLPSO threshold search, document
// packaging (model names, achieved Dice, resolved configuration, seed).
std::pair<ThresholdDocument, SwarmTrace> train(const DatasetManifest& manifest,
                                               const SwarmConfig& config,
                                               unsigned threads = 1);

// Deployment path: gate + fuse one stack with trained thresholds.
LabelMask segment(const ProbabilityStack& stack, const ThresholdDocument& doc,
                  unsigned threads = 1);

struct GridOracleSpec {
  double resolution = 0.0693; // grid step per threshold dimension
  std::size_t k_models = 0;
  std::size_t m_classes = 0;
};

struct GridResult {
  ThresholdVector best;
  double best_dice = 0.0;
  std::uint64_t evaluations = 0;
};

// Exhaustive fitness sweep over {0, d, 2d, ..., ln M}^K. Ties resolve to
// the lexicographically smallest point. Guard: point count must not
// exceed 10^6 (GridTooLarge).
GridResult grid_oracle(const PredictionMatrix& matrix,
                       const GridOracleSpec& spec, unsigned threads = 1);

} // namespace entrofuse
