#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "entrofuse/manifest.hpp"
#include "entrofuse/rng.hpp"
#include "entrofuse/types.hpp"

namespace entrofuse {

// Stand-in for a trained segmentation model. Emitted rows lie on the
// simplex; the argmax matches a bias-distorted view of the ground truth
// with probability base_accuracy; confidence (and hence entropy) is driven
// by sharpness, with wrong pixels emitted noticeably flatter.
struct SyntheticPredictorSpec {
  std::string name;
  double base_accuracy = 0.9; // probability the perceived class wins
  double sharpness = 4.0;     // concentration exponent; higher = lower entropy
  int bias = 0;               // >0 dilates foreground, <0 erodes, in pixels
  std::uint64_t seed = 1;

  void validate() const; // 0 < base_accuracy < 1, sharpness > 0
};

struct SyntheticDatasetSpec {
  std::size_t train_images = 20;
  std::size_t test_images = 0;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t class_count = 2;
  std::size_t fold_count = 5;
  std::uint64_t seed = 1; // drives ground-truth mask generation
};

// Ground truth: random filled ellipses, one or two per nonzero class,
// later classes painting over earlier ones.
LabelMask random_shape_mask(std::size_t height, std::size_t width,
                            std::size_t m_classes, RandomStream& rng);

// 4-neighbour dilation (bias > 0) or erosion (bias < 0) of the nonzero
// region, |bias| rounds; models that systematically over- or under-segment.
LabelMask apply_bias(const LabelMask& mask, int bias);

// One model's M x H x W probability planes for one image. stream_key
// packs (fold, image index) so out-of-fold stacks differ per fold the way
// real cross-validation models would.
std::vector<float> emit_probabilities(const LabelMask& truth,
                                      const SyntheticPredictorSpec& spec,
                                      std::size_t m_classes,
                                      std::uint64_t stream_key);

constexpr std::uint64_t fold_image_key(std::size_t fold,
                                       std::size_t image_index) {
  return (static_cast<std::uint64_t>(fold) << 32) |
         static_cast<std::uint64_t>(image_index);
}

// All K models stacked for one image.
ProbabilityStack synthesize_stack(const LabelMask& truth,
                                  std::span<const SyntheticPredictorSpec> specs,
                                  std::size_t m_classes, std::size_t fold,
                                  std::size_t image_index);

// Writes masks/, stacks/ and manifest.json under out_dir and returns the
// manifest. Training entries carry fold and stack_fold; test entries are
// emitted with the sentinel fold index fold_count so their stacks never
// coincide with a training fold's stream.
DatasetManifest synthesize_dataset(const SyntheticDatasetSpec& dataset,
                                   std::span<const SyntheticPredictorSpec> specs,
                                   const std::filesystem::path& out_dir);

} // namespace entrofuse
