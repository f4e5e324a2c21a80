#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "entrofuse/types.hpp"

namespace entrofuse {

// Shannon entropy in nats, with the 0 * ln 0 = 0 convention. The caller is
// expected to pass a (near-)normalized distribution; no renormalization
// happens here.
double shannon_entropy(std::span<const double> probabilities);

// Marks model k as selected iff entropies[k] < thresholds[k] (strict).
std::vector<bool> select_members(std::span<const double> entropies,
                                 std::span<const double> thresholds);

// Fuses one pixel given precomputed per-model rows and entropies.
//   rows:      k_models * m_classes doubles, row-major, each row normalized.
//   entropies: k_models doubles.
// Selected rows are averaged; when no entropy clears its threshold the
// combined row is the unweighted mean of all rows (selected_count == 0
// signals that fallback). The label is the argmax of the combined row with
// ties broken toward the lowest class index.
FusedPixel fuse_gated(std::span<const double> rows,
                      std::span<const double> entropies,
                      std::span<const double> thresholds,
                      std::size_t m_classes);

// Convenience wrapper for tests and one-off pixels: renormalizes each row,
// computes entropies, then calls fuse_gated.
FusedPixel fuse_pixel(std::span<const double> rows,
                      std::span<const double> thresholds,
                      std::size_t m_classes);

struct FusedStack {
  LabelMask mask;
  std::vector<double> combined; // m_classes * height * width, row-major
  std::size_t fallback_pixels = 0;
  std::size_t m_classes = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t index(std::size_t m, std::size_t i, std::size_t j) const {
    return (m * height + i) * width + j;
  }
};

// Fuses a full stack. Rows are renormalized as q = p * (1 / rowsum) in
// double precision before entropy and averaging, matching the training
// fitness path operation for operation.
FusedStack fuse_stack(const ProbabilityStack& stack,
                      const ThresholdVector& thresholds,
                      unsigned threads = 1);

} // namespace entrofuse
