#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "entrofuse/types.hpp"

namespace entrofuse {

// Per-class overlap tallies. Integer counts keep the score exact and
// independent of pixel visit order.
struct ClassCounts {
  std::uint64_t intersection = 0;
  std::uint64_t predicted = 0;
  std::uint64_t ground = 0;
};

struct DiceReport {
  std::vector<double> per_class;
  double average = 0.0;
  // Classes absent from both prediction and ground truth score 1.0; the
  // count lets callers surface how often that degenerate case fired.
  std::size_t both_empty_classes = 0;
};

// 2 |P ∩ G| / (|P| + |G|) over two binary vectors of equal length.
// Both empty scores 1.0.
double dice_binary(std::span<const std::uint8_t> predicted,
                   std::span<const std::uint8_t> ground);

double dice_from_counts(const ClassCounts& counts);

// Accumulates per-class counts over the whole corpus (all masks flattened
// together), then scores each class once. Masks are paired by index and must
// agree on dimensions.
DiceReport dice_average(const std::vector<LabelMask>& predicted,
                        const std::vector<LabelMask>& ground,
                        std::size_t m_classes);

} // namespace entrofuse
