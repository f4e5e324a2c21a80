#ifndef ENTROFUSE_TYPES_HPP
#define ENTROFUSE_TYPES_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace entrofuse {

/// Tolerance for per-pixel probability sums on load. 32-bit sources
/// accumulate rounding; rows are renormalized before any entropy math.
inline constexpr double kRowSumTolerance = 1e-4;

/// Per-image tensor of K models x M classes x H x W class probabilities,
/// stored row-major in (k, m, i, j) order as 32-bit floats.
struct ProbabilityStack {
  std::size_t k_models = 0;
  std::size_t m_classes = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;

  std::size_t pixel_count() const { return height * width; }
  std::size_t value_count() const {
    return k_models * m_classes * height * width;
  }
  std::size_t index(std::size_t k, std::size_t m, std::size_t i,
                    std::size_t j) const {
    return ((k * m_classes + m) * height + i) * width + j;
  }
  float at(std::size_t k, std::size_t m, std::size_t i, std::size_t j) const {
    return data[index(k, m, i, j)];
  }
  float& at(std::size_t k, std::size_t m, std::size_t i, std::size_t j) {
    return data[index(k, m, i, j)];
  }

  /// Enforces the invariants: K >= 1, M >= 2, H,W >= 1, every value in
  /// [0, 1], and every per-pixel row summing to 1 within kRowSumTolerance.
  /// Throws ProbabilityOutOfRange / RowNotNormalized / DimensionMismatch;
  /// the row-sum error names the worst offending pixel and its deviation.
  void validate() const;
};

/// Per-image H x W integer class labels (ground truth or fused prediction).
/// Byte-sized labels match the PGM interchange format, capping M at 256.
struct LabelMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> labels;

  std::size_t pixel_count() const { return height * width; }
  std::uint8_t at(std::size_t i, std::size_t j) const {
    return labels[i * width + j];
  }
  std::uint8_t& at(std::size_t i, std::size_t j) {
    return labels[i * width + j];
  }

  /// Raises LabelExceedsClassCount if any label >= m_classes. Called at
  /// pairing time (mask files do not know M on their own).
  void validate_labels(std::size_t m_classes, const std::string& source) const;

  bool operator==(const LabelMask&) const = default;
};

/// K per-model entropy thresholds in nats, the decision variables of the
/// threshold search. Feasible range is [0, ln M].
struct ThresholdVector {
  std::vector<double> values;

  ThresholdVector() = default;
  explicit ThresholdVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }

  /// Throws InvalidConfig unless every value lies in [0, ln m_classes].
  void validate(std::size_t m_classes) const;
};

/// One fused pixel: combined class probabilities, the assigned label, and
/// how many models passed their gate (0 signals the all-model fallback).
struct FusedPixel {
  std::vector<double> combined;
  std::size_t label = 0;
  std::size_t selected_count = 0;
};

} // namespace entrofuse

#endif
