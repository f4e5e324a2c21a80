#include "entrofuse/metrics.hpp"

#include <sstream>

#include "entrofuse/error.hpp"

namespace entrofuse {

double dice_binary(std::span<const std::uint8_t> predicted,
                   std::span<const std::uint8_t> ground) {
  if (predicted.size() != ground.size()) {
    std::ostringstream msg;
    msg << "prediction length " << predicted.size()
        << " does not match ground-truth length " << ground.size();
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  ClassCounts counts;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0;
    const bool g = ground[i] != 0;
    counts.predicted += p;
    counts.ground += g;
    counts.intersection += p && g;
  }
  return dice_from_counts(counts);
}

double dice_from_counts(const ClassCounts& counts) {
  const std::uint64_t denom = counts.predicted + counts.ground;
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(counts.intersection) /
         static_cast<double>(denom);
}

DiceReport dice_average(const std::vector<LabelMask>& predicted,
                        const std::vector<LabelMask>& ground,
                        std::size_t m_classes) {
  if (predicted.size() != ground.size()) {
    std::ostringstream msg;
    msg << "prediction count " << predicted.size()
        << " does not match ground-truth count " << ground.size();
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  if (m_classes < 2) {
    throw Error(ErrorCode::InvalidConfig, "m_classes must be >= 2");
  }

  std::vector<ClassCounts> counts(m_classes);
  for (std::size_t n = 0; n < predicted.size(); ++n) {
    const LabelMask& p = predicted[n];
    const LabelMask& g = ground[n];
    if (p.height != g.height || p.width != g.width) {
      std::ostringstream msg;
      msg << "mask " << n << ": prediction is " << p.height << "x" << p.width
          << " but ground truth is " << g.height << "x" << g.width;
      throw Error(ErrorCode::DimensionMismatch, msg.str());
    }
    p.validate_labels(m_classes, "prediction");
    g.validate_labels(m_classes, "ground truth");
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
      const std::uint8_t pl = p.labels[i];
      const std::uint8_t gl = g.labels[i];
      ++counts[pl].predicted;
      ++counts[gl].ground;
      if (pl == gl) ++counts[pl].intersection;
    }
  }

  DiceReport report;
  report.per_class.resize(m_classes);
  double sum = 0.0;
  for (std::size_t m = 0; m < m_classes; ++m) {
    if (counts[m].predicted + counts[m].ground == 0) {
      ++report.both_empty_classes;
    }
    report.per_class[m] = dice_from_counts(counts[m]);
    sum += report.per_class[m];
  }
  report.average = sum / static_cast<double>(m_classes);
  return report;
}

} // namespace entrofuse
