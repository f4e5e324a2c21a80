#include "entrofuse/types.hpp"

#include <cmath>
#include <sstream>

#include "entrofuse/error.hpp"

namespace entrofuse {

void ProbabilityStack::validate() const {
  if (k_models < 1 || m_classes < 2 || height < 1 || width < 1) {
    std::ostringstream msg;
    msg << "stack shape [" << k_models << "," << m_classes << "," << height
        << "," << width << "] requires K>=1, M>=2, H>=1, W>=1";
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
  if (data.size() != value_count()) {
    std::ostringstream msg;
    msg << "stack holds " << data.size() << " values, shape requires "
        << value_count();
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }

  for (std::size_t idx = 0; idx < data.size(); ++idx) {
    const float v = data[idx];
    if (!(v >= 0.0f && v <= 1.0f)) {
      std::ostringstream msg;
      msg << "value " << v << " at flat index " << idx
          << " outside [0, 1]";
      throw Error(ErrorCode::ProbabilityOutOfRange, msg.str());
    }
  }

  // One full scan so the error can report the worst pixel, not the first.
  double worst_dev = 0.0;
  std::size_t worst_k = 0, worst_i = 0, worst_j = 0;
  for (std::size_t k = 0; k < k_models; ++k) {
    for (std::size_t i = 0; i < height; ++i) {
      for (std::size_t j = 0; j < width; ++j) {
        double sum = 0.0;
        for (std::size_t m = 0; m < m_classes; ++m) {
          sum += static_cast<double>(at(k, m, i, j));
        }
        const double dev = std::abs(sum - 1.0);
        if (dev > worst_dev) {
          worst_dev = dev;
          worst_k = k;
          worst_i = i;
          worst_j = j;
        }
      }
    }
  }
  if (worst_dev > kRowSumTolerance) {
    std::ostringstream msg;
    msg << "probabilities at (k=" << worst_k << ", i=" << worst_i
        << ", j=" << worst_j << ") sum to 1 " << (worst_dev > 0 ? "+/- " : "")
        << worst_dev << ", tolerance " << kRowSumTolerance
        << " (worst pixel of the tensor)";
    throw Error(ErrorCode::RowNotNormalized, msg.str());
  }
}

void LabelMask::validate_labels(std::size_t m_classes,
                                const std::string& source) const {
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      if (at(i, j) >= m_classes) {
        std::ostringstream msg;
        msg << source << ": label " << static_cast<unsigned>(at(i, j))
            << " at (" << i << ", " << j << ") exceeds class count "
            << m_classes;
        throw Error(ErrorCode::LabelExceedsClassCount, msg.str());
      }
    }
  }
}

void ThresholdVector::validate(std::size_t m_classes) const {
  const double bound = std::log(static_cast<double>(m_classes));
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] >= 0.0 && values[k] <= bound)) {
      std::ostringstream msg;
      msg << "threshold[" << k << "] = " << values[k] << " outside [0, ln "
          << m_classes << " = " << bound << "]";
      throw Error(ErrorCode::InvalidConfig, msg.str());
    }
  }
}

} // namespace entrofuse
