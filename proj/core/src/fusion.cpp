#include "entrofuse/fusion.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include "entrofuse/error.hpp"
#include "entrofuse/parallel.hpp"

namespace entrofuse {

double shannon_entropy(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<bool> select_members(std::span<const double> entropies,
                                 std::span<const double> thresholds) {
  if (entropies.size() != thresholds.size()) {
    std::ostringstream msg;
    msg << "entropy count " << entropies.size()
        << " does not match threshold count " << thresholds.size();
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  std::vector<bool> selected(entropies.size());
  for (std::size_t k = 0; k < entropies.size(); ++k) {
    selected[k] = entropies[k] < thresholds[k];
  }
  return selected;
}

FusedPixel fuse_gated(std::span<const double> rows,
                      std::span<const double> entropies,
                      std::span<const double> thresholds,
                      std::size_t m_classes) {
  const std::size_t k_models = entropies.size();
  if (thresholds.size() != k_models) {
    throw Error(ErrorCode::LengthMismatch,
                "threshold count does not match model count");
  }
  if (rows.size() != k_models * m_classes) {
    throw Error(ErrorCode::LengthMismatch,
                "row buffer does not hold k_models * m_classes values");
  }

  FusedPixel out;
  out.combined.assign(m_classes, 0.0);
  out.selected_count = 0;

  for (std::size_t k = 0; k < k_models; ++k) {
    if (entropies[k] < thresholds[k]) {
      const double* row = rows.data() + k * m_classes;
      for (std::size_t m = 0; m < m_classes; ++m) out.combined[m] += row[m];
      ++out.selected_count;
    }
  }

  std::size_t divisor = out.selected_count;
  if (divisor == 0) {
    // No model is confident enough: fall back to the plain mean of all rows.
    for (std::size_t k = 0; k < k_models; ++k) {
      const double* row = rows.data() + k * m_classes;
      for (std::size_t m = 0; m < m_classes; ++m) out.combined[m] += row[m];
    }
    divisor = k_models;
  }

  const double inv = 1.0 / static_cast<double>(divisor);
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t m = 0; m < m_classes; ++m) {
    out.combined[m] *= inv;
    if (out.combined[m] > best_value) {
      best_value = out.combined[m];
      best = m;
    }
  }
  out.label = best;
  return out;
}

FusedPixel fuse_pixel(std::span<const double> rows,
                      std::span<const double> thresholds,
                      std::size_t m_classes) {
  const std::size_t k_models = thresholds.size();
  if (rows.size() != k_models * m_classes) {
    throw Error(ErrorCode::LengthMismatch,
                "row buffer does not hold k_models * m_classes values");
  }
  std::vector<double> renormed(rows.size());
  std::vector<double> entropies(k_models);
  for (std::size_t k = 0; k < k_models; ++k) {
    const double* src = rows.data() + k * m_classes;
    double* dst = renormed.data() + k * m_classes;
    double sum = 0.0;
    for (std::size_t m = 0; m < m_classes; ++m) sum += src[m];
    if (!(sum > 0.0)) {
      std::ostringstream msg;
      msg << "row " << k << " sums to " << sum << "; cannot renormalize";
      throw Error(ErrorCode::RowNotNormalized, msg.str());
    }
    const double inv = 1.0 / sum;
    for (std::size_t m = 0; m < m_classes; ++m) dst[m] = src[m] * inv;
    entropies[k] =
        shannon_entropy(std::span<const double>(dst, m_classes));
  }
  return fuse_gated(renormed, entropies, thresholds, m_classes);
}

FusedStack fuse_stack(const ProbabilityStack& stack,
                      const ThresholdVector& thresholds,
                      unsigned threads) {
  stack.validate();
  if (thresholds.values.size() != stack.k_models) {
    std::ostringstream msg;
    msg << "threshold count " << thresholds.values.size()
        << " does not match model count " << stack.k_models;
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  thresholds.validate(stack.m_classes);

  const std::size_t k_models = stack.k_models;
  const std::size_t m_classes = stack.m_classes;
  const std::size_t height = stack.height;
  const std::size_t width = stack.width;
  const std::size_t pixels = height * width;

  FusedStack out;
  out.m_classes = m_classes;
  out.height = height;
  out.width = width;
  out.combined.assign(m_classes * pixels, 0.0);
  out.mask.height = height;
  out.mask.width = width;
  out.mask.labels.assign(pixels, 0);

  std::vector<std::size_t> fallback_per_chunk;
  const unsigned n_threads = resolve_threads(threads);
  std::atomic<std::size_t> chunk_counter{0};

  auto worker = [&](std::size_t begin, std::size_t end, std::size_t chunk_id) {
    std::vector<double> rows(k_models * m_classes);
    std::vector<double> entropies(k_models);
    std::size_t fallback = 0;
    for (std::size_t p = begin; p < end; ++p) {
      for (std::size_t k = 0; k < k_models; ++k) {
        const float* src =
            stack.data.data() + (k * m_classes) * pixels + p;
        double sum = 0.0;
        for (std::size_t m = 0; m < m_classes; ++m) {
          const double v = static_cast<double>(src[m * pixels]);
          rows[k * m_classes + m] = v;
          sum += v;
        }
        const double inv = 1.0 / sum;
        double* row = rows.data() + k * m_classes;
        for (std::size_t m = 0; m < m_classes; ++m) row[m] *= inv;
        entropies[k] =
            shannon_entropy(std::span<const double>(row, m_classes));
      }
      FusedPixel fused =
          fuse_gated(rows, entropies, thresholds.values, m_classes);
      if (fused.selected_count == 0) ++fallback;
      out.mask.labels[p] = static_cast<std::uint8_t>(fused.label);
      for (std::size_t m = 0; m < m_classes; ++m) {
        out.combined[m * pixels + p] = fused.combined[m];
      }
    }
    fallback_per_chunk[chunk_id] += fallback;
  };

  if (n_threads <= 1 || pixels <= 1) {
    fallback_per_chunk.assign(1, 0);
    worker(0, pixels, 0);
  } else {
    fallback_per_chunk.assign(n_threads, 0);
    parallel_chunks(pixels, n_threads, [&](std::size_t begin, std::size_t end) {
      const std::size_t id = chunk_counter.fetch_add(1);
      worker(begin, end, id);
    });
  }
  for (std::size_t f : fallback_per_chunk) out.fallback_pixels += f;
  return out;
}

} // namespace entrofuse
