#include "entrofuse/synthetic.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "entrofuse/error.hpp"
#include "entrofuse/tensor_io.hpp"

namespace entrofuse {

void SyntheticPredictorSpec::validate() const {
  if (!(base_accuracy > 0.0 && base_accuracy < 1.0)) {
    throw Error(ErrorCode::InvalidConfig,
                "base_accuracy must lie strictly inside (0, 1)");
  }
  if (!(sharpness > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "sharpness must be positive");
  }
  if (name.empty()) {
    throw Error(ErrorCode::InvalidConfig, "predictor name must be non-empty");
  }
}

LabelMask random_shape_mask(std::size_t height, std::size_t width,
                            std::size_t m_classes, RandomStream& rng) {
  LabelMask mask;
  mask.height = height;
  mask.width = width;
  mask.labels.assign(height * width, 0);

  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  for (std::size_t cls = 1; cls < m_classes; ++cls) {
    const std::size_t blobs = 1 + rng.below(2);
    for (std::size_t b = 0; b < blobs; ++b) {
      const double cy = rng.uniform(0.15 * h, 0.85 * h);
      const double cx = rng.uniform(0.15 * w, 0.85 * w);
      const double ry = rng.uniform(h / 8.0, h / 3.0);
      const double rx = rng.uniform(w / 8.0, w / 3.0);
      for (std::size_t i = 0; i < height; ++i) {
        const double dy = (static_cast<double>(i) - cy) / ry;
        for (std::size_t j = 0; j < width; ++j) {
          const double dx = (static_cast<double>(j) - cx) / rx;
          if (dy * dy + dx * dx <= 1.0) {
            mask.labels[i * width + j] = static_cast<std::uint8_t>(cls);
          }
        }
      }
    }
  }
  return mask;
}

LabelMask apply_bias(const LabelMask& mask, int bias) {
  LabelMask current = mask;
  const std::size_t height = mask.height;
  const std::size_t width = mask.width;
  const int rounds = std::abs(bias);
  for (int round = 0; round < rounds; ++round) {
    LabelMask next = current;
    for (std::size_t i = 0; i < height; ++i) {
      for (std::size_t j = 0; j < width; ++j) {
        const std::uint8_t here = current.at(i, j);
        // 4-neighbourhood; out-of-image counts as background.
        const std::uint8_t north = i > 0 ? current.at(i - 1, j) : 0;
        const std::uint8_t south = i + 1 < height ? current.at(i + 1, j) : 0;
        const std::uint8_t west = j > 0 ? current.at(i, j - 1) : 0;
        const std::uint8_t east = j + 1 < width ? current.at(i, j + 1) : 0;
        if (bias > 0) {
          if (here == 0) {
            if (north) next.at(i, j) = north;
            else if (south) next.at(i, j) = south;
            else if (west) next.at(i, j) = west;
            else if (east) next.at(i, j) = east;
          }
        } else {
          if (here != 0 &&
              (north == 0 || south == 0 || west == 0 || east == 0)) {
            next.at(i, j) = 0;
          }
        }
      }
    }
    current = std::move(next);
  }
  return current;
}

std::vector<float> emit_probabilities(const LabelMask& truth,
                                      const SyntheticPredictorSpec& spec,
                                      std::size_t m_classes,
                                      std::uint64_t stream_key) {
  spec.validate();
  if (m_classes < 2) {
    throw Error(ErrorCode::InvalidConfig, "m_classes must be >= 2");
  }
  const LabelMask perceived = apply_bias(truth, spec.bias);
  const std::size_t pixels = truth.pixel_count();
  std::vector<float> out(m_classes * pixels);
  RandomStream rng(spec.seed, stream_key);

  const double inv_m = 1.0 / static_cast<double>(m_classes);
  const double loser_scale = 1.0 / static_cast<double>(m_classes - 1);
  for (std::size_t p = 0; p < pixels; ++p) {
    const std::size_t seen = perceived.labels[p];
    std::size_t winner = seen;
    if (!(rng.uniform() < spec.base_accuracy)) {
      std::size_t other = rng.below(m_classes - 1);
      if (other >= seen) ++other;
      winner = other;
    }
    // Winner mass interpolates between uniform (1/M) and certain (1);
    // wrong pixels use a much flatter exponent, so mistakes carry
    // visibly higher entropy than hits.
    const double exponent =
        winner == seen ? spec.sharpness : spec.sharpness * 0.35;
    const double r = rng.uniform();
    const double q =
        inv_m + (1.0 - inv_m) * std::pow(r, 1.0 / exponent);
    const double rest = (1.0 - q) * loser_scale;
    for (std::size_t m = 0; m < m_classes; ++m) {
      out[m * pixels + p] = static_cast<float>(m == winner ? q : rest);
    }
  }
  return out;
}

ProbabilityStack synthesize_stack(const LabelMask& truth,
                                  std::span<const SyntheticPredictorSpec> specs,
                                  std::size_t m_classes, std::size_t fold,
                                  std::size_t image_index) {
  if (specs.empty()) {
    throw Error(ErrorCode::InvalidConfig, "need at least one predictor spec");
  }
  ProbabilityStack stack;
  stack.k_models = specs.size();
  stack.m_classes = m_classes;
  stack.height = truth.height;
  stack.width = truth.width;
  stack.data.resize(stack.value_count());

  const std::size_t pixels = truth.pixel_count();
  const std::uint64_t key = fold_image_key(fold, image_index);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const std::vector<float> planes =
        emit_probabilities(truth, specs[k], m_classes, key);
    std::copy(planes.begin(), planes.end(),
              stack.data.begin() +
                  static_cast<std::ptrdiff_t>(k * m_classes * pixels));
  }
  return stack;
}

DatasetManifest synthesize_dataset(const SyntheticDatasetSpec& dataset,
                                   std::span<const SyntheticPredictorSpec> specs,
                                   const std::filesystem::path& out_dir) {
  if (dataset.train_images == 0) {
    throw Error(ErrorCode::InvalidConfig, "need at least one training image");
  }
  if (dataset.fold_count == 0) {
    throw Error(ErrorCode::InvalidConfig, "fold_count must be >= 1");
  }
  for (const auto& spec : specs) spec.validate();

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "masks", ec);
  std::filesystem::create_directories(out_dir / "stacks", ec);
  if (ec) {
    throw Error(ErrorCode::IoFailure,
                "cannot create output directories under " + out_dir.string());
  }

  DatasetManifest manifest;
  manifest.base_dir = out_dir;
  manifest.class_count = dataset.class_count;
  manifest.fold_count = dataset.fold_count;
  for (const auto& spec : specs) manifest.model_names.push_back(spec.name);

  const std::size_t total = dataset.train_images + dataset.test_images;
  for (std::size_t n = 0; n < total; ++n) {
    const bool is_test = n >= dataset.train_images;
    RandomStream mask_rng(dataset.seed, static_cast<std::uint64_t>(n));
    const LabelMask truth = random_shape_mask(
        dataset.height, dataset.width, dataset.class_count, mask_rng);

    // Test stacks use the sentinel fold index T: a model trained on all of
    // the training data, as the deployment path would see.
    const std::size_t fold =
        is_test ? dataset.fold_count : n % dataset.fold_count;
    const ProbabilityStack stack =
        synthesize_stack(truth, specs, dataset.class_count, fold, n);

    std::ostringstream id;
    id << (is_test ? "test_" : "img_");
    id.width(3);
    id.fill('0');
    id << (is_test ? n - dataset.train_images : n);

    ManifestEntry entry;
    entry.image_id = id.str();
    entry.mask_path = "masks/" + entry.image_id + ".pgm";
    entry.stack_path = "stacks/" + entry.image_id + ".pten";
    entry.is_test = is_test;
    if (!is_test) {
      entry.fold = fold;
      entry.stack_fold = fold;
    }

    write_mask(truth, out_dir / entry.mask_path);
    write_stack(stack, out_dir / entry.stack_path, manifest.model_names);
    manifest.entries.push_back(std::move(entry));
  }

  manifest.validate();
  write_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

} // namespace entrofuse
