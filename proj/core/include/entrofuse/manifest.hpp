#ifndef ENTROFUSE_MANIFEST_HPP
#define ENTROFUSE_MANIFEST_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace entrofuse {

enum class Split { kTrain, kTest, kAll };

/// One image of a dataset: its ground-truth mask plus either one combined
/// K-model probability stack or K per-model stacks. Training entries carry
/// the cross-validation fold the image belongs to; `stack_fold` declares
/// which fold was held out when the stack was produced (defaults to the
/// image's own fold) so leakage is checkable rather than assumed.
struct ManifestEntry {
  std::string image_id;
  std::string stack_path;                 // combined stack, may be empty
  std::vector<std::string> stack_paths;   // per-model stacks, may be empty
  std::string mask_path;
  std::optional<std::size_t> fold;
  std::optional<std::size_t> stack_fold;
  bool is_test = false;

  bool has_stack() const {
    return !stack_path.empty() || !stack_paths.empty();
  }
};

/// Declares models, classes, folds and file locations for a dataset. Paths
/// are resolved relative to the manifest file's directory.
struct DatasetManifest {
  std::vector<std::string> model_names;
  std::size_t class_count = 0;
  std::size_t fold_count = 5;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::size_t k_models() const { return model_names.size(); }
  std::filesystem::path resolve(const std::string& rel) const {
    return base_dir / rel;
  }

  std::vector<const ManifestEntry*> select(Split split) const;

  /// Structural validation: unique non-empty model names, 2 <= M <= 256,
  /// unique image ids, per-model stack lists sized K, folds within [0, T)
  /// and covering 0..T-1 over the training split. Throws ManifestInvalid.
  void validate() const;

  /// When no training entry carries a fold, deals images round-robin into
  /// the T folds after sorting by image id, so splits are reproducible.
  void assign_missing_folds();
};

/// Parses a manifest document and validates it; mask files must exist
/// (stack files are checked when the prediction matrix is built).
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Writes the manifest as a JSON document with stable key order.
void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path);

} // namespace entrofuse

#endif
