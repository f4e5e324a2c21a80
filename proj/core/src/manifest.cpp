#include "entrofuse/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "entrofuse/error.hpp"

namespace entrofuse {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCode::ManifestInvalid, message);
}

} // namespace

std::vector<const ManifestEntry*> DatasetManifest::select(Split split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& entry : entries) {
    if (split == Split::kAll || entry.is_test == (split == Split::kTest)) {
      out.push_back(&entry);
    }
  }
  return out;
}

void DatasetManifest::validate() const {
  if (model_names.empty()) invalid("model_names must not be empty");
  std::set<std::string> seen_names(model_names.begin(), model_names.end());
  if (seen_names.size() != model_names.size()) {
    invalid("model_names must be unique");
  }
  for (const auto& name : model_names) {
    if (name.empty()) invalid("model names must not be empty strings");
  }
  if (class_count < 2 || class_count > 256) {
    invalid("class_count must be in [2, 256] (PGM masks are byte-labelled)");
  }
  if (fold_count < 1) invalid("folds must be >= 1");
  if (entries.empty()) invalid("entries must not be empty");

  std::set<std::string> ids;
  std::set<std::size_t> train_folds;
  std::size_t train_with_fold = 0, train_total = 0;
  for (const auto& entry : entries) {
    if (entry.image_id.empty()) invalid("entry with empty image id");
    if (!ids.insert(entry.image_id).second) {
      invalid("duplicate image id " + entry.image_id);
    }
    if (entry.mask_path.empty()) {
      invalid("image " + entry.image_id + " declares no mask path");
    }
    if (!entry.stack_path.empty() && !entry.stack_paths.empty()) {
      invalid("image " + entry.image_id +
              " declares both a combined stack and per-model stacks");
    }
    if (!entry.stack_paths.empty() &&
        entry.stack_paths.size() != model_names.size()) {
      std::ostringstream msg;
      msg << "image " << entry.image_id << " declares "
          << entry.stack_paths.size() << " per-model stacks, expected "
          << model_names.size();
      invalid(msg.str());
    }
    if (entry.is_test) continue;

    ++train_total;
    if (entry.fold) {
      ++train_with_fold;
      if (*entry.fold >= fold_count) {
        std::ostringstream msg;
        msg << "image " << entry.image_id << " fold " << *entry.fold
            << " outside [0, " << fold_count << ")";
        invalid(msg.str());
      }
      train_folds.insert(*entry.fold);
    }
    if (entry.stack_fold && *entry.stack_fold >= fold_count) {
      invalid("image " + entry.image_id + " stack_fold outside [0, T)");
    }
  }
  if (train_total > 0) {
    if (train_with_fold != 0 && train_with_fold != train_total) {
      invalid("either every training entry carries a fold or none does");
    }
    if (train_with_fold == train_total && train_folds.size() != fold_count) {
      std::ostringstream msg;
      msg << "training folds cover " << train_folds.size() << " of "
          << fold_count << " folds";
      invalid(msg.str());
    }
  }
}

void DatasetManifest::assign_missing_folds() {
  std::vector<ManifestEntry*> train;
  for (auto& entry : entries) {
    if (!entry.is_test) {
      if (entry.fold) return; // folds already declared
      train.push_back(&entry);
    }
  }
  std::sort(train.begin(), train.end(),
            [](const ManifestEntry* a, const ManifestEntry* b) {
              return a->image_id < b->image_id;
            });
  for (std::size_t n = 0; n < train.size(); ++n) {
    train[n]->fold = n % fold_count;
  }
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    invalid(path.string() + ": not valid JSON (" + std::string(e.what()) +
            ")");
  }
  if (!doc.is_object()) invalid(path.string() + ": top level must be object");

  DatasetManifest manifest;
  manifest.base_dir = path.parent_path();
  try {
    manifest.model_names = doc.at("model_names").get<std::vector<std::string>>();
    manifest.class_count = doc.at("class_count").get<std::size_t>();
    manifest.fold_count = doc.value("folds", std::size_t{5});
    for (const auto& e : doc.at("entries")) {
      ManifestEntry entry;
      entry.image_id = e.at("image").get<std::string>();
      entry.stack_path = e.value("stack", std::string{});
      if (e.contains("stacks")) {
        entry.stack_paths = e["stacks"].get<std::vector<std::string>>();
      }
      entry.mask_path = e.at("mask").get<std::string>();
      if (e.contains("fold")) entry.fold = e["fold"].get<std::size_t>();
      if (e.contains("stack_fold")) {
        entry.stack_fold = e["stack_fold"].get<std::size_t>();
      }
      const std::string split = e.value("split", std::string{"train"});
      if (split != "train" && split != "test") {
        invalid("image " + entry.image_id + ": split must be train or test");
      }
      entry.is_test = split == "test";
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    invalid(path.string() + ": " + e.what());
  }

  manifest.validate();
  manifest.assign_missing_folds();

  for (const auto& entry : manifest.entries) {
    if (!std::filesystem::exists(manifest.resolve(entry.mask_path))) {
      invalid("image " + entry.image_id + ": mask file " + entry.mask_path +
              " does not exist");
    }
  }
  return manifest;
}

void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path) {
  manifest.validate();
  json doc;
  doc["model_names"] = manifest.model_names;
  doc["class_count"] = manifest.class_count;
  doc["folds"] = manifest.fold_count;
  doc["entries"] = json::array();
  for (const auto& entry : manifest.entries) {
    json e;
    e["image"] = entry.image_id;
    if (!entry.stack_path.empty()) e["stack"] = entry.stack_path;
    if (!entry.stack_paths.empty()) e["stacks"] = entry.stack_paths;
    e["mask"] = entry.mask_path;
    if (entry.fold) e["fold"] = *entry.fold;
    if (entry.stack_fold) e["stack_fold"] = *entry.stack_fold;
    e["split"] = entry.is_test ? "test" : "train";
    doc["entries"].push_back(std::move(e));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure,
                "cannot open " + path.string() + " for writing");
  }
  out << doc.dump(2) << "\n";
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
  }
}

} // namespace entrofuse
