#ifndef ENTROFUSE_DOCUMENTS_HPP
#define ENTROFUSE_DOCUMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "entrofuse/swarm_config.hpp"

namespace entrofuse {

/// Optimization result document: the K thresholds, the Dice they achieved
/// on the training matrix, and the fully resolved configuration and seed
/// so any run can be reproduced from its output alone.
struct ThresholdDocument {
  std::vector<double> thresholds;
  double achieved_dice = 0.0;
  std::uint64_t seed = 0;
  std::size_t class_count = 0;
  std::vector<std::string> model_names; // optional, size K when present
  SwarmConfig config;
  /// Extra resolved run settings (CLI flags etc.), serialized verbatim.
  std::map<std::string, std::string> run_info;

  std::size_t k_models() const { return thresholds.size(); }

  /// Throws InvalidConfig if any threshold leaves [0, ln class_count] or
  /// achieved_dice leaves [0, 1].
  void validate() const;
};

ThresholdDocument read_threshold_document(const std::filesystem::path& path);

/// Deterministic serialization: identical documents produce identical bytes.
void write_threshold_document(const ThresholdDocument& doc,
                              const std::filesystem::path& path);

} // namespace entrofuse

#endif
