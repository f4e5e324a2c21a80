#ifndef ENTROFUSE_SWARM_CONFIG_HPP
#define ENTROFUSE_SWARM_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <string>

namespace entrofuse {

/// How each particle's per-dimension learning probability Pc is assigned.
enum class PcMode {
  /// Pc_i = 0.05 + 0.45 * (exp(10*i/(pop-1)) - 1) / (exp(10) - 1).
  kRamped,
  /// Pc = 0.5 for every particle.
  kUniform,
  /// Pc = 1: every dimension learns from a tournament winner.
  kAlwaysTournament,
};

const char* pc_mode_name(PcMode mode);
PcMode pc_mode_from_name(const std::string& name);

/// Swarm optimizer configuration. Defaults: 10 particles, 500 iterations,
/// c = 1.49445, inertia 0.9 -> 0.4, refresh gap 7, velocity bound 0.2 of
/// the box width.
struct SwarmConfig {
  std::size_t pop_size = 10;
  std::size_t max_iter = 500;
  double c = 1.49445;
  double a0 = 0.9;
  double a1 = 0.4;
  std::size_t refresh_gap = 7;
  double v_max_fraction = 0.2;
  std::uint64_t seed = 1;
  PcMode pc_mode = PcMode::kRamped;
  /// Replaces the linear inertia decay a0 - (a0-a1)*iter/maxIter with the
  /// multiplicative schedule a0 * (a0-a1)*iter/maxIter (comparison mode).
  bool inertia_literal = false;

  /// Throws InvalidConfig unless pop_size >= 2, max_iter >= 1,
  /// 0 < v_max_fraction <= 1 and a1 <= a0.
  void validate() const;
};

} // namespace entrofuse

#endif
