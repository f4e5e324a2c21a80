#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "entrofuse/documents.hpp"
#include "entrofuse/rng.hpp"
#include "entrofuse/swarm_config.hpp"

namespace entrofuse {

// Axis-aligned search box, one [lo, hi] pair per dimension.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  static Box uniform(std::size_t dim, double lo_value, double hi_value);
  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> point) const;
  void validate() const;
};

struct Particle {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> pbest;
  double pbest_fitness = 0.0;
  std::vector<std::size_t> exemplar; // particle index guiding each dimension
  std::size_t stagnation = 0;        // iterations since pbest last improved
};

struct TracePoint {
  std::size_t iteration = 0;
  double best = 0.0;
  double mean = 0.0; // mean personal-best fitness across the swarm
  std::size_t out_of_bounds = 0;
};

struct SwarmTrace {
  std::vector<TracePoint> points;
};

void write_trace(const SwarmTrace& trace, const std::filesystem::path& path);

using FitnessFn = std::function<double(std::span<const double>)>;

// Inertia schedule: linear decay a0 -> a1 over max_iter. When
// config.inertia_literal is set, uses a0 * (a0 - a1) * iter / max_iter
// instead (a historically published variant kept for comparison runs).
double inertia_weight(std::size_t iter, const SwarmConfig& config);

// Probability that dimension k of particle `index` learns from another
// particle rather than its own pbest.
double learning_probability(std::size_t index, std::size_t pop_size,
                            PcMode mode);

// One-dimension velocity update: a*v + c*r1*(exemplar_pbest - position).
double updated_velocity(double a, double c, double r1, double velocity,
                        double exemplar_pbest, double position);

double clamp_velocity(double velocity, double v_max);

class Swarm {
 public:
  Swarm(SwarmConfig config, Box box, FitnessFn fitness);

  // Draws initial positions/velocities, evaluates every particle, assigns
  // exemplars, records trace row 0.
  void initialize();

  // Runs one iteration (1-based). Out-of-box particles are neither
  // evaluated nor allowed to touch their pbest.
  void step(std::size_t iter);

  void run(); // initialize + max_iter steps

  const std::vector<Particle>& particles() const { return particles_; }
  const SwarmTrace& trace() const { return trace_; }
  std::size_t best_index() const;
  double best_fitness() const;
  std::uint64_t evaluations() const { return evaluations_; }
  double v_max(std::size_t dim) const { return v_max_[dim]; }

  // Exposed for targeted tests; normally driven by step().
  void assign_exemplar(std::size_t index);

 private:
  double evaluate(std::size_t index, std::size_t iter,
                  std::span<const double> point);
  std::size_t draw_other(RandomStream& rng, std::size_t self) const;

  SwarmConfig config_;
  Box box_;
  FitnessFn fitness_;
  std::vector<Particle> particles_;
  std::vector<RandomStream> streams_;
  std::vector<double> v_max_;
  SwarmTrace trace_;
  std::uint64_t evaluations_ = 0;
  bool initialized_ = false;
};

struct SwarmResult {
  std::vector<double> best_position;
  double best_fitness = 0.0;
  SwarmTrace trace;
  std::uint64_t evaluations = 0;
};

SwarmResult run_clpso(const SwarmConfig& config, std::size_t dim,
                      const Box& box, const FitnessFn& fitness);

// Threshold-tuning entry point: searches [0, ln m_classes]^k_models and
// packages the winner as a ThresholdDocument.
std::pair<ThresholdDocument, SwarmTrace> optimize_thresholds(
    const SwarmConfig& config, const FitnessFn& fitness, std::size_t k_models,
    std::size_t m_classes);

} // namespace entrofuse
