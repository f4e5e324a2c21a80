#include "entrofuse/clpso.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "entrofuse/error.hpp"

namespace entrofuse {

Box Box::uniform(std::size_t dim, double lo_value, double hi_value) {
  Box box;
  box.lo.assign(dim, lo_value);
  box.hi.assign(dim, hi_value);
  return box;
}

bool Box::contains(std::span<const double> point) const {
  for (std::size_t k = 0; k < lo.size(); ++k) {
    if (!(point[k] >= lo[k] && point[k] <= hi[k])) return false;
  }
  return true;
}

void Box::validate() const {
  if (lo.empty() || lo.size() != hi.size()) {
    throw Error(ErrorCode::InvalidConfig, "box bounds are empty or ragged");
  }
  for (std::size_t k = 0; k < lo.size(); ++k) {
    if (!(lo[k] < hi[k])) {
      std::ostringstream msg;
      msg << "box dimension " << k << " has lo " << lo[k] << " >= hi "
          << hi[k];
      throw Error(ErrorCode::InvalidConfig, msg.str());
    }
  }
}

void write_trace(const SwarmTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure,
                "cannot open " + path.string() + " for writing");
  }
  out << "iteration,best,mean,out_of_bounds\n";
  out.precision(17);
  for (const TracePoint& p : trace.points) {
    out << p.iteration << ',' << p.best << ',' << p.mean << ','
        << p.out_of_bounds << '\n';
  }
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
  }
}

double inertia_weight(std::size_t iter, const SwarmConfig& config) {
  const double frac =
      static_cast<double>(iter) / static_cast<double>(config.max_iter);
  if (config.inertia_literal) {
    return config.a0 * (config.a0 - config.a1) * frac;
  }
  return config.a0 - (config.a0 - config.a1) * frac;
}

double learning_probability(std::size_t index, std::size_t pop_size,
                            PcMode mode) {
  switch (mode) {
    case PcMode::kUniform: return 0.5;
    case PcMode::kAlwaysTournament: return 1.0;
    case PcMode::kRamped: break;
  }
  const double t = static_cast<double>(index) /
                   static_cast<double>(pop_size - 1);
  return 0.05 + 0.45 * (std::exp(10.0 * t) - 1.0) / (std::exp(10.0) - 1.0);
}

double updated_velocity(double a, double c, double r1, double velocity,
                        double exemplar_pbest, double position) {
  return a * velocity + c * r1 * (exemplar_pbest - position);
}

double clamp_velocity(double velocity, double v_max) {
  return std::clamp(velocity, -v_max, v_max);
}

Swarm::Swarm(SwarmConfig config, Box box, FitnessFn fitness)
    : config_(std::move(config)),
      box_(std::move(box)),
      fitness_(std::move(fitness)) {
  config_.validate();
  box_.validate();
  v_max_.resize(box_.dim());
  for (std::size_t k = 0; k < box_.dim(); ++k) {
    v_max_[k] = config_.v_max_fraction * (box_.hi[k] - box_.lo[k]);
  }
}

std::size_t Swarm::draw_other(RandomStream& rng, std::size_t self) const {
  const std::size_t pop = particles_.size();
  std::size_t pick = static_cast<std::size_t>(rng.below(pop - 1));
  if (pick >= self) ++pick;
  return pick;
}

void Swarm::assign_exemplar(std::size_t index) {
  const std::size_t pop = particles_.size();
  Particle& p = particles_[index];
  RandomStream& rng = streams_[index];
  const double pc =
      learning_probability(index, pop, config_.pc_mode);

  bool any_other = false;
  for (std::size_t k = 0; k < p.exemplar.size(); ++k) {
    if (rng.uniform() < pc) {
      std::size_t a;
      std::size_t b;
      if (pop == 2) {
        // Only one other particle exists: the tournament degenerates to
        // self versus that one particle.
        a = index;
        b = draw_other(rng, index);
      } else {
        a = draw_other(rng, index);
        do {
          b = draw_other(rng, index);
        } while (b == a);
      }
      std::size_t winner;
      if (particles_[a].pbest_fitness > particles_[b].pbest_fitness) {
        winner = a;
      } else if (particles_[b].pbest_fitness > particles_[a].pbest_fitness) {
        winner = b;
      } else {
        winner = std::min(a, b);
      }
      p.exemplar[k] = winner;
      if (winner != index) any_other = true;
    } else {
      p.exemplar[k] = index;
    }
  }
  if (!any_other) {
    // Keep at least one dimension learning from the rest of the swarm.
    const std::size_t dim =
        static_cast<std::size_t>(rng.below(p.exemplar.size()));
    p.exemplar[dim] = draw_other(rng, index);
  }
}

double Swarm::evaluate(std::size_t index, std::size_t iter,
                       std::span<const double> point) {
  try {
    const double f = fitness_(point);
    ++evaluations_;
    return f;
  } catch (const std::exception& e) {
    std::ostringstream msg;
    msg << "particle " << index << " at iteration " << iter << ": "
        << e.what();
    throw Error(ErrorCode::FitnessEvaluationFailure, msg.str());
  }
}

void Swarm::initialize() {
  const std::size_t pop = config_.pop_size;
  const std::size_t dim = box_.dim();
  particles_.assign(pop, Particle{});
  streams_.clear();
  streams_.reserve(pop);
  for (std::size_t i = 0; i < pop; ++i) {
    streams_.emplace_back(config_.seed, static_cast<std::uint64_t>(i));
  }

  for (std::size_t i = 0; i < pop; ++i) {
    Particle& p = particles_[i];
    p.position.resize(dim);
    p.velocity.resize(dim);
    p.exemplar.assign(dim, i);
    for (std::size_t k = 0; k < dim; ++k) {
      p.position[k] = streams_[i].uniform(box_.lo[k], box_.hi[k]);
    }
    for (std::size_t k = 0; k < dim; ++k) {
      p.velocity[k] = streams_[i].uniform(-v_max_[k], v_max_[k]);
    }
  }
  for (std::size_t i = 0; i < pop; ++i) {
    Particle& p = particles_[i];
    p.pbest = p.position;
    p.pbest_fitness = evaluate(i, 0, p.position);
    p.stagnation = 0;
  }
  for (std::size_t i = 0; i < pop; ++i) assign_exemplar(i);

  trace_.points.clear();
  TracePoint row;
  row.iteration = 0;
  row.best = best_fitness();
  double sum = 0.0;
  for (const Particle& p : particles_) sum += p.pbest_fitness;
  row.mean = sum / static_cast<double>(pop);
  row.out_of_bounds = 0;
  trace_.points.push_back(row);
  initialized_ = true;
}

void Swarm::step(std::size_t iter) {
  const std::size_t pop = particles_.size();
  const std::size_t dim = box_.dim();
  const double a = inertia_weight(iter, config_);

  std::size_t out_of_bounds = 0;
  std::vector<bool> in_box(pop);
  std::vector<double> fitness_now(pop, 0.0);

  for (std::size_t i = 0; i < pop; ++i) {
    Particle& p = particles_[i];
    if (p.stagnation >= config_.refresh_gap) {
      assign_exemplar(i);
      p.stagnation = 0;
    }
    RandomStream& rng = streams_[i];
    for (std::size_t k = 0; k < dim; ++k) {
      const double r1 = rng.uniform();
      const double exemplar_pbest = particles_[p.exemplar[k]].pbest[k];
      double v = updated_velocity(a, config_.c, r1, p.velocity[k],
                                  exemplar_pbest, p.position[k]);
      v = clamp_velocity(v, v_max_[k]);
      p.velocity[k] = v;
      p.position[k] += v;
    }
    in_box[i] = box_.contains(p.position);
    if (!in_box[i]) ++out_of_bounds;
  }

  // Evaluations are independent of each other; pbest updates happen
  // afterwards in particle-index order so results do not depend on
  // evaluation scheduling.
  for (std::size_t i = 0; i < pop; ++i) {
    if (in_box[i]) fitness_now[i] = evaluate(i, iter, particles_[i].position);
  }
  for (std::size_t i = 0; i < pop; ++i) {
    if (!in_box[i]) continue; // out of box: pbest and stagnation untouched
    Particle& p = particles_[i];
    if (fitness_now[i] > p.pbest_fitness) {
      p.pbest = p.position;
      p.pbest_fitness = fitness_now[i];
      p.stagnation = 0;
    } else {
      ++p.stagnation;
    }
  }

  TracePoint row;
  row.iteration = iter;
  row.best = best_fitness();
  double sum = 0.0;
  for (const Particle& p : particles_) sum += p.pbest_fitness;
  row.mean = sum / static_cast<double>(pop);
  row.out_of_bounds = out_of_bounds;
  trace_.points.push_back(row);
}

void Swarm::run() {
  if (!initialized_) initialize();
  for (std::size_t iter = 1; iter <= config_.max_iter; ++iter) step(iter);
}

std::size_t Swarm::best_index() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < particles_.size(); ++i) {
    if (particles_[i].pbest_fitness > particles_[best].pbest_fitness) {
      best = i;
    }
  }
  return best;
}

double Swarm::best_fitness() const {
  return particles_[best_index()].pbest_fitness;
}

SwarmResult run_clpso(const SwarmConfig& config, std::size_t dim,
                      const Box& box, const FitnessFn& fitness) {
  if (box.dim() != dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "box dimensionality does not match requested dimension");
  }
  Swarm swarm(config, box, fitness);
  swarm.run();
  SwarmResult result;
  const std::size_t best = swarm.best_index();
  result.best_position = swarm.particles()[best].pbest;
  result.best_fitness = swarm.particles()[best].pbest_fitness;
  result.trace = swarm.trace();
  result.evaluations = swarm.evaluations();
  return result;
}

std::pair<ThresholdDocument, SwarmTrace> optimize_thresholds(
    const SwarmConfig& config, const FitnessFn& fitness, std::size_t k_models,
    std::size_t m_classes) {
  if (k_models < 1 || m_classes < 2) {
    throw Error(ErrorCode::InvalidConfig,
                "need at least one model and two classes");
  }
  const double bound = std::log(static_cast<double>(m_classes));
  const Box box = Box::uniform(k_models, 0.0, bound);
  SwarmResult result = run_clpso(config, k_models, box, fitness);

  ThresholdDocument doc;
  doc.thresholds = result.best_position;
  doc.achieved_dice = result.best_fitness;
  doc.seed = config.seed;
  doc.class_count = m_classes;
  doc.config = config;
  doc.run_info["fitness_evaluations"] = std::to_string(result.evaluations);
  return {std::move(doc), std::move(result.trace)};
}

} // namespace entrofuse
