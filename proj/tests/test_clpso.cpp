#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "entrofuse/clpso.hpp"
#include "entrofuse/error.hpp"

using namespace entrofuse;

namespace {

SwarmConfig quick_config(std::uint64_t seed, std::size_t iters = 50) {
  SwarmConfig config;
  config.seed = seed;
  config.max_iter = iters;
  return config;
}

const FitnessFn kSumFitness = [](std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
};

} // namespace

TEST_CASE("inertia decays linearly between its endpoints") {
  SwarmConfig config;
  config.max_iter = 500;
  CHECK(inertia_weight(0, config) == 0.9);
  CHECK(inertia_weight(500, config) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(inertia_weight(250, config) == doctest::Approx(0.65).epsilon(1e-15));

  config.inertia_literal = true;
  CHECK(inertia_weight(0, config) == 0.0);
  CHECK(inertia_weight(500, config) ==
        doctest::Approx(0.9 * 0.5).epsilon(1e-15));
}

TEST_CASE("learning probability profiles") {
  CHECK(learning_probability(0, 10, PcMode::kRamped) ==
        doctest::Approx(0.05).epsilon(1e-12));
  CHECK(learning_probability(9, 10, PcMode::kRamped) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // Strictly increasing in the particle index.
  for (std::size_t i = 1; i < 10; ++i) {
    CHECK(learning_probability(i, 10, PcMode::kRamped) >
          learning_probability(i - 1, 10, PcMode::kRamped));
  }
  CHECK(learning_probability(3, 10, PcMode::kUniform) == 0.5);
  CHECK(learning_probability(3, 10, PcMode::kAlwaysTournament) == 1.0);
}

TEST_CASE("velocity update arithmetic") {
  CHECK(updated_velocity(0.9, 1.49445, 0.5, 0.1, 0.6, 0.4) ==
        doctest::Approx(0.239445).epsilon(1e-12));
  const double v_max = 0.2 * std::log(2.0);
  CHECK(clamp_velocity(0.5, v_max) ==
        doctest::Approx(0.1386294361).epsilon(1e-9));
  CHECK(clamp_velocity(-0.5, v_max) == -v_max);
  CHECK(clamp_velocity(0.01, v_max) == 0.01);
}

TEST_CASE("configuration invariants are enforced") {
  SwarmConfig config;
  config.pop_size = 1;
  CHECK_THROWS_AS(config.validate(), Error);
  config = SwarmConfig{};
  config.v_max_fraction = 0.0;
  CHECK_THROWS_AS(config.validate(), Error);
  config = SwarmConfig{};
  config.v_max_fraction = 1.5;
  CHECK_THROWS_AS(config.validate(), Error);
  config = SwarmConfig{};
  config.a1 = 0.95; // above a0
  CHECK_THROWS_AS(config.validate(), Error);
  config = SwarmConfig{};
  CHECK_NOTHROW(config.validate());
}

TEST_CASE("pc mode names round trip") {
  CHECK(pc_mode_from_name("ramped") == PcMode::kRamped);
  CHECK(pc_mode_from_name("uniform") == PcMode::kUniform);
  CHECK(pc_mode_from_name("paper-literal") == PcMode::kAlwaysTournament);
  CHECK(pc_mode_name(PcMode::kRamped) == std::string("ramped"));
  CHECK_THROWS_AS(pc_mode_from_name("bogus"), Error);
}

TEST_CASE("exemplar assignment excludes self in the tournament") {
  SwarmConfig config = quick_config(11);
  config.pop_size = 6;
  config.pc_mode = PcMode::kAlwaysTournament;
  Swarm swarm(config, Box::uniform(4, 0.0, 1.0), kSumFitness);
  swarm.initialize();

  for (std::size_t i = 0; i < config.pop_size; ++i) {
    for (int round = 0; round < 20; ++round) {
      swarm.assign_exemplar(i);
      for (std::size_t k = 0; k < 4; ++k) {
        const std::size_t e = swarm.particles()[i].exemplar[k];
        CHECK(e < config.pop_size);
        CHECK(e != i);
      }
    }
  }
}

TEST_CASE("every exemplar vector references at least one other particle") {
  SwarmConfig config = quick_config(13);
  config.pop_size = 8;
  config.pc_mode = PcMode::kRamped; // particle 0 has Pc = 0.05: mostly self
  Swarm swarm(config, Box::uniform(3, 0.0, 1.0), kSumFitness);
  swarm.initialize();

  for (int round = 0; round < 200; ++round) {
    swarm.assign_exemplar(0);
    const auto& exemplar = swarm.particles()[0].exemplar;
    bool any_other = false;
    for (std::size_t k = 0; k < exemplar.size(); ++k) {
      if (exemplar[k] != 0) any_other = true;
    }
    CHECK(any_other);
  }
}

TEST_CASE("two-particle swarms run the degenerate self-vs-other tournament") {
  SwarmConfig config = quick_config(17);
  config.pop_size = 2;
  config.pc_mode = PcMode::kAlwaysTournament;
  Swarm swarm(config, Box::uniform(3, 0.0, 1.0), kSumFitness);
  swarm.initialize();

  const std::size_t winner =
      swarm.particles()[0].pbest_fitness >= swarm.particles()[1].pbest_fitness
          ? 0
          : 1;
  // Whatever the draws, each tournament compares the same two particles, so
  // every dimension points at the higher-pbest particle.
  for (std::size_t i = 0; i < 2; ++i) {
    swarm.assign_exemplar(i);
    const auto& exemplar = swarm.particles()[i].exemplar;
    if (i == winner) {
      // Self wins its own degenerate tournaments, so every dimension lands
      // on self — and the forced-diversity rule must then plant exactly one
      // reference to the other particle.
      std::size_t others = 0;
      for (std::size_t k = 0; k < exemplar.size(); ++k) {
        if (exemplar[k] != i) ++others;
      }
      CHECK(others == 1);
    } else {
      for (std::size_t k = 0; k < exemplar.size(); ++k) {
        CHECK(exemplar[k] == winner);
      }
    }
  }
}

TEST_CASE("runs are reproducible and feasible") {
  const Box box = Box::uniform(5, 0.0, std::log(3.0));
  const FitnessFn fitness = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s -= (v - 0.5) * (v - 0.5);
    return s;
  };
  const SwarmConfig config = quick_config(123, 80);

  const SwarmResult a = run_clpso(config, 5, box, fitness);
  const SwarmResult b = run_clpso(config, 5, box, fitness);
  CHECK(a.best_position == b.best_position);
  CHECK(a.best_fitness == b.best_fitness);
  CHECK(a.evaluations == b.evaluations);
  REQUIRE(a.trace.points.size() == b.trace.points.size());
  for (std::size_t i = 0; i < a.trace.points.size(); ++i) {
    CHECK(a.trace.points[i].best == b.trace.points[i].best);
    CHECK(a.trace.points[i].mean == b.trace.points[i].mean);
    CHECK(a.trace.points[i].out_of_bounds == b.trace.points[i].out_of_bounds);
  }

  // Best fitness never regresses; the box always contains the answer.
  for (std::size_t i = 1; i < a.trace.points.size(); ++i) {
    CHECK(a.trace.points[i].best >= a.trace.points[i - 1].best);
  }
  CHECK(box.contains(a.best_position));
  CHECK(a.evaluations <= config.pop_size * (config.max_iter + 1));
  CHECK(a.evaluations >= config.pop_size);
}

TEST_CASE("personal bests and velocities respect their bounds after a run") {
  const Box box = Box::uniform(4, 0.0, 1.0);
  SwarmConfig config = quick_config(31, 60);
  Swarm swarm(config, box, kSumFitness);
  swarm.run();

  for (const Particle& p : swarm.particles()) {
    CHECK(box.contains(p.pbest));
    for (std::size_t k = 0; k < p.velocity.size(); ++k) {
      CHECK(std::abs(p.velocity[k]) <= swarm.v_max(k));
    }
  }
  CHECK(swarm.trace().points.size() == config.max_iter + 1);
}

TEST_CASE("constant fitness gives a flat trace") {
  const FitnessFn constant = [](std::span<const double>) { return 0.25; };
  const SwarmResult result =
      run_clpso(quick_config(7, 30), 3, Box::uniform(3, 0.0, 1.0), constant);
  CHECK(result.best_fitness == 0.25);
  for (const TracePoint& point : result.trace.points) {
    CHECK(point.best == 0.25);
    CHECK(point.mean == 0.25);
  }
}

TEST_CASE("fitness failures carry particle context") {
  const FitnessFn broken = [](std::span<const double>) -> double {
    throw std::runtime_error("backing store vanished");
  };
  try {
    run_clpso(quick_config(1, 5), 2, Box::uniform(2, 0.0, 1.0), broken);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FitnessEvaluationFailure);
    CHECK(std::string(e.what()).find("particle") != std::string::npos);
    CHECK(std::string(e.what()).find("backing store vanished") !=
          std::string::npos);
  }
}

TEST_CASE("quadratic peak inside the threshold box is found") {
  // Nine dimensions, target well inside [0, ln 2]^9.
  const std::size_t dim = 9;
  const double bound = std::log(2.0);
  std::vector<double> target(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    target[k] = 0.1 + 0.05 * static_cast<double>(k);
  }
  const FitnessFn fitness = [&target](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      s -= (x[k] - target[k]) * (x[k] - target[k]);
    }
    return s;
  };
  const SwarmResult result = run_clpso(quick_config(2025, 500), dim,
                                       Box::uniform(dim, 0.0, bound), fitness);
  double distance = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    distance +=
        (result.best_position[k] - target[k]) * (result.best_position[k] - target[k]);
  }
  CHECK(std::sqrt(distance) < 1e-2);
}

TEST_CASE("threshold search packages a validated document") {
  const FitnessFn fitness = [](std::span<const double> x) {
    double s = 1.0;
    s -= (x[0] - 0.3) * (x[0] - 0.3);
    s -= (x[1] - 0.5) * (x[1] - 0.5);
    return s;
  };
  SwarmConfig config = quick_config(5, 300);
  auto [doc, trace] = optimize_thresholds(config, fitness, 2, 2);

  CHECK(doc.class_count == 2);
  CHECK(doc.thresholds.size() == 2);
  CHECK(doc.thresholds[0] == doctest::Approx(0.3).epsilon(0.01));
  CHECK(doc.thresholds[1] == doctest::Approx(0.5).epsilon(0.01));
  CHECK(doc.seed == 5);
  CHECK(doc.run_info.count("fitness_evaluations") == 1);
  CHECK_NOTHROW(doc.validate());
  CHECK(trace.points.size() == 301);
}

TEST_CASE("trace export is a readable delimited file") {
  const SwarmResult result = run_clpso(quick_config(3, 10), 2,
                                       Box::uniform(2, 0.0, 1.0), kSumFitness);
  const auto path =
      std::filesystem::temp_directory_path() / "entrofuse_trace_test.csv";
  write_trace(result.trace, path);

  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "iteration,best,mean,out_of_bounds");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == result.trace.points.size());
}
