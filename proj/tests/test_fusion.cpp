#include <doctest.h>

#include <cmath>
#include <vector>

#include "entrofuse/error.hpp"
#include "entrofuse/fusion.hpp"
#include "entrofuse/rng.hpp"
#include "entrofuse/types.hpp"

using namespace entrofuse;

namespace {

// Independent simplex sampler for property tests: exponential sticks.
std::vector<double> random_simplex(std::size_t m, RandomStream& rng) {
  std::vector<double> row(m);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    row[i] = -std::log(1.0 - rng.uniform());
    sum += row[i];
  }
  for (std::size_t i = 0; i < m; ++i) row[i] /= sum;
  return row;
}

ProbabilityStack random_stack(std::size_t k, std::size_t m, std::size_t h,
                              std::size_t w, std::uint64_t seed) {
  ProbabilityStack stack;
  stack.k_models = k;
  stack.m_classes = m;
  stack.height = h;
  stack.width = w;
  stack.data.resize(stack.value_count());
  RandomStream rng(seed);
  for (std::size_t kk = 0; kk < k; ++kk) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const std::vector<double> row = random_simplex(m, rng);
        for (std::size_t mm = 0; mm < m; ++mm) {
          stack.at(kk, mm, i, j) = static_cast<float>(row[mm]);
        }
      }
    }
  }
  return stack;
}

} // namespace

TEST_CASE("entropy matches hand-computed values") {
  CHECK(shannon_entropy(std::vector<double>{0.9, 0.05, 0.05}) ==
        doctest::Approx(0.3943976915).epsilon(1e-9));
  CHECK(shannon_entropy(std::vector<double>{0.35, 0.35, 0.3}) ==
        doctest::Approx(1.0960673284).epsilon(1e-9));
  CHECK(shannon_entropy(std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(shannon_entropy(std::vector<double>{0.9, 0.1}) ==
        doctest::Approx(0.3250829734).epsilon(1e-9));
  CHECK(shannon_entropy(std::vector<double>{0.6, 0.4}) ==
        doctest::Approx(0.6730116670).epsilon(1e-9));
}

TEST_CASE("entropy treats zero probabilities as contributing nothing") {
  CHECK(shannon_entropy(std::vector<double>{1.0, 0.0, 0.0}) == 0.0);
  CHECK(shannon_entropy(std::vector<double>{0.0, 1.0}) == 0.0);
  // A vanishing-but-positive mass contributes: strictly above zero.
  CHECK(shannon_entropy(std::vector<double>{1.0 - 1e-12, 1e-12}) > 0.0);
}

TEST_CASE("uniform distribution attains the maximum entropy ln M") {
  for (std::size_t m = 2; m <= 6; ++m) {
    std::vector<double> uniform(m, 1.0 / static_cast<double>(m));
    const double h = shannon_entropy(uniform);
    CHECK(h == doctest::Approx(std::log(static_cast<double>(m)))
                   .epsilon(1e-12));
    // Any perturbation lowers it.
    std::vector<double> bent = uniform;
    bent[0] += 0.01;
    bent[1] -= 0.01;
    CHECK(shannon_entropy(bent) < h);
  }
}

TEST_CASE("selection is strict at the threshold boundary") {
  const std::vector<double> entropies = {0.3, 0.5, 0.7};

  SUBCASE("threshold equal to entropy does not select") {
    const auto sel = select_members(entropies, entropies);
    CHECK(sel == std::vector<bool>{false, false, false});
  }
  SUBCASE("threshold a hair above selects") {
    std::vector<double> above = entropies;
    for (double& t : above) t = std::nextafter(t, 2.0);
    const auto sel = select_members(entropies, above);
    CHECK(sel == std::vector<bool>{true, true, true});
  }
  SUBCASE("length mismatch throws") {
    CHECK_THROWS_AS(select_members(entropies, std::vector<double>{0.1}),
                    Error);
  }
}

TEST_CASE("fuse_gated averages exactly the selected rows") {
  // Two models, three classes.
  const std::vector<double> rows = {0.7, 0.2, 0.1,   // model 0, entropy ~0.80
                                    0.1, 0.1, 0.8};  // model 1, entropy ~0.64
  const double e0 = shannon_entropy(std::span<const double>(rows).first(3));
  const double e1 = shannon_entropy(std::span<const double>(rows).subspan(3));
  const std::vector<double> entropies = {e0, e1};

  SUBCASE("only model 0 passes") {
    const std::vector<double> thresholds = {e0 + 0.01, e1 - 0.01};
    const FusedPixel fused = fuse_gated(rows, entropies, thresholds, 3);
    CHECK(fused.selected_count == 1);
    CHECK(fused.combined == std::vector<double>{0.7, 0.2, 0.1});
    CHECK(fused.label == 0);
  }
  SUBCASE("both pass: plain average") {
    const std::vector<double> thresholds = {e0 + 0.01, e1 + 0.01};
    const FusedPixel fused = fuse_gated(rows, entropies, thresholds, 3);
    CHECK(fused.selected_count == 2);
    CHECK(fused.combined[0] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(fused.combined[2] == doctest::Approx(0.45).epsilon(1e-15));
    CHECK(fused.label == 2);
  }
  SUBCASE("none pass: fallback averages all rows and reports zero selected") {
    const std::vector<double> thresholds = {0.0, 0.0};
    const FusedPixel fused = fuse_gated(rows, entropies, thresholds, 3);
    CHECK(fused.selected_count == 0);
    CHECK(fused.combined[0] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(fused.label == 2);
  }
}

TEST_CASE("argmax ties break toward the lowest class index") {
  const std::vector<double> rows = {0.5, 0.5};
  const FusedPixel fused = fuse_pixel(rows, std::vector<double>{0.7}, 2);
  CHECK(fused.label == 0);

  // Two mirrored models whose average is exactly uniform.
  const std::vector<double> mirrored = {0.8, 0.2, 0.2, 0.8};
  const FusedPixel both =
      fuse_pixel(mirrored, std::vector<double>{0.69, 0.69}, 2);
  CHECK(both.selected_count == 2);
  CHECK(both.combined[0] == both.combined[1]);
  CHECK(both.label == 0);
}

TEST_CASE("fusion properties hold on random simplex pixels") {
  RandomStream rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = 1 + rng.below(4);
    const std::size_t m = 2 + rng.below(4);
    std::vector<double> rows;
    rows.reserve(k * m);
    std::vector<double> entropies(k);
    for (std::size_t kk = 0; kk < k; ++kk) {
      const std::vector<double> row = random_simplex(m, rng);
      entropies[kk] =
          shannon_entropy(std::span<const double>(row.data(), m));
      rows.insert(rows.end(), row.begin(), row.end());
    }
    std::vector<double> thresholds(k);
    const double bound = std::log(static_cast<double>(m));
    for (std::size_t kk = 0; kk < k; ++kk) {
      thresholds[kk] = rng.uniform(0.0, bound);
    }

    const FusedPixel fused = fuse_gated(rows, entropies, thresholds, m);

    // Combined row stays on the simplex.
    double sum = 0.0;
    for (double v : fused.combined) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

    // Selected count agrees with an independent strict comparison.
    std::size_t expected_sel = 0;
    for (std::size_t kk = 0; kk < k; ++kk) {
      if (entropies[kk] < thresholds[kk]) ++expected_sel;
    }
    CHECK(fused.selected_count == expected_sel);

    // Raising one threshold never shrinks the selected set.
    std::vector<double> raised = thresholds;
    const std::size_t bump = rng.below(k);
    raised[bump] = bound;
    const FusedPixel more = fuse_gated(rows, entropies, raised, m);
    CHECK(more.selected_count >= fused.selected_count);

    // All-zero thresholds reproduce an independently coded mean ensemble.
    const FusedPixel fallback =
        fuse_gated(rows, entropies, std::vector<double>(k, 0.0), m);
    std::size_t best = 0;
    for (std::size_t mm = 0; mm < m; ++mm) {
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += rows[kk * m + mm];
      const double mean = acc / static_cast<double>(k);
      CHECK(fallback.combined[mm] == doctest::Approx(mean).epsilon(1e-12));
      if (fallback.combined[best] < fallback.combined[mm]) best = mm;
    }
    CHECK(fallback.label == best);
    CHECK(fallback.selected_count == 0);
  }
}

TEST_CASE("fuse_stack matches per-pixel fusion and is thread invariant") {
  const ProbabilityStack stack = random_stack(3, 3, 9, 7, 31);
  ThresholdVector thresholds(std::vector<double>{0.6, 0.2, 1.0});

  const FusedStack serial = fuse_stack(stack, thresholds, 1);
  const FusedStack parallel = fuse_stack(stack, thresholds, 4);
  CHECK(serial.mask == parallel.mask);
  CHECK(serial.combined == parallel.combined);
  CHECK(serial.fallback_pixels == parallel.fallback_pixels);

  std::size_t fallback = 0;
  for (std::size_t i = 0; i < stack.height; ++i) {
    for (std::size_t j = 0; j < stack.width; ++j) {
      std::vector<double> rows(stack.k_models * stack.m_classes);
      for (std::size_t k = 0; k < stack.k_models; ++k) {
        for (std::size_t m = 0; m < stack.m_classes; ++m) {
          rows[k * stack.m_classes + m] =
              static_cast<double>(stack.at(k, m, i, j));
        }
      }
      const FusedPixel fused =
          fuse_pixel(rows, thresholds.values, stack.m_classes);
      CHECK(serial.mask.at(i, j) == fused.label);
      if (fused.selected_count == 0) ++fallback;
      for (std::size_t m = 0; m < stack.m_classes; ++m) {
        CHECK(serial.combined[serial.index(m, i, j)] ==
              doctest::Approx(fused.combined[m]).epsilon(1e-12));
      }
    }
  }
  CHECK(serial.fallback_pixels == fallback);
}

TEST_CASE("fuse_stack validates thresholds and shape") {
  const ProbabilityStack stack = random_stack(2, 2, 3, 3, 8);
  CHECK_THROWS_AS(
      fuse_stack(stack, ThresholdVector(std::vector<double>{0.1}), 1), Error);
  CHECK_THROWS_AS(
      fuse_stack(stack, ThresholdVector(std::vector<double>{0.1, 5.0}), 1),
      Error);
}
