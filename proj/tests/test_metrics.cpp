#include <doctest.h>

#include <vector>

#include "entrofuse/error.hpp"
#include "entrofuse/metrics.hpp"
#include "entrofuse/rng.hpp"

using namespace entrofuse;

namespace {

LabelMask make_mask(std::size_t h, std::size_t w,
                    std::vector<std::uint8_t> labels) {
  LabelMask mask;
  mask.height = h;
  mask.width = w;
  mask.labels = std::move(labels);
  return mask;
}

LabelMask random_mask(std::size_t h, std::size_t w, std::size_t m,
                      RandomStream& rng) {
  LabelMask mask;
  mask.height = h;
  mask.width = w;
  mask.labels.resize(h * w);
  for (auto& label : mask.labels) {
    label = static_cast<std::uint8_t>(rng.below(m));
  }
  return mask;
}

} // namespace

TEST_CASE("binary overlap worked example") {
  // pred  1 1 0 0
  // truth 1 0 1 0  -> intersection 1, |P| 2, |G| 2 -> 2*1/(2+2) = 0.5
  const std::vector<std::uint8_t> pred = {1, 1, 0, 0};
  const std::vector<std::uint8_t> truth = {1, 0, 1, 0};
  CHECK(dice_binary(pred, truth) == 0.5);

  CHECK(dice_binary(std::vector<std::uint8_t>{1, 1},
                    std::vector<std::uint8_t>{1, 1}) == 1.0);
  CHECK(dice_binary(std::vector<std::uint8_t>{1, 0},
                    std::vector<std::uint8_t>{0, 1}) == 0.0);
  CHECK_THROWS_AS(dice_binary(pred, std::vector<std::uint8_t>{1}), Error);
}

TEST_CASE("counts follow the 2I/(P+G) formula exactly") {
  ClassCounts counts;
  counts.intersection = 3;
  counts.predicted = 5;
  counts.ground = 7;
  CHECK(dice_from_counts(counts) == 6.0 / 12.0);

  // Both empty scores a perfect match by convention.
  CHECK(dice_from_counts(ClassCounts{}) == 1.0);
}

TEST_CASE("two by two worked case") {
  // pred  0 1    truth  0 0
  //       1 1           1 1
  const LabelMask pred = make_mask(2, 2, {0, 1, 1, 1});
  const LabelMask truth = make_mask(2, 2, {0, 0, 1, 1});
  const DiceReport report = dice_average({pred}, {truth}, 2);

  // class 0: I=1, P=1, G=2 -> 2/3; class 1: I=2, P=3, G=2 -> 4/5
  CHECK(report.per_class[0] == 2.0 / 3.0);
  CHECK(report.per_class[1] == 4.0 / 5.0);
  CHECK(report.average == (2.0 / 3.0 + 4.0 / 5.0) / 2.0);
  CHECK(report.both_empty_classes == 0);
}

TEST_CASE("classes absent on both sides score one and are counted") {
  const LabelMask pred = make_mask(1, 4, {0, 1, 0, 1});
  const LabelMask truth = make_mask(1, 4, {0, 1, 1, 0});
  const DiceReport report = dice_average({pred}, {truth}, 3);
  CHECK(report.per_class[2] == 1.0);
  CHECK(report.both_empty_classes == 1);
  CHECK(report.per_class[0] == 0.5);
  CHECK(report.per_class[1] == 0.5);
}

TEST_CASE("corpus scoring flattens all images into one tally") {
  RandomStream rng(77);
  const std::size_t m = 4;
  std::vector<LabelMask> preds, truths;
  for (int n = 0; n < 6; ++n) {
    preds.push_back(random_mask(5, 7, m, rng));
    truths.push_back(random_mask(5, 7, m, rng));
  }
  const DiceReport all = dice_average(preds, truths, m);

  // Manually accumulate counts across images, then score once.
  std::vector<ClassCounts> counts(m);
  for (std::size_t n = 0; n < preds.size(); ++n) {
    for (std::size_t i = 0; i < preds[n].labels.size(); ++i) {
      const auto p = preds[n].labels[i];
      const auto g = truths[n].labels[i];
      ++counts[p].predicted;
      ++counts[g].ground;
      if (p == g) ++counts[p].intersection;
    }
  }
  for (std::size_t mm = 0; mm < m; ++mm) {
    CHECK(all.per_class[mm] == dice_from_counts(counts[mm]));
  }

  // Additivity: tallying two halves separately and merging the integer
  // counts reproduces the corpus score exactly, for any partition.
  auto tally = [&](std::size_t begin, std::size_t end) {
    std::vector<ClassCounts> c(m);
    for (std::size_t n = begin; n < end; ++n) {
      for (std::size_t i = 0; i < preds[n].labels.size(); ++i) {
        const auto p = preds[n].labels[i];
        const auto g = truths[n].labels[i];
        ++c[p].predicted;
        ++c[g].ground;
        if (p == g) ++c[p].intersection;
      }
    }
    return c;
  };
  const std::size_t half = preds.size() / 2;
  const auto front = tally(0, half);
  const auto back = tally(half, preds.size());
  for (std::size_t mm = 0; mm < m; ++mm) {
    ClassCounts merged;
    merged.intersection = front[mm].intersection + back[mm].intersection;
    merged.predicted = front[mm].predicted + back[mm].predicted;
    merged.ground = front[mm].ground + back[mm].ground;
    CHECK(dice_from_counts(merged) == all.per_class[mm]);
  }
}

TEST_CASE("image pairing is validated") {
  const LabelMask a = make_mask(2, 2, {0, 0, 0, 0});
  const LabelMask b = make_mask(2, 3, {0, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(dice_average({a}, {b}, 2), Error);
  CHECK_THROWS_AS(dice_average({a, a}, {a}, 2), Error);

  const LabelMask big = make_mask(2, 2, {0, 0, 0, 5});
  try {
    dice_average({a}, {big}, 2);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LabelExceedsClassCount);
  }
}
