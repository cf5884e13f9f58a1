#include <doctest.h>

#include <algorithm>

#include "ecnlab/error.hpp"
#include "ecnlab/metrics.hpp"
#include "ecnlab/rng.hpp"

using namespace ecnlab;

namespace {

Dataset seq_with_labels(const std::vector<std::vector<int>>& labels, int k) {
  TagSet ts;
  ts.labels.push_back("O");
  for (int i = 1; i < k; ++i) ts.labels.push_back("C" + std::to_string(i));
  ts.background_index = 0;
  Dataset ds{ts, DataKind::sequence, DatasetRole::test, {}, {}};
  for (const auto& l : labels) {
    SequenceSample s;
    for (std::size_t j = 0; j < l.size(); ++j) s.tokens.push_back("t" + std::to_string(j));
    s.labels = l;
    s.features.assign(l.size(), FeatureMap{});
    ds.sequences.push_back(s);
  }
  return ds;
}

Dataset grid_with_labels(const std::vector<int>& labels, int h, int w) {
  TagSet ts{{"other", "road", "vehicle"}, 0};
  Dataset ds{ts, DataKind::grid, DatasetRole::test, {}, {}};
  GridSample g;
  g.height = h;
  g.width = w;
  g.pixels.assign(labels.size(), {0.5, 0.5, 0.5});
  g.labels = labels;
  ds.grids.push_back(g);
  return ds;
}

}  // namespace

TEST_CASE("f1: perfect prediction scores 1 under every averaging") {
  const Dataset truth = seq_with_labels({{0, 1, 2, 0}, {2, 2, 0, 1}}, 3);
  CHECK(f1_score(truth, truth, Averaging::macro) == 1.0);
  CHECK(f1_score(truth, truth, Averaging::weighted) == 1.0);
  CHECK(f1_score(truth, truth, Averaging::macro, true) == 1.0);
}

TEST_CASE("f1: all-background predictions score 0 when truth has entities") {
  const Dataset truth = seq_with_labels({{0, 1, 2, 0}}, 3);
  const Dataset pred = seq_with_labels({{0, 0, 0, 0}}, 3);
  CHECK(f1_score(pred, truth, Averaging::macro) == 0.0);
  CHECK(f1_score(pred, truth, Averaging::weighted) == 0.0);
}

TEST_CASE("f1 matches a hand-computed confusion fixture") {
  // 10 elements, classes O C1 C2.
  // truth: C1 x4, C2 x2, O x4
  // pred hits 3 of the C1s, mislabels one C1 as C2, hits 1 C2,
  // mislabels one O as C1, rest O.
  const Dataset truth = seq_with_labels({{1, 1, 1, 1, 2, 2, 0, 0, 0, 0}}, 3);
  const Dataset pred = seq_with_labels({{1, 1, 1, 2, 2, 0, 1, 0, 0, 0}}, 3);
  // C1: tp=3 fp=1 fn=1 -> P=3/4 R=3/4 F1=3/4
  // C2: tp=1 fp=1 fn=1 -> F1=1/2
  const double macro = (0.75 + 0.5) / 2.0;
  const double weighted = (4 * 0.75 + 2 * 0.5) / 6.0;
  CHECK(f1_score(pred, truth, Averaging::macro) == doctest::Approx(macro).epsilon(1e-12));
  CHECK(f1_score(pred, truth, Averaging::weighted) == doctest::Approx(weighted).epsilon(1e-12));
}

TEST_CASE("weighted and macro coincide on balanced fixtures") {
  const Dataset truth = seq_with_labels({{1, 1, 2, 2}}, 3);
  const Dataset pred = seq_with_labels({{1, 0, 2, 0}}, 3);
  CHECK(f1_score(pred, truth, Averaging::macro) ==
        doctest::Approx(f1_score(pred, truth, Averaging::weighted)).epsilon(1e-12));
}

TEST_CASE("f1 is invariant under sample and element permutations") {
  const Dataset truth = seq_with_labels({{1, 0, 2}, {0, 2, 1}}, 3);
  const Dataset pred = seq_with_labels({{1, 2, 2}, {0, 0, 1}}, 3);
  // reverse element order within samples and swap the samples: the multiset
  // of (pred, truth) element pairs is unchanged
  const Dataset truth_p = seq_with_labels({{1, 2, 0}, {2, 0, 1}}, 3);
  const Dataset pred_p = seq_with_labels({{1, 0, 0}, {2, 2, 1}}, 3);
  CHECK(f1_score(pred, truth, Averaging::weighted) ==
        doctest::Approx(f1_score(pred_p, truth_p, Averaging::weighted)).epsilon(1e-12));
  CHECK(f1_score(pred, truth, Averaging::macro) ==
        doctest::Approx(f1_score(pred_p, truth_p, Averaging::macro)).epsilon(1e-12));
}

TEST_CASE("iou: perfect and disjoint masks") {
  const Dataset truth = grid_with_labels({0, 1, 1, 0, 2, 2, 0, 0, 0}, 3, 3);
  CHECK(iou_score(truth, truth, Averaging::macro) == 1.0);

  const Dataset pred = grid_with_labels({2, 0, 0, 2, 0, 0, 0, 0, 0}, 3, 3);
  // vehicle: pred {0,3}, truth {4,5}: disjoint -> IoU 0
  const auto f1s = per_class_f1(pred, truth);
  CHECK(iou_score(pred, truth, Averaging::macro) == 0.0);
  CHECK(f1s.count(2) == 1);
}

TEST_CASE("iou matches the hand-counted 4x4 fixture") {
  // vehicle: truth 4 pixels, pred 4 pixels, overlap 2 -> union 6 -> IoU 1/3
  std::vector<int> truth_labels(16, 0), pred_labels(16, 0);
  truth_labels[0] = truth_labels[1] = truth_labels[4] = truth_labels[5] = 2;
  pred_labels[1] = pred_labels[5] = pred_labels[2] = pred_labels[6] = 2;
  const Dataset truth = grid_with_labels(truth_labels, 4, 4);
  const Dataset pred = grid_with_labels(pred_labels, 4, 4);
  CHECK(iou_score(pred, truth, Averaging::macro) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(iou_score(pred, truth, Averaging::weighted) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("background-inclusive score is 1 iff labels are exactly equal") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> a(12), b(12);
    for (int i = 0; i < 12; ++i) {
      a[i] = static_cast<int>(rng.below(3));
      b[i] = rng.bernoulli(0.8) ? a[i] : static_cast<int>(rng.below(3));
    }
    const Dataset truth = grid_with_labels(a, 3, 4);
    const Dataset pred = grid_with_labels(b, 3, 4);
    const double score = iou_score(pred, truth, Averaging::weighted, true);
    CHECK((score == 1.0) == (a == b));
    CHECK(score >= 0.0);
    CHECK(score <= 1.0);
  }
}

TEST_CASE("metrics reject shape mismatches") {
  const Dataset truth = seq_with_labels({{0, 1}}, 3);
  const Dataset pred = seq_with_labels({{0, 1, 2}}, 3);
  CHECK_THROWS_AS(f1_score(pred, truth, Averaging::macro), RunError);
}
