#include <doctest.h>

#include <cmath>
#include <vector>

#include "ecnlab/crf.hpp"
#include "ecnlab/error.hpp"
#include "ecnlab/metrics.hpp"
#include "ecnlab/rng.hpp"
#include "ecnlab/synthgen.hpp"

using namespace ecnlab;

namespace {

TagSet tagset_of(int k) {
  TagSet ts;
  for (int i = 0; i < k; ++i) ts.labels.push_back("L" + std::to_string(i));
  ts.background_index = 0;
  return ts;
}

struct RandomInstance {
  CrfModel model;
  std::vector<FeatureMap> features;
  std::vector<int> labels;
};

// Random model + sample with a small synthetic feature pool.
RandomInstance random_instance(SplitMix64& rng, int d, int k, int n_pool = 6) {
  RandomInstance inst{CrfModel(tagset_of(k), "test-schema"), {}, {}};
  for (int f = 0; f < n_pool; ++f) {
    inst.model.intern_feature("f" + std::to_string(f) + "=1");
  }
  for (double& w : inst.model.unary()) w = 4.0 * rng.uniform() - 2.0;
  for (double& w : inst.model.transitions()) w = 4.0 * rng.uniform() - 2.0;
  inst.model.set_trained(true);

  inst.features.resize(d);
  inst.labels.resize(d);
  for (int j = 0; j < d; ++j) {
    const int n_active = 1 + static_cast<int>(rng.below(3));
    for (int a = 0; a < n_active; ++a) {
      inst.features[j]["f" + std::to_string(rng.below(n_pool))] = "1";
    }
    inst.labels[j] = static_cast<int>(rng.below(k));
  }
  return inst;
}

// Exhaustive reference: logZ and the lexicographically-smallest argmax.
struct Enumerated {
  double log_z;
  std::vector<int> argmax;
};

Enumerated enumerate_all(const CrfModel& model, const std::vector<FeatureMap>& features) {
  const int d = static_cast<int>(features.size());
  const int k = model.n_labels();
  const ActiveFeatures active = model.index_features(features);

  std::vector<int> labels(d, 0);
  std::vector<double> scores;
  Enumerated out{0.0, std::vector<int>(d, 0)};
  double best = -1e300;
  for (;;) {
    const double s = crf_score(model, active, labels);
    scores.push_back(s);
    if (s > best) {  // strict: lexicographically-first maximum wins
      best = s;
      out.argmax = labels;
    }
    int pos = d - 1;
    while (pos >= 0 && labels[pos] == k - 1) labels[pos--] = 0;
    if (pos < 0) break;
    ++labels[pos];
  }
  double m = best;
  double sum = 0;
  for (double s : scores) sum += std::exp(s - m);
  out.log_z = m + std::log(sum);
  return out;
}

}  // namespace

TEST_CASE("crf_forward: uniform model has logZ = d ln K and flat marginals") {
  CrfModel model(tagset_of(2), "test-schema");
  model.set_trained(true);
  std::vector<FeatureMap> features(3);
  const CrfForwardResult fwd = crf_forward(model, features);
  CHECK(std::abs(fwd.log_z - 3.0 * std::log(2.0)) < 1e-12);
  for (int j = 0; j < 3; ++j) {
    for (int l = 0; l < 2; ++l) CHECK(std::abs(fwd.marginal(j, l) - 0.5) < 1e-12);
  }
}

TEST_CASE("crf_forward logZ matches exhaustive enumeration") {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(6));
    const int k = 2 + static_cast<int>(rng.below(3));
    const RandomInstance inst = random_instance(rng, d, k);
    const Enumerated ref = enumerate_all(inst.model, inst.features);
    const CrfForwardResult fwd = crf_forward(inst.model, inst.features);
    CHECK(std::abs(fwd.log_z - ref.log_z) < 1e-8);
  }
}

TEST_CASE("crf_forward: d=1 reduces to a softmax over unary scores") {
  SplitMix64 rng(5);
  const RandomInstance inst = random_instance(rng, 1, 4);
  const CrfForwardResult fwd = crf_forward(inst.model, inst.features);
  const ActiveFeatures active = inst.model.index_features(inst.features);
  const std::vector<double> pot = inst.model.potentials(active);
  double m = pot[0];
  for (double p : pot) m = std::max(m, p);
  double z = 0;
  for (double p : pot) z += std::exp(p - m);
  CHECK(std::abs(fwd.log_z - (m + std::log(z))) < 1e-12);
}

TEST_CASE("crf marginals normalize and pairwise marginals are consistent") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(8));
    const int k = 2 + static_cast<int>(rng.below(4));
    const RandomInstance inst = random_instance(rng, d, k);
    const CrfForwardResult fwd = crf_forward(inst.model, inst.features);
    for (int j = 0; j < d; ++j) {
      double sum = 0;
      for (int l = 0; l < k; ++l) sum += fwd.marginal(j, l);
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
    for (int j = 0; j + 1 < d; ++j) {
      for (int a = 0; a < k; ++a) {
        double row = 0;
        for (int b = 0; b < k; ++b) row += fwd.pairwise(j, a, b);
        CHECK(std::abs(row - fwd.marginal(j, a)) < 1e-9);
      }
      for (int b = 0; b < k; ++b) {
        double col = 0;
        for (int a = 0; a < k; ++a) col += fwd.pairwise(j, a, b);
        CHECK(std::abs(col - fwd.marginal(j + 1, b)) < 1e-9);
      }
    }
  }
}

TEST_CASE("viterbi equals the enumeration argmax with the shared tie-break") {
  SplitMix64 rng(4096);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(6));
    const int k = 2 + static_cast<int>(rng.below(3));
    const RandomInstance inst = random_instance(rng, d, k);
    const Enumerated ref = enumerate_all(inst.model, inst.features);
    CHECK(crf_decode(inst.model, inst.features) == ref.argmax);
  }
}

TEST_CASE("viterbi tie-break: all-zero weights decode to the all-lowest labeling") {
  CrfModel model(tagset_of(3), "test-schema");
  model.set_trained(true);
  std::vector<FeatureMap> features(4);
  CHECK(crf_decode(model, features) == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("strongly peaked unaries decode position-wise") {
  CrfModel model(tagset_of(3), "test-schema");
  const int f0 = model.intern_feature("f0=1");
  const int f1 = model.intern_feature("f1=1");
  model.unary()[f0 * 3 + 1] = 50.0;
  model.unary()[f1 * 3 + 2] = 50.0;
  for (double& t : model.transitions()) t = 0.1;
  model.set_trained(true);
  std::vector<FeatureMap> features = {{{"f0", "1"}}, {{"f1", "1"}}, {{"f0", "1"}}};
  CHECK(crf_decode(model, features) == std::vector<int>{1, 2, 1});
}

TEST_CASE("crf_loglik_grad matches central finite differences") {
  SplitMix64 rng(31337);
  int instances = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 2 + static_cast<int>(rng.below(3));
    const int k = 2 + static_cast<int>(rng.below(2));
    RandomInstance inst = random_instance(rng, d, k, 4);
    const double c2 = (trial % 2 == 0) ? 0.0 : 0.1;  // keep it smooth: c1 = 0

    const CrfLoglikResult res = crf_loglik_grad(inst.model, inst.features, inst.labels, 0.0, c2);
    const double h = 1e-5;
    auto objective_at = [&](std::vector<double>* vec, std::size_t idx, double delta) {
      (*vec)[idx] += delta;
      const double obj =
          crf_loglik_grad(inst.model, inst.features, inst.labels, 0.0, c2).objective;
      (*vec)[idx] -= delta;
      return obj;
    };
    for (std::size_t i = 0; i < inst.model.unary().size(); ++i) {
      const double fd = (objective_at(&inst.model.unary(), i, h) -
                         objective_at(&inst.model.unary(), i, -h)) /
                        (2 * h);
      const double an = res.grad.unary[i];
      CHECK(std::abs(fd - an) <= 1e-4 * std::max({1.0, std::abs(fd), std::abs(an)}));
    }
    for (std::size_t i = 0; i < inst.model.transitions().size(); ++i) {
      const double fd = (objective_at(&inst.model.transitions(), i, h) -
                         objective_at(&inst.model.transitions(), i, -h)) /
                        (2 * h);
      const double an = res.grad.trans[i];
      CHECK(std::abs(fd - an) <= 1e-4 * std::max({1.0, std::abs(fd), std::abs(an)}));
    }
    ++instances;
  }
  CHECK(instances == 30);
}

TEST_CASE("doubling the L2 coefficient doubles the L2 gradient term") {
  SplitMix64 rng(9);
  RandomInstance inst = random_instance(rng, 3, 3);
  const auto g0 = crf_loglik_grad(inst.model, inst.features, inst.labels, 0.0, 0.0);
  const auto g1 = crf_loglik_grad(inst.model, inst.features, inst.labels, 0.0, 0.1);
  const auto g2 = crf_loglik_grad(inst.model, inst.features, inst.labels, 0.0, 0.2);
  for (std::size_t i = 0; i < g0.grad.unary.size(); ++i) {
    const double term1 = g1.grad.unary[i] - g0.grad.unary[i];
    const double term2 = g2.grad.unary[i] - g0.grad.unary[i];
    CHECK(std::abs(term2 - 2.0 * term1) < 1e-12);
  }
}

TEST_CASE("L1 subgradient uses sign, with sign(0) = 0") {
  CrfModel model(tagset_of(2), "test-schema");
  model.intern_feature("f0=1");
  model.unary()[0] = 1.5;   // (f0, L0)
  model.unary()[1] = -2.0;  // (f0, L1)
  // transitions stay exactly zero
  model.set_trained(true);
  std::vector<FeatureMap> features = {{{"f0", "1"}}};
  const auto with = crf_loglik_grad(model, features, {0}, 0.5, 0.0);
  const auto without = crf_loglik_grad(model, features, {0}, 0.0, 0.0);
  CHECK(with.grad.unary[0] == doctest::Approx(without.grad.unary[0] - 0.5));
  CHECK(with.grad.unary[1] == doctest::Approx(without.grad.unary[1] + 0.5));
  for (std::size_t i = 0; i < with.grad.trans.size(); ++i) {
    CHECK(with.grad.trans[i] == without.grad.trans[i]);  // sign(0) = 0
  }
}

TEST_CASE("crf_train memorizes a separable sentence") {
  Dataset ds{tagset_of(3), DataKind::sequence, DatasetRole::clean, {}, {}};
  SequenceSample s;
  s.tokens = {"aa", "bb", "cc", "bb"};
  s.labels = {1, 0, 2, 0};
  s.features.assign(4, FeatureMap{});
  ds.sequences.push_back(s);

  CrfTrainConfig cfg;
  cfg.steps = 300;
  cfg.batch_size = 1;
  cfg.learning_rate = 0.5;
  cfg.l1 = 0.0;
  cfg.l2 = 0.0;
  const FeatureExtractor fx;
  const CrfModel model = crf_train(ds, fx, cfg);
  CHECK(crf_decode(model, fx.extract(s)) == s.labels);
}

TEST_CASE("crf_train is bit-deterministic given the seed") {
  SeqGenConfig gen;
  gen.n_train = 30;
  gen.n_gold = 0;
  gen.n_test = 0;
  const GeneratedSplits splits = gen_synthetic_sequences(gen);
  CrfTrainConfig cfg;
  cfg.steps = 50;
  cfg.seed = 321;
  const FeatureExtractor fx;
  const CrfModel a = crf_train(splits.train, fx, cfg);
  const CrfModel b = crf_train(splits.train, fx, cfg);
  CHECK(a.unary() == b.unary());
  CHECK(a.transitions() == b.transitions());
  CHECK(a.feature_names() == b.feature_names());
}

TEST_CASE("crf_train: full-batch loss is non-increasing over a trailing window") {
  Dataset ds{tagset_of(3), DataKind::sequence, DatasetRole::clean, {}, {}};
  for (int i = 0; i < 4; ++i) {
    SequenceSample s;
    s.tokens = {"aa", "Bb", "cc", "dd"};
    s.labels = {0, 1 + i % 2, 0, 0};
    s.features.assign(4, FeatureMap{});
    ds.sequences.push_back(s);
  }
  CrfTrainConfig cfg;
  cfg.steps = 120;
  cfg.batch_size = 4;  // covers the dataset: smooth descent
  cfg.learning_rate = 0.004;
  std::vector<double> history;
  crf_train(ds, FeatureExtractor{}, cfg, &history);
  REQUIRE(history.size() == 120);
  const int window = 20;
  double prev = 1e300;
  for (std::size_t start = 0; start + window <= history.size(); start += window) {
    double mean_loss = 0;
    for (int i = 0; i < window; ++i) mean_loss -= history[start + i];  // loss = -objective
    mean_loss /= window;
    CHECK(mean_loss <= prev + 1e-9);
    prev = mean_loss;
  }
}

TEST_CASE("crf_marginal_decode returns per-position argmax of the marginals") {
  SplitMix64 rng(606);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(6));
    const int k = 2 + static_cast<int>(rng.below(3));
    const RandomInstance inst = random_instance(rng, d, k);
    const CrfMarginalDecodeResult dec = crf_marginal_decode(inst.model, inst.features);
    const CrfForwardResult fwd = crf_forward(inst.model, inst.features);
    REQUIRE(dec.labels.size() == static_cast<std::size_t>(d));
    CHECK(dec.marginals == fwd.marginals);
    for (int j = 0; j < d; ++j) {
      for (int l = 0; l < k; ++l) {
        CHECK(fwd.marginal(j, dec.labels[j]) >= fwd.marginal(j, l));
      }
    }
  }
}

TEST_CASE("crf_train on the shipped clean corpus clears the 0.95 regression bound") {
  const GeneratedSplits world = gen_synthetic_sequences(SeqGenConfig{});
  const FeatureExtractor fx;
  const CrfModel model = crf_train(world.train, fx, CrfTrainConfig{});

  Dataset pred = world.test;
  for (SequenceSample& s : pred.sequences) s.labels = crf_decode(model, fx.extract(s));
  CHECK(f1_score(pred, world.test, Averaging::weighted) >= 0.95);
}

TEST_CASE("crf_train rejects an empty dataset") {
  Dataset ds{tagset_of(2), DataKind::sequence, DatasetRole::clean, {}, {}};
  CHECK_THROWS_AS(crf_train(ds, FeatureExtractor{}, CrfTrainConfig{}), RunError);
}

TEST_CASE("gradient ascent drives the 1-sample gradient norm toward zero") {
  // Unregularized single-sample likelihood: the optimum is approached as the
  // margin grows; the gradient norm decays like 1/steps.
  CrfModel model(tagset_of(2), "test-schema");
  model.intern_feature("f0=1");
  model.intern_feature("f1=1");
  model.set_trained(true);
  const std::vector<FeatureMap> features = {{{"f0", "1"}}, {{"f1", "1"}}};
  const std::vector<int> labels = {1, 0};

  const double lr = 1.0;
  for (int step = 0; step < 1000000; ++step) {
    const CrfLoglikResult res = crf_loglik_grad(model, features, labels, 0.0, 0.0);
    for (std::size_t i = 0; i < model.unary().size(); ++i) {
      model.unary()[i] += lr * res.grad.unary[i];
    }
    for (std::size_t i = 0; i < model.transitions().size(); ++i) {
      model.transitions()[i] += lr * res.grad.trans[i];
    }
  }
  const CrfLoglikResult final = crf_loglik_grad(model, features, labels, 0.0, 0.0);
  double norm = 0;
  for (double v : final.grad.unary) norm += v * v;
  for (double v : final.grad.trans) norm += v * v;
  CHECK(std::sqrt(norm) < 1e-6);
}
