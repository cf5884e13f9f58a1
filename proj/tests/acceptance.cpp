// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// required criterion fails. Criterion 9 (real-corpus reproduction) is
// optional and runs only when ECN_GMB_DIR points at a CoNLL corpus.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ecnlab/baselines.hpp"
#include "ecnlab/corrector.hpp"
#include "ecnlab/corruption.hpp"
#include "ecnlab/crf.hpp"
#include "ecnlab/experiment.hpp"
#include "ecnlab/metrics.hpp"
#include "ecnlab/mlp.hpp"
#include "ecnlab/rng.hpp"
#include "ecnlab/synthgen.hpp"

using namespace ecnlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Check {
  Outcome& outcome;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      outcome.pass = false;
      if (!outcome.detail.empty()) outcome.detail += "; ";
      outcome.detail += what;
    }
  }
  void note(const std::string& what) {
    if (!outcome.detail.empty()) outcome.detail += "; ";
    outcome.detail += what;
  }
};

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

RandomInstance random_instance(SplitMix64& rng, int d, int k, int n_pool) {
  RandomInstance inst{CrfModel(tagset_of(k), "acceptance"), {}, {}};
  for (int f = 0; f < n_pool; ++f) inst.model.intern_feature("f" + std::to_string(f) + "=1");
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

// --- criterion 1: exact inference vs exhaustive enumeration ---------------------

Outcome criterion1() {
  Outcome outcome;
  Check check{outcome};
  SplitMix64 rng(0xC1);
  double max_logz_err = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(6));
    const int k = 2 + static_cast<int>(rng.below(3));
    const RandomInstance inst = random_instance(rng, d, k, 6);
    const ActiveFeatures active = inst.model.index_features(inst.features);

    // exhaustive log-sum-exp and lexicographically-first argmax
    std::vector<int> labels(d, 0), argmax(d, 0);
    std::vector<double> scores;
    double best = -1e300;
    for (;;) {
      const double s = crf_score(inst.model, active, labels);
      scores.push_back(s);
      if (s > best) {
        best = s;
        argmax = labels;
      }
      int pos = d - 1;
      while (pos >= 0 && labels[pos] == k - 1) labels[pos--] = 0;
      if (pos < 0) break;
      ++labels[pos];
    }
    double sum = 0;
    for (double s : scores) sum += std::exp(s - best);
    const double log_z_ref = best + std::log(sum);

    const CrfForwardResult fwd = crf_forward_indexed(inst.model, active);
    max_logz_err = std::max(max_logz_err, std::abs(fwd.log_z - log_z_ref));
    check.require(std::abs(fwd.log_z - log_z_ref) < 1e-8,
                  "logZ mismatch at trial " + std::to_string(trial));
    check.require(crf_decode_indexed(inst.model, active) == argmax,
                  "viterbi mismatch at trial " + std::to_string(trial));
    if (!outcome.pass) break;
  }
  check.note("500 models, max |logZ error| = " + std::to_string(max_logz_err));
  return outcome;
}

// --- criterion 2: gradients vs central finite differences -----------------------

Outcome criterion2() {
  Outcome outcome;
  Check check{outcome};
  const double h = 1e-5;
  double worst = 0;

  SplitMix64 rng(0xC2);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + static_cast<int>(rng.below(3));
    const int k = 2 + static_cast<int>(rng.below(2));
    RandomInstance inst = random_instance(rng, d, k, 4);
    const double c2 = (trial % 2 == 0) ? 0.0 : 0.1;
    const CrfLoglikResult res = crf_loglik_grad(inst.model, inst.features, inst.labels, 0.0, c2);

    auto objective = [&]() {
      return crf_loglik_grad(inst.model, inst.features, inst.labels, 0.0, c2).objective;
    };
    auto check_coord = [&](std::vector<double>& vec, std::size_t i, double analytic) {
      const double keep = vec[i];
      vec[i] = keep + h;
      const double up = objective();
      vec[i] = keep - h;
      const double down = objective();
      vec[i] = keep;
      const double fd = (up - down) / (2 * h);
      const double err = std::abs(fd - analytic) / std::max({1.0, std::abs(fd), std::abs(analytic)});
      worst = std::max(worst, err);
      check.require(err <= 1e-4, "crf gradient deviates at trial " + std::to_string(trial));
    };
    for (std::size_t i = 0; i < inst.model.unary().size() && outcome.pass; ++i) {
      check_coord(inst.model.unary(), i, res.grad.unary[i]);
    }
    for (std::size_t i = 0; i < inst.model.transitions().size() && outcome.pass; ++i) {
      check_coord(inst.model.transitions(), i, res.grad.trans[i]);
    }
    if (!outcome.pass) return outcome;
  }

  SplitMix64 mlp_rng(0xC2F);
  for (int trial = 0; trial < 100; ++trial) {
    Mlp net(4, {5}, 3, mlp_rng.next());
    Eigen::MatrixXd x(5, 4);
    std::vector<int> y(5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 4; ++j) x(i, j) = 2.0 * mlp_rng.uniform() - 1.0;
      y[i] = static_cast<int>(mlp_rng.below(3));
    }
    Mlp::Gradient grad;
    net.loss_and_grad(x, y, grad);
    const std::vector<double> analytic = net.grad_flat(grad);
    std::vector<double> params = net.params_flat();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double keep = params[i];
      params[i] = keep + h;
      net.set_params_flat(params);
      const double up = net.loss(x, y);
      params[i] = keep - h;
      net.set_params_flat(params);
      const double down = net.loss(x, y);
      params[i] = keep;
      net.set_params_flat(params);
      const double fd = (up - down) / (2 * h);
      const double err =
          std::abs(fd - analytic[i]) / std::max({1.0, std::abs(fd), std::abs(analytic[i])});
      worst = std::max(worst, err);
      check.require(err <= 1e-4, "mlp gradient deviates at trial " + std::to_string(trial));
    }
    if (!outcome.pass) return outcome;
  }
  check.note("200 instances, worst relative error = " + std::to_string(worst));
  return outcome;
}

// --- criterion 3: corruption statistics -----------------------------------------

Outcome criterion3() {
  Outcome outcome;
  Check check{outcome};

  // missing_random at 0.30 over >= 5000 spans
  {
    SeqGenConfig gen;
    gen.n_train = 6000;
    gen.n_gold = 0;
    gen.n_test = 0;
    const GeneratedSplits world = gen_synthetic_sequences(gen);
    const auto spans = find_entity_spans(world.train);
    check.require(spans.size() >= 5000, "needs >= 5000 spans");
    const CorruptionRecord record = corrupt_missing_random(world.train, 0.30, 2026);
    std::size_t dropped = 0;
    for (const EntitySpan& span : spans) {
      bool gone = true;
      for (int j = span.start; j < span.end; ++j) {
        if (record.corrupted.sequences[span.sample_index].labels[j] != 0) gone = false;
      }
      dropped += gone;
    }
    const double fraction = static_cast<double>(dropped) / spans.size();
    check.note("drop fraction " + std::to_string(fraction) + " over " +
               std::to_string(spans.size()) + " spans");
    check.require(std::abs(fraction - 0.30) <= 0.02, "missing_random outside 0.30 +/- 0.02");
  }

  // grid_misclassify at 0.50 flips 0.50 +/- 0.05 of samples
  {
    GridGenConfig gen;
    gen.n_train = 2000;
    gen.n_gold = 0;
    gen.n_test = 0;
    gen.height = 8;
    gen.width = 8;
    gen.band_height_min = 4;
    gen.band_height_max = 5;
    gen.vehicle_count_min = 1;
    gen.vehicle_count_max = 2;
    gen.vehicle_h_min = 2;
    gen.vehicle_h_max = 3;
    gen.vehicle_w_min = 2;
    gen.vehicle_w_max = 3;
    const GeneratedSplits world = gen_synthetic_grids(gen);
    const CorruptionRecord record = corrupt_grid_misclassify(world.train, 0.50, 2, 1, 2027);
    std::size_t flipped = 0;
    for (std::size_t i = 0; i < record.corrupted.grids.size(); ++i) {
      flipped += record.corrupted.grids[i].labels != record.true_labels[i];
    }
    const double fraction = static_cast<double>(flipped) / record.corrupted.grids.size();
    check.note("flip fraction " + std::to_string(fraction));
    check.require(std::abs(fraction - 0.50) <= 0.05, "grid_misclassify outside 0.50 +/- 0.05");
  }

  // imprecise(fixed): exhaustive audit against an independent oracle
  {
    SeqGenConfig gen;
    gen.n_train = 2000;
    gen.n_gold = 0;
    gen.n_test = 0;
    const GeneratedSplits world = gen_synthetic_sequences(gen);
    const CorruptionRecord record = corrupt_imprecise(world.train, ImpreciseMode::fixed, 2028);
    std::size_t full = 0, clamped = 0;
    bool audit_ok = true;
    for (std::size_t i = 0; i < world.train.sequences.size(); ++i) {
      const std::vector<int>& truth = world.train.sequences[i].labels;
      std::vector<int> expected = truth;  // oracle: re-derive the corruption
      const int d = static_cast<int>(truth.size());
      int j = 0;
      while (j < d) {
        if (truth[j] == 0) {
          ++j;
          continue;
        }
        const int label = truth[j];
        int end = j + 1;
        while (end < d && truth[end] == label) ++end;
        int extended = 0;
        for (int p = end; p < d && p < end + 3 && truth[p] == 0; ++p) {
          expected[p] = label;
          ++extended;
        }
        if (extended == 3) {
          ++full;
        } else {
          ++clamped;
        }
        j = end;
      }
      if (record.corrupted.sequences[i].labels != expected ||
          record.true_labels[i] != truth) {
        audit_ok = false;
      }
    }
    check.note(std::to_string(full) + " spans extended by exactly 3, " + std::to_string(clamped) +
               " clamped");
    check.require(audit_ok, "imprecise(fixed) audit found a deviating sentence");
    check.require(full > 0 && clamped > 0, "audit should see both full and clamped extensions");
  }
  return outcome;
}

// --- criteria 4 + 7: desk-scale sequence run, gaps and ordering ------------------

ResultTable g_flagship_table;  // shared between criteria 4, 7 and 8

ExperimentConfig flagship_config(const fs::path& out_root) {
  ExperimentConfig cfg = make_preset("gmb-im-fixed-desk");
  cfg.out_dir = (out_root / "gmb-im-fixed-desk").string();
  return cfg;
}

fs::path acceptance_out_root() {
  const char* env = std::getenv("ECN_ACCEPTANCE_OUT");
  if (env && *env) return fs::path(env);
  return fs::temp_directory_path() / "ecnlab-acceptance";
}

Outcome criterion4() {
  Outcome outcome;
  Check check{outcome};
  const ExperimentOutput out = run_experiment(flagship_config(acceptance_out_root()));
  g_flagship_table = out.table;

  const double ecn_full = out.table.mean("ecn_full", "weighted_f1");
  const double corrupted = out.table.mean("corrupted_only", "weighted_f1");
  const double gold = out.table.mean("gold_only", "weighted_f1");
  check.note("ecn_full " + std::to_string(ecn_full) + ", corrupted_only " +
             std::to_string(corrupted) + ", gold_only " + std::to_string(gold));
  check.require(ecn_full >= corrupted + 0.04, "ECN-Full gain over corrupted_only below 0.04");
  check.require(ecn_full >= gold, "ECN-Full below gold_only");
  return outcome;
}

Outcome criterion7() {
  Outcome outcome;
  Check check{outcome};
  if (g_flagship_table.rows.empty()) {
    outcome.pass = false;
    outcome.detail = "criterion 4 run unavailable";
    return outcome;
  }
  const auto mean = [&](const char* s) { return g_flagship_table.mean(s, "weighted_f1"); };
  const double clean = mean("clean");
  const double best_baseline = std::max({mean("gold_only"), mean("pseudolabel"),
                                          mean("combined"), mean("corrupted_only")});
  for (const char* ecn : {"ecn_x_only", "ecn_y_only", "ecn_full"}) {
    const double score = mean(ecn);
    check.require(clean >= score, std::string(ecn) + " above the clean bound");
    check.require(score >= best_baseline - 0.01,
                  std::string(ecn) + " below the best baseline by more than 0.01");
  }
  check.note("clean " + std::to_string(clean) + ", best baseline " +
             std::to_string(best_baseline));
  return outcome;
}

// --- criterion 5: grid misclassification recovery --------------------------------

Outcome criterion5() {
  Outcome outcome;
  Check check{outcome};
  ExperimentConfig cfg = make_preset("grid-mis-75-desk");
  cfg.strategies = {Strategy::corrupted_only, Strategy::ecn_full};
  cfg.out_dir = (acceptance_out_root() / "grid-mis-75-desk").string();
  const ExperimentOutput out = run_experiment(cfg);
  const double ecn_full = out.table.mean("ecn_full", "weighted_iou");
  const double corrupted = out.table.mean("corrupted_only", "weighted_iou");
  check.note("ecn_full " + std::to_string(ecn_full) + ", corrupted_only " +
             std::to_string(corrupted));
  check.require(ecn_full >= corrupted + 0.08, "weighted IoU gain below 0.08");
  return outcome;
}

// --- criterion 6: sensitivity sweep shape ----------------------------------------

Outcome criterion6() {
  Outcome outcome;
  Check check{outcome};
  SweepConfig sweep;
  sweep.base = flagship_config(acceptance_out_root() / "sweep");
  sweep.base.seeds = {1, 2};
  sweep.axis = SweepAxis::neighbor_radius_k;
  sweep.values = {0, 1, 2, 3, 5, 8};
  const SweepResult result = run_sweep(sweep);

  double peak = -1, at_three = -1;
  int peak_k = -1;
  for (const SweepPoint& p : result.points) {
    if (p.score > peak) {
      peak = p.score;
      peak_k = p.value;
    }
    if (p.value == 3) at_three = p.score;
  }
  const double at_zero = result.points.front().score;
  const double at_max = result.points.back().score;
  check.note("k=0: " + std::to_string(at_zero) + ", corrupted_only " +
             std::to_string(result.corrupted_only) + ", peak " + std::to_string(peak) + " at k=" +
             std::to_string(peak_k) + ", k=8: " + std::to_string(at_max));
  check.require(std::abs(at_zero - result.corrupted_only) <= 0.02,
                "k=0 not within 0.02 of corrupted_only");
  check.require(peak_k > 0, "best k is 0");
  check.require(at_three >= at_zero + 0.03, "k=3 less than 0.03 above k=0");
  check.require(at_max >= peak - 0.05, "largest k more than 0.05 below the peak");
  return outcome;
}

// --- criterion 8: rerun determinism ----------------------------------------------

std::string strip_runtime_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string out, line;
  while (std::getline(in, line)) {
    out += line.substr(0, line.rfind(','));
    out += '\n';
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion8() {
  Outcome outcome;
  Check check{outcome};
  const fs::path root = acceptance_out_root() / "determinism";

  for (const std::string& name : preset_names()) {
    if (name == "gmb-im-fixed") continue;  // needs the optional real corpus
    ExperimentConfig cfg = make_preset(name);
    cfg.out_dir = (root / name).string();
    if (name == "gmb-im-fixed-desk") {
      // flagship preset reruns with its full strategy and seed scope
    } else {
      // the remaining presets rerun with a reduced scope: one seed, the
      // corrupted-only path (generation + corruption + training + metrics)
      cfg.strategies = {Strategy::corrupted_only};
      cfg.seeds = {1};
    }
    const ExperimentOutput a = run_experiment(cfg);
    const ExperimentOutput b = run_experiment(cfg);
    const std::string csv_a = read_file(a.run_dir / "results.csv");
    const std::string csv_b = read_file(b.run_dir / "results.csv");
    check.require(!csv_a.empty() && strip_runtime_column(csv_a) == strip_runtime_column(csv_b),
                  name + " rerun differs (ignoring wall-clock runtime)");
    if (!outcome.pass) return outcome;
  }
  check.note("9 presets rerun byte-identically (runtime_s column excluded)");
  return outcome;
}

// --- criterion 9 (optional): real-corpus reproduction ----------------------------

Outcome criterion9() {
  Outcome outcome;
  Check check{outcome};
  const char* dir = std::getenv("ECN_GMB_DIR");
  if (!dir || !*dir) {
    outcome.detail = "skipped: ECN_GMB_DIR not set (optional criterion)";
    return outcome;
  }
  ExperimentConfig cfg = make_preset("gmb-im-fixed");
  DataPaths paths;
  paths.tagset = (fs::path(dir) / "tagset.txt").string();
  paths.train = (fs::path(dir) / "train.conll").string();
  paths.gold = (fs::path(dir) / "gold.conll").string();
  paths.test = (fs::path(dir) / "test.conll").string();
  cfg.paths = paths;
  cfg.out_dir = (acceptance_out_root() / "gmb-im-fixed-full").string();
  const ExperimentOutput out = run_experiment(cfg);

  const std::vector<std::pair<const char*, double>> reference = {
      {"clean", 0.84},          {"corrupted_only", 0.69}, {"gold_only", 0.74},
      {"combined", 0.70},       {"pseudolabel", 0.74},    {"ecn_x_only", 0.78},
      {"ecn_y_only", 0.80},     {"ecn_full", 0.78}};
  for (const auto& [strategy, expected] : reference) {
    const double got = out.table.mean(strategy, "weighted_f1");
    check.note(std::string(strategy) + " " + std::to_string(got));
    check.require(std::abs(got - expected) <= 0.05,
                  std::string(strategy) + " outside the reference +/- 0.05");
  }
  return outcome;
}

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  bool optional;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "CRF inference oracle (logZ + Viterbi vs enumeration)", 30, false, criterion1},
      {2, "gradient checks vs central finite differences", 60, false, criterion2},
      {3, "corruption statistics and exhaustive imprecise audit", 30, false, criterion3},
      {4, "desk-scale ECN improvement on gmb-im-fixed-desk", 600, false, criterion4},
      {5, "grid misclassification recovery on grid-mis-75-desk", 600, false, criterion5},
      {6, "neighbour-radius sweep shape", 900, false, criterion6},
      {7, "baseline ordering on gmb-im-fixed-desk", 600, false, criterion7},
      {8, "preset rerun determinism", 1200, false, criterion8},
      {9, "optional real-corpus reproduction (ECN_GMB_DIR)", 3600, true, criterion9},
  };

  bool all_pass = true;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const bool skipped = c.optional && outcome.detail.rfind("skipped:", 0) == 0;
    const bool timed_out = !skipped && elapsed > c.time_limit_s;
    if (timed_out) {
      outcome.pass = false;
      outcome.detail += (outcome.detail.empty() ? "" : "; ") + std::string("exceeded ") +
                        std::to_string(c.time_limit_s) + " s budget";
    }

    std::string status = outcome.pass ? "PASS" : "FAIL";
    if (skipped) status = "SKIP";
    std::printf("[%s] %d. %s (%.1f s)%s%s\n", status.c_str(), c.id, c.name.c_str(), elapsed,
                outcome.detail.empty() ? "" : " -- ", outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass && !skipped && !c.optional) all_pass = false;
  }
  return all_pass ? 0 : 1;
}
