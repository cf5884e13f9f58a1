#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecnlab/core.hpp"
#include "ecnlab/corrector.hpp"

// The comparison strategies. Every strategy trains a base model somehow and
// is scored on the same held-out test set; `clean` is the upper bound trained
// on the uncorrupted corpus, which no other strategy may see.

namespace ecnlab {

enum class Strategy {
  corrupted_only,
  gold_only,
  combined,
  pseudolabel,
  clean,
  ecn_x_only,
  ecn_y_only,
  ecn_full,
};

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);
const std::vector<Strategy>& all_strategies();

struct StrategyResult {
  std::map<std::string, double> scores;  // metric name -> score
  double runtime_s = 0;
};

// corrupted_only: train on the corrupted corpus.
// gold_only: train on the gold set.
// combined: train on corrupted + gold concatenated.
// pseudolabel: relabel the corpus with a gold-trained model, train on that.
// clean: train on clean_opt (required).
// ecn_*: the two-stage pipeline with the matching RS variant.
StrategyResult run_baseline(Strategy strategy, const Dataset& corrupted, const Dataset& gold,
                            const Dataset& test, const Dataset* clean_opt,
                            const RelevantSubsetSpec& rs, const TrainCfgs& cfgs,
                            std::uint64_t seed);

}  // namespace ecnlab
