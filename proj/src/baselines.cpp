#include "ecnlab/baselines.hpp"

#include <chrono>

#include "ecnlab/error.hpp"
#include "ecnlab/rng.hpp"

namespace ecnlab {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::corrupted_only: return "corrupted_only";
    case Strategy::gold_only: return "gold_only";
    case Strategy::combined: return "combined";
    case Strategy::pseudolabel: return "pseudolabel";
    case Strategy::clean: return "clean";
    case Strategy::ecn_x_only: return "ecn_x_only";
    case Strategy::ecn_y_only: return "ecn_y_only";
    case Strategy::ecn_full: return "ecn_full";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& name) {
  for (Strategy s : all_strategies()) {
    if (name == to_string(s)) return s;
  }
  throw ConfigError("unknown strategy: " + name);
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> all = {
      Strategy::clean,      Strategy::corrupted_only, Strategy::gold_only,
      Strategy::combined,   Strategy::pseudolabel,    Strategy::ecn_x_only,
      Strategy::ecn_y_only, Strategy::ecn_full,
  };
  return all;
}

namespace {

Dataset concatenated(const Dataset& a, const Dataset& b) {
  if (a.kind != b.kind || a.tagset != b.tagset) {
    throw RunError("combined: datasets disagree on kind or tagset");
  }
  Dataset out = a;
  out.role = DatasetRole::corrupted;
  out.sequences.insert(out.sequences.end(), b.sequences.begin(), b.sequences.end());
  out.grids.insert(out.grids.end(), b.grids.begin(), b.grids.end());
  return out;
}

RsVariant variant_for(Strategy s) {
  switch (s) {
    case Strategy::ecn_x_only: return RsVariant::x_only;
    case Strategy::ecn_y_only: return RsVariant::y_only;
    default: return RsVariant::full;
  }
}

}  // namespace

StrategyResult run_baseline(Strategy strategy, const Dataset& corrupted, const Dataset& gold,
                            const Dataset& test, const Dataset* clean_opt,
                            const RelevantSubsetSpec& rs, const TrainCfgs& cfgs,
                            std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t base_seed = derive_stream(seed, "base");

  StrategyResult result;
  switch (strategy) {
    case Strategy::corrupted_only: {
      result.scores =
          evaluate_base_model(train_base_model(corrupted, cfgs, base_seed), test, cfgs.fx);
      break;
    }
    case Strategy::gold_only: {
      result.scores = evaluate_base_model(train_base_model(gold, cfgs, base_seed), test, cfgs.fx);
      break;
    }
    case Strategy::combined: {
      const Dataset merged = concatenated(corrupted, gold);
      result.scores = evaluate_base_model(train_base_model(merged, cfgs, base_seed), test, cfgs.fx);
      break;
    }
    case Strategy::pseudolabel: {
      const BaseModel gold_model = train_base_model(gold, cfgs, base_seed);
      const Dataset relabeled = relabel_with(gold_model, corrupted, cfgs.fx);
      const BaseModel final_model =
          train_base_model(relabeled, cfgs, derive_stream(seed, "retrain"));
      result.scores = evaluate_base_model(final_model, test, cfgs.fx);
      break;
    }
    case Strategy::clean: {
      if (clean_opt == nullptr) {
        throw RunError("clean strategy requires the uncorrupted dataset");
      }
      result.scores =
          evaluate_base_model(train_base_model(*clean_opt, cfgs, base_seed), test, cfgs.fx);
      break;
    }
    case Strategy::ecn_x_only:
    case Strategy::ecn_y_only:
    case Strategy::ecn_full: {
      RelevantSubsetSpec spec = rs;
      spec.variant = variant_for(strategy);
      result.scores = ecn_pipeline(corrupted, gold, test, spec, cfgs, seed).scores;
      break;
    }
  }

  result.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace ecnlab
