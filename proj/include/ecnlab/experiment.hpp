#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ecnlab/baselines.hpp"
#include "ecnlab/core.hpp"
#include "ecnlab/corrector.hpp"
#include "ecnlab/corruption.hpp"
#include "ecnlab/synthgen.hpp"

// Experiment orchestration: a declarative run description, named presets,
// the strategy-by-seed result table, and the relevant-subset sensitivity
// sweep. A run writes everything into a fresh timestamped directory under
// the configured output directory; reruns never touch earlier runs.

namespace ecnlab {

// Clean on-disk corpus; train is corrupted by the experiment itself.
struct DataPaths {
  std::string tagset;
  std::string train;
  std::string gold;
  std::string test;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DataKind kind = DataKind::sequence;
  std::optional<SeqGenConfig> seq_gen;
  std::optional<GridGenConfig> grid_gen;
  std::optional<DataPaths> paths;
  std::optional<CorruptionSpec> corruption;  // applied to the train split
  std::vector<Strategy> strategies = all_strategies();
  RelevantSubsetSpec rs;
  TrainCfgs cfgs;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string out_dir = "out";
};

struct ResultRow {
  std::string dataset;
  std::string strategy;
  std::string metric;
  double score = 0;
  std::uint64_t seed = 0;
  double runtime_s = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  // mean over seeds of one (strategy, metric) cell; NaN if absent
  double mean(const std::string& strategy, const std::string& metric) const;
  double stddev(const std::string& strategy, const std::string& metric) const;
};

// header: dataset,strategy,metric,score,seed,runtime_s
std::string results_csv(const ResultTable& table);
ResultTable results_from_csv(const std::string& text);

// One row per (dataset, metric), strategies as columns, mean +/- std cells.
std::string results_markdown(const ResultTable& table);

struct PreparedData {
  Dataset corrupted;
  Dataset gold;
  Dataset test;
  std::optional<Dataset> clean;          // uncorrupted train
  std::optional<std::string> spec_digest;  // of the applied corruption
};

// Generates or loads the splits and applies the corruption; all randomness
// derives from `seed`.
PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed);

struct ExperimentOutput {
  ResultTable table;
  std::filesystem::path run_dir;  // empty when write_files is false
};

ExperimentOutput run_experiment(const ExperimentConfig& cfg, bool write_files = true);

enum class SweepAxis { neighbor_radius_k, n_token_features };

const char* to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

struct SweepConfig {
  SweepAxis axis = SweepAxis::neighbor_radius_k;
  std::vector<int> values = {0, 1, 2, 3, 5, 8};
  ExperimentConfig base;
  std::optional<std::string> focus_class;  // per-class F1 instead of the headline metric
};

struct SweepPoint {
  int value = 0;
  double score = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double corrupted_only = 0;
  double gold_only = 0;
  std::filesystem::path run_dir;
};

// series,value,score rows: the ECN curve plus the two baseline horizontals.
std::string sweep_csv(const SweepResult& result);
std::string sweep_svg(const SweepResult& result, const std::string& title);

SweepResult run_sweep(const SweepConfig& cfg, bool write_files = true);

// --- presets and config files ---------------------------------------------------

std::vector<std::string> preset_names();
ExperimentConfig make_preset(const std::string& name);

std::string experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Fresh run directory under out_dir (timestamped, never reused).
std::filesystem::path make_run_dir(const std::filesystem::path& out_dir);

// Worker cap for strategy/seed jobs: ECN_LAB_THREADS, default 1.
int max_threads();

}  // namespace ecnlab
