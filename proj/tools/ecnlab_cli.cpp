// Command-line front end: data generation, corruption, training, correction,
// evaluation, full experiment runs and the RS sensitivity sweep.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ecnlab/baselines.hpp"
#include "ecnlab/corrector.hpp"
#include "ecnlab/corruption.hpp"
#include "ecnlab/error.hpp"
#include "ecnlab/experiment.hpp"
#include "ecnlab/io.hpp"
#include "ecnlab/metrics.hpp"
#include "ecnlab/model_io.hpp"
#include "ecnlab/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  if (seeds.empty()) throw ecnlab::ConfigError("empty seed list");
  return seeds;
}

std::vector<ecnlab::Strategy> parse_strategies(const std::string& text) {
  std::vector<ecnlab::Strategy> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(ecnlab::strategy_from_string(item));
  }
  if (out.empty()) throw ecnlab::ConfigError("empty strategy list");
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ecnlab::ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ecnlab::ConfigError("cannot write " + path.string());
  out << text;
}

ecnlab::ExperimentConfig resolve_config(const std::string& preset, const std::string& config_path,
                                        const std::string& data_dir) {
  ecnlab::ExperimentConfig cfg;
  if (!preset.empty()) {
    cfg = ecnlab::make_preset(preset);
  } else if (!config_path.empty()) {
    cfg = ecnlab::load_experiment_config(config_path);
  } else {
    throw ecnlab::ConfigError("either --preset or --config is required");
  }
  if (!data_dir.empty()) {
    const std::string ext = cfg.kind == ecnlab::DataKind::grid ? ".grid" : ".conll";
    ecnlab::DataPaths paths;
    paths.tagset = (fs::path(data_dir) / "tagset.txt").string();
    paths.train = (fs::path(data_dir) / ("train" + ext)).string();
    paths.gold = (fs::path(data_dir) / ("gold" + ext)).string();
    paths.test = (fs::path(data_dir) / ("test" + ext)).string();
    cfg.paths = paths;
  }
  if (cfg.paths) {
    for (const std::string& p :
         {cfg.paths->tagset, cfg.paths->train, cfg.paths->gold, cfg.paths->test}) {
      if (p.empty() || !fs::exists(p)) {
        throw ecnlab::ConfigError("dataset path missing or not found: '" + p +
                                  "' (use --data <dir>)");
      }
    }
  }
  return cfg;
}

ecnlab::DataKind parse_kind(const std::string& kind) {
  if (kind == "sequence") return ecnlab::DataKind::sequence;
  if (kind == "grid") return ecnlab::DataKind::grid;
  throw ecnlab::ConfigError("unknown kind: " + kind + " (expected sequence|grid)");
}

int cmd_gen(const std::string& preset, const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed) {
  ecnlab::ExperimentConfig cfg = resolve_config(preset, config_path, "");
  const fs::path dir(out_dir);
  fs::create_directories(dir);

  ecnlab::GeneratedSplits splits;
  std::string ext;
  if (cfg.kind == ecnlab::DataKind::grid) {
    if (!cfg.grid_gen) throw ecnlab::ConfigError("gen: config has no grid_gen section");
    if (seed) cfg.grid_gen->seed = *seed;
    splits = ecnlab::gen_synthetic_grids(*cfg.grid_gen);
    ext = ".grid";
  } else {
    if (!cfg.seq_gen) throw ecnlab::ConfigError("gen: config has no seq_gen section");
    if (seed) cfg.seq_gen->seed = *seed;
    splits = ecnlab::gen_synthetic_sequences(cfg.seq_gen.value());
    ext = ".conll";
  }
  ecnlab::save_tagset(splits.tagset, dir / "tagset.txt");
  ecnlab::save_dataset(splits.train, dir / ("train" + ext));
  ecnlab::save_dataset(splits.gold, dir / ("gold" + ext));
  ecnlab::save_dataset(splits.test, dir / ("test" + ext));
  std::cout << "wrote " << splits.train.size() << "/" << splits.gold.size() << "/"
            << splits.test.size() << " train/gold/test samples to " << dir.string() << "\n";
  return 0;
}

int cmd_corrupt(const std::string& in, const std::string& tagset_path, const std::string& kind,
                const std::string& spec_path, std::optional<std::uint64_t> seed,
                const std::string& out_dir) {
  const ecnlab::TagSet ts = ecnlab::load_tagset(tagset_path);
  const ecnlab::DataKind k = parse_kind(kind);
  const ecnlab::Dataset ds = ecnlab::load_dataset(in, ts, k, ecnlab::DatasetRole::clean);

  json sj = json::parse(read_file(spec_path), nullptr, false);
  if (sj.is_discarded()) throw ecnlab::ConfigError("corrupt: spec file is not valid JSON");
  ecnlab::CorruptionSpec spec;
  spec.kind = ecnlab::corruption_kind_from_string(sj.at("kind").get<std::string>());
  spec.seed = sj.value("seed", 0ULL);
  const json params = sj.value("params", json::object());
  switch (spec.kind) {
    case ecnlab::CorruptionKind::imprecise:
      spec.imprecise_mode = ecnlab::imprecise_mode_from_string(params.value("mode", "fixed"));
      break;
    case ecnlab::CorruptionKind::missing_random:
      spec.drop_rate = params.value("drop_rate", spec.drop_rate);
      break;
    case ecnlab::CorruptionKind::missing_systematic:
      spec.tagger_id = params.value("tagger", spec.tagger_id);
      break;
    case ecnlab::CorruptionKind::grid_misclassify:
      spec.fraction = params.value("fraction", spec.fraction);
      spec.from_label = params.value("from_label", spec.from_label);
      spec.to_label = params.value("to_label", spec.to_label);
      break;
    case ecnlab::CorruptionKind::grid_coarsen:
      spec.erode_px = params.value("erode_px", spec.erode_px);
      break;
  }
  if (seed) spec.seed = *seed;

  const ecnlab::CorruptionRecord record = ecnlab::apply_corruption(ds, spec);
  const fs::path dir(out_dir);
  const std::string ext = k == ecnlab::DataKind::grid ? ".grid" : ".conll";
  ecnlab::save_dataset(record.corrupted, dir / ("corrupted" + ext));
  ecnlab::save_dataset(ds, dir / ("truth" + ext));
  json meta;
  meta["spec"] = json::parse(spec.canonical_json());
  meta["spec_digest"] = record.spec_digest;
  meta["corrupted_fraction"] = ecnlab::corrupted_fraction(record);
  write_file(dir / "record.json", meta.dump(2) + "\n");
  std::cout << "corrupted fraction: " << ecnlab::corrupted_fraction(record) << "\n"
            << "spec digest: " << record.spec_digest << "\n";
  return 0;
}

int cmd_train(const std::string& train_path, const std::string& tagset_path,
              const std::string& kind, const std::string& config_path,
              std::optional<std::uint64_t> seed, const std::string& out) {
  const ecnlab::TagSet ts = ecnlab::load_tagset(tagset_path);
  const ecnlab::DataKind k = parse_kind(kind);
  const ecnlab::Dataset train =
      ecnlab::load_dataset(train_path, ts, k, ecnlab::DatasetRole::corrupted);

  ecnlab::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = ecnlab::load_experiment_config(config_path);
  const std::uint64_t train_seed = seed.value_or(1);
  const ecnlab::BaseModel model = ecnlab::train_base_model(train, cfg.cfgs, train_seed);
  ecnlab::save_base_model(model, out);
  std::cout << "model written to " << out << " (digest " << ecnlab::base_model_digest(model)
            << ")\n";
  return 0;
}

int cmd_correct(const std::string& model_path, const std::string& gold_path,
                const std::string& in_path, const std::string& tagset_path,
                const std::string& kind, const std::string& config_path,
                const std::string& rs_variant, std::optional<std::uint64_t> seed,
                const std::string& out_dir) {
  const ecnlab::TagSet ts = ecnlab::load_tagset(tagset_path);
  const ecnlab::DataKind k = parse_kind(kind);

  ecnlab::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = ecnlab::load_experiment_config(config_path);
  if (!rs_variant.empty()) cfg.rs.variant = ecnlab::rs_variant_from_string(rs_variant);
  if (seed) cfg.cfgs.ecn.seed = *seed;

  const ecnlab::BaseModel base = ecnlab::load_base_model(model_path, cfg.cfgs.fx);
  const ecnlab::Dataset gold =
      ecnlab::load_dataset(gold_path, ts, k, ecnlab::DatasetRole::gold);
  const ecnlab::Dataset target =
      ecnlab::load_dataset(in_path, ts, k, ecnlab::DatasetRole::corrupted);

  const ecnlab::EcnModel corrector =
      ecnlab::ecn_train(base, cfg.cfgs.fx, gold, cfg.rs, cfg.cfgs.ecn);
  const ecnlab::Dataset corrected =
      ecnlab::ecn_correct(base, corrector, target, cfg.cfgs.fx, cfg.cfgs.ecn);

  const fs::path dir(out_dir);
  const std::string ext = k == ecnlab::DataKind::grid ? ".grid" : ".conll";
  ecnlab::save_dataset(corrected, dir / ("corrected" + ext));
  ecnlab::save_corrector(corrector, dir / "corrector.json");
  json prov;
  prov["base_model_digest"] = ecnlab::base_model_digest(base);
  prov["corrector_digest"] = ecnlab::corrector_digest(corrector);
  prov["rs_spec"] = ecnlab::rs_spec_to_json(cfg.rs);
  write_file(dir / "provenance.json", prov.dump(2) + "\n");
  std::cout << "corrected dataset written to " << (dir / ("corrected" + ext)).string() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& truth_path,
                 const std::string& tagset_path, const std::string& kind,
                 bool include_background) {
  const ecnlab::TagSet ts = ecnlab::load_tagset(tagset_path);
  const ecnlab::DataKind k = parse_kind(kind);
  const ecnlab::Dataset pred = ecnlab::load_dataset(pred_path, ts, k, ecnlab::DatasetRole::test);
  const ecnlab::Dataset truth = ecnlab::load_dataset(truth_path, ts, k, ecnlab::DatasetRole::test);
  if (k == ecnlab::DataKind::grid) {
    std::cout << "weighted_iou "
              << ecnlab::iou_score(pred, truth, ecnlab::Averaging::weighted, include_background)
              << "\nmacro_iou "
              << ecnlab::iou_score(pred, truth, ecnlab::Averaging::macro, include_background)
              << "\n";
  } else {
    std::cout << "weighted_f1 "
              << ecnlab::f1_score(pred, truth, ecnlab::Averaging::weighted, include_background)
              << "\nmacro_f1 "
              << ecnlab::f1_score(pred, truth, ecnlab::Averaging::macro, include_background)
              << "\n";
  }
  return 0;
}

int cmd_run(const std::string& preset, const std::string& config_path, const std::string& out_dir,
            const std::string& seeds, const std::string& strategies, const std::string& data_dir,
            const std::string& name) {
  ecnlab::ExperimentConfig cfg = resolve_config(preset, config_path, data_dir);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!seeds.empty()) cfg.seeds = parse_seeds(seeds);
  if (!strategies.empty()) cfg.strategies = parse_strategies(strategies);
  if (!name.empty()) cfg.name = name;

  const ecnlab::ExperimentOutput out = ecnlab::run_experiment(cfg);
  std::cout << ecnlab::results_markdown(out.table) << "\nrun directory: " << out.run_dir.string()
            << "\n";
  return 0;
}

int cmd_sweep(const std::string& preset, const std::string& config_path, const std::string& axis,
              const std::string& values, const std::string& focus_class, const std::string& seeds,
              const std::string& out_dir, const std::string& data_dir) {
  ecnlab::SweepConfig sweep;
  sweep.base = resolve_config(preset, config_path, data_dir);
  if (!out_dir.empty()) sweep.base.out_dir = out_dir;
  if (!seeds.empty()) sweep.base.seeds = parse_seeds(seeds);
  sweep.axis = ecnlab::sweep_axis_from_string(axis);
  if (!values.empty()) {
    sweep.values.clear();
    std::stringstream ss(values);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) sweep.values.push_back(std::stoi(item));
    }
  }
  if (sweep.axis == ecnlab::SweepAxis::n_token_features && values.empty()) {
    sweep.values = {1, 3, 6, 10, 14, 19};
  }
  if (!focus_class.empty()) sweep.focus_class = focus_class;

  const ecnlab::SweepResult result = ecnlab::run_sweep(sweep);
  std::cout << ecnlab::sweep_csv(result) << "run directory: " << result.run_dir.string() << "\n";
  return 0;
}

int cmd_report(const std::string& in, const std::string& out) {
  const ecnlab::ResultTable table = ecnlab::results_from_csv(read_file(in));
  const std::string md = ecnlab::results_markdown(table);
  if (out.empty()) {
    std::cout << md;
  } else {
    write_file(out, md);
    std::cout << "report written to " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured-label noise lab: corruption, base models, error correction"};
  app.require_subcommand(1);

  std::string preset, config_path, out_dir, seeds, strategies, data_dir, name;
  std::string in_path, tagset_path, kind = "sequence", spec_path, model_path, gold_path;
  std::string axis = "neighbor_radius_k", values, focus_class, pred_path, truth_path, rs_variant;
  std::string report_in, report_out;
  std::optional<std::uint64_t> seed;
  bool include_background = false;

  auto* gen = app.add_subcommand("gen", "generate synthetic splits and write them to a directory");
  gen->add_option("--preset", preset);
  gen->add_option("--config", config_path);
  gen->add_option("--out", out_dir)->required();
  gen->add_option("--seed", seed);

  auto* corrupt = app.add_subcommand("corrupt", "apply a corruption spec to a dataset");
  corrupt->add_option("--in", in_path)->required();
  corrupt->add_option("--tagset", tagset_path)->required();
  corrupt->add_option("--kind", kind)->capture_default_str();
  corrupt->add_option("--spec", spec_path)->required();
  corrupt->add_option("--seed", seed);
  corrupt->add_option("--out", out_dir)->required();

  auto* train = app.add_subcommand("train", "train a base model on a dataset");
  train->add_option("--train", in_path)->required();
  train->add_option("--tagset", tagset_path)->required();
  train->add_option("--kind", kind)->capture_default_str();
  train->add_option("--config", config_path);
  train->add_option("--seed", seed);
  train->add_option("--out", out_dir)->required();

  auto* correct = app.add_subcommand("correct", "train a corrector on gold data and relabel");
  correct->add_option("--base-model", model_path)->required();
  correct->add_option("--gold", gold_path)->required();
  correct->add_option("--in", in_path)->required();
  correct->add_option("--tagset", tagset_path)->required();
  correct->add_option("--kind", kind)->capture_default_str();
  correct->add_option("--config", config_path);
  correct->add_option("--rs-variant", rs_variant);
  correct->add_option("--seed", seed);
  correct->add_option("--out", out_dir)->required();

  auto* evaluate = app.add_subcommand("evaluate", "score a prediction against ground truth");
  evaluate->add_option("--pred", pred_path)->required();
  evaluate->add_option("--truth", truth_path)->required();
  evaluate->add_option("--tagset", tagset_path)->required();
  evaluate->add_option("--kind", kind)->capture_default_str();
  evaluate->add_flag("--include-background", include_background);

  auto* run = app.add_subcommand("run", "run every configured strategy over every seed");
  run->add_option("--preset", preset);
  run->add_option("--config", config_path);
  run->add_option("--out", out_dir);
  run->add_option("--seeds", seeds, "comma-separated");
  run->add_option("--seed", seed);
  run->add_option("--strategies", strategies, "comma-separated");
  run->add_option("--data", data_dir, "directory with tagset.txt and train/gold/test files");
  run->add_option("--name", name);

  auto* sweep = app.add_subcommand("sweep", "relevant-subset sensitivity sweep");
  sweep->add_option("--preset", preset);
  sweep->add_option("--config", config_path);
  sweep->add_option("--axis", axis)->capture_default_str();
  sweep->add_option("--values", values, "comma-separated");
  sweep->add_option("--focus-class", focus_class);
  sweep->add_option("--seeds", seeds, "comma-separated");
  sweep->add_option("--out", out_dir);
  sweep->add_option("--data", data_dir);

  auto* report = app.add_subcommand("report", "render a markdown table from results.csv");
  report->add_option("--in", report_in)->required();
  report->add_option("--out", report_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(preset, config_path, out_dir, seed);
    if (corrupt->parsed()) {
      return cmd_corrupt(in_path, tagset_path, kind, spec_path, seed, out_dir);
    }
    if (train->parsed()) return cmd_train(in_path, tagset_path, kind, config_path, seed, out_dir);
    if (correct->parsed()) {
      return cmd_correct(model_path, gold_path, in_path, tagset_path, kind, config_path,
                         rs_variant, seed, out_dir);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(pred_path, truth_path, tagset_path, kind, include_background);
    }
    if (run->parsed()) {
      if (seed && seeds.empty()) seeds = std::to_string(*seed);
      return cmd_run(preset, config_path, out_dir, seeds, strategies, data_dir, name);
    }
    if (sweep->parsed()) {
      return cmd_sweep(preset, config_path, axis, values, focus_class, seeds, out_dir, data_dir);
    }
    if (report->parsed()) return cmd_report(report_in, report_out);
  } catch (const ecnlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
