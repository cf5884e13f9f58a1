#include "ecnlab/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ecnlab/error.hpp"
#include "ecnlab/io.hpp"
#include "ecnlab/metrics.hpp"
#include "ecnlab/model_io.hpp"
#include "ecnlab/rng.hpp"

namespace ecnlab {

namespace {

using json = nlohmann::json;

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

const std::vector<std::string>& metric_order(DataKind kind) {
  static const std::vector<std::string> seq = {"weighted_f1", "macro_f1"};
  static const std::vector<std::string> grid = {"weighted_iou", "macro_iou"};
  return kind == DataKind::grid ? grid : seq;
}

std::string headline_metric(DataKind kind) {
  return kind == DataKind::grid ? "weighted_iou" : "weighted_f1";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RunError("cannot write " + path.string());
  out << text;
}

}  // namespace

double ResultTable::mean(const std::string& strategy, const std::string& metric) const {
  double sum = 0;
  int n = 0;
  for (const ResultRow& r : rows) {
    if (r.strategy == strategy && r.metric == metric) {
      sum += r.score;
      ++n;
    }
  }
  return n == 0 ? std::nan("") : sum / n;
}

double ResultTable::stddev(const std::string& strategy, const std::string& metric) const {
  const double m = mean(strategy, metric);
  double sum = 0;
  int n = 0;
  for (const ResultRow& r : rows) {
    if (r.strategy == strategy && r.metric == metric) {
      sum += (r.score - m) * (r.score - m);
      ++n;
    }
  }
  return n <= 1 ? 0.0 : std::sqrt(sum / (n - 1));
}

std::string results_csv(const ResultTable& table) {
  std::string out = "dataset,strategy,metric,score,seed,runtime_s\n";
  for (const ResultRow& r : table.rows) {
    out += r.dataset + ',' + r.strategy + ',' + r.metric + ',' + fixed(r.score, 6) + ',' +
           std::to_string(r.seed) + ',' + fixed(r.runtime_s, 3) + '\n';
  }
  return out;
}

ResultTable results_from_csv(const std::string& text) {
  ResultTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("dataset,", 0) != 0) throw ConfigError("results csv: bad header");
      continue;
    }
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        cols.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (cols.size() != 6) throw ConfigError("results csv: expected 6 columns: " + line);
    ResultRow r;
    r.dataset = cols[0];
    r.strategy = cols[1];
    r.metric = cols[2];
    r.score = std::stod(cols[3]);
    r.seed = std::stoull(cols[4]);
    r.runtime_s = std::stod(cols[5]);
    table.rows.push_back(std::move(r));
  }
  return table;
}

std::string results_markdown(const ResultTable& table) {
  // collect datasets / strategies / metrics in first-appearance order
  std::vector<std::string> datasets, strategies, metrics;
  auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
    for (const std::string& x : v) {
      if (x == s) return;
    }
    v.push_back(s);
  };
  for (const ResultRow& r : table.rows) {
    add_unique(datasets, r.dataset);
    add_unique(strategies, r.strategy);
    add_unique(metrics, r.metric);
  }

  std::string out;
  out += "| dataset | metric |";
  for (const std::string& s : strategies) out += " " + s + " |";
  out += "\n|---|---|";
  for (std::size_t i = 0; i < strategies.size(); ++i) out += "---|";
  out += "\n";
  for (const std::string& d : datasets) {
    for (const std::string& m : metrics) {
      out += "| " + d + " | " + m + " |";
      for (const std::string& s : strategies) {
        double mean = 0, sd = 0;
        int n = 0;
        for (const ResultRow& r : table.rows) {
          if (r.dataset == d && r.metric == m && r.strategy == s) {
            mean += r.score;
            ++n;
          }
        }
        if (n == 0) {
          out += " - |";
          continue;
        }
        mean /= n;
        for (const ResultRow& r : table.rows) {
          if (r.dataset == d && r.metric == m && r.strategy == s) {
            sd += (r.score - mean) * (r.score - mean);
          }
        }
        sd = n > 1 ? std::sqrt(sd / (n - 1)) : 0.0;
        out += " " + fixed(mean, 3) + " ± " + fixed(sd, 3) + " |";
      }
      out += "\n";
    }
  }
  return out;
}

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  PreparedData data;
  Dataset train;

  if (cfg.paths) {
    const TagSet ts = load_tagset(cfg.paths->tagset);
    train = load_dataset(cfg.paths->train, ts, cfg.kind, DatasetRole::clean);
    data.gold = load_dataset(cfg.paths->gold, ts, cfg.kind, DatasetRole::gold);
    data.test = load_dataset(cfg.paths->test, ts, cfg.kind, DatasetRole::test);
  } else if (cfg.kind == DataKind::grid) {
    if (!cfg.grid_gen) throw ConfigError("experiment: grid config without grid_gen or paths");
    GridGenConfig gen = *cfg.grid_gen;
    gen.seed = derive_stream(derive_stream(seed, "gen"), gen.seed);
    GeneratedSplits splits = gen_synthetic_grids(gen);
    train = std::move(splits.train);
    data.gold = std::move(splits.gold);
    data.test = std::move(splits.test);
  } else {
    if (!cfg.seq_gen) throw ConfigError("experiment: sequence config without seq_gen or paths");
    SeqGenConfig gen = *cfg.seq_gen;
    gen.seed = derive_stream(derive_stream(seed, "gen"), gen.seed);
    GeneratedSplits splits = gen_synthetic_sequences(gen);
    train = std::move(splits.train);
    data.gold = std::move(splits.gold);
    data.test = std::move(splits.test);
  }

  data.clean = train;
  data.clean->role = DatasetRole::clean;

  if (cfg.corruption) {
    CorruptionSpec spec = *cfg.corruption;
    spec.seed = derive_stream(derive_stream(seed, "corrupt"), spec.seed);
    CorruptionRecord record = apply_corruption(train, spec);
    data.corrupted = std::move(record.corrupted);
    data.spec_digest = record.spec_digest;
  } else {
    data.corrupted = train;
    data.corrupted.role = DatasetRole::corrupted;
  }
  return data;
}

int max_threads() {
  if (const char* env = std::getenv("ECN_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::filesystem::path make_run_dir(const std::filesystem::path& out_dir) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "run-%Y%m%d-%H%M%S", &tm);

  std::filesystem::path dir = out_dir / stamp;
  for (int suffix = 1; std::filesystem::exists(dir); ++suffix) {
    dir = out_dir / (std::string(stamp) + "-" + std::to_string(suffix));
  }
  std::filesystem::create_directories(dir);
  return dir;
}

namespace {

struct Job {
  std::size_t seed_index;
  std::size_t strategy_index;
};

void run_jobs(std::size_t n_jobs, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n_jobs <= 1) {
    for (std::size_t i = 0; i < n_jobs; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_jobs || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::min<std::size_t>(threads, n_jobs);
  pool.reserve(n_workers);
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg, bool write_files) {
  if (cfg.strategies.empty()) throw ConfigError("experiment: no strategies");
  if (cfg.seeds.empty()) throw ConfigError("experiment: no seeds");

  // data per seed is shared by all that seed's strategies
  std::vector<PreparedData> data;
  data.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds) {
    try {
      data.push_back(prepare_data(cfg, seed));
    } catch (const std::exception& e) {
      throw RunError("stage prepare-data (seed " + std::to_string(seed) + "): " + e.what());
    }
  }

  const std::size_t n_jobs = cfg.seeds.size() * cfg.strategies.size();
  std::vector<StrategyResult> results(n_jobs);
  run_jobs(n_jobs, max_threads(), [&](std::size_t job) {
    const std::size_t si = job / cfg.strategies.size();
    const std::size_t vi = job % cfg.strategies.size();
    const Strategy strategy = cfg.strategies[vi];
    const PreparedData& d = data[si];
    try {
      results[job] = run_baseline(strategy, d.corrupted, d.gold, d.test,
                                  d.clean ? &*d.clean : nullptr, cfg.rs, cfg.cfgs, cfg.seeds[si]);
    } catch (const std::exception& e) {
      throw RunError("stage " + std::string(to_string(strategy)) + " (seed " +
                     std::to_string(cfg.seeds[si]) + "): " + e.what());
    }
  });

  ExperimentOutput out;
  for (std::size_t vi = 0; vi < cfg.strategies.size(); ++vi) {
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      const StrategyResult& r = results[si * cfg.strategies.size() + vi];
      for (const std::string& metric : metric_order(cfg.kind)) {
        const auto it = r.scores.find(metric);
        if (it == r.scores.end()) continue;
        out.table.rows.push_back({cfg.name, to_string(cfg.strategies[vi]), metric, it->second,
                                  cfg.seeds[si], r.runtime_s});
      }
    }
  }

  if (write_files) {
    out.run_dir = make_run_dir(cfg.out_dir);
    write_text(out.run_dir / "config.json", experiment_config_to_json(cfg));
    write_text(out.run_dir / "results.csv", results_csv(out.table));
    write_text(out.run_dir / "report.md", results_markdown(out.table));
  }
  return out;
}

const char* to_string(SweepAxis axis) {
  return axis == SweepAxis::neighbor_radius_k ? "neighbor_radius_k" : "n_token_features";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "neighbor_radius_k") return SweepAxis::neighbor_radius_k;
  if (name == "n_token_features") return SweepAxis::n_token_features;
  throw ConfigError("unknown sweep axis: " + name);
}

namespace {

double score_model(const BaseModel& model, const Dataset& test, const TrainCfgs& cfgs,
                   const std::optional<std::string>& focus_class, const std::string& headline) {
  if (!focus_class) {
    return evaluate_base_model(model, test, cfgs.fx).at(headline);
  }
  const int cls = test.tagset.index_of(*focus_class);
  if (cls < 0) throw ConfigError("sweep: focus class '" + *focus_class + "' not in the tagset");
  const Dataset pred = relabel_with(model, test, cfgs.fx);
  const auto scores = per_class_f1(pred, test);
  const auto it = scores.find(cls);
  return it == scores.end() ? 0.0 : it->second;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg, bool write_files) {
  if (cfg.values.empty()) throw ConfigError("sweep: no axis values");
  for (std::size_t i = 1; i < cfg.values.size(); ++i) {
    if (cfg.values[i] <= cfg.values[i - 1]) throw ConfigError("sweep: values must be ascending");
  }
  const ExperimentConfig& base = cfg.base;
  if (base.seeds.empty()) throw ConfigError("sweep: no seeds");
  const std::string headline = headline_metric(base.kind);

  SweepResult result;
  result.points.reserve(cfg.values.size());

  double corrupted_sum = 0, gold_sum = 0;
  std::vector<double> point_sums(cfg.values.size(), 0.0);

  for (std::uint64_t seed : base.seeds) {
    const PreparedData data = prepare_data(base, seed);
    const std::uint64_t base_seed = derive_stream(seed, "base");

    // baselines once per seed
    const BaseModel corrupted_model = train_base_model(data.corrupted, base.cfgs, base_seed);
    corrupted_sum +=
        score_model(corrupted_model, data.test, base.cfgs, cfg.focus_class, headline);
    const BaseModel gold_model = train_base_model(data.gold, base.cfgs, base_seed);
    gold_sum += score_model(gold_model, data.test, base.cfgs, cfg.focus_class, headline);

    // the swept ECN reuses the corrupted-trained base model across values
    for (std::size_t i = 0; i < cfg.values.size(); ++i) {
      RelevantSubsetSpec spec = base.rs;
      if (cfg.axis == SweepAxis::neighbor_radius_k) {
        spec.variant = RsVariant::y_only;
        spec.neighbor_radius = cfg.values[i];
      } else {
        spec.variant = RsVariant::x_only;
        spec.n_token_features = cfg.values[i];
      }

      EcnTrainConfig ecn_cfg = base.cfgs.ecn;
      ecn_cfg.seed = derive_stream(seed, "ecn");
      const EcnModel corrector =
          ecn_train(corrupted_model, base.cfgs.fx, data.gold, spec, ecn_cfg);
      const Dataset corrected =
          ecn_correct(corrupted_model, corrector, data.corrupted, base.cfgs.fx, ecn_cfg);
      const BaseModel retrained =
          train_base_model(corrected, base.cfgs, derive_stream(seed, "retrain"));
      point_sums[i] += score_model(retrained, data.test, base.cfgs, cfg.focus_class, headline);
    }
  }

  const double n = static_cast<double>(base.seeds.size());
  result.corrupted_only = corrupted_sum / n;
  result.gold_only = gold_sum / n;
  for (std::size_t i = 0; i < cfg.values.size(); ++i) {
    result.points.push_back({cfg.values[i], point_sums[i] / n});
  }

  if (write_files) {
    result.run_dir = make_run_dir(base.out_dir);
    write_text(result.run_dir / "sweep.csv", sweep_csv(result));
    write_text(result.run_dir / "sweep.svg",
               sweep_svg(result, base.name + " / " + to_string(cfg.axis)));
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = "series,value,score\n";
  for (const SweepPoint& p : result.points) {
    out += "ecn," + std::to_string(p.value) + ',' + fixed(p.score, 6) + '\n';
  }
  out += "corrupted_only,," + fixed(result.corrupted_only, 6) + '\n';
  out += "gold_only,," + fixed(result.gold_only, 6) + '\n';
  return out;
}

std::string sweep_svg(const SweepResult& result, const std::string& title) {
  const double width = 640, height = 420;
  const double left = 70, right = 24, top = 44, bottom = 52;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double lo = std::min(result.corrupted_only, result.gold_only);
  double hi = std::max(result.corrupted_only, result.gold_only);
  for (const SweepPoint& p : result.points) {
    lo = std::min(lo, p.score);
    hi = std::max(hi, p.score);
  }
  lo = std::max(0.0, lo - 0.05);
  hi = std::min(1.0, hi + 0.05);
  if (hi - lo < 1e-9) hi = lo + 0.1;

  const double x_min = result.points.front().value;
  const double x_max = std::max(x_min + 1e-9, static_cast<double>(result.points.back().value));
  auto x_at = [&](double v) { return left + (v - x_min) / (x_max - x_min) * plot_w; };
  auto y_at = [&](double s) { return top + (hi - s) / (hi - lo) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
      << "font-family=\"sans-serif\">" << title << "</text>\n";

  // axes
  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double s = lo + (hi - lo) * t / 5.0;
    svg << "<line x1=\"" << left - 4 << "\" y1=\"" << y_at(s) << "\" x2=\"" << left << "\" y2=\""
        << y_at(s) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << y_at(s) + 4
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fixed(s, 2)
        << "</text>\n";
  }
  for (const SweepPoint& p : result.points) {
    svg << "<line x1=\"" << x_at(p.value) << "\" y1=\"" << top + plot_h << "\" x2=\""
        << x_at(p.value) << "\" y2=\"" << top + plot_h + 4 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << x_at(p.value) << "\" y=\"" << top + plot_h + 18
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << p.value
        << "</text>\n";
  }

  // baseline horizontals
  auto hline = [&](double s, const char* color, const char* label, double label_y_shift) {
    svg << "<line x1=\"" << left << "\" y1=\"" << y_at(s) << "\" x2=\"" << left + plot_w
        << "\" y2=\"" << y_at(s) << "\" stroke=\"" << color
        << "\" stroke-dasharray=\"6,4\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << left + plot_w - 4 << "\" y=\"" << y_at(s) + label_y_shift
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color
        << "\" font-family=\"sans-serif\">" << label << "</text>\n";
  };
  hline(result.corrupted_only, "#c0392b", "corrupted only", -4);
  hline(result.gold_only, "#7f8c8d", "gold only", 14);

  // ecn curve
  svg << "<polyline fill=\"none\" stroke=\"#2563aa\" stroke-width=\"2\" points=\"";
  for (const SweepPoint& p : result.points) {
    svg << x_at(p.value) << "," << y_at(p.score) << " ";
  }
  svg << "\"/>\n";
  for (const SweepPoint& p : result.points) {
    svg << "<circle cx=\"" << x_at(p.value) << "\" cy=\"" << y_at(p.score)
        << "\" r=\"3.5\" fill=\"#2563aa\"/>\n";
  }
  svg << "<text x=\"" << left + 6 << "\" y=\"" << top + 14
      << "\" font-size=\"11\" fill=\"#2563aa\" font-family=\"sans-serif\">ecn</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

// --- presets ------------------------------------------------------------------

namespace {

ExperimentConfig desk_seq_base() {
  ExperimentConfig cfg;
  cfg.kind = DataKind::sequence;
  cfg.seq_gen = SeqGenConfig{};
  cfg.rs = RelevantSubsetSpec{};
  cfg.cfgs.crf = CrfTrainConfig{};
  cfg.cfgs.ecn = EcnTrainConfig{};
  cfg.cfgs.ecn.learning_rate = 0.3;  // sparse logistic corrector takes a larger step
  return cfg;
}

ExperimentConfig desk_grid_base() {
  ExperimentConfig cfg;
  cfg.kind = DataKind::grid;
  cfg.grid_gen = GridGenConfig{};
  cfg.rs = RelevantSubsetSpec{};
  cfg.cfgs.patch = PatchTrainConfig{};
  cfg.cfgs.ecn = EcnTrainConfig{};
  return cfg;
}

CorruptionSpec imprecise_spec(ImpreciseMode mode) {
  CorruptionSpec spec{CorruptionKind::imprecise, 11};
  spec.imprecise_mode = mode;
  return spec;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"gmb-im-fixed-desk", "gmb-im-r-desk",    "gmb-im-v-desk",
          "gmb-im-rv-desk",    "gmb-mi-rand-desk", "gmb-mi-syst-desk",
          "grid-mis-50-desk",  "grid-mis-75-desk", "grid-coarsen-desk",
          "gmb-im-fixed"};
}

ExperimentConfig make_preset(const std::string& name) {
  ExperimentConfig cfg;
  if (name == "gmb-im-fixed-desk") {
    cfg = desk_seq_base();
    cfg.corruption = imprecise_spec(ImpreciseMode::fixed);
  } else if (name == "gmb-im-r-desk") {
    cfg = desk_seq_base();
    cfg.corruption = imprecise_spec(ImpreciseMode::random_half);
  } else if (name == "gmb-im-v-desk") {
    cfg = desk_seq_base();
    cfg.corruption = imprecise_spec(ImpreciseMode::variable);
  } else if (name == "gmb-im-rv-desk") {
    cfg = desk_seq_base();
    cfg.corruption = imprecise_spec(ImpreciseMode::random_variable);
  } else if (name == "gmb-mi-rand-desk") {
    cfg = desk_seq_base();
    CorruptionSpec spec{CorruptionKind::missing_random, 11};
    spec.drop_rate = 0.30;
    cfg.corruption = spec;
  } else if (name == "gmb-mi-syst-desk") {
    cfg = desk_seq_base();
    CorruptionSpec spec{CorruptionKind::missing_systematic, 0};
    spec.tagger_id = "rule_tagger_v1";
    cfg.corruption = spec;
  } else if (name == "grid-mis-50-desk" || name == "grid-mis-75-desk") {
    cfg = desk_grid_base();
    CorruptionSpec spec{CorruptionKind::grid_misclassify, 11};
    spec.fraction = name == "grid-mis-50-desk" ? 0.50 : 0.75;
    spec.from_label = 2;  // vehicle
    spec.to_label = 1;    // road
    cfg.corruption = spec;
  } else if (name == "grid-coarsen-desk") {
    cfg = desk_grid_base();
    CorruptionSpec spec{CorruptionKind::grid_coarsen, 11};
    spec.erode_px = 2;
    cfg.corruption = spec;
  } else if (name == "gmb-im-fixed") {
    // full-size preset over a user-supplied corpus (paths set via --data)
    cfg.kind = DataKind::sequence;
    cfg.paths = DataPaths{};
    cfg.corruption = imprecise_spec(ImpreciseMode::fixed);
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  cfg.name = name;
  return cfg;
}

// --- config (de)serialization -----------------------------------------------------

namespace {

json corruption_to_json(const CorruptionSpec& spec) {
  return json::parse(spec.canonical_json());
}

CorruptionSpec corruption_from_json(const json& j) {
  CorruptionSpec spec;
  spec.kind = corruption_kind_from_string(j.at("kind").get<std::string>());
  spec.seed = j.value("seed", 0ULL);
  const json params = j.value("params", json::object());
  switch (spec.kind) {
    case CorruptionKind::imprecise:
      spec.imprecise_mode = imprecise_mode_from_string(params.value("mode", "fixed"));
      break;
    case CorruptionKind::missing_random:
      spec.drop_rate = params.value("drop_rate", spec.drop_rate);
      break;
    case CorruptionKind::missing_systematic:
      spec.tagger_id = params.value("tagger", spec.tagger_id);
      break;
    case CorruptionKind::grid_misclassify:
      spec.fraction = params.value("fraction", spec.fraction);
      spec.from_label = params.value("from_label", spec.from_label);
      spec.to_label = params.value("to_label", spec.to_label);
      break;
    case CorruptionKind::grid_coarsen:
      spec.erode_px = params.value("erode_px", spec.erode_px);
      break;
  }
  return spec;
}

json seq_gen_to_json(const SeqGenConfig& g) {
  return json{{"n_train", g.n_train},
              {"n_gold", g.n_gold},
              {"n_test", g.n_test},
              {"entity_vocab_sizes", g.entity_vocab_sizes},
              {"filler_vocab_size", g.filler_vocab_size},
              {"decoy_fraction", g.decoy_fraction},
              {"sentence_len_min", g.sentence_len_min},
              {"sentence_len_max", g.sentence_len_max},
              {"entity_density", g.entity_density},
              {"entity_len_min", g.entity_len_min},
              {"entity_len_max", g.entity_len_max},
              {"seed", g.seed}};
}

SeqGenConfig seq_gen_from_json(const json& j) {
  SeqGenConfig g;
  g.n_train = j.value("n_train", g.n_train);
  g.n_gold = j.value("n_gold", g.n_gold);
  g.n_test = j.value("n_test", g.n_test);
  g.entity_vocab_sizes = j.value("entity_vocab_sizes", g.entity_vocab_sizes);
  g.filler_vocab_size = j.value("filler_vocab_size", g.filler_vocab_size);
  g.decoy_fraction = j.value("decoy_fraction", g.decoy_fraction);
  g.sentence_len_min = j.value("sentence_len_min", g.sentence_len_min);
  g.sentence_len_max = j.value("sentence_len_max", g.sentence_len_max);
  g.entity_density = j.value("entity_density", g.entity_density);
  g.entity_len_min = j.value("entity_len_min", g.entity_len_min);
  g.entity_len_max = j.value("entity_len_max", g.entity_len_max);
  g.seed = j.value("seed", g.seed);
  return g;
}

json grid_gen_to_json(const GridGenConfig& g) {
  return json{{"n_train", g.n_train},
              {"n_gold", g.n_gold},
              {"n_test", g.n_test},
              {"height", g.height},
              {"width", g.width},
              {"band_height_min", g.band_height_min},
              {"band_height_max", g.band_height_max},
              {"vehicle_count_min", g.vehicle_count_min},
              {"vehicle_count_max", g.vehicle_count_max},
              {"vehicle_h_min", g.vehicle_h_min},
              {"vehicle_h_max", g.vehicle_h_max},
              {"vehicle_w_min", g.vehicle_w_min},
              {"vehicle_w_max", g.vehicle_w_max},
              {"color_noise", g.color_noise},
              {"seed", g.seed}};
}

GridGenConfig grid_gen_from_json(const json& j) {
  GridGenConfig g;
  g.n_train = j.value("n_train", g.n_train);
  g.n_gold = j.value("n_gold", g.n_gold);
  g.n_test = j.value("n_test", g.n_test);
  g.height = j.value("height", g.height);
  g.width = j.value("width", g.width);
  g.band_height_min = j.value("band_height_min", g.band_height_min);
  g.band_height_max = j.value("band_height_max", g.band_height_max);
  g.vehicle_count_min = j.value("vehicle_count_min", g.vehicle_count_min);
  g.vehicle_count_max = j.value("vehicle_count_max", g.vehicle_count_max);
  g.vehicle_h_min = j.value("vehicle_h_min", g.vehicle_h_min);
  g.vehicle_h_max = j.value("vehicle_h_max", g.vehicle_h_max);
  g.vehicle_w_min = j.value("vehicle_w_min", g.vehicle_w_min);
  g.vehicle_w_max = j.value("vehicle_w_max", g.vehicle_w_max);
  g.color_noise = j.value("color_noise", g.color_noise);
  g.seed = j.value("seed", g.seed);
  return g;
}

}  // namespace

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["kind"] = cfg.kind == DataKind::grid ? "grid" : "sequence";
  if (cfg.seq_gen) j["seq_gen"] = seq_gen_to_json(*cfg.seq_gen);
  if (cfg.grid_gen) j["grid_gen"] = grid_gen_to_json(*cfg.grid_gen);
  if (cfg.paths) {
    j["paths"] = json{{"tagset", cfg.paths->tagset},
                      {"train", cfg.paths->train},
                      {"gold", cfg.paths->gold},
                      {"test", cfg.paths->test}};
  }
  if (cfg.corruption) j["corruption"] = corruption_to_json(*cfg.corruption);
  std::vector<std::string> strategies;
  for (Strategy s : cfg.strategies) strategies.emplace_back(to_string(s));
  j["strategies"] = strategies;
  j["rs"] = rs_spec_to_json(cfg.rs);
  j["crf"] = json{{"steps", cfg.cfgs.crf.steps},
                  {"batch_size", cfg.cfgs.crf.batch_size},
                  {"learning_rate", cfg.cfgs.crf.learning_rate},
                  {"l1", cfg.cfgs.crf.l1},
                  {"l2", cfg.cfgs.crf.l2}};
  j["patch"] = json{{"window", cfg.cfgs.patch.window},
                    {"hidden", cfg.cfgs.patch.hidden},
                    {"steps", cfg.cfgs.patch.steps},
                    {"batch_size", cfg.cfgs.patch.batch_size},
                    {"learning_rate", cfg.cfgs.patch.learning_rate}};
  j["ecn"] = json{{"steps", cfg.cfgs.ecn.steps},
                  {"batch_size", cfg.cfgs.ecn.batch_size},
                  {"learning_rate", cfg.cfgs.ecn.learning_rate},
                  {"grid_border", cfg.cfgs.ecn.grid_border},
                  {"grid_pixels_per_image", cfg.cfgs.ecn.grid_pixels_per_image},
                  {"grid_hidden", cfg.cfgs.ecn.grid_hidden}};
  j["n_token_features"] = cfg.cfgs.fx.n_features();
  j["seeds"] = cfg.seeds;
  j["out_dir"] = cfg.out_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("experiment config: invalid JSON");

  ExperimentConfig cfg;
  cfg.name = j.value("name", cfg.name);
  const std::string kind = j.value("kind", "sequence");
  if (kind == "grid") {
    cfg.kind = DataKind::grid;
  } else if (kind == "sequence") {
    cfg.kind = DataKind::sequence;
  } else {
    throw ConfigError("experiment config: unknown kind " + kind);
  }
  if (j.contains("seq_gen")) cfg.seq_gen = seq_gen_from_json(j["seq_gen"]);
  if (j.contains("grid_gen")) cfg.grid_gen = grid_gen_from_json(j["grid_gen"]);
  if (j.contains("paths")) {
    DataPaths p;
    p.tagset = j["paths"].value("tagset", "");
    p.train = j["paths"].value("train", "");
    p.gold = j["paths"].value("gold", "");
    p.test = j["paths"].value("test", "");
    cfg.paths = p;
  }
  if (j.contains("corruption")) cfg.corruption = corruption_from_json(j["corruption"]);
  if (j.contains("strategies")) {
    cfg.strategies.clear();
    for (const auto& s : j["strategies"]) {
      cfg.strategies.push_back(strategy_from_string(s.get<std::string>()));
    }
  }
  if (j.contains("rs")) cfg.rs = rs_spec_from_json(j["rs"]);
  if (j.contains("crf")) {
    const json& c = j["crf"];
    cfg.cfgs.crf.steps = c.value("steps", cfg.cfgs.crf.steps);
    cfg.cfgs.crf.batch_size = c.value("batch_size", cfg.cfgs.crf.batch_size);
    cfg.cfgs.crf.learning_rate = c.value("learning_rate", cfg.cfgs.crf.learning_rate);
    cfg.cfgs.crf.l1 = c.value("l1", cfg.cfgs.crf.l1);
    cfg.cfgs.crf.l2 = c.value("l2", cfg.cfgs.crf.l2);
  }
  if (j.contains("patch")) {
    const json& c = j["patch"];
    cfg.cfgs.patch.window = c.value("window", cfg.cfgs.patch.window);
    cfg.cfgs.patch.hidden = c.value("hidden", cfg.cfgs.patch.hidden);
    cfg.cfgs.patch.steps = c.value("steps", cfg.cfgs.patch.steps);
    cfg.cfgs.patch.batch_size = c.value("batch_size", cfg.cfgs.patch.batch_size);
    cfg.cfgs.patch.learning_rate = c.value("learning_rate", cfg.cfgs.patch.learning_rate);
  }
  if (j.contains("ecn")) {
    const json& c = j["ecn"];
    cfg.cfgs.ecn.steps = c.value("steps", cfg.cfgs.ecn.steps);
    cfg.cfgs.ecn.batch_size = c.value("batch_size", cfg.cfgs.ecn.batch_size);
    cfg.cfgs.ecn.learning_rate = c.value("learning_rate", cfg.cfgs.ecn.learning_rate);
    cfg.cfgs.ecn.grid_border = c.value("grid_border", cfg.cfgs.ecn.grid_border);
    cfg.cfgs.ecn.grid_pixels_per_image =
        c.value("grid_pixels_per_image", cfg.cfgs.ecn.grid_pixels_per_image);
    cfg.cfgs.ecn.grid_hidden = c.value("grid_hidden", cfg.cfgs.ecn.grid_hidden);
  }
  if (j.contains("n_token_features")) {
    cfg.cfgs.fx = FeatureExtractor(j["n_token_features"].get<int>());
  }
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return experiment_config_from_json(ss.str());
}

}  // namespace ecnlab
