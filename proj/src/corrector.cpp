#include "ecnlab/corrector.hpp"

#include <algorithm>
#include <cmath>

#include "ecnlab/error.hpp"
#include "ecnlab/metrics.hpp"
#include "ecnlab/rng.hpp"

namespace ecnlab {

namespace {

constexpr const char* kInvalidLabel = "<inv>";

void check_tagsets(const TagSet& a, const TagSet& b, const char* op) {
  if (a != b) throw RunError(std::string(op) + ": tagset mismatch");
}

}  // namespace

const char* to_string(RsVariant v) {
  switch (v) {
    case RsVariant::x_only: return "x_only";
    case RsVariant::y_only: return "y_only";
    case RsVariant::full: return "full";
  }
  return "?";
}

RsVariant rs_variant_from_string(const std::string& name) {
  if (name == "x_only") return RsVariant::x_only;
  if (name == "y_only") return RsVariant::y_only;
  if (name == "full") return RsVariant::full;
  throw ConfigError("unknown RS variant: " + name);
}

int effective_border(const EcnTrainConfig& cfg, const RelevantSubsetSpec& spec) {
  if (cfg.grid_border >= 0) return cfg.grid_border;
  return (spec.grid_window + 1) / 2;
}

// --- sequence corrector -------------------------------------------------------

SeqCorrector::SeqCorrector(TagSet tagset, RelevantSubsetSpec spec, std::string schema_digest)
    : tagset_(std::move(tagset)), spec_(spec), schema_digest_(std::move(schema_digest)) {}

int SeqCorrector::intern_feature(const std::string& key) {
  auto it = feature_ids_.find(key);
  if (it != feature_ids_.end()) return it->second;
  const int id = static_cast<int>(feature_names_.size());
  feature_names_.push_back(key);
  feature_ids_.emplace(key, id);
  weights_.resize(feature_names_.size() * static_cast<std::size_t>(n_labels()), 0.0);
  return id;
}

int SeqCorrector::feature_id(const std::string& key) const {
  auto it = feature_ids_.find(key);
  return it == feature_ids_.end() ? -1 : it->second;
}

std::vector<double> SeqCorrector::predict(const RsFeatures& features) const {
  const int k = n_labels();
  std::vector<double> scores(k, 0.0);
  for (const RsFeature& f : features) {
    const int id = feature_id(f.key);
    if (id < 0) continue;
    const double* row = weights_.data() + static_cast<std::size_t>(id) * k;
    for (int l = 0; l < k; ++l) scores[l] += f.weight * row[l];
  }
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  double z = 0;
  for (double& s : scores) {
    s = std::exp(s - m);
    z += s;
  }
  for (double& s : scores) s /= z;
  return scores;
}

int SeqCorrector::predict_label(const RsFeatures& features) const {
  const std::vector<double> p = predict(features);
  int pick = 0;
  for (std::size_t l = 1; l < p.size(); ++l) {
    if (p[l] > p[pick]) pick = static_cast<int>(l);
  }
  return pick;
}

SeqCorrector seq_corrector_from_parts(TagSet tagset, RelevantSubsetSpec spec,
                                      std::string schema_digest,
                                      std::vector<std::string> feature_names,
                                      std::vector<double> weights) {
  SeqCorrector g(std::move(tagset), spec, std::move(schema_digest));
  g.feature_names_ = std::move(feature_names);
  for (std::size_t i = 0; i < g.feature_names_.size(); ++i) {
    g.feature_ids_.emplace(g.feature_names_[i], static_cast<int>(i));
  }
  if (weights.size() != g.feature_names_.size() * static_cast<std::size_t>(g.n_labels())) {
    throw ConfigError("seq corrector: weight array size mismatch");
  }
  g.weights_ = std::move(weights);
  return g;
}

RsFeatures build_rs_features_weighted(const SequenceSample& sample, const std::vector<int>& yhat,
                                      const std::vector<double>* marginals, int j,
                                      const RelevantSubsetSpec& spec, const FeatureExtractor& fx) {
  const int d = sample.length();
  const int k = marginals ? static_cast<int>(marginals->size() / d) : 0;
  if (static_cast<int>(yhat.size()) != d) throw RunError("build_rs_features: yhat shape mismatch");
  if (j < 0 || j >= d) throw RunError("build_rs_features: element index out of range");
  if (marginals && marginals->size() != static_cast<std::size_t>(d) * k) {
    throw RunError("build_rs_features: marginals shape mismatch");
  }

  RsFeatures out;
  out.push_back({"bias", 1.0});

  // One prediction slot: a single indicator (hard) or K+1 weighted features
  // (soft: every label plus the invalid symbol), so the input cardinality
  // stays constant across positions either way.
  auto push_prediction = [&](const std::string& slot, int position) {
    const bool in_range = position >= 0 && position < d;
    if (!marginals) {
      out.push_back(
          {slot + "=" + (in_range ? std::to_string(yhat[position]) : kInvalidLabel), 1.0});
      return;
    }
    for (int l = 0; l < k; ++l) {
      out.push_back(
          {slot + "=" + std::to_string(l), in_range ? (*marginals)[position * k + l] : 0.0});
    }
    out.push_back({slot + "=" + kInvalidLabel, in_range ? 0.0 : 1.0});
  };

  push_prediction("yhat", j);
  if (spec.variant != RsVariant::y_only) {
    const FeatureExtractor limited(std::min(spec.n_token_features, fx.n_features()));
    for (const auto& [name, value] : limited.extract_token(sample, j)) {
      out.push_back({"x:" + name + "=" + value, 1.0});
    }
  }
  if (spec.variant != RsVariant::x_only) {
    for (int o = -spec.neighbor_radius; o <= spec.neighbor_radius; ++o) {
      if (o == 0) continue;
      push_prediction("nbr[" + std::to_string(o) + "]", j + o);
    }
  }
  return out;
}

std::vector<std::string> build_rs_features(const SequenceSample& sample,
                                           const std::vector<int>& yhat, int j,
                                           const RelevantSubsetSpec& spec,
                                           const FeatureExtractor& fx) {
  std::vector<std::string> out;
  for (RsFeature& f : build_rs_features_weighted(sample, yhat, nullptr, j, spec, fx)) {
    out.push_back(std::move(f.key));
  }
  return out;
}

// --- grid corrector ------------------------------------------------------------

std::vector<double> build_rs_input(const GridSample& grid, const Eigen::MatrixXd& yhat, int row,
                                   int col, const RelevantSubsetSpec& spec,
                                   std::uint64_t sample_index) {
  const int w = spec.grid_window;
  if (w < 1) throw ConfigError("build_rs_input: grid window must be >= 1");
  const int k = static_cast<int>(yhat.cols());
  if (yhat.rows() != grid.size()) throw RunError("build_rs_input: yhat shape mismatch");
  if (row < 0 || row >= grid.height || col < 0 || col >= grid.width) {
    throw RunError("build_rs_input: element index out of range");
  }

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(w) * w * (k + 3));

  const bool suppress_y = spec.variant == RsVariant::x_only;
  const bool suppress_x = spec.variant == RsVariant::y_only;
  SplitMix64 fill(derive_stream(derive_stream(spec.fill_seed, sample_index),
                                static_cast<std::uint64_t>(grid.at(row, col))));
  auto fill_value = [&]() {
    return spec.ablation_fill == AblationFill::random_floats ? fill.uniform() : 0.0;
  };

  if (suppress_y) {
    for (int i = 0; i < w * w * k; ++i) out.push_back(fill_value());
  } else {
    const bool soft = spec.soft_grid_predictions();
    for (int dr = window_lo(w); dr <= window_hi(w); ++dr) {
      const int r = reflect_index(row + dr, grid.height);
      for (int dc = window_lo(w); dc <= window_hi(w); ++dc) {
        const int c = reflect_index(col + dc, grid.width);
        if (soft) {
          for (int l = 0; l < k; ++l) out.push_back(yhat(grid.at(r, c), l));
        } else {
          int arg = 0;
          for (int l = 1; l < k; ++l) {
            if (yhat(grid.at(r, c), l) > yhat(grid.at(r, c), arg)) arg = l;
          }
          for (int l = 0; l < k; ++l) out.push_back(l == arg ? 1.0 : 0.0);
        }
      }
    }
  }
  if (suppress_x) {
    for (int i = 0; i < w * w * 3; ++i) out.push_back(fill_value());
  } else {
    append_pixel_window(grid, row, col, w, out);
  }
  return out;
}

// --- training -------------------------------------------------------------------

SeqCorrector ecn_train(const CrfModel& f, const FeatureExtractor& fx, const Dataset& gold,
                       const RelevantSubsetSpec& spec, const EcnTrainConfig& cfg,
                       EcnTrainStats* stats) {
  if (gold.is_grid()) throw RunError("ecn_train: expected a sequence gold set");
  if (gold.sequences.empty()) throw RunError("ecn_train: empty gold set");
  check_tagsets(f.tagset(), gold.tagset, "ecn_train");
  if (!f.trained()) throw RunError("ecn_train: base model is not trained");
  if (cfg.steps < 1 || cfg.batch_size < 1) throw ConfigError("ecn_train: steps/batch >= 1");

  const std::size_t n = gold.sequences.size();
  const int k = gold.tagset.size();

  // f is frozen: predictions for the whole gold set are computed once.
  const bool soft = spec.soft_sequence_predictions();
  std::vector<std::vector<std::vector<RsFeature>>> inputs(n);
  SeqCorrector g(gold.tagset, spec, fx.schema_digest());
  for (std::size_t i = 0; i < n; ++i) {
    const SequenceSample& s = gold.sequences[i];
    std::vector<int> yhat;
    std::vector<double> marginals;
    if (soft) {
      CrfMarginalDecodeResult dec = crf_marginal_decode(f, fx.extract(s));
      yhat = std::move(dec.labels);
      marginals = std::move(dec.marginals);
    } else {
      yhat = crf_decode(f, fx.extract(s));
    }
    inputs[i].resize(s.tokens.size());
    for (int j = 0; j < s.length(); ++j) {
      inputs[i][j] =
          build_rs_features_weighted(s, yhat, soft ? &marginals : nullptr, j, spec, fx);
      for (const RsFeature& feature : inputs[i][j]) g.intern_feature(feature.key);
    }
  }

  std::vector<double> grad(g.weights().size());
  SplitMix64 rng(derive_stream(cfg.seed, "ecn-batches"));
  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    int emitted = 0;
    double loss = 0;

    std::vector<std::size_t> batch(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) batch[b] = rng.below(n);

    for (std::size_t i : batch) emitted += gold.sequences[i].length();
    const double scale = 1.0 / emitted;

    for (std::size_t i : batch) {
      const SequenceSample& s = gold.sequences[i];
      for (int j = 0; j < s.length(); ++j) {
        const std::vector<double> p = g.predict(inputs[i][j]);
        const int target = s.labels[j];
        loss -= scale * std::log(std::max(p[target], 1e-300));
        for (const RsFeature& feature : inputs[i][j]) {
          const int id = g.feature_id(feature.key);
          double* row = grad.data() + static_cast<std::size_t>(id) * k;
          const double fscale = scale * feature.weight;
          for (int l = 0; l < k; ++l) row[l] += fscale * p[l];
          row[target] -= fscale;
        }
      }
    }
    std::vector<double>& w = g.weights();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * grad[i];
    if (stats) {
      stats->emitted_per_step.push_back(emitted);
      stats->loss_per_step.push_back(loss);
    }
  }
  return g;
}

GridCorrector ecn_train(const PatchClassifier& f, const Dataset& gold,
                        const RelevantSubsetSpec& spec, const EcnTrainConfig& cfg,
                        EcnTrainStats* stats) {
  if (!gold.is_grid()) throw RunError("ecn_train: expected a grid gold set");
  if (gold.grids.empty()) throw RunError("ecn_train: empty gold set");
  check_tagsets(f.tagset, gold.tagset, "ecn_train");
  if (cfg.steps < 1 || cfg.batch_size < 1) throw ConfigError("ecn_train: steps/batch >= 1");
  if (cfg.grid_pixels_per_image < 1) throw ConfigError("ecn_train: pixels_per_image >= 1");

  const std::size_t n = gold.grids.size();
  const int k = gold.tagset.size();
  const int input_dim = spec.grid_window * spec.grid_window * (k + 3);

  // frozen f: distributions per gold grid computed once
  std::vector<Eigen::MatrixXd> yhat(n);
  for (std::size_t i = 0; i < n; ++i) yhat[i] = patch_predict(f, gold.grids[i]);

  GridCorrector g(gold.tagset, spec, Mlp(input_dim, cfg.grid_hidden, k, cfg.seed));

  SplitMix64 rng(derive_stream(cfg.seed, "ecn-batches"));
  const int per_image = cfg.grid_pixels_per_image;
  Eigen::MatrixXd x(cfg.batch_size * per_image, input_dim);
  std::vector<int> y(cfg.batch_size * per_image);

  for (int step = 0; step < cfg.steps; ++step) {
    int row_idx = 0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const std::size_t i = rng.below(n);
      const GridSample& grid = gold.grids[i];
      for (int p = 0; p < per_image; ++p, ++row_idx) {
        const int row = static_cast<int>(rng.below(static_cast<std::uint64_t>(grid.height)));
        const int col = static_cast<int>(rng.below(static_cast<std::uint64_t>(grid.width)));
        const std::vector<double> input = build_rs_input(grid, yhat[i], row, col, spec, i);
        for (int q = 0; q < input_dim; ++q) x(row_idx, q) = input[q];
        y[row_idx] = grid.labels[grid.at(row, col)];
      }
    }
    const double loss = g.net().train_step(x, y, cfg.learning_rate);
    if (stats) {
      stats->emitted_per_step.push_back(row_idx);
      stats->loss_per_step.push_back(loss);
    }
  }
  return g;
}

EcnModel ecn_train(const BaseModel& f, const FeatureExtractor& fx, const Dataset& gold,
                   const RelevantSubsetSpec& spec, const EcnTrainConfig& cfg,
                   EcnTrainStats* stats) {
  if (std::holds_alternative<CrfModel>(f)) {
    return ecn_train(std::get<CrfModel>(f), fx, gold, spec, cfg, stats);
  }
  return ecn_train(std::get<PatchClassifier>(f), gold, spec, cfg, stats);
}

// --- correction ------------------------------------------------------------------

Dataset ecn_correct(const CrfModel& f, const SeqCorrector& g, const Dataset& ds,
                    const FeatureExtractor& fx) {
  if (ds.is_grid()) throw RunError("ecn_correct: expected a sequence dataset");
  check_tagsets(f.tagset(), ds.tagset, "ecn_correct");
  check_tagsets(g.tagset(), ds.tagset, "ecn_correct");

  const bool soft = g.spec().soft_sequence_predictions();
  const bool observed_neighbours = g.spec().neighbor_source == NeighborSource::observed;
  Dataset out = ds;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    const SequenceSample& s = ds.sequences[i];
    std::vector<int> yhat;
    std::vector<double> marginals;
    if (soft) {
      CrfMarginalDecodeResult dec = crf_marginal_decode(f, fx.extract(s));
      yhat = std::move(dec.labels);
      marginals = std::move(dec.marginals);
    } else {
      yhat = crf_decode(f, fx.extract(s));
    }
    std::vector<int>& labels = out.sequences[i].labels;
    for (int j = 0; j < s.length(); ++j) {
      // neighbour block from the configured source; the element itself from yhat
      std::vector<int> context = observed_neighbours ? s.labels : yhat;
      context[j] = yhat[j];
      const std::vector<double>* weights =
          (soft && !observed_neighbours) ? &marginals : nullptr;
      labels[j] = g.predict_label(
          build_rs_features_weighted(s, context, weights, j, g.spec(), fx));
    }
  }
  out.role = DatasetRole::corrupted;
  return out;
}

Dataset ecn_correct(const PatchClassifier& f, const GridCorrector& g, const Dataset& ds,
                    int border) {
  if (!ds.is_grid()) throw RunError("ecn_correct: expected a grid dataset");
  check_tagsets(f.tagset, ds.tagset, "ecn_correct");
  check_tagsets(g.tagset(), ds.tagset, "ecn_correct");
  if (border < 0) throw ConfigError("ecn_correct: negative border");

  const int input_dim = g.net().input_dim();
  Dataset out = ds;
  for (std::size_t i = 0; i < ds.grids.size(); ++i) {
    const GridSample& grid = ds.grids[i];
    const Eigen::MatrixXd yhat = patch_predict(f, grid);
    const std::vector<int> base_labels = argmax_rows(yhat);
    std::vector<int>& labels = out.grids[i].labels;

    const int r0 = border, r1 = grid.height - border;
    const int c0 = border, c1 = grid.width - border;
    std::vector<std::pair<int, int>> interior;
    for (int r = 0; r < grid.height; ++r) {
      for (int c = 0; c < grid.width; ++c) {
        if (r >= r0 && r < r1 && c >= c0 && c < c1) {
          interior.emplace_back(r, c);
        } else {
          labels[grid.at(r, c)] = base_labels[grid.at(r, c)];
        }
      }
    }
    if (interior.empty()) continue;

    Eigen::MatrixXd x(interior.size(), input_dim);
    for (std::size_t p = 0; p < interior.size(); ++p) {
      const auto [r, c] = interior[p];
      const std::vector<double> input = build_rs_input(grid, yhat, r, c, g.spec(), i);
      for (int q = 0; q < input_dim; ++q) x(static_cast<Eigen::Index>(p), q) = input[q];
    }
    const std::vector<int> corrected = argmax_rows(g.net().forward(x));
    for (std::size_t p = 0; p < interior.size(); ++p) {
      const auto [r, c] = interior[p];
      labels[grid.at(r, c)] = corrected[p];
    }
  }
  out.role = DatasetRole::corrupted;
  return out;
}

Dataset ecn_correct(const BaseModel& f, const EcnModel& g, const Dataset& ds,
                    const FeatureExtractor& fx, const EcnTrainConfig& cfg) {
  if (std::holds_alternative<CrfModel>(f)) {
    return ecn_correct(std::get<CrfModel>(f), std::get<SeqCorrector>(g), ds, fx);
  }
  const GridCorrector& gc = std::get<GridCorrector>(g);
  return ecn_correct(std::get<PatchClassifier>(f), gc, ds, effective_border(cfg, gc.spec()));
}

// --- shared plumbing ----------------------------------------------------------------

BaseModel train_base_model(const Dataset& train, const TrainCfgs& cfgs, std::uint64_t seed) {
  if (train.is_grid()) {
    PatchTrainConfig cfg = cfgs.patch;
    cfg.seed = seed;
    return patch_train(train, cfg);
  }
  CrfTrainConfig cfg = cfgs.crf;
  cfg.seed = seed;
  return crf_train(train, cfgs.fx, cfg);
}

Dataset relabel_with(const BaseModel& model, const Dataset& ds, const FeatureExtractor& fx) {
  Dataset out = ds;
  if (std::holds_alternative<CrfModel>(model)) {
    const CrfModel& crf = std::get<CrfModel>(model);
    check_tagsets(crf.tagset(), ds.tagset, "relabel_with");
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
      out.sequences[i].labels = crf_decode(crf, fx.extract(ds.sequences[i]));
    }
  } else {
    const PatchClassifier& patch = std::get<PatchClassifier>(model);
    check_tagsets(patch.tagset, ds.tagset, "relabel_with");
    for (std::size_t i = 0; i < ds.grids.size(); ++i) {
      out.grids[i].labels = patch_predict_labels(patch, ds.grids[i]);
    }
  }
  return out;
}

std::map<std::string, double> evaluate_base_model(const BaseModel& model, const Dataset& test,
                                                  const FeatureExtractor& fx) {
  const Dataset pred = relabel_with(model, test, fx);
  std::map<std::string, double> scores;
  if (test.is_grid()) {
    scores["weighted_iou"] = iou_score(pred, test, Averaging::weighted);
    scores["macro_iou"] = iou_score(pred, test, Averaging::macro);
  } else {
    scores["weighted_f1"] = f1_score(pred, test, Averaging::weighted);
    scores["macro_f1"] = f1_score(pred, test, Averaging::macro);
  }
  return scores;
}

PipelineResult ecn_pipeline(const Dataset& corrupted, const Dataset& gold, const Dataset& test,
                            const RelevantSubsetSpec& spec, const TrainCfgs& cfgs,
                            std::uint64_t seed) {
  check_tagsets(corrupted.tagset, gold.tagset, "ecn_pipeline");
  check_tagsets(corrupted.tagset, test.tagset, "ecn_pipeline");

  PipelineResult result;
  result.base = train_base_model(corrupted, cfgs, derive_stream(seed, "base"));

  EcnTrainConfig ecn_cfg = cfgs.ecn;
  ecn_cfg.seed = derive_stream(seed, "ecn");
  result.corrector = ecn_train(result.base, cfgs.fx, gold, spec, ecn_cfg);

  result.corrected = ecn_correct(result.base, result.corrector, corrupted, cfgs.fx, ecn_cfg);
  result.retrained = train_base_model(result.corrected, cfgs, derive_stream(seed, "retrain"));
  result.scores = evaluate_base_model(result.retrained, test, cfgs.fx);
  return result;
}

}  // namespace ecnlab
