#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "ecnlab/core.hpp"
#include "ecnlab/crf.hpp"
#include "ecnlab/patch.hpp"

// The shared per-element corrector g and the two-stage training procedure:
// train a base model f on the corrupted corpus, train g on the small gold set
// to map (f's prediction for an element, the element's relevant subset) to the
// true label, then relabel the corpus with g and retrain a fresh base model on
// the corrected corpus only. f stays frozen while g trains.

namespace ecnlab {

enum class RsVariant { x_only, y_only, full };
enum class AblationFill { invalid_symbol, random_floats };
enum class NeighborSource { predicted, observed };

// Form of the base model's prediction fed to the corrector. kind_default is
// hard argmax labels for sequences and full distributions for grids.
enum class PredictionForm { kind_default, hard, soft };

const char* to_string(RsVariant v);
RsVariant rs_variant_from_string(const std::string& name);

// Which slice of the sample accompanies the predicted element label.
//   sequences: token features of position j (x block) and/or the predicted
//   labels of the k neighbours on each side (y block), out-of-range
//   neighbours filled with a distinguished invalid symbol.
//   grids: the w x w window of predicted label distributions (y block) and
//   the w x w color window (x block); a suppressed block is filled with
//   seeded uniform floats or a constant invalid value per ablation_fill.
struct RelevantSubsetSpec {
  RsVariant variant = RsVariant::full;
  int neighbor_radius = 3;  // k, sequences
  int grid_window = 9;      // w; even windows cover offsets -(w-1)/2 .. w/2
  AblationFill ablation_fill = AblationFill::random_floats;
  NeighborSource neighbor_source = NeighborSource::predicted;  // correction-time neighbours
  PredictionForm prediction_form = PredictionForm::kind_default;
  int n_token_features = FeatureExtractor::kNumFeatures;       // x-block restriction
  std::uint64_t fill_seed = 0x66696c6c;

  bool soft_sequence_predictions() const { return prediction_form == PredictionForm::soft; }
  bool soft_grid_predictions() const { return prediction_form != PredictionForm::hard; }
};

struct EcnTrainConfig {
  int steps = 2000;      // S2
  int batch_size = 4;    // B2 (samples per step)
  double learning_rate = 0.1;
  std::uint64_t seed = 1;
  int grid_border = -1;             // border strip kept at f's prediction; -1 = ceil(w/2)
  int grid_pixels_per_image = 64;   // pixel subsample per selected image (grids)
  std::vector<int> grid_hidden = {32};
};

int effective_border(const EcnTrainConfig& cfg, const RelevantSubsetSpec& spec);

// --- sequence corrector -----------------------------------------------------

// One sparse corrector input: an indicator (weight 1) or, with soft
// predictions, a probability-weighted feature.
struct RsFeature {
  std::string key;
  double weight = 1.0;

  bool operator==(const RsFeature&) const = default;
};

using RsFeatures = std::vector<RsFeature>;

// Multinomial logistic model over sparse features: the predicted label of the
// element, optionally its token features, optionally the neighbouring
// predicted labels.
class SeqCorrector {
 public:
  SeqCorrector() = default;
  SeqCorrector(TagSet tagset, RelevantSubsetSpec spec, std::string schema_digest);

  const TagSet& tagset() const { return tagset_; }
  const RelevantSubsetSpec& spec() const { return spec_; }
  const std::string& feature_schema_digest() const { return schema_digest_; }
  int n_labels() const { return tagset_.size(); }

  int intern_feature(const std::string& key);
  int feature_id(const std::string& key) const;
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  // Label distribution for one set of active features.
  std::vector<double> predict(const RsFeatures& features) const;
  int predict_label(const RsFeatures& features) const;

 private:
  TagSet tagset_;
  RelevantSubsetSpec spec_;
  std::string schema_digest_;
  std::vector<std::string> feature_names_;
  std::unordered_map<std::string, int> feature_ids_;
  std::vector<double> weights_;  // n_features x K

  friend SeqCorrector seq_corrector_from_parts(TagSet, RelevantSubsetSpec, std::string,
                                               std::vector<std::string>, std::vector<double>);
};

SeqCorrector seq_corrector_from_parts(TagSet tagset, RelevantSubsetSpec spec,
                                      std::string schema_digest,
                                      std::vector<std::string> feature_names,
                                      std::vector<double> weights);

// Corrector input for sequence element j: "yhat=..." plus the x / neighbour
// blocks selected by the spec. Constant cardinality for a fixed spec. With
// soft predictions `marginals` (d x K, row-major) weights one feature per
// label in each prediction slot; out-of-range neighbours stay indicators of
// the invalid symbol either way.
std::vector<std::string> build_rs_features(const SequenceSample& sample,
                                           const std::vector<int>& yhat, int j,
                                           const RelevantSubsetSpec& spec,
                                           const FeatureExtractor& fx);
RsFeatures build_rs_features_weighted(const SequenceSample& sample, const std::vector<int>& yhat,
                                      const std::vector<double>* marginals, int j,
                                      const RelevantSubsetSpec& spec, const FeatureExtractor& fx);

// --- grid corrector ----------------------------------------------------------

class GridCorrector {
 public:
  GridCorrector() = default;
  GridCorrector(TagSet tagset, RelevantSubsetSpec spec, Mlp net)
      : tagset_(std::move(tagset)), spec_(spec), net_(std::move(net)) {}

  const TagSet& tagset() const { return tagset_; }
  const RelevantSubsetSpec& spec() const { return spec_; }
  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }

 private:
  TagSet tagset_;
  RelevantSubsetSpec spec_;
  Mlp net_;
};

// Corrector input vector for pixel (row,col): the w*w*K window of predicted
// label distributions followed by the w*w*3 color window, with the block
// suppressed by the variant filled per ablation_fill. `yhat` is H*W x K.
std::vector<double> build_rs_input(const GridSample& grid, const Eigen::MatrixXd& yhat, int row,
                                   int col, const RelevantSubsetSpec& spec,
                                   std::uint64_t sample_index);

// --- training / correction ---------------------------------------------------

using BaseModel = std::variant<CrfModel, PatchClassifier>;
using EcnModel = std::variant<SeqCorrector, GridCorrector>;

struct EcnTrainStats {
  std::vector<int> emitted_per_step;  // corrector samples per update
  std::vector<double> loss_per_step;
};

SeqCorrector ecn_train(const CrfModel& f, const FeatureExtractor& fx, const Dataset& gold,
                       const RelevantSubsetSpec& spec, const EcnTrainConfig& cfg,
                       EcnTrainStats* stats = nullptr);

GridCorrector ecn_train(const PatchClassifier& f, const Dataset& gold,
                        const RelevantSubsetSpec& spec, const EcnTrainConfig& cfg,
                        EcnTrainStats* stats = nullptr);

EcnModel ecn_train(const BaseModel& f, const FeatureExtractor& fx, const Dataset& gold,
                   const RelevantSubsetSpec& spec, const EcnTrainConfig& cfg,
                   EcnTrainStats* stats = nullptr);

// Labels replaced by the corrector's output; tokens/pixels/features untouched.
// Grid elements inside the border strip keep f's predicted label.
Dataset ecn_correct(const CrfModel& f, const SeqCorrector& g, const Dataset& ds,
                    const FeatureExtractor& fx);
Dataset ecn_correct(const PatchClassifier& f, const GridCorrector& g, const Dataset& ds,
                    int border);
Dataset ecn_correct(const BaseModel& f, const EcnModel& g, const Dataset& ds,
                    const FeatureExtractor& fx, const EcnTrainConfig& cfg);

// --- shared model plumbing ----------------------------------------------------

struct TrainCfgs {
  FeatureExtractor fx{FeatureExtractor::kNumFeatures};
  CrfTrainConfig crf;
  PatchTrainConfig patch;
  EcnTrainConfig ecn;
};

// Trains the kind-appropriate base model with the given seed.
BaseModel train_base_model(const Dataset& train, const TrainCfgs& cfgs, std::uint64_t seed);

// Copy of `ds` with labels replaced by the base model's predictions.
Dataset relabel_with(const BaseModel& model, const Dataset& ds, const FeatureExtractor& fx);

// {weighted,macro} F1 for sequences, IoU for grids, background excluded.
std::map<std::string, double> evaluate_base_model(const BaseModel& model, const Dataset& test,
                                                  const FeatureExtractor& fx);

struct PipelineResult {
  BaseModel base;        // f, trained on the corrupted corpus
  EcnModel corrector;    // g
  Dataset corrected;     // corrupted corpus after correction
  BaseModel retrained;   // f', trained on the corrected corpus only
  std::map<std::string, double> scores;  // f' on the test set
};

// The full two-stage procedure. All phase seeds derive from `seed`.
PipelineResult ecn_pipeline(const Dataset& corrupted, const Dataset& gold, const Dataset& test,
                            const RelevantSubsetSpec& spec, const TrainCfgs& cfgs,
                            std::uint64_t seed);

}  // namespace ecnlab
