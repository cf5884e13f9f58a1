#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecnlab/core.hpp"
#include "ecnlab/features.hpp"

// Linear-chain CRF over categorical token features. Potentials are linear:
// a unary weight per (feature-name=value, label) pair plus a dense label
// transition matrix. Inference is exact forward-backward / Viterbi in log
// space; training is seeded minibatch gradient ascent on the L1/L2
// regularized log-likelihood.

namespace ecnlab {

struct CrfTrainConfig {
  int steps = 1500;          // S1
  int batch_size = 8;        // B1
  double learning_rate = 0.15;
  double l1 = 0.1;           // c1
  double l2 = 0.1;           // c2
  std::uint64_t seed = 1;
};

// Active feature ids per position; unseen features are dropped.
using ActiveFeatures = std::vector<std::vector<int>>;

class CrfModel {
 public:
  CrfModel() = default;
  CrfModel(TagSet tagset, std::string feature_schema_digest);

  const TagSet& tagset() const { return tagset_; }
  int n_labels() const { return tagset_.size(); }
  int n_features() const { return static_cast<int>(feature_names_.size()); }
  bool trained() const { return trained_; }
  void set_trained(bool t) { trained_ = t; }
  const std::string& feature_schema_digest() const { return schema_digest_; }

  // id of "name=value", inserting it if requested.
  int feature_id(const std::string& key) const;
  int intern_feature(const std::string& key);
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  ActiveFeatures index_features(const std::vector<FeatureMap>& maps) const;

  double unary_weight(int feature, int label) const { return unary_[feature * n_labels() + label]; }
  double transition(int from, int to) const { return trans_[from * n_labels() + to]; }

  std::vector<double>& unary() { return unary_; }
  const std::vector<double>& unary() const { return unary_; }
  std::vector<double>& transitions() { return trans_; }
  const std::vector<double>& transitions() const { return trans_; }

  // Unary log-potentials for indexed features: d x K, row-major.
  std::vector<double> potentials(const ActiveFeatures& active) const;

 private:
  TagSet tagset_;
  std::string schema_digest_;
  std::vector<std::string> feature_names_;
  std::unordered_map<std::string, int> feature_ids_;
  std::vector<double> unary_;  // n_features x K
  std::vector<double> trans_;  // K x K
  bool trained_ = false;

  friend CrfModel crf_model_from_parts(TagSet, std::string, std::vector<std::string>,
                                       std::vector<double>, std::vector<double>, bool);
};

// Rebuilds a model from serialized parts (model_io).
CrfModel crf_model_from_parts(TagSet tagset, std::string schema_digest,
                              std::vector<std::string> feature_names,
                              std::vector<double> unary, std::vector<double> trans,
                              bool trained);

struct CrfForwardResult {
  double log_z = 0;
  int d = 0;
  int k = 0;
  std::vector<double> marginals;           // d*K
  std::vector<double> pairwise_marginals;  // (d-1)*K*K

  double marginal(int j, int l) const { return marginals[j * k + l]; }
  double pairwise(int j, int a, int b) const {
    return pairwise_marginals[(j * k + a) * k + b];
  }
};

// logZ plus exact unary and pairwise marginals.
CrfForwardResult crf_forward(const CrfModel& model, const std::vector<FeatureMap>& features);
CrfForwardResult crf_forward_indexed(const CrfModel& model, const ActiveFeatures& active);

struct CrfGradient {
  std::vector<double> unary;  // n_features x K
  std::vector<double> trans;  // K x K
};

struct CrfLoglikResult {
  double loglik = 0;     // log p(labels | features)
  double objective = 0;  // loglik - c1*|w|_1 - c2*|w|_2^2
  CrfGradient grad;      // gradient of `objective`
};

// Empirical minus expected feature counts, minus the L1 subgradient
// (sign(0) = 0) and L2 gradient.
CrfLoglikResult crf_loglik_grad(const CrfModel& model, const std::vector<FeatureMap>& features,
                                const std::vector<int>& labels, double c1, double c2);

// Seeded minibatch gradient ascent; objective_history (if given) records the
// regularized batch objective at every step.
CrfModel crf_train(const Dataset& train, const FeatureExtractor& fx, const CrfTrainConfig& cfg,
                   std::vector<double>* objective_history = nullptr);

// Max-score labeling; ties resolve to the lexicographically smallest optimal
// labeling (lowest label index, earliest position first).
std::vector<int> crf_decode(const CrfModel& model, const std::vector<FeatureMap>& features);
std::vector<int> crf_decode_indexed(const CrfModel& model, const ActiveFeatures& active);

struct CrfMarginalDecodeResult {
  std::vector<int> labels;        // per-position argmax, ties to lowest index
  std::vector<double> marginals;  // d*K
};

CrfMarginalDecodeResult crf_marginal_decode(const CrfModel& model,
                                            const std::vector<FeatureMap>& features);

// Joint score of one labeling (used by tests and decoding oracles).
double crf_score(const CrfModel& model, const ActiveFeatures& active,
                 const std::vector<int>& labels);

}  // namespace ecnlab
