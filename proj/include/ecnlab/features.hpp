#pragma once

#include <string>
#include <vector>

#include "ecnlab/core.hpp"

namespace ecnlab {

// The 19 token features used by the sequence models, in the documented order.
// Boolean features are "1"/"0", numeric features are decimal strings, and the
// neighbour features fall back to <bos>/<eos> markers at sentence edges.
//
//   is_title is_upper is_lower is_digit length shape sent_start sent_end
//   prefix1 prefix2 prefix3 suffix1 suffix2 suffix3
//   prev_is_title next_is_title prev_lower next_lower lower
//
// `shape` maps uppercase to X, lowercase to x, digits to d and keeps anything
// else. A FeatureExtractor restricted to the first n features is used by the
// feature-count sweep; the full set is the default everywhere else.
class FeatureExtractor {
 public:
  static constexpr int kNumFeatures = 19;

  explicit FeatureExtractor(int n_features = kNumFeatures);

  int n_features() const { return n_features_; }

  // Ordered names of all 19 features.
  static const std::vector<std::string>& feature_names();

  // Features of token j within its sentence (exactly n_features entries).
  FeatureMap extract_token(const SequenceSample& sample, int j) const;

  // One map per token.
  std::vector<FeatureMap> extract(const SequenceSample& sample) const;

  // Identifies the feature definitions + restriction; model files refuse to
  // load against a different schema.
  std::string schema_digest() const;

 private:
  int n_features_;
};

}  // namespace ecnlab
