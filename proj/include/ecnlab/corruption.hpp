#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "ecnlab/core.hpp"

// Structured label corruptions. Every injector is a pure, seeded function of
// the input dataset: it changes labels only (never tokens, features or
// pixels), records the original labels for auditing, and derives each
// sample's random stream from (seed, sample_index) so results do not depend
// on evaluation order.

namespace ecnlab {

enum class CorruptionKind {
  imprecise,           // entity spans extended over following background tokens
  missing_random,      // whole spans dropped to background at random
  missing_systematic,  // labels kept only where a weak tagger agrees
  grid_misclassify,    // whole images: one class relabelled as another
  grid_coarsen,        // region boundaries eroded toward background
};

const char* to_string(CorruptionKind kind);
CorruptionKind corruption_kind_from_string(const std::string& name);

enum class ImpreciseMode { fixed, random_half, variable, random_variable };

const char* to_string(ImpreciseMode mode);
ImpreciseMode imprecise_mode_from_string(const std::string& name);

// Declarative corruption description. `params` values are kind-specific and
// serialize canonically, so the digest identifies the exact transformation.
struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::imprecise;
  std::uint64_t seed = 0;

  // imprecise
  ImpreciseMode imprecise_mode = ImpreciseMode::fixed;
  // missing_random
  double drop_rate = 0.30;
  // missing_systematic
  std::string tagger_id = "rule_tagger_v1";
  // grid_misclassify
  double fraction = 0.5;
  int from_label = 0;
  int to_label = 0;
  // grid_coarsen
  int erode_px = 1;

  // Canonical JSON {kind, params, seed}; spec_digest is its SHA-256 hex.
  std::string canonical_json() const;
  std::string digest() const;
};

// Maximal run of one non-background label.
struct EntitySpan {
  std::size_t sample_index = 0;
  int start = 0;          // inclusive token index
  int end = 0;            // exclusive
  int label = 0;          // non-background

  bool operator==(const EntitySpan&) const = default;
};

// All maximal non-background runs, sorted by (sample, start).
std::vector<EntitySpan> find_entity_spans(const Dataset& ds);

// Each selected span's label is pushed rightward over up to L following
// background tokens, clamped at sentence end and stopping before the next
// span. fixed: all spans, L=3. random_half: p=0.5, L=3. variable: all spans,
// L uniform in {1,2,3}. random_variable: p=0.75, L uniform in {1,2,3}.
CorruptionRecord corrupt_imprecise(const Dataset& ds, ImpreciseMode mode, std::uint64_t seed);

// Each span independently dropped to background with probability drop_rate.
CorruptionRecord corrupt_missing_random(const Dataset& ds, double drop_rate, std::uint64_t seed);

// Per-token binary is-entity marks for one sample.
using WeakTagger = std::function<std::vector<bool>(const SequenceSample&)>;

// A label survives iff it was non-background and the weak tagger marks the
// token; everything else becomes background.
CorruptionRecord corrupt_missing_systematic(const Dataset& ds, const WeakTagger& tagger,
                                            const std::string& tagger_id = "custom");

// Built-in weak tagger: marks title-case tokens that are not sentence-initial,
// all-digit tokens, and gazetteer members.
class RuleWeakTagger {
 public:
  explicit RuleWeakTagger(std::set<std::string> gazetteer = {})
      : gazetteer_(std::move(gazetteer)) {}

  std::vector<bool> operator()(const SequenceSample& sample) const;

 private:
  std::set<std::string> gazetteer_;  // lowercase entries
};

// A `fraction` of whole samples is selected; in each selected image every
// from_label pixel becomes to_label.
CorruptionRecord corrupt_grid_misclassify(const Dataset& ds, double fraction, int from_label,
                                          int to_label, std::uint64_t seed);

// Chebyshev erosion of every non-background class toward background:
// a pixel keeps its class iff all in-grid pixels within distance erode_px
// share it. Out-of-grid neighbours are treated as matching, so regions are
// not eaten at the image border.
CorruptionRecord corrupt_grid_coarsen(const Dataset& ds, int erode_px, std::uint64_t seed);

// Dispatch on spec.kind. missing_systematic uses the built-in rule tagger.
CorruptionRecord apply_corruption(const Dataset& ds, const CorruptionSpec& spec);

}  // namespace ecnlab
