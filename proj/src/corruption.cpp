#include "ecnlab/corruption.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "ecnlab/digest.hpp"
#include "ecnlab/error.hpp"
#include "ecnlab/rng.hpp"

namespace ecnlab {

namespace {

using json = nlohmann::json;

void require_valid(const Dataset& ds, const char* op) {
  const auto violations = validate_dataset(ds);
  if (!violations.empty()) {
    throw RunError(std::string(op) + ": invalid dataset:\n" + format_violations(violations));
  }
}

void require_sequence(const Dataset& ds, const char* op) {
  if (ds.is_grid()) throw RunError(std::string(op) + ": expected a sequence dataset");
  require_valid(ds, op);
}

void require_grid(const Dataset& ds, const char* op) {
  if (!ds.is_grid()) throw RunError(std::string(op) + ": expected a grid dataset");
  require_valid(ds, op);
}

std::vector<std::vector<int>> snapshot_labels(const Dataset& ds) {
  std::vector<std::vector<int>> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.push_back(ds.is_grid() ? ds.grids[i].labels : ds.sequences[i].labels);
  }
  return out;
}

CorruptionRecord make_record(Dataset corrupted, std::vector<std::vector<int>> truth,
                             const CorruptionSpec& spec) {
  corrupted.role = DatasetRole::corrupted;
  return CorruptionRecord{std::move(corrupted), std::move(truth), spec.digest()};
}

}  // namespace

const char* to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::imprecise: return "imprecise";
    case CorruptionKind::missing_random: return "missing_random";
    case CorruptionKind::missing_systematic: return "missing_systematic";
    case CorruptionKind::grid_misclassify: return "grid_misclassify";
    case CorruptionKind::grid_coarsen: return "grid_coarsen";
  }
  return "?";
}

CorruptionKind corruption_kind_from_string(const std::string& name) {
  if (name == "imprecise") return CorruptionKind::imprecise;
  if (name == "missing_random") return CorruptionKind::missing_random;
  if (name == "missing_systematic") return CorruptionKind::missing_systematic;
  if (name == "grid_misclassify") return CorruptionKind::grid_misclassify;
  if (name == "grid_coarsen") return CorruptionKind::grid_coarsen;
  throw ConfigError("unknown corruption kind: " + name);
}

const char* to_string(ImpreciseMode mode) {
  switch (mode) {
    case ImpreciseMode::fixed: return "fixed";
    case ImpreciseMode::random_half: return "random_half";
    case ImpreciseMode::variable: return "variable";
    case ImpreciseMode::random_variable: return "random_variable";
  }
  return "?";
}

ImpreciseMode imprecise_mode_from_string(const std::string& name) {
  if (name == "fixed") return ImpreciseMode::fixed;
  if (name == "random_half") return ImpreciseMode::random_half;
  if (name == "variable") return ImpreciseMode::variable;
  if (name == "random_variable") return ImpreciseMode::random_variable;
  throw ConfigError("unknown imprecise mode: " + name);
}

std::string CorruptionSpec::canonical_json() const {
  json params;
  switch (kind) {
    case CorruptionKind::imprecise:
      params["mode"] = to_string(imprecise_mode);
      break;
    case CorruptionKind::missing_random:
      params["drop_rate"] = drop_rate;
      break;
    case CorruptionKind::missing_systematic:
      params["tagger"] = tagger_id;
      break;
    case CorruptionKind::grid_misclassify:
      params["fraction"] = fraction;
      params["from_label"] = from_label;
      params["to_label"] = to_label;
      break;
    case CorruptionKind::grid_coarsen:
      params["erode_px"] = erode_px;
      break;
  }
  json doc;
  doc["kind"] = to_string(kind);
  doc["params"] = params;
  doc["seed"] = seed;
  return doc.dump();  // nlohmann keeps object keys sorted
}

std::string CorruptionSpec::digest() const { return sha256_hex(canonical_json()); }

std::vector<EntitySpan> find_entity_spans(const Dataset& ds) {
  require_sequence(ds, "find_entity_spans");
  const int background = ds.tagset.background_index;
  std::vector<EntitySpan> spans;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    const std::vector<int>& labels = ds.sequences[i].labels;
    int j = 0;
    const int d = static_cast<int>(labels.size());
    while (j < d) {
      if (labels[j] == background) {
        ++j;
        continue;
      }
      int end = j + 1;
      while (end < d && labels[end] == labels[j]) ++end;
      spans.push_back({i, j, end, labels[j]});
      j = end;
    }
  }
  return spans;
}

CorruptionRecord corrupt_imprecise(const Dataset& ds, ImpreciseMode mode, std::uint64_t seed) {
  require_sequence(ds, "corrupt_imprecise");
  CorruptionSpec spec{CorruptionKind::imprecise, seed};
  spec.imprecise_mode = mode;

  const int background = ds.tagset.background_index;
  Dataset out = ds;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    const std::vector<int>& original = ds.sequences[i].labels;
    std::vector<int>& labels = out.sequences[i].labels;
    const int d = static_cast<int>(original.size());
    SplitMix64 rng(derive_stream(seed, static_cast<std::uint64_t>(i)));

    int j = 0;
    while (j < d) {
      if (original[j] == background) {
        ++j;
        continue;
      }
      const int label = original[j];
      int end = j + 1;
      while (end < d && original[end] == label) ++end;

      bool selected = true;
      if (mode == ImpreciseMode::random_half) selected = rng.bernoulli(0.5);
      if (mode == ImpreciseMode::random_variable) selected = rng.bernoulli(0.75);
      int extend = 3;
      if (mode == ImpreciseMode::variable || mode == ImpreciseMode::random_variable) {
        extend = static_cast<int>(rng.range(1, 3));
      }
      if (selected) {
        // Extend over original background tokens only: clamp at sentence end
        // and stop before the next annotated span.
        for (int p = end; p < std::min(end + extend, d) && original[p] == background; ++p) {
          labels[p] = label;
        }
      }
      j = end;
    }
  }
  return make_record(std::move(out), snapshot_labels(ds), spec);
}

CorruptionRecord corrupt_missing_random(const Dataset& ds, double drop_rate, std::uint64_t seed) {
  if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) {
    throw ConfigError("corrupt_missing_random: drop_rate outside [0,1]");
  }
  require_sequence(ds, "corrupt_missing_random");
  CorruptionSpec spec{CorruptionKind::missing_random, seed};
  spec.drop_rate = drop_rate;

  const int background = ds.tagset.background_index;
  Dataset out = ds;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    const std::vector<int>& original = ds.sequences[i].labels;
    std::vector<int>& labels = out.sequences[i].labels;
    const int d = static_cast<int>(original.size());
    SplitMix64 rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
    int j = 0;
    while (j < d) {
      if (original[j] == background) {
        ++j;
        continue;
      }
      int end = j + 1;
      while (end < d && original[end] == original[j]) ++end;
      if (rng.bernoulli(drop_rate)) {
        std::fill(labels.begin() + j, labels.begin() + end, background);
      }
      j = end;
    }
  }
  return make_record(std::move(out), snapshot_labels(ds), spec);
}

CorruptionRecord corrupt_missing_systematic(const Dataset& ds, const WeakTagger& tagger,
                                            const std::string& tagger_id) {
  require_sequence(ds, "corrupt_missing_systematic");
  CorruptionSpec spec{CorruptionKind::missing_systematic, 0};
  spec.tagger_id = tagger_id;

  const int background = ds.tagset.background_index;
  Dataset out = ds;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    const SequenceSample& sample = ds.sequences[i];
    const std::vector<bool> marks = tagger(sample);
    if (marks.size() != sample.tokens.size()) {
      throw RunError("corrupt_missing_systematic: tagger returned " +
                     std::to_string(marks.size()) + " marks for a sample of length " +
                     std::to_string(sample.tokens.size()));
    }
    std::vector<int>& labels = out.sequences[i].labels;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != background && !marks[j]) labels[j] = background;
    }
  }
  return make_record(std::move(out), snapshot_labels(ds), spec);
}

std::vector<bool> RuleWeakTagger::operator()(const SequenceSample& sample) const {
  std::vector<bool> marks(sample.tokens.size(), false);
  for (std::size_t j = 0; j < sample.tokens.size(); ++j) {
    const std::string& tok = sample.tokens[j];
    if (tok.empty()) continue;

    bool all_digit = true;
    for (unsigned char c : tok) {
      if (!std::isdigit(c)) all_digit = false;
    }
    bool title = std::isupper(static_cast<unsigned char>(tok[0])) != 0;
    for (std::size_t p = 1; p < tok.size() && title; ++p) {
      if (std::isupper(static_cast<unsigned char>(tok[p]))) title = false;
    }

    if (all_digit) {
      marks[j] = true;
      continue;
    }
    if (title && j > 0) {
      marks[j] = true;
      continue;
    }
    if (!gazetteer_.empty()) {
      std::string lower = tok;
      for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (gazetteer_.count(lower)) marks[j] = true;
    }
  }
  return marks;
}

CorruptionRecord corrupt_grid_misclassify(const Dataset& ds, double fraction, int from_label,
                                          int to_label, std::uint64_t seed) {
  require_grid(ds, "corrupt_grid_misclassify");
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ConfigError("corrupt_grid_misclassify: fraction outside [0,1]");
  }
  const int k = ds.tagset.size();
  if (from_label < 0 || from_label >= k || to_label < 0 || to_label >= k) {
    throw ConfigError("corrupt_grid_misclassify: label index outside the tagset");
  }
  if (from_label == to_label) {
    throw ConfigError("corrupt_grid_misclassify: from_label equals to_label");
  }
  CorruptionSpec spec{CorruptionKind::grid_misclassify, seed};
  spec.fraction = fraction;
  spec.from_label = from_label;
  spec.to_label = to_label;

  Dataset out = ds;
  for (std::size_t i = 0; i < ds.grids.size(); ++i) {
    SplitMix64 rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
    if (!rng.bernoulli(fraction)) continue;
    for (int& label : out.grids[i].labels) {
      if (label == from_label) label = to_label;
    }
  }
  return make_record(std::move(out), snapshot_labels(ds), spec);
}

CorruptionRecord corrupt_grid_coarsen(const Dataset& ds, int erode_px, std::uint64_t seed) {
  require_grid(ds, "corrupt_grid_coarsen");
  if (erode_px < 1) throw ConfigError("corrupt_grid_coarsen: erode_px must be >= 1");
  for (const GridSample& g : ds.grids) {
    if (2 * erode_px >= std::min(g.height, g.width)) {
      throw ConfigError("corrupt_grid_coarsen: erode_px " + std::to_string(erode_px) +
                        " degenerate for a " + std::to_string(g.height) + "x" +
                        std::to_string(g.width) + " grid");
    }
  }
  CorruptionSpec spec{CorruptionKind::grid_coarsen, seed};
  spec.erode_px = erode_px;

  const int background = ds.tagset.background_index;
  Dataset out = ds;
  for (std::size_t i = 0; i < ds.grids.size(); ++i) {
    const GridSample& g = ds.grids[i];
    std::vector<int>& labels = out.grids[i].labels;
    for (int r = 0; r < g.height; ++r) {
      for (int c = 0; c < g.width; ++c) {
        const int label = g.labels[g.at(r, c)];
        if (label == background) continue;
        const int r0 = std::max(0, r - erode_px), r1 = std::min(g.height - 1, r + erode_px);
        const int c0 = std::max(0, c - erode_px), c1 = std::min(g.width - 1, c + erode_px);
        bool keep = true;
        for (int rr = r0; rr <= r1 && keep; ++rr) {
          for (int cc = c0; cc <= c1; ++cc) {
            if (g.labels[g.at(rr, cc)] != label) {
              keep = false;
              break;
            }
          }
        }
        if (!keep) labels[g.at(r, c)] = background;
      }
    }
  }
  return make_record(std::move(out), snapshot_labels(ds), spec);
}

CorruptionRecord apply_corruption(const Dataset& ds, const CorruptionSpec& spec) {
  switch (spec.kind) {
    case CorruptionKind::imprecise:
      return corrupt_imprecise(ds, spec.imprecise_mode, spec.seed);
    case CorruptionKind::missing_random:
      return corrupt_missing_random(ds, spec.drop_rate, spec.seed);
    case CorruptionKind::missing_systematic:
      return corrupt_missing_systematic(ds, RuleWeakTagger{}, spec.tagger_id);
    case CorruptionKind::grid_misclassify:
      return corrupt_grid_misclassify(ds, spec.fraction, spec.from_label, spec.to_label,
                                      spec.seed);
    case CorruptionKind::grid_coarsen:
      return corrupt_grid_coarsen(ds, spec.erode_px, spec.seed);
  }
  throw ConfigError("apply_corruption: unknown kind");
}

}  // namespace ecnlab
