#include "ecnlab/core.hpp"

#include <set>
#include <sstream>

#include "ecnlab/error.hpp"

namespace ecnlab {

const char* to_string(DatasetRole role) {
  switch (role) {
    case DatasetRole::corrupted: return "corrupted";
    case DatasetRole::gold: return "gold";
    case DatasetRole::test: return "test";
    case DatasetRole::clean: return "clean";
  }
  return "?";
}

DatasetRole role_from_string(const std::string& name) {
  if (name == "corrupted") return DatasetRole::corrupted;
  if (name == "gold") return DatasetRole::gold;
  if (name == "test") return DatasetRole::test;
  if (name == "clean") return DatasetRole::clean;
  throw ConfigError("unknown dataset role: " + name);
}

double corrupted_fraction(const CorruptionRecord& record) {
  std::uint64_t total = 0;
  std::uint64_t changed = 0;
  const Dataset& ds = record.corrupted;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::vector<int>& corrupted =
        ds.is_grid() ? ds.grids[i].labels : ds.sequences[i].labels;
    const std::vector<int>& truth = record.true_labels[i];
    for (std::size_t j = 0; j < corrupted.size(); ++j) {
      ++total;
      if (corrupted[j] != truth[j]) ++changed;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(changed) / static_cast<double>(total);
}

namespace {

void validate_tagset(const TagSet& ts, std::vector<Violation>& out) {
  if (ts.labels.empty()) {
    out.push_back({-1, -1, "tagset has no labels"});
    return;
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ts.labels.size(); ++i) {
    if (ts.labels[i].empty()) {
      out.push_back({-1, -1, "tagset label " + std::to_string(i) + " is empty"});
    }
    if (!seen.insert(ts.labels[i]).second) {
      out.push_back({-1, -1, "duplicate tagset label '" + ts.labels[i] + "'"});
    }
  }
  if (ts.background_index < 0 || ts.background_index >= ts.size()) {
    out.push_back({-1, -1, "background_index " + std::to_string(ts.background_index) +
                               " outside [0," + std::to_string(ts.size()) + ")"});
  }
}

}  // namespace

std::vector<Violation> validate_dataset(const Dataset& ds) {
  std::vector<Violation> out;
  validate_tagset(ds.tagset, out);
  const int n_labels = ds.tagset.size();

  if (ds.is_grid()) {
    if (!ds.sequences.empty()) {
      out.push_back({-1, -1, "grid dataset carries sequence samples"});
    }
    for (std::size_t i = 0; i < ds.grids.size(); ++i) {
      const GridSample& g = ds.grids[i];
      const auto si = static_cast<std::int64_t>(i);
      if (g.height <= 0 || g.width <= 0) {
        out.push_back({si, -1, "non-positive grid shape"});
        continue;
      }
      const auto expected = static_cast<std::size_t>(g.size());
      if (g.pixels.size() != expected || g.labels.size() != expected) {
        out.push_back({si, -1, "pixels/labels size does not match H*W"});
        continue;
      }
      for (int j = 0; j < g.size(); ++j) {
        for (double c : g.pixels[j]) {
          if (!(c >= 0.0 && c <= 1.0)) {
            out.push_back({si, j, "channel value outside [0,1]"});
            break;
          }
        }
        if (g.labels[j] < 0 || g.labels[j] >= n_labels) {
          out.push_back({si, j, "label index " + std::to_string(g.labels[j]) +
                                    " outside [0," + std::to_string(n_labels) + ")"});
        }
      }
    }
  } else {
    if (!ds.grids.empty()) {
      out.push_back({-1, -1, "sequence dataset carries grid samples"});
    }
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
      const SequenceSample& s = ds.sequences[i];
      const auto si = static_cast<std::int64_t>(i);
      if (s.tokens.empty()) {
        out.push_back({si, -1, "empty sample (d must be >= 1)"});
        continue;
      }
      if (s.features.size() != s.tokens.size() || s.labels.size() != s.tokens.size()) {
        out.push_back({si, -1, "length mismatch: tokens=" + std::to_string(s.tokens.size()) +
                                   " features=" + std::to_string(s.features.size()) +
                                   " labels=" + std::to_string(s.labels.size())});
        continue;
      }
      for (std::size_t j = 0; j < s.labels.size(); ++j) {
        if (s.labels[j] < 0 || s.labels[j] >= n_labels) {
          out.push_back({si, static_cast<std::int64_t>(j),
                         "label index " + std::to_string(s.labels[j]) + " outside [0," +
                             std::to_string(n_labels) + ")"});
        }
      }
    }
  }
  return out;
}

std::string format_violations(const std::vector<Violation>& violations) {
  std::ostringstream os;
  for (const Violation& v : violations) {
    os << "sample " << v.sample << " element " << v.element << ": " << v.message << "\n";
  }
  return os.str();
}

DatasetStats dataset_stats(const Dataset& ds) {
  const auto violations = validate_dataset(ds);
  if (!violations.empty()) {
    throw RunError("dataset_stats: invalid dataset:\n" + format_violations(violations));
  }
  DatasetStats stats;
  stats.label_counts.assign(ds.tagset.size(), 0);
  stats.sample_count = ds.size();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::vector<int>& labels =
        ds.is_grid() ? ds.grids[i].labels : ds.sequences[i].labels;
    for (int label : labels) {
      ++stats.label_counts[label];
      ++stats.total_elements;
    }
  }
  return stats;
}

}  // namespace ecnlab
