#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

// Core data model: element-labelled samples (token sequences and pixel
// grids), label sets, datasets with a split role, and the corruption record
// that pairs a corrupted dataset with its hidden true labels.
//
// All types are plain values and immutable by convention after construction;
// they are safe to share read-only across threads.

namespace ecnlab {

// Ordered label vocabulary. background_index names the outside / unannotated
// class (O for sequences, "other" for grids).
struct TagSet {
  std::vector<std::string> labels;
  int background_index = 0;

  int size() const { return static_cast<int>(labels.size()); }

  // Index of `name`, or -1.
  int index_of(const std::string& name) const {
    for (int i = 0; i < size(); ++i) {
      if (labels[i] == name) return i;
    }
    return -1;
  }

  bool operator==(const TagSet&) const = default;
};

// Per-token feature map. Values are kept as canonical strings; numeric
// features are stored in decimal form. std::map keeps serialization order
// deterministic.
using FeatureMap = std::map<std::string, std::string>;

struct SequenceSample {
  std::vector<std::string> tokens;
  std::vector<FeatureMap> features;  // same length as tokens; maps may be empty
  std::vector<int> labels;           // indices into the dataset TagSet

  int length() const { return static_cast<int>(tokens.size()); }

  bool operator==(const SequenceSample&) const = default;
};

struct GridSample {
  int height = 0;
  int width = 0;
  std::vector<std::array<double, 3>> pixels;  // row-major H*W, channels in [0,1]
  std::vector<int> labels;                    // row-major H*W

  int size() const { return height * width; }
  int at(int row, int col) const { return row * width + col; }

  bool operator==(const GridSample&) const = default;
};

enum class DataKind { sequence, grid };

enum class DatasetRole { corrupted, gold, test, clean };

const char* to_string(DatasetRole role);
DatasetRole role_from_string(const std::string& name);

struct Dataset {
  TagSet tagset;
  DataKind kind = DataKind::sequence;
  DatasetRole role = DatasetRole::corrupted;
  std::vector<SequenceSample> sequences;
  std::vector<GridSample> grids;

  bool is_grid() const { return kind == DataKind::grid; }
  std::size_t size() const { return is_grid() ? grids.size() : sequences.size(); }

  // Number of elements (tokens or pixels) in sample i.
  int elements(std::size_t i) const {
    return is_grid() ? grids[i].size() : sequences[i].length();
  }

  bool operator==(const Dataset&) const = default;
};

// A corrupted dataset paired element-wise with the hidden true labels,
// plus a digest identifying exactly which corruption produced it.
struct CorruptionRecord {
  Dataset corrupted;                          // role == corrupted
  std::vector<std::vector<int>> true_labels;  // shape-matches corrupted labels
  std::string spec_digest;

  bool operator==(const CorruptionRecord&) const = default;
};

// Fraction of elements whose corrupted label differs from the true label.
double corrupted_fraction(const CorruptionRecord& record);

// One invariant violation. sample/element are -1 for dataset-level problems.
struct Violation {
  std::int64_t sample = -1;
  std::int64_t element = -1;
  std::string message;
};

// Checks every invariant of the dataset and its tagset. Violations are data,
// not failures: the list is empty iff the dataset is valid.
std::vector<Violation> validate_dataset(const Dataset& ds);

std::string format_violations(const std::vector<Violation>& violations);

struct DatasetStats {
  std::vector<std::uint64_t> label_counts;  // indexed by label
  std::size_t sample_count = 0;
  std::uint64_t total_elements = 0;
};

// Per-label element counts. Throws RunError with the validation report if the
// dataset is invalid.
DatasetStats dataset_stats(const Dataset& ds);

}  // namespace ecnlab
