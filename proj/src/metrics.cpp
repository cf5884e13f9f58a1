#include "ecnlab/metrics.hpp"

#include <cstdint>

#include "ecnlab/error.hpp"

namespace ecnlab {

namespace {

struct ClassCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t support() const { return tp + fn; }
  std::uint64_t predicted() const { return tp + fp; }
};

std::vector<ClassCounts> confusion(const Dataset& pred, const Dataset& truth) {
  if (pred.kind != truth.kind || pred.tagset != truth.tagset) {
    throw RunError("metrics: datasets disagree on kind or tagset");
  }
  if (pred.size() != truth.size()) {
    throw RunError("metrics: sample count mismatch");
  }
  std::vector<ClassCounts> counts(pred.tagset.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::vector<int>& p = pred.is_grid() ? pred.grids[i].labels : pred.sequences[i].labels;
    const std::vector<int>& t =
        truth.is_grid() ? truth.grids[i].labels : truth.sequences[i].labels;
    if (p.size() != t.size()) {
      throw RunError("metrics: element count mismatch at sample " + std::to_string(i));
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p[j] == t[j]) {
        ++counts[p[j]].tp;
      } else {
        ++counts[p[j]].fp;
        ++counts[t[j]].fn;
      }
    }
  }
  return counts;
}

double average(const std::vector<ClassCounts>& counts, const std::vector<double>& class_scores,
               Averaging averaging, bool include_background, int background) {
  double weighted_sum = 0, weight_total = 0;
  double plain_sum = 0;
  int included = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (!include_background && static_cast<int>(c) == background) continue;
    if (counts[c].support() == 0 && counts[c].predicted() == 0) continue;  // absent class
    ++included;
    plain_sum += class_scores[c];
    weighted_sum += static_cast<double>(counts[c].support()) * class_scores[c];
    weight_total += static_cast<double>(counts[c].support());
  }
  if (included == 0) return 1.0;  // nothing to find, nothing predicted
  if (averaging == Averaging::macro || weight_total == 0.0) {
    return plain_sum / included;
  }
  return weighted_sum / weight_total;
}

}  // namespace

double f1_score(const Dataset& pred, const Dataset& truth, Averaging averaging,
                bool include_background) {
  const auto counts = confusion(pred, truth);
  std::vector<double> f1(counts.size(), 0.0);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double denom = static_cast<double>(2 * counts[c].tp + counts[c].fp + counts[c].fn);
    f1[c] = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(counts[c].tp) / denom;
  }
  return average(counts, f1, averaging, include_background, truth.tagset.background_index);
}

double iou_score(const Dataset& pred, const Dataset& truth, Averaging averaging,
                 bool include_background) {
  const auto counts = confusion(pred, truth);
  std::vector<double> iou(counts.size(), 0.0);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double uni = static_cast<double>(counts[c].tp + counts[c].fp + counts[c].fn);
    iou[c] = uni == 0.0 ? 0.0 : static_cast<double>(counts[c].tp) / uni;
  }
  return average(counts, iou, averaging, include_background, truth.tagset.background_index);
}

std::map<int, double> per_class_f1(const Dataset& pred, const Dataset& truth) {
  const auto counts = confusion(pred, truth);
  std::map<int, double> out;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c].support() == 0 && counts[c].predicted() == 0) continue;
    const double denom = static_cast<double>(2 * counts[c].tp + counts[c].fp + counts[c].fn);
    out[static_cast<int>(c)] = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(counts[c].tp) / denom;
  }
  return out;
}

}  // namespace ecnlab
