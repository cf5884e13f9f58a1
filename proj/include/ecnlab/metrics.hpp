#pragma once

#include <map>
#include <vector>

#include "ecnlab/core.hpp"

namespace ecnlab {

enum class Averaging { macro, weighted };

// Element-level per-class scores. Classes absent from both prediction and
// truth are skipped; the background class is skipped unless
// include_background is set. weighted averages by truth support (falling back
// to the unweighted mean when every included class has zero support); macro
// averages uniformly. A comparison with no eligible classes scores 1.
double f1_score(const Dataset& pred, const Dataset& truth, Averaging averaging,
                bool include_background = false);

double iou_score(const Dataset& pred, const Dataset& truth, Averaging averaging,
                 bool include_background = false);

// Per-class F1 (token-level), for the focus-class sweep. Classes absent from
// both sides are omitted from the map.
std::map<int, double> per_class_f1(const Dataset& pred, const Dataset& truth);

}  // namespace ecnlab
