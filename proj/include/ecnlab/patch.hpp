#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ecnlab/core.hpp"
#include "ecnlab/mlp.hpp"

// Per-pixel classifier over a w x w color window around each target pixel,
// the grid-side base model. Windows use symmetric reflection padding at the
// image border. Odd windows are centred; an even window w covers offsets
// -(w-1)/2 .. w/2 (one extra row/column toward the bottom-right).

namespace ecnlab {

struct PatchTrainConfig {
  int window = 9;
  std::vector<int> hidden = {32};
  int steps = 2500;       // S1
  int batch_size = 64;    // B1 (pixels per step)
  double learning_rate = 0.08;
  std::uint64_t seed = 1;
};

struct PatchClassifier {
  int window = 9;
  TagSet tagset;
  Mlp net;
};

// Mirror index into [0,n): reflection keeps the edge pixel.
int reflect_index(int i, int n);

// Window offset range for a w-wide window: lo = -(w-1)/2, hi = w/2 inclusive.
int window_lo(int window);
int window_hi(int window);

// Appends the w x w x 3 color window at (row,col), row-major, channels
// innermost.
void append_pixel_window(const GridSample& g, int row, int col, int window,
                         std::vector<double>& out);

// Minibatch SGD on cross-entropy over uniformly sampled pixels.
PatchClassifier patch_train(const Dataset& grids, const PatchTrainConfig& cfg,
                            std::vector<double>* loss_history = nullptr);

// (H*W) x K matrix of per-pixel label distributions, row-major pixels.
Eigen::MatrixXd patch_predict(const PatchClassifier& model, const GridSample& grid);

// Per-pixel argmax labels (ties to the lowest label index).
std::vector<int> patch_predict_labels(const PatchClassifier& model, const GridSample& grid);
std::vector<int> argmax_rows(const Eigen::MatrixXd& probs);

}  // namespace ecnlab
