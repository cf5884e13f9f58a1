#include "ecnlab/patch.hpp"

#include <algorithm>

#include "ecnlab/error.hpp"
#include "ecnlab/rng.hpp"

namespace ecnlab {

int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

int window_lo(int window) { return -((window - 1) / 2); }
int window_hi(int window) { return window / 2; }

void append_pixel_window(const GridSample& g, int row, int col, int window,
                         std::vector<double>& out) {
  for (int dr = window_lo(window); dr <= window_hi(window); ++dr) {
    const int r = reflect_index(row + dr, g.height);
    for (int dc = window_lo(window); dc <= window_hi(window); ++dc) {
      const int c = reflect_index(col + dc, g.width);
      const auto& px = g.pixels[g.at(r, c)];
      out.push_back(px[0]);
      out.push_back(px[1]);
      out.push_back(px[2]);
    }
  }
}

PatchClassifier patch_train(const Dataset& grids, const PatchTrainConfig& cfg,
                            std::vector<double>* loss_history) {
  if (!grids.is_grid()) throw RunError("patch_train: expected a grid dataset");
  if (grids.grids.empty()) throw RunError("patch_train: empty dataset");
  if (cfg.window < 1) throw ConfigError("patch_train: window must be >= 1");
  if (cfg.steps < 1 || cfg.batch_size < 1) throw ConfigError("patch_train: steps/batch >= 1");
  for (const GridSample& g : grids.grids) {
    if (window_hi(cfg.window) >= std::min(g.height, g.width)) {
      throw ConfigError("patch_train: window does not fit the grid with reflection");
    }
  }

  const int k = grids.tagset.size();
  const int input_dim = 3 * cfg.window * cfg.window;
  PatchClassifier model{cfg.window, grids.tagset, Mlp(input_dim, cfg.hidden, k, cfg.seed)};

  SplitMix64 rng(derive_stream(cfg.seed, "patch-batches"));
  Eigen::MatrixXd x(cfg.batch_size, input_dim);
  std::vector<int> y(cfg.batch_size);
  std::vector<double> buffer;
  buffer.reserve(input_dim);

  for (int step = 0; step < cfg.steps; ++step) {
    for (int b = 0; b < cfg.batch_size; ++b) {
      const GridSample& g = grids.grids[rng.below(grids.grids.size())];
      const int row = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.height)));
      const int col = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.width)));
      buffer.clear();
      append_pixel_window(g, row, col, cfg.window, buffer);
      for (int i = 0; i < input_dim; ++i) x(b, i) = buffer[i];
      y[b] = g.labels[g.at(row, col)];
    }
    const double loss = model.net.train_step(x, y, cfg.learning_rate);
    if (loss_history) loss_history->push_back(loss);
  }
  return model;
}

Eigen::MatrixXd patch_predict(const PatchClassifier& model, const GridSample& grid) {
  const int input_dim = 3 * model.window * model.window;
  Eigen::MatrixXd x(grid.size(), input_dim);
  std::vector<double> buffer;
  buffer.reserve(input_dim);
  for (int row = 0; row < grid.height; ++row) {
    for (int col = 0; col < grid.width; ++col) {
      buffer.clear();
      append_pixel_window(grid, row, col, model.window, buffer);
      for (int i = 0; i < input_dim; ++i) x(grid.at(row, col), i) = buffer[i];
    }
  }
  return model.net.forward(x);
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& probs) {
  std::vector<int> labels(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    int pick = 0;
    double best = probs(i, 0);
    for (Eigen::Index l = 1; l < probs.cols(); ++l) {
      if (probs(i, l) > best) {
        best = probs(i, l);
        pick = static_cast<int>(l);
      }
    }
    labels[i] = pick;
  }
  return labels;
}

std::vector<int> patch_predict_labels(const PatchClassifier& model, const GridSample& grid) {
  return argmax_rows(patch_predict(model, grid));
}

}  // namespace ecnlab
