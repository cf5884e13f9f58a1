#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace ecnlab {

// Small dense multilayer perceptron: ReLU hidden layers, softmax output,
// mean cross-entropy loss. Weights are seeded (Glorot-uniform via SplitMix64)
// and all math is single-threaded Eigen, so training is bit-reproducible.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int input_dim, const std::vector<int>& hidden, int output_dim, std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  const std::vector<int>& hidden_dims() const { return hidden_; }

  // Rows of X are samples; rows of the result are probability vectors.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  struct Gradient {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
  };

  // Mean cross-entropy of the labels under forward(x), with gradient.
  double loss_and_grad(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                       Gradient& grad) const;

  double loss(const Eigen::MatrixXd& x, const std::vector<int>& labels) const;

  // One SGD step on (x, labels); returns the pre-update loss.
  double train_step(const Eigen::MatrixXd& x, const std::vector<int>& labels, double lr);

  // Flat parameter view in a fixed order, for gradient checks and serialization.
  std::vector<double> params_flat() const;
  void set_params_flat(const std::vector<double>& flat);
  std::vector<double> grad_flat(const Gradient& grad) const;

  const std::vector<Eigen::MatrixXd>& weights() const { return w_; }
  const std::vector<Eigen::VectorXd>& biases() const { return b_; }

 private:
  int input_dim_ = 0;
  int output_dim_ = 0;
  std::vector<int> hidden_;
  std::vector<Eigen::MatrixXd> w_;  // layer l: (dims[l+1] x dims[l])
  std::vector<Eigen::VectorXd> b_;
};

}  // namespace ecnlab
