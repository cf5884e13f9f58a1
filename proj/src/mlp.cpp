#include "ecnlab/mlp.hpp"

#include <cmath>

#include "ecnlab/error.hpp"
#include "ecnlab/rng.hpp"

namespace ecnlab {

Mlp::Mlp(int input_dim, const std::vector<int>& hidden, int output_dim, std::uint64_t seed)
    : input_dim_(input_dim), output_dim_(output_dim), hidden_(hidden) {
  if (input_dim < 1 || output_dim < 1) throw ConfigError("mlp: non-positive layer size");
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int h : hidden) {
    if (h < 1) throw ConfigError("mlp: non-positive hidden size");
    dims.push_back(h);
  }
  dims.push_back(output_dim);

  SplitMix64 rng(derive_stream(seed, "mlp-init"));
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = s * (2.0 * rng.uniform() - 1.0);
    }
    w_.push_back(std::move(w));
    b_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
}

namespace {

// Row-wise softmax in place.
void softmax_rows(Eigen::MatrixXd& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - m).exp();
    z.row(i) /= z.row(i).sum();
  }
}

}  // namespace

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Eigen::MatrixXd z = a * w_[l].transpose();
    z.rowwise() += b_[l].transpose();
    if (l + 1 < w_.size()) {
      a = z.cwiseMax(0.0);
    } else {
      softmax_rows(z);
      a = std::move(z);
    }
  }
  return a;
}

double Mlp::loss_and_grad(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                          Gradient& grad) const {
  const Eigen::Index n = x.rows();
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw RunError("mlp: batch size mismatch");
  }

  std::vector<Eigen::MatrixXd> pre;   // pre-activation per layer
  std::vector<Eigen::MatrixXd> act;   // input of each layer
  act.push_back(x);
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Eigen::MatrixXd z = act.back() * w_[l].transpose();
    z.rowwise() += b_[l].transpose();
    pre.push_back(z);
    if (l + 1 < w_.size()) {
      act.push_back(z.cwiseMax(0.0));
    }
  }
  Eigen::MatrixXd probs = pre.back();
  softmax_rows(probs);

  double loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    loss -= std::log(std::max(probs(i, labels[i]), 1e-300));
  }
  loss /= static_cast<double>(n);

  grad.w.assign(w_.size(), Eigen::MatrixXd());
  grad.b.assign(b_.size(), Eigen::VectorXd());

  Eigen::MatrixXd delta = probs;
  for (Eigen::Index i = 0; i < n; ++i) delta(i, labels[i]) -= 1.0;
  delta /= static_cast<double>(n);

  for (int l = static_cast<int>(w_.size()) - 1; l >= 0; --l) {
    grad.w[l] = delta.transpose() * act[l];
    grad.b[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd upstream = delta * w_[l];
      delta = (pre[l - 1].array() > 0.0).cast<double>() * upstream.array();
    }
  }
  return loss;
}

double Mlp::loss(const Eigen::MatrixXd& x, const std::vector<int>& labels) const {
  const Eigen::MatrixXd probs = forward(x);
  double loss = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    loss -= std::log(std::max(probs(i, labels[i]), 1e-300));
  }
  return loss / static_cast<double>(probs.rows());
}

double Mlp::train_step(const Eigen::MatrixXd& x, const std::vector<int>& labels, double lr) {
  Gradient grad;
  const double loss = loss_and_grad(x, labels, grad);
  for (std::size_t l = 0; l < w_.size(); ++l) {
    w_[l] -= lr * grad.w[l];
    b_[l] -= lr * grad.b[l];
  }
  return loss;
}

std::vector<double> Mlp::params_flat() const {
  std::vector<double> out;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    for (Eigen::Index r = 0; r < w_[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < w_[l].cols(); ++c) out.push_back(w_[l](r, c));
    }
    for (Eigen::Index r = 0; r < b_[l].size(); ++r) out.push_back(b_[l](r));
  }
  return out;
}

void Mlp::set_params_flat(const std::vector<double>& flat) {
  std::size_t i = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    for (Eigen::Index r = 0; r < w_[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < w_[l].cols(); ++c) w_[l](r, c) = flat.at(i++);
    }
    for (Eigen::Index r = 0; r < b_[l].size(); ++r) b_[l](r) = flat.at(i++);
  }
  if (i != flat.size()) throw RunError("mlp: flat parameter size mismatch");
}

std::vector<double> Mlp::grad_flat(const Gradient& grad) const {
  std::vector<double> out;
  for (std::size_t l = 0; l < grad.w.size(); ++l) {
    for (Eigen::Index r = 0; r < grad.w[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < grad.w[l].cols(); ++c) out.push_back(grad.w[l](r, c));
    }
    for (Eigen::Index r = 0; r < grad.b[l].size(); ++r) out.push_back(grad.b[l](r));
  }
  return out;
}

}  // namespace ecnlab
