#include "ecop/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace ecop::ad {

int Tape::input(Eigen::VectorXd v) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(v);
  return push(std::move(n));
}

int Tape::affine(int x, int w_offset, int b_offset, int out_dim) {
  const Eigen::VectorXd& xv = nodes_[x].value;
  const int in_dim = static_cast<int>(xv.size());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
      params_->data() + w_offset, out_dim, in_dim);
  Eigen::Map<const Eigen::VectorXd> b(params_->data() + b_offset, out_dim);
  Node n;
  n.op = Op::kAffine;
  n.value = W * xv + b;
  n.parent = x;
  n.aux_offset = w_offset;
  n.aux_offset2 = b_offset;
  return push(std::move(n));
}

int Tape::tanh(int x) {
  Node n;
  n.op = Op::kTanh;
  n.value = nodes_[x].value.array().tanh();
  n.parent = x;
  return push(std::move(n));
}

int Tape::log_softmax_pick(int logits, int index) {
  const Eigen::VectorXd& z = nodes_[logits].value;
  double zmax = z.maxCoeff();
  Eigen::VectorXd ez = (z.array() - zmax).exp();
  double sum = ez.sum();
  Node n;
  n.op = Op::kLogSoftmaxPick;
  n.value.resize(1);
  n.value[0] = z[index] - zmax - std::log(sum);
  n.parent = logits;
  n.aux_index = index;
  n.saved = ez / sum;  // softmax probabilities
  return push(std::move(n));
}

int Tape::gaussian_log_prob(int mean, int log_std_offset, const Eigen::VectorXd& action) {
  const Eigen::VectorXd& mu = nodes_[mean].value;
  const int dim = static_cast<int>(mu.size());
  Eigen::Map<const Eigen::VectorXd> log_std(params_->data() + log_std_offset, dim);
  Eigen::VectorXd sigma = log_std.array().exp();
  Eigen::VectorXd z = (action - mu).array() / sigma.array();
  constexpr double kHalfLog2Pi = 0.9189385332046727;
  Node n;
  n.op = Op::kGaussianLogProb;
  n.value.resize(1);
  n.value[0] = -(0.5 * z.squaredNorm()) - log_std.sum() - dim * kHalfLog2Pi;
  n.parent = mean;
  n.aux_offset = log_std_offset;
  n.saved.resize(2 * dim);  // z and sigma, both needed backward
  n.saved.head(dim) = z;
  n.saved.tail(dim) = sigma;
  return push(std::move(n));
}

void Tape::backward(int output, double coeff, Eigen::VectorXd& grad) {
  if (nodes_[output].value.size() != 1)
    throw std::invalid_argument("backward: output node must be scalar");
  for (auto& n : nodes_) n.grad.setZero(n.value.size());
  nodes_[output].grad.resize(1);
  nodes_[output].grad[0] = coeff;

  for (int id = output; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0 || n.grad.isZero(0.0)) continue;
    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kAffine: {
        Node& x = nodes_[n.parent];
        const int out_dim = static_cast<int>(n.value.size());
        const int in_dim = static_cast<int>(x.value.size());
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            W(params_->data() + n.aux_offset, out_dim, in_dim);
        x.grad.noalias() += W.transpose() * n.grad;
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            dW(grad.data() + n.aux_offset, out_dim, in_dim);
        dW.noalias() += n.grad * x.value.transpose();
        grad.segment(n.aux_offset2, out_dim) += n.grad;
        break;
      }
      case Op::kTanh: {
        Node& x = nodes_[n.parent];
        x.grad.array() += (1.0 - n.value.array().square()) * n.grad.array();
        break;
      }
      case Op::kLogSoftmaxPick: {
        Node& x = nodes_[n.parent];
        double g = n.grad[0];
        x.grad -= g * n.saved;
        x.grad[n.aux_index] += g;
        break;
      }
      case Op::kGaussianLogProb: {
        Node& mu = nodes_[n.parent];
        const int dim = static_cast<int>(mu.value.size());
        double g = n.grad[0];
        Eigen::VectorXd z = n.saved.head(dim);
        Eigen::VectorXd sigma = n.saved.tail(dim);
        mu.grad.array() += g * z.array() / sigma.array();
        grad.segment(n.aux_offset, dim).array() += g * (z.array().square() - 1.0);
        break;
      }
    }
  }
}

}  // namespace ecop::ad
