#pragma once

#include <Eigen/Core>
#include <vector>

namespace ecop::ad {

// Minimal reverse-mode tape over vector-valued nodes. Parameters live in one
// flat vector owned by the caller; ops that read parameters take offsets into
// it, and backward() accumulates parameter gradients into a caller-provided
// flat vector of the same size. The tape is meant to be rebuilt per record
// (reset() keeps node capacity).
class Tape {
 public:
  explicit Tape(const Eigen::VectorXd& params) : params_(&params) {}

  void reset() { nodes_.clear(); }

  int input(Eigen::VectorXd v);

  // y = W x + b with W an out_dim x in_dim row-major block at w_offset and b
  // at b_offset.
  int affine(int x, int w_offset, int b_offset, int out_dim);

  int tanh(int x);

  // scalar log softmax(logits)[index]
  int log_softmax_pick(int logits, int index);

  // scalar sum_j of diagonal-gaussian log density; log stds are a parameter
  // block of the action dimension at log_std_offset
  int gaussian_log_prob(int mean, int log_std_offset, const Eigen::VectorXd& action);

  const Eigen::VectorXd& value(int id) const { return nodes_[id].value; }
  double scalar(int id) const { return nodes_[id].value[0]; }

  // Seeds d(output) = coeff and accumulates coeff * d(output)/d(params) into
  // grad. output must be a size-1 node.
  void backward(int output, double coeff, Eigen::VectorXd& grad);

 private:
  enum class Op { kInput, kAffine, kTanh, kLogSoftmaxPick, kGaussianLogProb };

  struct Node {
    Op op;
    Eigen::VectorXd value;
    Eigen::VectorXd grad;
    int parent = -1;
    int aux_offset = -1;   // w_offset / log_std_offset
    int aux_offset2 = -1;  // b_offset
    int aux_index = -1;    // picked action index
    Eigen::VectorXd saved;  // op-specific (softmax probs, gaussian z etc.)
  };

  int push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  const Eigen::VectorXd* params_;
  std::vector<Node> nodes_;
};

}  // namespace ecop::ad
