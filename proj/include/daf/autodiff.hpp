#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "daf/rng.hpp"

namespace daf::ad {

class Tape;

/// Handle to a node on a Tape. Values are dense matrices: rows index batch
/// examples, columns index features; scalars are 1x1.
class Tensor {
 public:
  Tensor() = default;

  const Eigen::MatrixXd& value() const;
  /// Valid after Tape::backward; zero matrix for untouched nodes.
  const Eigen::MatrixXd& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;
  double scalar() const;  // value()(0, 0); requires a 1x1 tensor

  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Records a computation, one node per op, in creation order (which is a
/// topological order). backward() visits nodes exactly once, in reverse.
class Tape {
 public:
  /// Backprop closures receive the tape and the id of their own node.
  using Backprop = std::function<void(Tape&, int)>;

  Tensor leaf(Eigen::MatrixXd value, bool requires_grad = false);

  /// Reverse accumulation from a scalar loss into every node that
  /// requires gradients. Throws std::invalid_argument on non-scalars.
  void backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }

  // Op-construction interface used by the free functions below.
  Tensor emplace(Eigen::MatrixXd value, bool requires_grad,
                 Backprop backprop);
  const Eigen::MatrixXd& value(int id) const {
    return nodes_[static_cast<size_t>(id)].value;
  }
  Eigen::MatrixXd& grad(int id) { return nodes_[static_cast<size_t>(id)].grad; }
  const Eigen::MatrixXd& grad(int id) const {
    return nodes_[static_cast<size_t>(id)].grad;
  }
  bool requires_grad(int id) const {
    return nodes_[static_cast<size_t>(id)].requires_grad;
  }

 private:
  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    bool requires_grad = false;
    Backprop backprop;
  };
  std::vector<Node> nodes_;
};

// Core ops. All validate shapes and name both operands on mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add_bias(const Tensor& x, const Tensor& bias_row);
Tensor relu(const Tensor& x);
Tensor concat(const Tensor& a, const Tensor& b);  // along columns
Tensor slice(const Tensor& x, Eigen::Index col0, Eigen::Index ncols);
Tensor mean(const Tensor& x);  // over all elements, 1x1 result
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& x, double s);
Tensor exp(const Tensor& x);
/// Hard clamp; gradient passes only strictly inside (lo, hi).
Tensor clamp(const Tensor& x, double lo, double hi);
Tensor softmax_rows(const Tensor& logits);

/// Mean over rows of -log softmax(logits)[label]; max-stabilized.
/// Labels must lie in [0, cols).
Tensor softmax_cross_entropy(const Tensor& logits,
                             const Eigen::VectorXi& labels);

enum class MseReduction {
  kHalfSum,      // 1/2 * sum of squared differences
  kMeanOverDim,  // sum of squared differences / columns
};
Tensor mse(const Tensor& pred, const Tensor& target, MseReduction reduction);

/// Per-row sum of 1/2 (mu^2 + sigma^2 - 1 - ln sigma^2), sigma = e^ls,
/// averaged over rows.
Tensor kl_diag_gaussian(const Tensor& mu, const Tensor& log_sigma);

/// z = mu + exp(log_sigma) * eps with eps ~ N(0, I) drawn from rng.
/// Gradients flow to mu and log_sigma only.
Tensor reparameterize(const Tensor& mu, const Tensor& log_sigma, Rng& rng);

/// Same with caller-provided standard-normal draws.
Tensor reparameterize_with(const Tensor& mu, const Tensor& log_sigma,
                           Eigen::MatrixXd eps);

void backward(const Tensor& loss);

/// Adam with bias correction over a flat parameter list.
struct AdamState {
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;

  void initialize(const std::vector<Eigen::MatrixXd*>& params);
};

void adam_step(const std::vector<Eigen::MatrixXd*>& params,
               const std::vector<const Eigen::MatrixXd*>& grads,
               AdamState& state, double lr);

}  // namespace daf::ad
