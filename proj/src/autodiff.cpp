#include "daf/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace daf::ad {

namespace {

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require_same_tape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.tape() == nullptr || a.tape() != b.tape())
    throw std::invalid_argument(std::string(op) +
                                ": operands live on different tapes");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require_same_tape(a, b, op);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

const Eigen::MatrixXd& Tensor::value() const {
  if (!tape_) throw std::logic_error("Tensor: empty handle");
  return tape_->value(id_);
}

const Eigen::MatrixXd& Tensor::grad() const {
  if (!tape_) throw std::logic_error("Tensor: empty handle");
  return tape_->grad(id_);
}

bool Tensor::requires_grad() const {
  return tape_ != nullptr && tape_->requires_grad(id_);
}

double Tensor::scalar() const {
  if (rows() != 1 || cols() != 1)
    throw std::invalid_argument("Tensor::scalar: tensor is " +
                                shape_str(*this) + ", not 1x1");
  return value()(0, 0);
}

Tensor Tape::leaf(Eigen::MatrixXd value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Tensor(this, static_cast<int>(nodes_.size() - 1));
}

Tensor Tape::emplace(Eigen::MatrixXd value, bool requires_grad,
                     Backprop backprop) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Tensor(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape() != this)
    throw std::invalid_argument("Tape::backward: loss from another tape");
  if (loss.rows() != 1 || loss.cols() != 1)
    throw std::invalid_argument("Tape::backward: loss must be scalar, got " +
                                std::to_string(loss.rows()) + "x" +
                                std::to_string(loss.cols()));
  for (auto& node : nodes_)
    node.grad = Eigen::MatrixXd::Zero(node.value.rows(), node.value.cols());
  nodes_[static_cast<size_t>(loss.id())].grad(0, 0) = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    Node& node = nodes_[static_cast<size_t>(i)];
    if (node.backprop && node.requires_grad) node.backprop(*this, i);
  }
}

void backward(const Tensor& loss) {
  if (!loss.tape()) throw std::invalid_argument("backward: empty tensor");
  loss.tape()->backward(loss);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "matmul");
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: shape mismatch " + shape_str(a) +
                                " vs " + shape_str(b));
  Tape& tape = *a.tape();
  const int ia = a.id(), ib = b.id();
  const bool rg = a.requires_grad() || b.requires_grad();
  return tape.emplace(a.value() * b.value(), rg, [ia, ib](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia).noalias() += g * t.value(ib).transpose();
    if (t.requires_grad(ib)) t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias_row) {
  require_same_tape(x, bias_row, "add_bias");
  if (bias_row.rows() != 1 || bias_row.cols() != x.cols())
    throw std::invalid_argument("add_bias: shape mismatch " + shape_str(x) +
                                " vs " + shape_str(bias_row));
  Tape& tape = *x.tape();
  const int ix = x.id(), ib = bias_row.id();
  const bool rg = x.requires_grad() || bias_row.requires_grad();
  Eigen::MatrixXd value = x.value();
  value.rowwise() += bias_row.value().row(0);
  return tape.emplace(std::move(value), rg, [ix, ib](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.grad(self);
    if (t.requires_grad(ix)) t.grad(ix) += g;
    if (t.requires_grad(ib)) t.grad(ib) += g.colwise().sum();
  });
}

Tensor relu(const Tensor& x) {
  if (!x.tape()) throw std::invalid_argument("relu: empty tensor");
  Tape& tape = *x.tape();
  const int ix = x.id();
  return tape.emplace(x.value().cwiseMax(0.0), x.requires_grad(),
                      [ix](Tape& t, int self) {
                        if (!t.requires_grad(ix)) return;
                        t.grad(ix).array() +=
                            t.grad(self).array() *
                            (t.value(ix).array() > 0.0).cast<double>();
                      });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "concat");
  if (a.rows() != b.rows())
    throw std::invalid_argument("concat: row mismatch " + shape_str(a) +
                                " vs " + shape_str(b));
  Tape& tape = *a.tape();
  const int ia = a.id(), ib = b.id();
  const Eigen::Index ca = a.cols(), cb = b.cols();
  Eigen::MatrixXd value(a.rows(), ca + cb);
  value.leftCols(ca) = a.value();
  value.rightCols(cb) = b.value();
  const bool rg = a.requires_grad() || b.requires_grad();
  return tape.emplace(std::move(value), rg, [ia, ib, ca, cb](Tape& t, int self) {
    const Eigen::MatrixXd& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g.leftCols(ca);
    if (t.requires_grad(ib)) t.grad(ib) += g.rightCols(cb);
  });
}

Tensor slice(const Tensor& x, Eigen::Index col0, Eigen::Index ncols) {
  if (!x.tape()) throw std::invalid_argument("slice: empty tensor");
  if (col0 < 0 || ncols < 0 || col0 + ncols > x.cols())
    throw std::invalid_argument(
        "slice: range [" + std::to_string(col0) + ", " +
        std::to_string(col0 + ncols) + ") out of " + shape_str(x));
  Tape& tape = *x.tape();
  const int ix = x.id();
  return tape.emplace(x.value().middleCols(col0, ncols), x.requires_grad(),
                      [ix, col0, ncols](Tape& t, int self) {
                        if (t.requires_grad(ix))
                          t.grad(ix).middleCols(col0, ncols) += t.grad(self);
                      });
}

Tensor mean(const Tensor& x) {
  if (!x.tape()) throw std::invalid_argument("mean: empty tensor");
  if (x.rows() == 0 || x.cols() == 0)
    throw std::invalid_argument("mean: empty matrix");
  Tape& tape = *x.tape();
  const int ix = x.id();
  const double inv = 1.0 / static_cast<double>(x.rows() * x.cols());
  Eigen::MatrixXd value(1, 1);
  value(0, 0) = x.value().sum() * inv;
  return tape.emplace(std::move(value), x.requires_grad(),
                      [ix, inv](Tape& t, int self) {
                        if (t.requires_grad(ix))
                          t.grad(ix).array() += t.grad(self)(0, 0) * inv;
                      });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tape& tape = *a.tape();
  const int ia = a.id(), ib = b.id();
  const bool rg = a.requires_grad() || b.requires_grad();
  return tape.emplace(a.value() + b.value(), rg, [ia, ib](Tape& t, int self) {
    if (t.requires_grad(ia)) t.grad(ia) += t.grad(self);
    if (t.requires_grad(ib)) t.grad(ib) += t.grad(self);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tape& tape = *a.tape();
  const int ia = a.id(), ib = b.id();
  const bool rg = a.requires_grad() || b.requires_grad();
  return tape.emplace(a.value() - b.value(), rg, [ia, ib](Tape& t, int self) {
    if (t.requires_grad(ia)) t.grad(ia) += t.grad(self);
    if (t.requires_grad(ib)) t.grad(ib) -= t.grad(self);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tape& tape = *a.tape();
  const int ia = a.id(), ib = b.id();
  const bool rg = a.requires_grad() || b.requires_grad();
  return tape.emplace(a.value().cwiseProduct(b.value()), rg,
                      [ia, ib](Tape& t, int self) {
                        const Eigen::MatrixXd& g = t.grad(self);
                        if (t.requires_grad(ia))
                          t.grad(ia).array() += g.array() * t.value(ib).array();
                        if (t.requires_grad(ib))
                          t.grad(ib).array() += g.array() * t.value(ia).array();
                      });
}

Tensor scale(const Tensor& x, double s) {
  if (!x.tape()) throw std::invalid_argument("scale: empty tensor");
  Tape& tape = *x.tape();
  const int ix = x.id();
  return tape.emplace(x.value() * s, x.requires_grad(),
                      [ix, s](Tape& t, int self) {
                        if (t.requires_grad(ix)) t.grad(ix) += s * t.grad(self);
                      });
}

Tensor exp(const Tensor& x) {
  if (!x.tape()) throw std::invalid_argument("exp: empty tensor");
  Tape& tape = *x.tape();
  const int ix = x.id();
  return tape.emplace(x.value().array().exp().matrix(), x.requires_grad(),
                      [ix](Tape& t, int self) {
                        if (t.requires_grad(ix))
                          t.grad(ix).array() +=
                              t.grad(self).array() * t.value(self).array();
                      });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (!x.tape()) throw std::invalid_argument("clamp: empty tensor");
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  Tape& tape = *x.tape();
  const int ix = x.id();
  return tape.emplace(x.value().cwiseMax(lo).cwiseMin(hi), x.requires_grad(),
                      [ix, lo, hi](Tape& t, int self) {
                        if (!t.requires_grad(ix)) return;
                        const auto& v = t.value(ix).array();
                        t.grad(ix).array() +=
                            t.grad(self).array() *
                            ((v > lo) && (v < hi)).cast<double>();
                      });
}

Tensor softmax_rows(const Tensor& logits) {
  if (!logits.tape())
    throw std::invalid_argument("softmax_rows: empty tensor");
  Tape& tape = *logits.tape();
  const int il = logits.id();
  Eigen::MatrixXd p = logits.value();
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double m = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return tape.emplace(std::move(p), logits.requires_grad(),
                      [il](Tape& t, int self) {
                        if (!t.requires_grad(il)) return;
                        const Eigen::MatrixXd& p = t.value(self);
                        const Eigen::MatrixXd& g = t.grad(self);
                        const Eigen::VectorXd dot =
                            (g.array() * p.array()).rowwise().sum();
                        t.grad(il).array() +=
                            p.array() * (g.array().colwise() - dot.array());
                      });
}

Tensor softmax_cross_entropy(const Tensor& logits,
                             const Eigen::VectorXi& labels) {
  if (!logits.tape())
    throw std::invalid_argument("softmax_cross_entropy: empty tensor");
  if (labels.size() != logits.rows())
    throw std::invalid_argument(
        "softmax_cross_entropy: " + std::to_string(labels.size()) +
        " labels for " + shape_str(logits));
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= logits.cols())
      throw std::invalid_argument(
          "softmax_cross_entropy: label " + std::to_string(labels[i]) +
          " out of [0, " + std::to_string(logits.cols()) + ")");

  Tape& tape = *logits.tape();
  const int il = logits.id();
  const Eigen::MatrixXd& x = logits.value();
  Eigen::MatrixXd probs(x.rows(), x.cols());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const Eigen::ArrayXd e = (x.row(r).array() - m).exp();
    const double sum = e.sum();
    probs.row(r) = (e / sum).matrix();
    loss += std::log(sum) + m - x(r, labels[r]);
  }
  loss /= static_cast<double>(x.rows());
  Eigen::MatrixXd value(1, 1);
  value(0, 0) = loss;
  const Eigen::VectorXi labels_copy = labels;
  return tape.emplace(
      std::move(value), logits.requires_grad(),
      [il, probs = std::move(probs), labels_copy](Tape& t, int self) {
        if (!t.requires_grad(il)) return;
        const double g = t.grad(self)(0, 0) / probs.rows();
        Eigen::MatrixXd d = probs;
        for (Eigen::Index r = 0; r < d.rows(); ++r)
          d(r, labels_copy[r]) -= 1.0;
        t.grad(il) += g * d;
      });
}

Tensor mse(const Tensor& pred, const Tensor& target, MseReduction reduction) {
  require_same_shape(pred, target, "mse");
  Tape& tape = *pred.tape();
  const int ip = pred.id(), it = target.id();
  const Eigen::MatrixXd diff = pred.value() - target.value();
  const double factor = reduction == MseReduction::kHalfSum
                            ? 0.5
                            : 1.0 / static_cast<double>(pred.cols());
  Eigen::MatrixXd value(1, 1);
  value(0, 0) = factor * diff.squaredNorm();
  const bool rg = pred.requires_grad() || target.requires_grad();
  const double gscale = reduction == MseReduction::kHalfSum ? 1.0 : 2.0 * factor;
  return tape.emplace(std::move(value), rg,
                      [ip, it, diff, gscale](Tape& t, int self) {
                        const double g = t.grad(self)(0, 0) * gscale;
                        if (t.requires_grad(ip)) t.grad(ip) += g * diff;
                        if (t.requires_grad(it)) t.grad(it) -= g * diff;
                      });
}

Tensor kl_diag_gaussian(const Tensor& mu, const Tensor& log_sigma) {
  require_same_shape(mu, log_sigma, "kl_diag_gaussian");
  Tape& tape = *mu.tape();
  const int im = mu.id(), is = log_sigma.id();
  const Eigen::ArrayXXd m = mu.value().array();
  const Eigen::ArrayXXd ls = log_sigma.value().array();
  const Eigen::ArrayXXd var = (2.0 * ls).exp();
  const double rows = static_cast<double>(mu.rows());
  Eigen::MatrixXd value(1, 1);
  value(0, 0) = 0.5 * (m.square() + var - 1.0 - 2.0 * ls).sum() / rows;
  const bool rg = mu.requires_grad() || log_sigma.requires_grad();
  return tape.emplace(std::move(value), rg,
                      [im, is, rows](Tape& t, int self) {
                        const double g = t.grad(self)(0, 0) / rows;
                        if (t.requires_grad(im))
                          t.grad(im) += g * t.value(im);
                        if (t.requires_grad(is))
                          t.grad(is).array() +=
                              g * ((2.0 * t.value(is).array()).exp() - 1.0);
                      });
}

Tensor reparameterize_with(const Tensor& mu, const Tensor& log_sigma,
                           Eigen::MatrixXd eps) {
  require_same_shape(mu, log_sigma, "reparameterize");
  if (eps.rows() != mu.rows() || eps.cols() != mu.cols())
    throw std::invalid_argument("reparameterize: eps shape mismatch " +
                                shape_str(mu));
  Tape& tape = *mu.tape();
  const int im = mu.id(), is = log_sigma.id();
  const Eigen::MatrixXd sigma = log_sigma.value().array().exp().matrix();
  Eigen::MatrixXd value = mu.value() + sigma.cwiseProduct(eps);
  const bool rg = mu.requires_grad() || log_sigma.requires_grad();
  return tape.emplace(std::move(value), rg,
                      [im, is, eps = std::move(eps), sigma](Tape& t, int self) {
                        const Eigen::MatrixXd& g = t.grad(self);
                        if (t.requires_grad(im)) t.grad(im) += g;
                        if (t.requires_grad(is))
                          t.grad(is).array() +=
                              g.array() * sigma.array() * eps.array();
                      });
}

Tensor reparameterize(const Tensor& mu, const Tensor& log_sigma, Rng& rng) {
  Eigen::MatrixXd eps(mu.rows(), mu.cols());
  for (Eigen::Index r = 0; r < eps.rows(); ++r)
    for (Eigen::Index c = 0; c < eps.cols(); ++c) eps(r, c) = rng.normal();
  return reparameterize_with(mu, log_sigma, std::move(eps));
}

void AdamState::initialize(const std::vector<Eigen::MatrixXd*>& params) {
  step = 0;
  m.clear();
  v.clear();
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto* p : params) {
    m.emplace_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    v.emplace_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
  }
}

void adam_step(const std::vector<Eigen::MatrixXd*>& params,
               const std::vector<const Eigen::MatrixXd*>& grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: params/grads size mismatch");
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state not initialized");
  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Eigen::ArrayXXd g = grads[i]->array();
    state.m[i] = b1 * state.m[i].array() + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i].array() + (1.0 - b2) * g.square();
    const Eigen::ArrayXXd mhat = state.m[i].array() / c1;
    const Eigen::ArrayXXd vhat = state.v[i].array() / c2;
    params[i]->array() -= lr * mhat / (vhat.sqrt() + state.epsilon);
  }
}

}  // namespace daf::ad
