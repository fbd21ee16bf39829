#include "dali/autodiff.hpp"

#include <cmath>
#include <string>

#include "dali/errors.hpp"
#include "dali/kernels.hpp"

namespace dali::ad {

namespace {

enum OpKind : int {
  kLeaf = 0,
  kAffine,
  kAct,
  kAdd,
  kSub,
  kMul,
  kAddScalar,
  kMulScalar,
  kClamp,
  kSliceCols,
  kReduce,
};

void require_same_tape(Var a, Var b, const char* op) {
  if (a.tape() != b.tape())
    throw ContractError(std::string(op) + ": operands belong to different tapes");
}

void require_same_shape(const Array& a, const Array& b, const char* op) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
}

}  // namespace

struct OpBuilder {
  using Node = Tape::Node;
  static int push(Tape& t, Node n) { return t.push(std::move(n)); }
  static Node& node(Tape& t, int id) { return t.node(id); }
  static Var var(Tape& t, int id) { return Var(&t, id); }
};

const Array& Var::value() const { return tape_->node(id_).value; }

const Array& Var::grad() const {
  Tape::Node& n = tape_->node(id_);
  if (n.grad.empty() && !n.value.empty())
    n.grad = Array::zeros(n.value.rows(), n.value.cols());
  return n.grad;
}

int Tape::push(Node n) {
  if (backward_run_)
    throw StateError("tape: cannot add nodes after backward; build a fresh tape");
  // grad buffers are materialized lazily (backward or first access)
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::leaf(Array value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.op = kLeaf;
  n.requires_grad = requires_grad;
  const int id = push(std::move(n));
  return Var(this, id);
}

Var affine(Var x, Var w, Var b) {
  require_same_tape(x, w, "affine");
  require_same_tape(x, b, "affine");
  Tape& t = *x.tape();
  const Array& xv = x.value();
  const Array& wv = w.value();
  const Array& bv = b.value();
  if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols())
    throw DimensionError("affine: x" + xv.shape_str() + " * w" + wv.shape_str() + " + b" +
                         bv.shape_str());
  OpBuilder::Node n;
  n.value = Array::uninit(xv.rows(), wv.cols());
  kernels::matmul(xv.data(), wv.data(), n.value.data(), xv.rows(), xv.cols(), wv.cols());
  kernels::add_row_vector(n.value.data(), bv.data(), n.value.rows(), n.value.cols());
  n.op = kAffine;
  n.parents = {x.id(), w.id(), b.id()};
  n.requires_grad = OpBuilder::node(t, x.id()).requires_grad ||
                    OpBuilder::node(t, w.id()).requires_grad ||
                    OpBuilder::node(t, b.id()).requires_grad;
  return OpBuilder::var(t, OpBuilder::push(t, std::move(n)));
}

Var activation(Var x, Activation a) {
  Tape& t = *x.tape();
  const Array& xv = x.value();
  OpBuilder::Node n;
  n.value = Array::uninit(xv.rows(), xv.cols());
  const std::size_t len = xv.size();
  switch (a.kind) {
    case ActKind::identity:
      n.value = xv;
      break;
    case ActKind::relu:
      kernels::relu_fwd(xv.data(), n.value.data(), len);
      break;
    case ActKind::leaky_relu:
      kernels::leaky_relu_fwd(xv.data(), n.value.data(), a.alpha, len);
      break;
    case ActKind::tanh:
      for (std::size_t i = 0; i < len; ++i) n.value[i] = std::tanh(xv[i]);
      break;
    case ActKind::sigmoid:
      for (std::size_t i = 0; i < len; ++i) {
        const double v = xv[i];
        n.value[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                              : std::exp(v) / (1.0 + std::exp(v));
      }
      break;
    case ActKind::exp:
      for (std::size_t i = 0; i < len; ++i) n.value[i] = std::exp(xv[i]);
      break;
    case ActKind::log:
      for (std::size_t i = 0; i < len; ++i) {
        if (!(xv[i] > 0.0))
          throw DomainError("log: non-positive entry " + std::to_string(xv[i]) + " at index (" +
                            std::to_string(i / xv.cols()) + "," + std::to_string(i % xv.cols()) +
                            ")");
        n.value[i] = std::log(xv[i]);
      }
      break;
    case ActKind::square:
      for (std::size_t i = 0; i < len; ++i) n.value[i] = xv[i] * xv[i];
      break;
    case ActKind::negate:
      for (std::size_t i = 0; i < len; ++i) n.value[i] = -xv[i];
      break;
  }
  n.op = kAct;
  n.parents[0] = x.id();
  n.i0 = static_cast<int>(a.kind);
  n.d0 = a.alpha;
  n.requires_grad = OpBuilder::node(t, x.id()).requires_grad;
  return OpBuilder::var(t, OpBuilder::push(t, std::move(n)));
}

namespace {

Var binary(Var a, Var b, int op, const char* name) {
  require_same_tape(a, b, name);
  Tape& t = *a.tape();
  const Array& av = a.value();
  const Array& bv = b.value();
  require_same_shape(av, bv, name);
  Array out = Array::uninit(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) {
    switch (op) {
      case kAdd: out[i] = av[i] + bv[i]; break;
      case kSub: out[i] = av[i] - bv[i]; break;
      default: out[i] = av[i] * bv[i]; break;
    }
  }
  OpBuilder::Node n;
  n.value = std::move(out);
  n.op = op;
  n.parents = {a.id(), b.id(), -1};
  n.requires_grad = OpBuilder::node(t, a.id()).requires_grad || OpBuilder::node(t, b.id()).requires_grad;
  return OpBuilder::var(t, OpBuilder::push(t, std::move(n)));
}

}  // namespace

Var add(Var a, Var b) { return binary(a, b, kAdd, "add"); }
Var sub(Var a, Var b) { return binary(a, b, kSub, "sub"); }
Var mul(Var a, Var b) { return binary(a, b, kMul, "mul"); }

Var add_scalar(Var x, double c) {
  Tape& t = *x.tape();
  const Array& xv = x.value();
  OpBuilder::Node n;
  n.value = Array::uninit(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) n.value[i] = xv[i] + c;
  n.op = kAddScalar;
  n.parents[0] = x.id();
  n.d0 = c;
  n.requires_grad = OpBuilder::node(t, x.id()).requires_grad;
  return OpBuilder::var(t, OpBuilder::push(t, std::move(n)));
}

Var mul_scalar(Var x, double c) {
  Tape& t = *x.tape();
  const Array& xv = x.value();
  OpBuilder::Node n;
  n.value = Array::uninit(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) n.value[i] = xv[i] * c;
  n.op = kMulScalar;
  n.parents[0] = x.id();
  n.d0 = c;
  n.requires_grad = OpBuilder::node(t, x.id()).requires_grad;
  return OpBuilder::var(t, OpBuilder::push(t, std::move(n)));
}

Var clamp(Var x, double lo, double hi) {
  if (!(lo <= hi)) throw ContractError("clamp: lo > hi");
  Tape& t = *x.tape();
  const Array& xv = x.value();
  OpBuilder::Node n;
  n.value = Array::uninit(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    n.value[i] = xv[i] < lo ? lo : (xv[i] > hi ? hi : xv[i]);
  }
  n.op = kClamp;
  n.parents[0] = x.id();
  n.d0 = lo;
  n.d1 = hi;
  n.requires_grad = OpBuilder::node(t, x.id()).requires_grad;
  return OpBuilder::var(t, OpBuilder::push(t, std::move(n)));
}

Var slice_cols(Var x, int c0, int c1) {
  Tape& t = *x.tape();
  const Array& xv = x.value();
  if (c0 < 0 || c1 <= c0 || c1 > xv.cols())
    throw DimensionError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                         ") out of range for " + xv.shape_str());
  OpBuilder::Node n;
  n.value = Array::uninit(xv.rows(), c1 - c0);
  for (int i = 0; i < xv.rows(); ++i)
    for (int j = c0; j < c1; ++j) n.value.at(i, j - c0) = xv.at(i, j);
  n.op = kSliceCols;
  n.parents[0] = x.id();
  n.i0 = c0;
  n.i1 = c1;
  n.requires_grad = OpBuilder::node(t, x.id()).requires_grad;
  return OpBuilder::var(t, OpBuilder::push(t, std::move(n)));
}

Var reduce(Var x, bool mean, Axis axis) {
  Tape& t = *x.tape();
  const Array& xv = x.value();
  OpBuilder::Node n;
  if (axis == Axis::all) {
    n.value = Array::uninit(1, 1);
    const double s = kernels::reduce_sum(xv.data(), xv.size());
    n.value[0] = mean ? s / static_cast<double>(xv.size() > 0 ? xv.size() : 1) : s;
  } else {
    n.value = Array::uninit(xv.rows(), 1);
    for (int i = 0; i < xv.rows(); ++i) {
      const double s = kernels::reduce_sum(xv.data() + static_cast<std::size_t>(i) * xv.cols(),
                                           xv.cols());
      n.value.at(i, 0) = mean ? s / static_cast<double>(xv.cols() > 0 ? xv.cols() : 1) : s;
    }
  }
  n.op = kReduce;
  n.parents[0] = x.id();
  n.i0 = mean ? 1 : 0;
  n.i1 = axis == Axis::rows ? 1 : 0;
  n.requires_grad = OpBuilder::node(t, x.id()).requires_grad;
  return OpBuilder::var(t, OpBuilder::push(t, std::move(n)));
}

void Tape::backward_node(int id) {
  Node& n = node(id);
  const Array& g = n.grad;
  switch (n.op) {
    case kLeaf:
      break;
    case kAffine: {
      Node& x = node(n.parents[0]);
      Node& w = node(n.parents[1]);
      Node& b = node(n.parents[2]);
      // scratch for the transposed operand, reused across calls
      thread_local std::vector<double> scratch;
      if (x.requires_grad) {
        // dx += g * w^T
        scratch.resize(w.value.size());
        kernels::transpose(w.value.data(), scratch.data(), w.value.rows(), w.value.cols());
        kernels::matmul(g.data(), scratch.data(), x.grad.data(), g.rows(), g.cols(),
                        w.value.rows(), true);
      }
      if (w.requires_grad) {
        // dw += x^T * g
        scratch.resize(x.value.size());
        kernels::transpose(x.value.data(), scratch.data(), x.value.rows(), x.value.cols());
        kernels::matmul(scratch.data(), g.data(), w.grad.data(), x.value.cols(), x.value.rows(),
                        g.cols(), true);
      }
      if (b.requires_grad) {
        kernels::col_sum_acc(g.data(), b.grad.data(), g.rows(), g.cols());
      }
      break;
    }
    case kAct: {
      Node& x = node(n.parents[0]);
      if (!x.requires_grad) break;
      const std::size_t len = g.size();
      switch (static_cast<ActKind>(n.i0)) {
        case ActKind::identity:
          kernels::axpy(x.grad.data(), 1.0, g.data(), len);
          break;
        case ActKind::relu:
          kernels::relu_bwd_acc(x.value.data(), g.data(), x.grad.data(), len);
          break;
        case ActKind::leaky_relu:
          kernels::leaky_relu_bwd_acc(x.value.data(), g.data(), x.grad.data(), n.d0, len);
          break;
        case ActKind::tanh:
          for (std::size_t i = 0; i < len; ++i)
            x.grad[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
          break;
        case ActKind::sigmoid:
          for (std::size_t i = 0; i < len; ++i)
            x.grad[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
          break;
        case ActKind::exp:
          kernels::mul_acc(g.data(), n.value.data(), x.grad.data(), len);
          break;
        case ActKind::log:
          for (std::size_t i = 0; i < len; ++i) x.grad[i] += g[i] / x.value[i];
          break;
        case ActKind::square:
          for (std::size_t i = 0; i < len; ++i) x.grad[i] += g[i] * 2.0 * x.value[i];
          break;
        case ActKind::negate:
          kernels::axpy(x.grad.data(), -1.0, g.data(), len);
          break;
      }
      break;
    }
    case kAdd: {
      Node& a = node(n.parents[0]);
      Node& b = node(n.parents[1]);
      if (a.requires_grad) kernels::axpy(a.grad.data(), 1.0, g.data(), g.size());
      if (b.requires_grad) kernels::axpy(b.grad.data(), 1.0, g.data(), g.size());
      break;
    }
    case kSub: {
      Node& a = node(n.parents[0]);
      Node& b = node(n.parents[1]);
      if (a.requires_grad) kernels::axpy(a.grad.data(), 1.0, g.data(), g.size());
      if (b.requires_grad) kernels::axpy(b.grad.data(), -1.0, g.data(), g.size());
      break;
    }
    case kMul: {
      Node& a = node(n.parents[0]);
      Node& b = node(n.parents[1]);
      if (a.requires_grad) kernels::mul_acc(g.data(), b.value.data(), a.grad.data(), g.size());
      if (b.requires_grad) kernels::mul_acc(g.data(), a.value.data(), b.grad.data(), g.size());
      break;
    }
    case kAddScalar: {
      Node& x = node(n.parents[0]);
      if (x.requires_grad) kernels::axpy(x.grad.data(), 1.0, g.data(), g.size());
      break;
    }
    case kMulScalar: {
      Node& x = node(n.parents[0]);
      if (x.requires_grad) kernels::axpy(x.grad.data(), n.d0, g.data(), g.size());
      break;
    }
    case kClamp: {
      Node& x = node(n.parents[0]);
      if (!x.requires_grad) break;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x.value[i] >= n.d0 && x.value[i] <= n.d1) x.grad[i] += g[i];
      }
      break;
    }
    case kSliceCols: {
      Node& x = node(n.parents[0]);
      if (!x.requires_grad) break;
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) x.grad.at(i, n.i0 + j) += g.at(i, j);
      break;
    }
    case kReduce: {
      Node& x = node(n.parents[0]);
      if (!x.requires_grad) break;
      const bool mean = n.i0 == 1;
      const bool rows = n.i1 == 1;
      if (!rows) {
        const double count = static_cast<double>(x.value.size() > 0 ? x.value.size() : 1);
        const double gv = mean ? g[0] / count : g[0];
        for (std::size_t i = 0; i < x.value.size(); ++i) x.grad[i] += gv;
      } else {
        const double count = static_cast<double>(x.value.cols() > 0 ? x.value.cols() : 1);
        for (int i = 0; i < x.value.rows(); ++i) {
          const double gv = mean ? g.at(i, 0) / count : g.at(i, 0);
          for (int j = 0; j < x.value.cols(); ++j) x.grad.at(i, j) += gv;
        }
      }
      break;
    }
    default:
      throw StateError("backward: unknown op");
  }
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw ContractError("backward: root from another tape");
  if (backward_run_) throw StateError("backward: already run on this tape");
  const Node& r = node(root.id());
  if (!r.value.is_scalar())
    throw ContractError("backward: root must be scalar-shaped, got " + r.value.shape_str());
  backward_run_ = true;

  // Restrict the sweep to ancestors of the root.
  std::vector<char> reached(nodes_.size(), 0);
  reached[static_cast<std::size_t>(root.id())] = 1;
  for (int id = root.id(); id >= 0; --id) {
    if (!reached[static_cast<std::size_t>(id)]) continue;
    for (int p : node(id).parents) {
      if (p >= 0) reached[static_cast<std::size_t>(p)] = 1;
    }
  }

  // materialize zeroed gradient buffers for the nodes the sweep touches
  for (int id = root.id(); id >= 0; --id) {
    Node& n = node(id);
    if (reached[static_cast<std::size_t>(id)] && n.requires_grad && n.grad.empty())
      n.grad = Array::zeros(n.value.rows(), n.value.cols());
  }
  if (node(root.id()).grad.empty())
    node(root.id()).grad = Array::zeros(1, 1);
  node(root.id()).grad.fill(1.0);
  for (int id = root.id(); id >= 0; --id) {
    if (!reached[static_cast<std::size_t>(id)]) continue;
    if (!node(id).requires_grad) continue;
    backward_node(id);
  }
}

double finite_difference_check(const GraphFn& f, const std::vector<Array>& params, double eps) {
  if (!(eps > 0.0)) throw ContractError("finite_difference_check: eps must be > 0");

  const auto eval = [&f](const std::vector<Array>& p, bool with_grad,
                         std::vector<Array>* grads) -> double {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(p.size());
    for (const Array& a : p) leaves.push_back(tape.leaf(a, with_grad));
    Var root = f(tape, leaves);
    if (!root.value().is_scalar())
      throw ContractError("finite_difference_check: f must return a scalar");
    const double value = root.value()[0];
    if (with_grad) {
      tape.backward(root);
      grads->clear();
      for (Var v : leaves) grads->push_back(v.grad());
    }
    return value;
  };

  std::vector<Array> ad_grads;
  eval(params, true, &ad_grads);

  double max_err = 0.0;
  std::vector<Array> work = params;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    for (std::size_t i = 0; i < params[pi].size(); ++i) {
      const double orig = work[pi][i];
      work[pi][i] = orig + eps;
      const double fp = eval(work, false, nullptr);
      work[pi][i] = orig - eps;
      const double fm = eval(work, false, nullptr);
      work[pi][i] = orig;
      const double g_fd = (fp - fm) / (2.0 * eps);
      const double g_ad = ad_grads[pi][i];
      const double denom = std::max({std::fabs(g_ad), std::fabs(g_fd), 1e-8});
      const double err = std::fabs(g_ad - g_fd) / denom;
      if (err > max_err) max_err = err;
    }
  }
  return max_err;
}

}  // namespace dali::ad
