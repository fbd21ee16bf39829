#pragma once

#include <array>
#include <functional>
#include <vector>

#include "dali/array.hpp"

namespace dali::ad {

enum class ActKind { identity, relu, leaky_relu, tanh, sigmoid, exp, log, square, negate };

struct Activation {
  ActKind kind = ActKind::identity;
  double alpha = 0.01;  // leaky_relu slope
};

enum class Axis { all, rows };

class Tape;

/// Lightweight handle to a node on a tape. Copyable; the tape owns the data.
class Var {
 public:
  Var() = default;
  const Array& value() const;
  const Array& grad() const;
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  friend struct OpBuilder;
  Var(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Define-by-run reverse-mode tape over dense rank <= 2 arrays. One tape per
/// training substep; rebuilt every iteration. A tape and its nodes belong to
/// a single thread; independent tapes may run concurrently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// New input node. Gradients accumulate into it only when requires_grad.
  Var leaf(Array value, bool requires_grad = false);

  /// Reverse sweep from a scalar-shaped root. Every node's grad becomes the
  /// exact total derivative of root with respect to that node (zero for
  /// nodes the root does not depend on, and for no-grad leaves).
  void backward(Var root);

  bool backward_run() const { return backward_run_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  friend class Var;

  struct Node {
    Array value;
    Array grad;
    int op;  // OpKind
    std::array<int, 3> parents{-1, -1, -1};
    double d0 = 0.0, d1 = 0.0;  // op constants (alpha, clamp bounds, scalars)
    int i0 = 0, i1 = 0;         // op ints (activation kind, slice range, axis)
    bool requires_grad = false;
  };

  int push(Node n);
  void backward_node(int id);
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  std::vector<Node> nodes_;
  bool backward_run_ = false;

  friend struct OpBuilder;
};

/// x[n x k] * w[k x m] + b[1 x m] broadcast over rows.
Var affine(Var x, Var w, Var b);

/// Elementwise activation with exact backward rule.
Var activation(Var x, Activation a);

inline Var relu(Var x) { return activation(x, {ActKind::relu, 0.0}); }
inline Var leaky_relu(Var x, double alpha) { return activation(x, {ActKind::leaky_relu, alpha}); }
inline Var tanh_act(Var x) { return activation(x, {ActKind::tanh, 0.0}); }
inline Var sigmoid(Var x) { return activation(x, {ActKind::sigmoid, 0.0}); }
inline Var exp_act(Var x) { return activation(x, {ActKind::exp, 0.0}); }
inline Var log_act(Var x) { return activation(x, {ActKind::log, 0.0}); }
inline Var square(Var x) { return activation(x, {ActKind::square, 0.0}); }
inline Var negate(Var x) { return activation(x, {ActKind::negate, 0.0}); }

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var add_scalar(Var x, double c);
Var mul_scalar(Var x, double c);
Var clamp(Var x, double lo, double hi);
Var slice_cols(Var x, int c0, int c1);

Var reduce(Var x, bool mean, Axis axis);
inline Var reduce_sum(Var x, Axis axis = Axis::all) { return reduce(x, false, axis); }
inline Var reduce_mean(Var x, Axis axis = Axis::all) { return reduce(x, true, axis); }

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

/// Builds a scalar graph over leaves mirroring `params`, in order.
using GraphFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Max over all parameter entries of |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-8),
/// with g_fd from central differences of step eps. f must be deterministic.
double finite_difference_check(const GraphFn& f, const std::vector<Array>& params,
                               double eps = 1e-5);

}  // namespace dali::ad
