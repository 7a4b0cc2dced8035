#pragma once

// Minimal reverse-mode differentiation over dense matrices.
//
// A Tape owns every intermediate value. Ops append a node holding the forward
// value and a closure that pushes the node's gradient to its parents; backward()
// walks the nodes in reverse creation order. Parameters pulled from a ParamStore
// are leaves; collect_param_grads() adds their gradients back into a store.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vbreg/matrix.hpp"

namespace vbreg {

class ParamStore;

namespace ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Gradient after Tape::backward(); a zero matrix if nothing flowed here.
  Matrix grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t self)>;

  /// With record = false no backward closures are kept (inference only).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Differentiable leaf not tied to a store.
  Var leaf(Matrix value);
  /// Leaf holding a copy of store[name]; one node per name per tape.
  Var param(const ParamStore& store, const std::string& name);

  /// Seeds d(root)/d(root) = 1 and propagates. root must be 1x1.
  void backward(Var root);
  /// Adds the gradients of every param() leaf into store and marks them populated.
  void collect_param_grads(ParamStore& store) const;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  const Matrix& value(std::uint32_t id) const { return nodes_[id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  // Op-author interface.
  Var push(Matrix value, std::initializer_list<Var> parents, Backward backward);
  const Matrix& grad_of(std::uint32_t id) const { return nodes_[id].grad; }
  void accumulate(Var target, const Matrix& g);

 private:
  friend class Var;

  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
    std::string param_name;
  };

  Var add_node(Node node);

  bool record_;
  std::vector<Node> nodes_;
  std::map<std::string, std::uint32_t> param_nodes_;
};

// Ops. All operands must live on the same tape.
Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
/// a + broadcast of the 1 x cols row vector over every row
Var add_row(Var a, Var row);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
/// scale * a + shift, elementwise
Var affine(Var a, double scale, double shift = 0.0);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var softmax_rows(Var a);
/// 1x1 sum of all entries.
Var sum(Var a);
/// 1x1 sum over all entries of KL(N(mq, e^lq) || N(mp, e^lp)).
Var kl_diag(Var mean_q, Var log_std_q, Var mean_p, Var log_std_p);

}  // namespace ad
}  // namespace vbreg
