#include "vbreg/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "vbreg/errors.hpp"
#include "vbreg/kernels.hpp"
#include "vbreg/params.hpp"

namespace vbreg::ad {

const Matrix& Var::value() const { return tape_->value(id_); }

Matrix Var::grad() const {
  const Matrix& g = tape_->grad_of(id_);
  if (g.empty() && !value().empty()) return Matrix(rows(), cols());
  return g;
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw UsageError("scalar(): node is " + v.shape_str());
  return v(0, 0);
}

Var Tape::add_node(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return add_node(std::move(n));
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_;
  return add_node(std::move(n));
}

Var Tape::param(const ParamStore& store, const std::string& name) {
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.value = store.at(name).value;
  n.requires_grad = record_;
  n.param_name = name;
  Var v = add_node(std::move(n));
  param_nodes_.emplace(name, v.id());
  return v;
}

Var Tape::push(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                  [this](Var p) { return nodes_[p.id()].requires_grad; });
    if (n.requires_grad) n.backward = std::move(backward);
  }
  return add_node(std::move(n));
}

void Tape::accumulate(Var target, const Matrix& g) {
  Node& n = nodes_[target.id()];
  if (!n.requires_grad) return;
  if (!g.same_shape(n.value)) {
    throw NumericalError("backward: gradient shape " + g.shape_str() + " does not match value " +
                         n.value.shape_str());
  }
  if (n.grad.empty()) {
    n.grad = g;
    return;
  }
  auto& dst = n.grad.data();
  const auto& src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var root) {
  if (!record_) throw UsageError("Tape::backward: tape was created without recording");
  const Matrix& rv = nodes_[root.id()].value;
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw UsageError("Tape::backward: root must be 1x1, got " + rv.shape_str());
  }
  for (auto& n : nodes_) n.grad = Matrix();
  if (!nodes_[root.id()].requires_grad) return;
  nodes_[root.id()].grad = Matrix(1, 1, 1.0);
  for (std::uint32_t id = root.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty() || !n.backward) continue;
    n.backward(*this, id);
  }
}

void Tape::collect_param_grads(ParamStore& store) const {
  for (const auto& [name, id] : param_nodes_) {
    Parameter& p = store.at(name);
    if (p.grad.empty()) p.grad = Matrix(p.value.rows(), p.value.cols());
    const Matrix& g = nodes_[id].grad;
    if (!g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) p.grad.data()[i] += g.data()[i];
    }
    p.has_grad = true;
  }
}

namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw UsageError(std::string(op) + ": operands live on different tapes");
  }
  return *a.tape();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw UsageError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  }
}

template <class F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = f(a.data()[i]);
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  return t.push(kernels::matmul(a.value(), b.value()), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const Matrix& g = tp.grad_of(self);
    if (tp.requires_grad(a)) tp.accumulate(a, kernels::matmul_nt(g, b.value()));
    if (tp.requires_grad(b)) tp.accumulate(b, kernels::matmul_tn(a.value(), g));
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul_nt");
  return t.push(kernels::matmul_nt(a.value(), b.value()), {a, b},
                [a, b](Tape& tp, std::uint32_t self) {
                  const Matrix& g = tp.grad_of(self);
                  if (tp.requires_grad(a)) tp.accumulate(a, kernels::matmul(g, b.value()));
                  if (tp.requires_grad(b)) tp.accumulate(b, kernels::matmul_tn(g, a.value()));
                });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.value().data()[i];
  return t.push(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    tp.accumulate(a, tp.grad_of(self));
    tp.accumulate(b, tp.grad_of(self));
  });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape(a, row, "add_row");
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw UsageError("add_row: expected 1x" + std::to_string(av.cols()) + " row, got " +
                     rv.shape_str());
  }
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv(0, j);
  return t.push(std::move(out), {a, row}, [a, row](Tape& tp, std::uint32_t self) {
    const Matrix& g = tp.grad_of(self);
    tp.accumulate(a, g);
    if (tp.requires_grad(row)) {
      Matrix col_sum(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) col_sum(0, j) += g(i, j);
      tp.accumulate(row, col_sum);
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.value().data()[i];
  return t.push(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    tp.accumulate(a, tp.grad_of(self));
    if (tp.requires_grad(b)) tp.accumulate(b, map(tp.grad_of(self), [](double g) { return -g; }));
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.value().data()[i];
  return t.push(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const Matrix& g = tp.grad_of(self);
    auto times = [&g](const Matrix& other) {
      Matrix r = g;
      for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] *= other.data()[i];
      return r;
    };
    if (tp.requires_grad(a)) tp.accumulate(a, times(b.value()));
    if (tp.requires_grad(b)) tp.accumulate(b, times(a.value()));
  });
}

Var affine(Var a, double scale, double shift) {
  return a.tape()->push(map(a.value(), [=](double x) { return scale * x + shift; }), {a},
                        [a, scale](Tape& tp, std::uint32_t self) {
                          tp.accumulate(a, map(tp.grad_of(self), [=](double g) { return scale * g; }));
                        });
}

Var relu(Var a) {
  return a.tape()->push(map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), {a},
                        [a](Tape& tp, std::uint32_t self) {
                          Matrix g = tp.grad_of(self);
                          for (std::size_t i = 0; i < g.size(); ++i)
                            if (!(a.value().data()[i] > 0.0)) g.data()[i] = 0.0;
                          tp.accumulate(a, g);
                        });
}

Var sigmoid(Var a) {
  return a.tape()->push(map(a.value(), [](double x) { return 1.0 / (1.0 + std::exp(-x)); }), {a},
                        [a](Tape& tp, std::uint32_t self) {
                          Matrix g = tp.grad_of(self);
                          const Matrix& y = tp.value(self);
                          for (std::size_t i = 0; i < g.size(); ++i)
                            g.data()[i] *= y.data()[i] * (1.0 - y.data()[i]);
                          tp.accumulate(a, g);
                        });
}

Var tanh(Var a) {
  return a.tape()->push(map(a.value(), [](double x) { return std::tanh(x); }), {a},
                        [a](Tape& tp, std::uint32_t self) {
                          Matrix g = tp.grad_of(self);
                          const Matrix& y = tp.value(self);
                          for (std::size_t i = 0; i < g.size(); ++i)
                            g.data()[i] *= 1.0 - y.data()[i] * y.data()[i];
                          tp.accumulate(a, g);
                        });
}

Var exp(Var a) {
  return a.tape()->push(map(a.value(), [](double x) { return std::exp(x); }), {a},
                        [a](Tape& tp, std::uint32_t self) {
                          Matrix g = tp.grad_of(self);
                          const Matrix& y = tp.value(self);
                          for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] *= y.data()[i];
                          tp.accumulate(a, g);
                        });
}

Var concat_cols(Var a, Var b) {
  Tape& t = same_tape(a, b, "concat_cols");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw UsageError("concat_cols: row mismatch " + av.shape_str() + " vs " + bv.shape_str());
  }
  const std::size_t ca = av.cols();
  const std::size_t cb = bv.cols();
  Matrix out(av.rows(), ca + cb);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    std::copy(av.row(i).begin(), av.row(i).end(), out.row(i).begin());
    std::copy(bv.row(i).begin(), bv.row(i).end(), out.row(i).begin() + ca);
  }
  return t.push(std::move(out), {a, b}, [a, b, ca, cb](Tape& tp, std::uint32_t self) {
    const Matrix& g = tp.grad_of(self);
    Matrix ga(g.rows(), ca);
    Matrix gb(g.rows(), cb);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      std::copy_n(g.row(i).begin(), ca, ga.row(i).begin());
      std::copy_n(g.row(i).begin() + ca, cb, gb.row(i).begin());
    }
    tp.accumulate(a, ga);
    tp.accumulate(b, gb);
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Matrix& av = a.value();
  if (begin + count > av.cols()) {
    throw UsageError("slice_cols: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " + av.shape_str());
  }
  Matrix out(av.rows(), count);
  for (std::size_t i = 0; i < av.rows(); ++i)
    std::copy_n(av.row(i).begin() + begin, count, out.row(i).begin());
  return a.tape()->push(std::move(out), {a}, [a, begin, count](Tape& tp, std::uint32_t self) {
    const Matrix& g = tp.grad_of(self);
    Matrix ga(g.rows(), a.value().cols());
    for (std::size_t i = 0; i < g.rows(); ++i)
      std::copy_n(g.row(i).begin(), count, ga.row(i).begin() + begin);
    tp.accumulate(a, ga);
  });
}

Var softmax_rows(Var a) {
  return a.tape()->push(kernels::softmax_rows(a.value()), {a}, [a](Tape& tp, std::uint32_t self) {
    const Matrix& g = tp.grad_of(self);
    const Matrix& y = tp.value(self);
    Matrix ga(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) = y(i, j) * (g(i, j) - dot);
    }
    tp.accumulate(a, ga);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape()->push(Matrix(1, 1, s), {a}, [a](Tape& tp, std::uint32_t self) {
    tp.accumulate(a, Matrix(a.value().rows(), a.value().cols(), tp.grad_of(self)(0, 0)));
  });
}

Var kl_diag(Var mean_q, Var log_std_q, Var mean_p, Var log_std_p) {
  const Matrix& mq = mean_q.value();
  const Matrix& lq = log_std_q.value();
  const Matrix& mp = mean_p.value();
  const Matrix& lp = log_std_p.value();
  require_same_shape(mq, lq, "kl_diag");
  require_same_shape(mq, mp, "kl_diag");
  require_same_shape(mq, lp, "kl_diag");
  same_tape(mean_q, mean_p, "kl_diag");
  double kl = 0.0;
  for (std::size_t i = 0; i < mq.size(); ++i) {
    const double var_q = std::exp(2.0 * lq.data()[i]);
    const double var_p = std::exp(2.0 * lp.data()[i]);
    const double diff = mq.data()[i] - mp.data()[i];
    kl += lp.data()[i] - lq.data()[i] + (var_q + diff * diff) / (2.0 * var_p) - 0.5;
  }
  Tape& t = *mean_q.tape();
  Var out = t.push(Matrix(1, 1, kl), {mean_q, log_std_q, mean_p, log_std_p},
                   [mean_q, log_std_q, mean_p, log_std_p](Tape& tp, std::uint32_t self) {
                     const double g = tp.grad_of(self)(0, 0);
                     const Matrix& mq = mean_q.value();
                     const Matrix& lq = log_std_q.value();
                     const Matrix& mp = mean_p.value();
                     const Matrix& lp = log_std_p.value();
                     Matrix gmq(mq.rows(), mq.cols()), glq(mq.rows(), mq.cols());
                     Matrix gmp(mq.rows(), mq.cols()), glp(mq.rows(), mq.cols());
                     for (std::size_t i = 0; i < mq.size(); ++i) {
                       const double var_q = std::exp(2.0 * lq.data()[i]);
                       const double var_p = std::exp(2.0 * lp.data()[i]);
                       const double diff = mq.data()[i] - mp.data()[i];
                       gmq.data()[i] = g * diff / var_p;
                       gmp.data()[i] = -g * diff / var_p;
                       glq.data()[i] = g * (-1.0 + var_q / var_p);
                       glp.data()[i] = g * (1.0 - (var_q + diff * diff) / var_p);
                     }
                     tp.accumulate(mean_q, gmq);
                     tp.accumulate(log_std_q, glq);
                     tp.accumulate(mean_p, gmp);
                     tp.accumulate(log_std_p, glp);
                   });
  return out;
}

}  // namespace vbreg::ad
