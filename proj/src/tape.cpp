#include "m2ef/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "m2ef/errors.hpp"
#include "m2ef/kernels.hpp"

namespace m2ef {

namespace {

double sigmoid_stable(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_stable(double x) {
  // x + log1p(exp(-x)) for positive x avoids overflow at evidence scale
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() +
                   " and " + b.shape_str());
}

}  // namespace

NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::check_id(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
    throw std::out_of_range("tape: node id " + std::to_string(id) +
                            " not on this tape");
}

NodeId Tape::leaf(const Tensor& external, bool requires_grad) {
  Node n;
  n.op = Op::leaf;
  n.external = &external;
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

NodeId Tape::constant(Tensor owned) {
  Node n;
  n.op = Op::constant;
  n.val = std::move(owned);
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  const Tensor& va = v(a);
  const Tensor& vb = v(b);
  if (va.cols != vb.rows) shape_fail("matmul", va, vb);
  Node n;
  n.op = Op::matmul;
  n.a = a;
  n.b = b;
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  n.val = Tensor(va.rows, vb.cols);
  kernels::gemm_nn(va.rows, va.cols, vb.cols, va.ptr(), vb.ptr(), n.val.ptr(),
                   false);
  return push(std::move(n));
}

NodeId Tape::matmul_nt(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  const Tensor& va = v(a);
  const Tensor& vb = v(b);
  if (va.cols != vb.cols) shape_fail("matmul_nt", va, vb);
  Node n;
  n.op = Op::matmul_nt;
  n.a = a;
  n.b = b;
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  n.val = Tensor(va.rows, vb.rows);
  kernels::gemm_nt(va.rows, va.cols, vb.rows, va.ptr(), vb.ptr(), n.val.ptr(),
                   false);
  return push(std::move(n));
}

NodeId Tape::transpose(NodeId a) {
  check_id(a);
  Node n;
  n.op = Op::transpose;
  n.a = a;
  n.requires_grad = at(a).requires_grad;
  n.val = v(a).transposed();
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  const Tensor& va = v(a);
  const Tensor& vb = v(b);
  if (!va.same_shape(vb)) shape_fail("add", va, vb);
  Node n;
  n.op = Op::add;
  n.a = a;
  n.b = b;
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  n.val = Tensor(va.rows, va.cols);
  kernels::add(va.data.size(), va.ptr(), vb.ptr(), n.val.ptr());
  return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  const Tensor& va = v(a);
  const Tensor& vb = v(b);
  if (!va.same_shape(vb)) shape_fail("mul", va, vb);
  Node n;
  n.op = Op::mul;
  n.a = a;
  n.b = b;
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  n.val = Tensor(va.rows, va.cols);
  kernels::mul(va.data.size(), va.ptr(), vb.ptr(), n.val.ptr());
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double c) {
  check_id(a);
  const Tensor& va = v(a);
  Node n;
  n.op = Op::scale;
  n.a = a;
  n.p0 = c;
  n.requires_grad = at(a).requires_grad;
  n.val = Tensor(va.rows, va.cols);
  kernels::scale(va.data.size(), c, va.ptr(), n.val.ptr());
  return push(std::move(n));
}

NodeId Tape::mul_scalar(NodeId a, NodeId s) {
  check_id(a);
  check_id(s);
  const Tensor& va = v(a);
  const Tensor& vs = v(s);
  if (vs.rows != 1 || vs.cols != 1)
    throw ShapeError("mul_scalar: scalar operand must be 1x1, got " +
                     vs.shape_str());
  Node n;
  n.op = Op::mul_scalar;
  n.a = a;
  n.b = s;
  n.requires_grad = at(a).requires_grad || at(s).requires_grad;
  n.val = Tensor(va.rows, va.cols);
  kernels::scale(va.data.size(), vs.data[0], va.ptr(), n.val.ptr());
  return push(std::move(n));
}

NodeId Tape::reciprocal(NodeId a) {
  check_id(a);
  const Tensor& va = v(a);
  Node n;
  n.op = Op::reciprocal;
  n.a = a;
  n.requires_grad = at(a).requires_grad;
  n.val = Tensor(va.rows, va.cols);
  for (std::size_t i = 0; i < va.data.size(); ++i)
    n.val.data[i] = 1.0 / va.data[i];
  return push(std::move(n));
}

NodeId Tape::concat_cols(const std::vector<NodeId>& xs) {
  if (xs.empty()) throw ShapeError("concat_cols: no inputs");
  int rows = -1, cols = 0;
  bool rg = false;
  for (NodeId id : xs) {
    check_id(id);
    const Tensor& t = v(id);
    if (rows < 0) rows = t.rows;
    if (t.rows != rows)
      throw ShapeError("concat_cols: row mismatch, " + std::to_string(rows) +
                       " vs " + t.shape_str());
    cols += t.cols;
    rg = rg || at(id).requires_grad;
  }
  Node n;
  n.op = Op::concat_cols;
  n.many = xs;
  n.requires_grad = rg;
  n.val = Tensor(rows, cols);
  int off = 0;
  for (NodeId id : xs) {
    const Tensor& t = v(id);
    for (int r = 0; r < rows; ++r)
      std::memcpy(n.val.row_ptr(r) + off, t.row_ptr(r),
                  static_cast<std::size_t>(t.cols) * sizeof(double));
    off += t.cols;
  }
  return push(std::move(n));
}

NodeId Tape::slice_cols(NodeId a, int c0, int c1) {
  check_id(a);
  const Tensor& va = v(a);
  if (c0 < 0 || c1 > va.cols || c0 >= c1)
    throw ShapeError("slice_cols: range [" + std::to_string(c0) + ", " +
                     std::to_string(c1) + ") invalid for " + va.shape_str());
  Node n;
  n.op = Op::slice_cols;
  n.a = a;
  n.i0 = c0;
  n.i1 = c1;
  n.requires_grad = at(a).requires_grad;
  n.val = Tensor(va.rows, c1 - c0);
  for (int r = 0; r < va.rows; ++r)
    std::memcpy(n.val.row_ptr(r), va.row_ptr(r) + c0,
                static_cast<std::size_t>(c1 - c0) * sizeof(double));
  return push(std::move(n));
}

NodeId Tape::row_softmax(NodeId a) {
  check_id(a);
  const Tensor& va = v(a);
  Node n;
  n.op = Op::row_softmax;
  n.a = a;
  n.requires_grad = at(a).requires_grad;
  n.val = Tensor(va.rows, va.cols);
  for (int r = 0; r < va.rows; ++r) {
    const double* x = va.row_ptr(r);
    double* y = n.val.row_ptr(r);
    double mx = kernels::max(va.cols, x);
    double z = 0.0;
    for (int c = 0; c < va.cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      z += y[c];
    }
    double inv = 1.0 / z;
    for (int c = 0; c < va.cols; ++c) y[c] *= inv;
  }
  return push(std::move(n));
}

NodeId Tape::activation(Act kind, NodeId a) {
  check_id(a);
  const Tensor& va = v(a);
  Node n;
  n.op = Op::activation;
  n.act = kind;
  n.a = a;
  n.requires_grad = at(a).requires_grad;
  n.val = Tensor(va.rows, va.cols);
  const double* x = va.ptr();
  double* y = n.val.ptr();
  switch (kind) {
    case Act::sigmoid:
      for (std::size_t i = 0; i < va.data.size(); ++i) y[i] = sigmoid_stable(x[i]);
      break;
    case Act::tanh:
      for (std::size_t i = 0; i < va.data.size(); ++i) y[i] = std::tanh(x[i]);
      break;
    case Act::relu:
      for (std::size_t i = 0; i < va.data.size(); ++i)
        y[i] = x[i] > 0.0 ? x[i] : 0.0;
      break;
    case Act::softplus:
      for (std::size_t i = 0; i < va.data.size(); ++i)
        y[i] = softplus_stable(x[i]);
      break;
  }
  return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
  check_id(a);
  const Tensor& va = v(a);
  Node n;
  n.op = Op::sum;
  n.a = a;
  n.requires_grad = at(a).requires_grad;
  n.val = Tensor(1, 1);
  n.val.data[0] = kernels::sum(va.data.size(), va.ptr());
  return push(std::move(n));
}

NodeId Tape::mean(NodeId a) {
  check_id(a);
  const Tensor& va = v(a);
  if (va.size() == 0) throw ShapeError("mean of empty tensor");
  Node n;
  n.op = Op::mean;
  n.a = a;
  n.requires_grad = at(a).requires_grad;
  n.val = Tensor(1, 1);
  n.val.data[0] = kernels::sum(va.data.size(), va.ptr()) / va.size();
  return push(std::move(n));
}

NodeId Tape::row_weighted_sum(NodeId bag, NodeId w) {
  check_id(bag);
  check_id(w);
  const Tensor& vb = v(bag);
  const Tensor& vw = v(w);
  if (vw.rows != 1 || vw.cols != vb.rows) shape_fail("row_weighted_sum", vb, vw);
  Node n;
  n.op = Op::row_weighted_sum;
  n.a = bag;
  n.b = w;
  n.requires_grad = at(bag).requires_grad || at(w).requires_grad;
  n.val = Tensor(1, vb.cols);
  kernels::gemm_nn(1, vb.rows, vb.cols, vw.ptr(), vb.ptr(), n.val.ptr(), false);
  return push(std::move(n));
}

NodeId Tape::row_layernorm(NodeId x, NodeId gain, NodeId bias, double eps) {
  check_id(x);
  check_id(gain);
  check_id(bias);
  const Tensor& vx = v(x);
  const Tensor& vg = v(gain);
  const Tensor& vb = v(bias);
  if (vg.rows != 1 || vg.cols != vx.cols) shape_fail("row_layernorm gain", vx, vg);
  if (vb.rows != 1 || vb.cols != vx.cols) shape_fail("row_layernorm bias", vx, vb);
  Node n;
  n.op = Op::row_layernorm;
  n.a = x;
  n.b = gain;
  n.c = bias;
  n.p0 = eps;
  n.requires_grad =
      at(x).requires_grad || at(gain).requires_grad || at(bias).requires_grad;
  n.val = Tensor(vx.rows, vx.cols);
  // aux row r: [x_hat .. , rstd] used verbatim by the backward pass
  n.aux = Tensor(vx.rows, vx.cols + 1);
  const int d = vx.cols;
  for (int r = 0; r < vx.rows; ++r) {
    const double* xr = vx.row_ptr(r);
    double mu = kernels::sum(d, xr) / d;
    double var = 0.0;
    for (int c = 0; c < d; ++c) {
      double t = xr[c] - mu;
      var += t * t;
    }
    var /= d;
    double rstd = 1.0 / std::sqrt(var + eps);
    double* hat = n.aux.row_ptr(r);
    double* y = n.val.row_ptr(r);
    for (int c = 0; c < d; ++c) {
      hat[c] = (xr[c] - mu) * rstd;
      y[c] = vg.data[c] * hat[c] + vb.data[c];
    }
    hat[d] = rstd;
  }
  return push(std::move(n));
}

NodeId Tape::survival_nll(NodeId hazards, int bin, bool event, double clamp) {
  check_id(hazards);
  const Tensor& vh = v(hazards);
  if (vh.rows != 1)
    throw ShapeError("survival_nll: hazards must be a single row, got " +
                     vh.shape_str());
  if (bin < 0 || bin >= vh.cols)
    throw ShapeError("survival_nll: bin " + std::to_string(bin) +
                     " out of range for K=" + std::to_string(vh.cols));
  Node n;
  n.op = Op::survival_nll;
  n.a = hazards;
  n.i0 = bin;
  n.i1 = event ? 1 : 0;
  n.p0 = clamp;
  n.requires_grad = at(hazards).requires_grad;
  n.aux = Tensor(1, vh.cols);
  for (int c = 0; c < vh.cols; ++c) {
    double h = vh.data[static_cast<std::size_t>(c)];
    n.aux.data[static_cast<std::size_t>(c)] =
        std::min(std::max(h, clamp), 1.0 - clamp);
  }
  // event:    -log S_{bin-1} - log h_bin
  // censored: -log S_bin            with S_j = prod_{i<=j} (1 - h_i)
  double loss = 0.0;
  int survive_through = event ? bin - 1 : bin;
  for (int c = 0; c <= survive_through; ++c)
    loss -= std::log(1.0 - n.aux.data[static_cast<std::size_t>(c)]);
  if (event) loss -= std::log(n.aux.data[static_cast<std::size_t>(bin)]);
  n.val = Tensor(1, 1);
  n.val.data[0] = loss;
  return push(std::move(n));
}

const Tensor& Tape::value(NodeId id) const {
  check_id(id);
  return v(id);
}

const Tensor& Tape::grad(NodeId id) const {
  check_id(id);
  const Node& n = at(id);
  if (n.grad.data.empty())
    throw std::logic_error("tape: node " + std::to_string(id) +
                           " has no gradient (run backward first)");
  return n.grad;
}

bool Tape::has_grad(NodeId id) const {
  check_id(id);
  return !at(id).grad.data.empty();
}

bool Tape::requires_grad(NodeId id) const {
  check_id(id);
  return at(id).requires_grad;
}

Tensor& Tape::grad_buf(NodeId id) {
  Node& n = at(id);
  if (n.grad.data.empty()) {
    const Tensor& val = v(id);
    n.grad = Tensor(val.rows, val.cols);
  }
  return n.grad;
}

void Tape::reset() {
  for (Node& n : nodes_) n.grad = Tensor();
  backward_done_ = false;
}

void Tape::backward(NodeId loss) {
  check_id(loss);
  if (backward_done_)
    throw std::logic_error(
        "tape: backward already ran; call reset() before running it again");
  const Tensor& lv = v(loss);
  if (lv.rows != 1 || lv.cols != 1)
    throw ShapeError("backward: loss must be 1x1, got " + lv.shape_str());
  backward_done_ = true;
  grad_buf(loss).data[0] = 1.0;
  for (NodeId id = loss; id >= 0; --id) {
    Node& n = at(id);
    if (!n.requires_grad || n.grad.data.empty()) continue;
    backward_node(id);
  }
  // disconnected trainable leaves still expose a (zero) gradient
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    if (n.op == Op::leaf && n.requires_grad && n.grad.data.empty())
      n.grad = Tensor(v(static_cast<NodeId>(i)).rows,
                      v(static_cast<NodeId>(i)).cols);
  }
}

void Tape::backward_node(NodeId id) {
  Node& n = at(id);
  const Tensor& g = n.grad;
  switch (n.op) {
    case Op::leaf:
    case Op::constant:
      return;

    case Op::matmul: {
      const Tensor& va = v(n.a);
      const Tensor& vb = v(n.b);
      if (at(n.a).requires_grad)
        kernels::gemm_nt(va.rows, vb.cols, va.cols, g.ptr(), vb.ptr(),
                         grad_buf(n.a).ptr(), true);
      if (at(n.b).requires_grad)
        kernels::gemm_tn(va.cols, va.rows, vb.cols, va.ptr(), g.ptr(),
                         grad_buf(n.b).ptr(), true);
      return;
    }

    case Op::matmul_nt: {
      // out = a * b^T; a (r x k), b (c x k), g (r x c)
      const Tensor& va = v(n.a);
      const Tensor& vb = v(n.b);
      if (at(n.a).requires_grad)
        kernels::gemm_nn(va.rows, vb.rows, va.cols, g.ptr(), vb.ptr(),
                         grad_buf(n.a).ptr(), true);
      if (at(n.b).requires_grad)
        kernels::gemm_tn(vb.rows, va.rows, va.cols, g.ptr(), va.ptr(),
                         grad_buf(n.b).ptr(), true);
      return;
    }

    case Op::transpose: {
      if (!at(n.a).requires_grad) return;
      Tensor& da = grad_buf(n.a);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) da(c, r) += g(r, c);
      return;
    }

    case Op::add: {
      if (at(n.a).requires_grad)
        kernels::axpy(g.data.size(), 1.0, g.ptr(), grad_buf(n.a).ptr());
      if (at(n.b).requires_grad)
        kernels::axpy(g.data.size(), 1.0, g.ptr(), grad_buf(n.b).ptr());
      return;
    }

    case Op::mul: {
      const Tensor& va = v(n.a);
      const Tensor& vb = v(n.b);
      if (at(n.a).requires_grad) {
        Tensor& da = grad_buf(n.a);
        for (std::size_t i = 0; i < g.data.size(); ++i)
          da.data[i] += g.data[i] * vb.data[i];
      }
      if (at(n.b).requires_grad) {
        Tensor& db = grad_buf(n.b);
        for (std::size_t i = 0; i < g.data.size(); ++i)
          db.data[i] += g.data[i] * va.data[i];
      }
      return;
    }

    case Op::scale: {
      if (at(n.a).requires_grad)
        kernels::axpy(g.data.size(), n.p0, g.ptr(), grad_buf(n.a).ptr());
      return;
    }

    case Op::mul_scalar: {
      const Tensor& va = v(n.a);
      double s = v(n.b).data[0];
      if (at(n.a).requires_grad)
        kernels::axpy(g.data.size(), s, g.ptr(), grad_buf(n.a).ptr());
      if (at(n.b).requires_grad)
        grad_buf(n.b).data[0] += kernels::dot(g.data.size(), g.ptr(), va.ptr());
      return;
    }

    case Op::reciprocal: {
      if (!at(n.a).requires_grad) return;
      Tensor& da = grad_buf(n.a);
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        double y = n.val.data[i];
        da.data[i] -= g.data[i] * y * y;
      }
      return;
    }

    case Op::concat_cols: {
      int off = 0;
      for (NodeId src : n.many) {
        const Tensor& t = v(src);
        if (at(src).requires_grad) {
          Tensor& ds = grad_buf(src);
          for (int r = 0; r < g.rows; ++r)
            kernels::axpy(t.cols, 1.0, g.row_ptr(r) + off, ds.row_ptr(r));
        }
        off += t.cols;
      }
      return;
    }

    case Op::slice_cols: {
      if (!at(n.a).requires_grad) return;
      Tensor& da = grad_buf(n.a);
      for (int r = 0; r < g.rows; ++r)
        kernels::axpy(g.cols, 1.0, g.row_ptr(r), da.row_ptr(r) + n.i0);
      return;
    }

    case Op::row_softmax: {
      if (!at(n.a).requires_grad) return;
      Tensor& da = grad_buf(n.a);
      for (int r = 0; r < g.rows; ++r) {
        const double* y = n.val.row_ptr(r);
        const double* gy = g.row_ptr(r);
        double inner = kernels::dot(g.cols, gy, y);
        double* dx = da.row_ptr(r);
        for (int c = 0; c < g.cols; ++c) dx[c] += y[c] * (gy[c] - inner);
      }
      return;
    }

    case Op::activation: {
      if (!at(n.a).requires_grad) return;
      const Tensor& x = v(n.a);
      Tensor& da = grad_buf(n.a);
      switch (n.act) {
        case Act::sigmoid:
          for (std::size_t i = 0; i < g.data.size(); ++i) {
            double y = n.val.data[i];
            da.data[i] += g.data[i] * y * (1.0 - y);
          }
          break;
        case Act::tanh:
          for (std::size_t i = 0; i < g.data.size(); ++i) {
            double y = n.val.data[i];
            da.data[i] += g.data[i] * (1.0 - y * y);
          }
          break;
        case Act::relu:
          for (std::size_t i = 0; i < g.data.size(); ++i)
            if (x.data[i] > 0.0) da.data[i] += g.data[i];
          break;
        case Act::softplus:
          for (std::size_t i = 0; i < g.data.size(); ++i)
            da.data[i] += g.data[i] * sigmoid_stable(x.data[i]);
          break;
      }
      return;
    }

    case Op::sum: {
      if (!at(n.a).requires_grad) return;
      Tensor& da = grad_buf(n.a);
      double s = g.data[0];
      for (double& d : da.data) d += s;
      return;
    }

    case Op::mean: {
      if (!at(n.a).requires_grad) return;
      Tensor& da = grad_buf(n.a);
      double s = g.data[0] / da.size();
      for (double& d : da.data) d += s;
      return;
    }

    case Op::row_weighted_sum: {
      const Tensor& bag = v(n.a);
      const Tensor& w = v(n.b);
      if (at(n.a).requires_grad) {
        Tensor& dbag = grad_buf(n.a);
        for (int r = 0; r < bag.rows; ++r)
          kernels::axpy(bag.cols, w.data[static_cast<std::size_t>(r)], g.ptr(),
                        dbag.row_ptr(r));
      }
      if (at(n.b).requires_grad) {
        Tensor& dw = grad_buf(n.b);
        for (int r = 0; r < bag.rows; ++r)
          dw.data[static_cast<std::size_t>(r)] +=
              kernels::dot(bag.cols, bag.row_ptr(r), g.ptr());
      }
      return;
    }

    case Op::row_layernorm: {
      const Tensor& vg = v(n.b);
      const int d = g.cols;
      if (at(n.b).requires_grad) {
        Tensor& dgain = grad_buf(n.b);
        for (int r = 0; r < g.rows; ++r) {
          const double* hat = n.aux.row_ptr(r);
          const double* gy = g.row_ptr(r);
          for (int c = 0; c < d; ++c) dgain.data[c] += gy[c] * hat[c];
        }
      }
      if (at(n.c).requires_grad) {
        Tensor& dbias = grad_buf(n.c);
        for (int r = 0; r < g.rows; ++r)
          kernels::axpy(d, 1.0, g.row_ptr(r), dbias.ptr());
      }
      if (at(n.a).requires_grad) {
        Tensor& dx = grad_buf(n.a);
        std::vector<double> h(static_cast<std::size_t>(d));
        for (int r = 0; r < g.rows; ++r) {
          const double* hat = n.aux.row_ptr(r);
          const double rstd = hat[d];
          const double* gy = g.row_ptr(r);
          double m1 = 0.0, m2 = 0.0;
          for (int c = 0; c < d; ++c) {
            h[static_cast<std::size_t>(c)] = gy[c] * vg.data[c];
            m1 += h[static_cast<std::size_t>(c)];
            m2 += h[static_cast<std::size_t>(c)] * hat[c];
          }
          m1 /= d;
          m2 /= d;
          double* dxr = dx.row_ptr(r);
          for (int c = 0; c < d; ++c)
            dxr[c] += rstd * (h[static_cast<std::size_t>(c)] - m1 - hat[c] * m2);
        }
      }
      return;
    }

    case Op::survival_nll: {
      if (!at(n.a).requires_grad) return;
      const Tensor& raw = v(n.a);
      Tensor& dh = grad_buf(n.a);
      const double gs = g.data[0];
      const double lo = n.p0, hi = 1.0 - n.p0;
      const int bin = n.i0;
      const bool event = n.i1 != 0;
      int survive_through = event ? bin - 1 : bin;
      for (int c = 0; c <= survive_through; ++c) {
        double r = raw.data[static_cast<std::size_t>(c)];
        if (r >= lo && r <= hi)
          dh.data[static_cast<std::size_t>(c)] +=
              gs / (1.0 - n.aux.data[static_cast<std::size_t>(c)]);
      }
      if (event) {
        double r = raw.data[static_cast<std::size_t>(bin)];
        if (r >= lo && r <= hi)
          dh.data[static_cast<std::size_t>(bin)] -=
              gs / n.aux.data[static_cast<std::size_t>(bin)];
      }
      return;
    }
  }
}

}  // namespace m2ef
