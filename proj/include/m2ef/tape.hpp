#pragma once

#include <cstdint>
#include <vector>

#include "m2ef/tensor.hpp"

namespace m2ef {

// Reverse-mode autodiff over Tensor values.
//
// A Tape records every operation in construction order (inputs always precede
// their consumers, so the node list is already topologically sorted) and
// replays it backwards once to accumulate gradients. A tape and the tensors
// bound to it form a single-owner unit: no concurrent mutation. Distinct
// tapes are fully independent.
//
// Leaves can reference external storage (model parameters, input bags) to
// avoid copying them into every per-patient tape; the referenced tensors must
// outlive the tape and stay untouched until backward() has run.

using NodeId = std::int32_t;

enum class Act { sigmoid, tanh, relu, softplus };

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // --- leaves ---------------------------------------------------------
  NodeId leaf(const Tensor& external, bool requires_grad);
  NodeId constant(Tensor owned);  // tape-owned, never differentiated

  // --- recorded operations --------------------------------------------
  NodeId matmul(NodeId a, NodeId b);     // (r x k)(k x c) -> r x c
  NodeId matmul_nt(NodeId a, NodeId b);  // a (r x k) * b^T, b stored (c x k)
  NodeId transpose(NodeId a);
  NodeId add(NodeId a, NodeId b);  // same shape
  NodeId mul(NodeId a, NodeId b);  // elementwise, same shape
  NodeId scale(NodeId a, double c);
  NodeId mul_scalar(NodeId a, NodeId s);  // s is 1x1, broadcast multiply
  NodeId reciprocal(NodeId a);            // elementwise 1/x
  NodeId concat_cols(const std::vector<NodeId>& xs);
  NodeId slice_cols(NodeId a, int c0, int c1);  // half-open [c0, c1)
  NodeId row_softmax(NodeId a);
  NodeId activation(Act kind, NodeId a);
  NodeId sum(NodeId a);   // -> 1x1
  NodeId mean(NodeId a);  // -> 1x1
  // bag (n x d) weighted by w (1 x n) -> 1 x d
  NodeId row_weighted_sum(NodeId bag, NodeId w);
  // row-wise layer norm with trainable gain/bias (each 1 x d)
  NodeId row_layernorm(NodeId x, NodeId gain, NodeId bias, double eps = 1e-5);
  // discrete-time survival negative log-likelihood of a 1 x K hazard row;
  // hazards are clamped to [clamp, 1-clamp] before the logs -> 1x1
  NodeId survival_nll(NodeId hazards, int bin, bool event,
                      double clamp = 1e-7);

  // --- backward --------------------------------------------------------
  // Seeds d(loss)/d(loss) = 1 and accumulates into every node reachable
  // from a differentiable leaf. Every requires_grad leaf ends up with a
  // gradient (zeros if disconnected). A second call without reset() throws.
  void backward(NodeId loss);
  void reset();  // clears gradients so backward may run again

  // --- inspection -------------------------------------------------------
  const Tensor& value(NodeId id) const;
  const Tensor& grad(NodeId id) const;  // throws if absent
  bool has_grad(NodeId id) const;
  bool requires_grad(NodeId id) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    leaf,
    constant,
    matmul,
    matmul_nt,
    transpose,
    add,
    mul,
    scale,
    mul_scalar,
    reciprocal,
    concat_cols,
    slice_cols,
    row_softmax,
    activation,
    sum,
    mean,
    row_weighted_sum,
    row_layernorm,
    survival_nll,
  };

  struct Node {
    Op op;
    bool requires_grad = false;
    NodeId a = -1;
    NodeId b = -1;
    NodeId c = -1;                // third input (layernorm bias)
    std::vector<NodeId> many;     // concat inputs
    const Tensor* external = nullptr;  // leaf storage
    Tensor val;                   // owned value for non-leaf nodes
    Tensor grad;                  // allocated on demand during backward
    Tensor aux;                   // op-specific saved values
    double p0 = 0.0;              // scale factor / eps / clamp
    int i0 = 0;                   // slice start / nll bin
    int i1 = 0;                   // slice end / nll event flag
    Act act = Act::sigmoid;
  };

  NodeId push(Node n);
  const Tensor& v(NodeId id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external ? *n.external : n.val;
  }
  Node& at(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& at(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  void check_id(NodeId id) const;
  Tensor& grad_buf(NodeId id);  // allocate-on-first-touch gradient

  void backward_node(NodeId id);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace m2ef
