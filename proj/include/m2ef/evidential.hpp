#pragma once

#include <vector>

#include "m2ef/tape.hpp"

namespace m2ef::evidential {

// Subjective-logic opinion: belief mass per class plus overall uncertainty,
// u + sum(b) == 1.
struct Opinion {
  int k = 0;
  std::vector<double> belief;
  double uncertainty = 0.0;

  static Opinion vacuous(int k);
  double belief_sum() const;
};

// Evidence view of a Dirichlet: alpha = e + 1, strength = sum(alpha).
struct DirichletEvidence {
  int k = 0;
  std::vector<double> evidence;
  std::vector<double> alpha;
  double strength = 0.0;
};

// e >= 0 -> opinion with b = e/S, u = K/S where S = sum(e) + K.
Opinion evidence_to_opinion(const std::vector<double>& evidence);

// Normalized Dempster combination of two opinions over the same frame.
// Throws TotalConflictError when the conflict mass reaches 1.
Opinion ds_combine(const Opinion& a, const Opinion& b);

// Inverse map, defined for u > 0: S = K/u, e = b*S.
DirichletEvidence opinion_to_evidence(const Opinion& o);

// Final risk modulation: sigmoid(fused evidence) element-wise times the
// network risk scores.
std::vector<double> modulate_risk(const std::vector<double>& fused_evidence,
                                  const std::vector<double>& s_risk);

// --- differentiable route --------------------------------------------------
// The same algebra composed from tape primitives so gradients flow from the
// survival loss back into both evidence heads. Values agree with the plain
// functions above; the unit tests cross-check the two routes.

struct FusedNodes {
  NodeId belief;         // 1 x K
  NodeId uncertainty;    // 1 x 1
  NodeId fused_evidence; // 1 x K
};

FusedNodes fuse_on_tape(Tape& tape, NodeId evidence_h, NodeId evidence_g);

// o_risk = sigmoid(fused evidence) (.) s_risk
NodeId modulate_on_tape(Tape& tape, NodeId fused_evidence, NodeId s_risk);

}  // namespace m2ef::evidential
