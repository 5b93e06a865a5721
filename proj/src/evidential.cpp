#include "m2ef/evidential.hpp"

#include <cmath>
#include <string>

#include "m2ef/errors.hpp"

namespace m2ef::evidential {

Opinion Opinion::vacuous(int k) {
  Opinion o;
  o.k = k;
  o.belief.assign(static_cast<std::size_t>(k), 0.0);
  o.uncertainty = 1.0;
  return o;
}

double Opinion::belief_sum() const {
  double s = 0.0;
  for (double b : belief) s += b;
  return s;
}

Opinion evidence_to_opinion(const std::vector<double>& evidence) {
  const int k = static_cast<int>(evidence.size());
  if (k == 0) throw ShapeError("evidence_to_opinion: empty evidence vector");
  double strength = static_cast<double>(k);
  for (double e : evidence) {
    if (!(e >= 0.0))
      throw ShapeError("evidence_to_opinion: negative evidence " +
                       std::to_string(e));
    strength += e;
  }
  Opinion o;
  o.k = k;
  o.belief.resize(evidence.size());
  for (std::size_t i = 0; i < evidence.size(); ++i)
    o.belief[i] = evidence[i] / strength;
  o.uncertainty = k / strength;
  return o;
}

Opinion ds_combine(const Opinion& a, const Opinion& b) {
  if (a.k != b.k)
    throw ShapeError("ds_combine: frame size mismatch K=" + std::to_string(a.k) +
                     " vs K=" + std::to_string(b.k));
  const int k = a.k;
  // conflict: mass the two sources put on different classes
  double sa = a.belief_sum();
  double sb = b.belief_sum();
  double agree = 0.0;
  for (int i = 0; i < k; ++i)
    agree += a.belief[static_cast<std::size_t>(i)] *
             b.belief[static_cast<std::size_t>(i)];
  double conflict = sa * sb - agree;
  double denom = 1.0 - conflict;
  if (denom <= 0.0)
    throw TotalConflictError("ds_combine: total conflict (C = " +
                             std::to_string(conflict) + ")");
  Opinion out;
  out.k = k;
  out.belief.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    std::size_t s = static_cast<std::size_t>(i);
    out.belief[s] = (a.belief[s] * b.belief[s] + a.belief[s] * b.uncertainty +
                     b.belief[s] * a.uncertainty) /
                    denom;
  }
  out.uncertainty = a.uncertainty * b.uncertainty / denom;
  return out;
}

DirichletEvidence opinion_to_evidence(const Opinion& o) {
  if (!(o.uncertainty > 0.0))
    throw DegenerateError(
        "opinion_to_evidence: zero uncertainty implies infinite Dirichlet "
        "strength");
  DirichletEvidence d;
  d.k = o.k;
  d.strength = o.k / o.uncertainty;
  d.evidence.resize(o.belief.size());
  d.alpha.resize(o.belief.size());
  for (std::size_t i = 0; i < o.belief.size(); ++i) {
    d.evidence[i] = o.belief[i] * d.strength;
    d.alpha[i] = d.evidence[i] + 1.0;
  }
  return d;
}

std::vector<double> modulate_risk(const std::vector<double>& fused_evidence,
                                  const std::vector<double>& s_risk) {
  if (fused_evidence.size() != s_risk.size())
    throw ShapeError("modulate_risk: evidence length " +
                     std::to_string(fused_evidence.size()) +
                     " vs risk length " + std::to_string(s_risk.size()));
  std::vector<double> out(s_risk.size());
  for (std::size_t i = 0; i < s_risk.size(); ++i)
    out[i] = (1.0 / (1.0 + std::exp(-fused_evidence[i]))) * s_risk[i];
  return out;
}

FusedNodes fuse_on_tape(Tape& tape, NodeId evidence_h, NodeId evidence_g) {
  const Tensor& eh = tape.value(evidence_h);
  const Tensor& eg = tape.value(evidence_g);
  if (eh.rows != 1 || eg.rows != 1 || eh.cols != eg.cols)
    throw ShapeError("fuse_on_tape: evidence rows must be 1x" +
                     std::to_string(eh.cols) + ", got " + eh.shape_str() +
                     " and " + eg.shape_str());
  const int k = eh.cols;
  const double kd = static_cast<double>(k);

  auto opinion_of = [&](NodeId e) {
    // S = sum(e) + K; b = e/S; u = K/S
    NodeId strength = tape.add(tape.sum(e), tape.constant(Tensor::full(1, 1, kd)));
    NodeId inv_strength = tape.reciprocal(strength);
    NodeId belief = tape.mul_scalar(e, inv_strength);
    NodeId uncertainty = tape.scale(inv_strength, kd);
    return std::pair<NodeId, NodeId>(belief, uncertainty);
  };

  auto [b1, u1] = opinion_of(evidence_h);
  auto [b2, u2] = opinion_of(evidence_g);

  // C = sum(b1) sum(b2) - sum(b1 (.) b2)
  NodeId cross = tape.mul(tape.sum(b1), tape.sum(b2));
  NodeId agree = tape.sum(tape.mul(b1, b2));
  NodeId conflict = tape.add(cross, tape.scale(agree, -1.0));
  {
    double c = tape.value(conflict).data[0];
    if (c >= 1.0)
      throw TotalConflictError("fuse_on_tape: total conflict (C = " +
                               std::to_string(c) + ")");
  }
  NodeId inv_denom = tape.reciprocal(
      tape.add(tape.constant(Tensor::full(1, 1, 1.0)), tape.scale(conflict, -1.0)));

  NodeId numer = tape.add(tape.add(tape.mul(b1, b2), tape.mul_scalar(b1, u2)),
                          tape.mul_scalar(b2, u1));
  NodeId belief = tape.mul_scalar(numer, inv_denom);
  NodeId uncertainty = tape.mul_scalar(tape.mul(u1, u2), inv_denom);

  // back to evidence: S = K/u, e = b*S
  NodeId strength = tape.scale(tape.reciprocal(uncertainty), kd);
  NodeId fused = tape.mul_scalar(belief, strength);

  return FusedNodes{belief, uncertainty, fused};
}

NodeId modulate_on_tape(Tape& tape, NodeId fused_evidence, NodeId s_risk) {
  return tape.mul(tape.activation(Act::sigmoid, fused_evidence), s_risk);
}

}  // namespace m2ef::evidential
