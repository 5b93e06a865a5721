#include "m2ef/model.hpp"

#include <cmath>

#include "m2ef/errors.hpp"

namespace m2ef::model {

void ModelConfig::validate() const {
  if (d_model < 1 || n_bins < 1 || n_sets < 1 || heads < 1 || ffn_dim < 1 ||
      encoder_layers < 1 || attn_hidden < 1 || coatt_heads < 1 ||
      gene_hidden < 1)
    throw ConfigError("model config: all dims must be >= 1");
  if (d_model % heads != 0)
    throw ConfigError("model config: d_model=" + std::to_string(d_model) +
                      " not divisible by heads=" + std::to_string(heads));
  if (d_model % coatt_heads != 0)
    throw ConfigError("model config: d_model=" + std::to_string(d_model) +
                      " not divisible by coatt_heads=" +
                      std::to_string(coatt_heads));
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw ConfigError("model config: dropout must be in [0, 1)");
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

namespace {

Tensor xavier(int out_dim, int in_dim, Rng& rng) {
  Tensor w(out_dim, in_dim);
  double bound = std::sqrt(6.0 / (in_dim + out_dim));
  for (double& v : w.data) v = rng.uniform(-bound, bound);
  return w;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& cfg, int wsi_dim,
                              const std::vector<int>& set_sizes,
                              std::uint64_t seed) {
  cfg.validate();
  if (wsi_dim < 1) throw ConfigError("init: wsi_dim must be >= 1");
  if (static_cast<int>(set_sizes.size()) != cfg.n_sets)
    throw ConfigError("init: got " + std::to_string(set_sizes.size()) +
                      " gene-set sizes for n_sets=" + std::to_string(cfg.n_sets));
  Rng rng(seed);
  ModelParams p;
  auto& t = p.tensors_;
  const int d = cfg.d_model;

  auto fc = [&](const std::string& prefix, int out_dim, int in_dim) {
    t[prefix + ".weight"] = xavier(out_dim, in_dim, rng);
    t[prefix + ".bias"] = Tensor(1, out_dim);
  };

  fc("wsi_proj", d, wsi_dim);
  for (int c = 0; c < cfg.n_sets; ++c) {
    int sz = set_sizes[static_cast<std::size_t>(c)];
    if (sz < 1) throw ConfigError("init: empty gene set " + std::to_string(c));
    std::string base = "gene_enc." + std::to_string(c);
    fc(base + ".fc1", cfg.gene_hidden, sz);
    fc(base + ".fc2", d, cfg.gene_hidden);
  }
  t["coatt.wq"] = xavier(d, d, rng);
  t["coatt.wk"] = xavier(d, d, rng);
  t["coatt.wv"] = xavier(d, d, rng);

  for (char path : {'h', 'g'}) {
    for (int l = 0; l < cfg.encoder_layers; ++l) {
      std::string base = std::string("enc.") + path + "." + std::to_string(l);
      t[base + ".attn.wq"] = xavier(d, d, rng);
      t[base + ".attn.wk"] = xavier(d, d, rng);
      t[base + ".attn.wv"] = xavier(d, d, rng);
      t[base + ".attn.wo"] = xavier(d, d, rng);
      t[base + ".ln1.gain"] = Tensor::ones(1, d);
      t[base + ".ln1.bias"] = Tensor(1, d);
      fc(base + ".ffn.fc1", cfg.ffn_dim, d);
      fc(base + ".ffn.fc2", d, cfg.ffn_dim);
      t[base + ".ln2.gain"] = Tensor::ones(1, d);
      t[base + ".ln2.bias"] = Tensor(1, d);
    }
    std::string pool = std::string("pool.") + path;
    t[pool + ".gate_w"] = xavier(1, cfg.attn_hidden, rng);
    t[pool + ".gate_v"] = xavier(cfg.attn_hidden, d, rng);
    t[pool + ".gate_u"] = xavier(cfg.attn_hidden, d, rng);
    t[pool + ".out"] = xavier(d, d, rng);
  }

  fc("fusion.fc1", d, 2 * d);
  fc("fusion.fc2", d, d);
  fc("risk", cfg.n_bins, d);
  fc("evidence_h", cfg.n_bins, d);
  fc("evidence_g", cfg.n_bins, d);
  return p;
}

Tensor& ModelParams::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end())
    throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

const Tensor& ModelParams::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end())
    throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

bool ModelParams::contains(const std::string& name) const {
  return tensors_.count(name) != 0;
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.data.size();
  return n;
}

BoundParams bind(Tape& tape, const ModelParams& params, bool trainable) {
  BoundParams b;
  for (const auto& [name, t] : params.all())
    b.ids[name] = tape.leaf(t, trainable);
  return b;
}

NodeId BoundParams::id(const std::string& name) const {
  auto it = ids.find(name);
  if (it == ids.end())
    throw std::out_of_range("no bound parameter named '" + name + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

namespace {

// y = x W^T (+ bias broadcast over rows, composed via a ones column)
NodeId linear(Tape& t, NodeId x, NodeId w, NodeId b = -1) {
  NodeId y = t.matmul_nt(x, w);
  if (b < 0) return y;
  const Tensor& yv = t.value(y);
  if (yv.rows == 1) return t.add(y, b);
  NodeId ones = t.constant(Tensor::ones(yv.rows, 1));
  return t.add(y, t.matmul(ones, b));
}

// inverted-scaling dropout as multiplication by a seeded 0 / (1/keep) mask
NodeId dropout(Tape& t, NodeId x, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return x;
  const Tensor& xv = t.value(x);
  Tensor mask(xv.rows, xv.cols);
  const double inv_keep = 1.0 / (1.0 - rate);
  for (double& m : mask.data) m = rng->uniform() >= rate ? inv_keep : 0.0;
  return t.mul(x, t.constant(std::move(mask)));
}

// scaled-dot-product attention split over `heads` column slices
NodeId multihead_attention(Tape& t, NodeId q_in, NodeId kv_in, NodeId wq,
                           NodeId wk, NodeId wv, int heads,
                           std::vector<NodeId>* att_out = nullptr) {
  NodeId q = t.matmul_nt(q_in, wq);
  NodeId k = t.matmul_nt(kv_in, wk);
  NodeId v = t.matmul_nt(kv_in, wv);
  const int d = t.value(q).cols;
  const int dh = d / heads;
  std::vector<NodeId> parts;
  parts.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    NodeId qh = heads == 1 ? q : t.slice_cols(q, h * dh, (h + 1) * dh);
    NodeId kh = heads == 1 ? k : t.slice_cols(k, h * dh, (h + 1) * dh);
    NodeId vh = heads == 1 ? v : t.slice_cols(v, h * dh, (h + 1) * dh);
    NodeId att = t.row_softmax(t.scale(t.matmul_nt(qh, kh), 1.0 / std::sqrt(dh)));
    if (att_out) att_out->push_back(att);
    parts.push_back(t.matmul(att, vh));
  }
  return heads == 1 ? parts[0] : t.concat_cols(parts);
}

NodeId encoder_layer(Tape& t, const BoundParams& p, const ModelConfig& cfg,
                     NodeId x, const std::string& base, Rng* dropout_rng) {
  NodeId att = multihead_attention(t, x, x, p.id(base + ".attn.wq"),
                                   p.id(base + ".attn.wk"),
                                   p.id(base + ".attn.wv"), cfg.heads);
  att = t.matmul_nt(att, p.id(base + ".attn.wo"));
  att = dropout(t, att, cfg.dropout, dropout_rng);
  x = t.row_layernorm(t.add(x, att), p.id(base + ".ln1.gain"),
                      p.id(base + ".ln1.bias"));
  NodeId f = linear(t, x, p.id(base + ".ffn.fc1.weight"),
                    p.id(base + ".ffn.fc1.bias"));
  f = t.activation(Act::relu, f);
  f = linear(t, f, p.id(base + ".ffn.fc2.weight"), p.id(base + ".ffn.fc2.bias"));
  f = dropout(t, f, cfg.dropout, dropout_rng);
  return t.row_layernorm(t.add(x, f), p.id(base + ".ln2.gain"),
                         p.id(base + ".ln2.bias"));
}

}  // namespace

// ---------------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------------

NodeId encode_genes(Tape& tape, const BoundParams& p, const ModelConfig& cfg,
                    const std::vector<std::vector<int>>& set_members,
                    const Tensor& gene_values) {
  if (static_cast<int>(set_members.size()) != cfg.n_sets)
    throw ShapeError("encode_genes: " + std::to_string(set_members.size()) +
                     " gene sets for n_sets=" + std::to_string(cfg.n_sets));
  int total = 0;
  for (const auto& m : set_members) total += static_cast<int>(m.size());
  if (gene_values.rows != 1 || gene_values.cols != total)
    throw ShapeError("encode_genes: gene vector " + gene_values.shape_str() +
                     " does not cover " + std::to_string(total) + " genes");
  std::vector<NodeId> rows_as_cols;
  rows_as_cols.reserve(set_members.size());
  for (int c = 0; c < cfg.n_sets; ++c) {
    const auto& members = set_members[static_cast<std::size_t>(c)];
    Tensor gathered(1, static_cast<int>(members.size()));
    for (std::size_t i = 0; i < members.size(); ++i)
      gathered.data[i] =
          gene_values.data[static_cast<std::size_t>(members[i])];
    std::string base = "gene_enc." + std::to_string(c);
    NodeId x = tape.constant(std::move(gathered));
    NodeId h = tape.activation(
        Act::relu,
        linear(tape, x, p.id(base + ".fc1.weight"), p.id(base + ".fc1.bias")));
    NodeId g =
        linear(tape, h, p.id(base + ".fc2.weight"), p.id(base + ".fc2.bias"));
    rows_as_cols.push_back(tape.transpose(g));
  }
  return tape.transpose(tape.concat_cols(rows_as_cols));
}

std::pair<NodeId, NodeId> coattention(Tape& tape, const BoundParams& p,
                                      const ModelConfig& cfg, NodeId g_bag,
                                      NodeId h_proj) {
  std::vector<NodeId> atts;
  NodeId h_hat = multihead_attention(tape, g_bag, h_proj, p.id("coatt.wq"),
                                     p.id("coatt.wk"), p.id("coatt.wv"),
                                     cfg.coatt_heads, &atts);
  NodeId a_coat = atts[0];
  for (std::size_t i = 1; i < atts.size(); ++i)
    a_coat = tape.add(a_coat, atts[i]);
  if (atts.size() > 1) a_coat = tape.scale(a_coat, 1.0 / atts.size());
  return {h_hat, a_coat};
}

std::pair<NodeId, NodeId> encode_and_pool(Tape& tape, const BoundParams& p,
                                          const ModelConfig& cfg, NodeId bag,
                                          char path, Rng* dropout_rng) {
  if (tape.value(bag).rows < 1) throw ShapeError("encode_and_pool: empty bag");
  NodeId x = bag;
  for (int l = 0; l < cfg.encoder_layers; ++l)
    x = encoder_layer(tape, p, cfg,
                      x, std::string("enc.") + path + "." + std::to_string(l),
                      dropout_rng);
  const std::string pool = std::string("pool.") + path;
  NodeId gates = tape.mul(
      tape.activation(Act::tanh, tape.matmul_nt(x, p.id(pool + ".gate_v"))),
      tape.activation(Act::sigmoid, tape.matmul_nt(x, p.id(pool + ".gate_u"))));
  NodeId logits = tape.matmul_nt(gates, p.id(pool + ".gate_w"));  // n x 1
  NodeId weights = tape.row_softmax(tape.transpose(logits));      // 1 x n
  NodeId pooled = tape.row_weighted_sum(x, weights);
  NodeId r = tape.activation(Act::relu,
                             tape.matmul_nt(pooled, p.id(pool + ".out")));
  return {r, weights};
}

NodeId late_fuse(Tape& tape, const BoundParams& p, const ModelConfig& cfg,
                 NodeId r_h, NodeId r_g) {
  if (tape.value(r_h).cols != cfg.d_model ||
      tape.value(r_g).cols != cfg.d_model)
    throw ShapeError("late_fuse: inputs must be 1x" +
                     std::to_string(cfg.d_model) + ", got " +
                     tape.value(r_h).shape_str() + " and " +
                     tape.value(r_g).shape_str());
  NodeId z = tape.concat_cols({r_h, r_g});
  z = tape.activation(Act::relu, linear(tape, z, p.id("fusion.fc1.weight"),
                                        p.id("fusion.fc1.bias")));
  return tape.activation(Act::relu, linear(tape, z, p.id("fusion.fc2.weight"),
                                           p.id("fusion.fc2.bias")));
}

ForwardNodes forward(Tape& tape, const BoundParams& p, const ModelConfig& cfg,
                     const std::vector<std::vector<int>>& set_members,
                     const Tensor& wsi_bag, const Tensor& gene_values,
                     Rng* dropout_rng) {
  const Tensor& wproj = tape.value(p.id("wsi_proj.weight"));
  if (wsi_bag.cols != wproj.cols || wsi_bag.rows < 1)
    throw ShapeError("forward: wsi bag " + wsi_bag.shape_str() +
                     " incompatible with projection expecting Mx" +
                     std::to_string(wproj.cols));
  ForwardNodes out;
  NodeId wsi = tape.leaf(wsi_bag, false);
  out.h_proj =
      linear(tape, wsi, p.id("wsi_proj.weight"), p.id("wsi_proj.bias"));
  out.g_bag = encode_genes(tape, p, cfg, set_members, gene_values);
  std::tie(out.h_hat, out.a_coat) =
      coattention(tape, p, cfg, out.g_bag, out.h_proj);
  std::tie(out.r_h, out.pool_h) =
      encode_and_pool(tape, p, cfg, out.h_hat, 'h', dropout_rng);
  std::tie(out.r_g, out.pool_g) =
      encode_and_pool(tape, p, cfg, out.g_bag, 'g', dropout_rng);
  out.r_fusion = late_fuse(tape, p, cfg, out.r_h, out.r_g);
  out.s_risk = tape.activation(
      Act::sigmoid,
      linear(tape, out.r_fusion, p.id("risk.weight"), p.id("risk.bias")));
  out.e_h = tape.activation(
      Act::softplus,
      linear(tape, out.r_h, p.id("evidence_h.weight"), p.id("evidence_h.bias")));
  out.e_g = tape.activation(
      Act::softplus,
      linear(tape, out.r_g, p.id("evidence_g.weight"), p.id("evidence_g.bias")));
  return out;
}

ForwardOutput forward_eval(const ModelParams& params, const ModelConfig& cfg,
                           const std::vector<std::vector<int>>& set_members,
                           const Tensor& wsi_bag, const Tensor& gene_values) {
  Tape tape;
  BoundParams p = bind(tape, params, false);
  ForwardNodes n =
      forward(tape, p, cfg, set_members, wsi_bag, gene_values, nullptr);
  ForwardOutput out;
  out.s_risk = tape.value(n.s_risk);
  out.e_h = tape.value(n.e_h);
  out.e_g = tape.value(n.e_g);
  out.r_h = tape.value(n.r_h);
  out.r_g = tape.value(n.r_g);
  out.r_fusion = tape.value(n.r_fusion);
  out.a_coat = tape.value(n.a_coat);
  out.pool_h = tape.value(n.pool_h);
  out.pool_g = tape.value(n.pool_g);
  return out;
}

}  // namespace m2ef::model
