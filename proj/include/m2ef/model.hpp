#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "m2ef/rng.hpp"
#include "m2ef/tape.hpp"
#include "m2ef/tensor.hpp"

namespace m2ef::model {

struct ModelConfig {
  int d_model = 256;       // shared embedding width
  int n_bins = 4;          // K survival intervals / risk classes
  int n_sets = 6;          // gene functional categories
  int heads = 4;           // encoder self-attention heads
  int ffn_dim = 512;
  int encoder_layers = 2;  // per path
  double dropout = 0.25;
  int attn_hidden = 256;   // gated-pooling hidden width
  int coatt_heads = 1;     // co-attention as written is single-head
  int gene_hidden = 256;   // per-category encoder hidden width

  void validate() const;
};

// All trainable tensors, addressable by name. std::map keeps iteration
// (and therefore init draws, checkpoint layout, Adam order) deterministic.
class ModelParams {
 public:
  using Map = std::map<std::string, Tensor>;

  // Xavier-uniform weights, zero biases, unit layer-norm gains; identical
  // seeds give identical parameters.
  static ModelParams init(const ModelConfig& cfg, int wsi_dim,
                          const std::vector<int>& set_sizes,
                          std::uint64_t seed);

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  Map& all() { return tensors_; }
  const Map& all() const { return tensors_; }
  std::size_t scalar_count() const;

 private:
  Map tensors_;
};

// Tape handles for every bound parameter; same keys as the ModelParams map.
struct BoundParams {
  std::map<std::string, NodeId> ids;
  NodeId id(const std::string& name) const;
};

// Registers every parameter as a tape leaf. The ModelParams object must
// outlive the tape.
BoundParams bind(Tape& tape, const ModelParams& params, bool trainable);

struct ForwardNodes {
  NodeId h_proj;        // M x d projected WSI bag
  NodeId g_bag;         // n_sets x d gene-set embeddings
  NodeId h_hat;         // n_sets x d genomic-guided image embeddings
  NodeId a_coat;        // n_sets x M co-attention matrix
  NodeId r_h, r_g;      // pooled path vectors, 1 x d
  NodeId pool_h, pool_g;  // gated-pooling weights, 1 x n_sets
  NodeId r_fusion;      // 1 x d
  NodeId s_risk;        // 1 x K in (0,1)
  NodeId e_h, e_g;      // 1 x K nonnegative evidence
};

// Per-category two-layer encoders (ReLU then linear), rows packed in
// category order -> n_sets x d_model.
NodeId encode_genes(Tape& tape, const BoundParams& p, const ModelConfig& cfg,
                    const std::vector<std::vector<int>>& set_members,
                    const Tensor& gene_values);

// Genomic-guided co-attention: queries from the gene bag, keys/values from
// the projected WSI bag. Returns (h_hat, a_coat); with several heads a_coat
// is their mean.
std::pair<NodeId, NodeId> coattention(Tape& tape, const BoundParams& p,
                                      const ModelConfig& cfg, NodeId g_bag,
                                      NodeId h_proj);

// Two post-norm transformer encoder layers followed by gated attention
// pooling; path is 'h' or 'g'. Returns (pooled 1 x d, weights 1 x n).
// dropout_rng == nullptr disables dropout (eval mode).
std::pair<NodeId, NodeId> encode_and_pool(Tape& tape, const BoundParams& p,
                                          const ModelConfig& cfg, NodeId bag,
                                          char path, Rng* dropout_rng);

// concat + two ReLU FC layers -> 1 x d_model
NodeId late_fuse(Tape& tape, const BoundParams& p, const ModelConfig& cfg,
                 NodeId r_h, NodeId r_g);

ForwardNodes forward(Tape& tape, const BoundParams& p, const ModelConfig& cfg,
                     const std::vector<std::vector<int>>& set_members,
                     const Tensor& wsi_bag, const Tensor& gene_values,
                     Rng* dropout_rng);

// Plain-value forward with dropout off; pure function of (inputs, params).
struct ForwardOutput {
  Tensor s_risk, e_h, e_g;
  Tensor r_h, r_g, r_fusion;
  Tensor a_coat;
  Tensor pool_h, pool_g;
};

ForwardOutput forward_eval(const ModelParams& params, const ModelConfig& cfg,
                           const std::vector<std::vector<int>>& set_members,
                           const Tensor& wsi_bag, const Tensor& gene_values);

}  // namespace m2ef::model
