#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "m2ef/dataio.hpp"
#include "m2ef/model.hpp"
#include "m2ef/survival.hpp"

namespace m2ef::trainer {

struct TrainConfig {
  double learning_rate = 2e-4;
  double weight_decay = 1e-5;
  int epochs = 3;  // the planted-signal cohort saturates within a few epochs
  std::uint64_t seed = 1;
  int grad_accum = 1;          // patients per optimizer step
  double hazard_clamp = 1e-7;  // forwarded to the survival likelihood
  // hook for training the evidence heads with per-modality Dirichlet
  // objectives; not implemented, must stay false
  bool modality_evidence_loss = false;

  void validate() const;
};

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  std::map<std::string, Tensor> m;  // first moments
  std::map<std::string, Tensor> v;  // second moments
  long step = 0;
};

// Classic bias-corrected Adam with coupled L2 weight decay (decay added to
// the gradient before the moment update). Throws when a trainable parameter
// has no gradient.
void adam_step(model::ModelParams& params,
               const std::map<std::string, const Tensor*>& grads,
               AdamState& state, const TrainConfig& cfg);

struct Checkpoint {
  int format_version = 1;
  model::ModelConfig config;
  int wsi_dim = 0;
  std::vector<int> set_sizes;
  dataio::BinEdges edges;
  model::ModelParams params;
};

// One-line JSON header (format_version, model_config, bin_edges, tensor
// index name -> {offset, rows, cols}) then concatenated little-endian
// float64 payloads in index order. Round trips bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct EpochStats {
  int epoch = 0;          // 1-based
  double train_loss = 0.0;
  double val_cindex = 0.0;  // NaN when undefined on the fold
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochStats> history;
};

// Per-patient training: forward, evidential fusion, survival NLL, backward,
// Adam. Deterministic in (dataset, configs, seed).
TrainResult train(const dataio::Dataset& ds, const dataio::Fold& fold,
                  const model::ModelConfig& mcfg, const TrainConfig& tcfg);

struct EvalRow {
  std::string id;
  double time = 0.0;
  int event = 0;
  double risk = 0.0;             // scalar risk from o_risk
  std::vector<double> o_risk;    // modulated per-bin risk
  double u_h = 0.0, u_g = 0.0, u_fused = 0.0;
};

struct EvalResult {
  std::optional<survival::CIndexResult> cindex;
  std::vector<EvalRow> rows;
};

EvalResult evaluate(const Checkpoint& ckpt, const dataio::Dataset& ds,
                    const std::vector<int>& indices);

// Same evaluation against in-memory parameters (used inside train()).
EvalResult evaluate_params(const model::ModelParams& params,
                           const model::ModelConfig& cfg,
                           const dataio::Dataset& ds,
                           const std::vector<int>& indices);

}  // namespace m2ef::trainer
