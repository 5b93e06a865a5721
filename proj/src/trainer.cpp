#include "m2ef/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "m2ef/errors.hpp"
#include "m2ef/evidential.hpp"
#include "m2ef/rng.hpp"

namespace m2ef::trainer {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (grad_accum < 1) throw ConfigError("grad_accum must be >= 1");
  if (!(hazard_clamp > 0.0 && hazard_clamp < 0.5))
    throw ConfigError("hazard_clamp must be in (0, 0.5)");
  if (modality_evidence_loss)
    throw ConfigError(
        "modality_evidence_loss: per-modality Dirichlet objectives are a "
        "config hook only and are not implemented");
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

void adam_step(model::ModelParams& params,
               const std::map<std::string, const Tensor*>& grads,
               AdamState& state, const TrainConfig& cfg) {
  state.step += 1;
  const double b1 = AdamState::kBeta1, b2 = AdamState::kBeta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (auto& [name, w] : params.all()) {
    auto git = grads.find(name);
    if (git == grads.end())
      throw std::logic_error("adam_step: missing gradient for parameter '" +
                             name + "'");
    const Tensor& g = *git->second;
    if (!g.same_shape(w))
      throw ShapeError("adam_step: gradient shape " + g.shape_str() +
                       " vs parameter " + w.shape_str() + " for '" + name + "'");
    Tensor& m = state.m.try_emplace(name, w.rows, w.cols).first->second;
    Tensor& v = state.v.try_emplace(name, w.rows, w.cols).first->second;
    for (std::size_t i = 0; i < w.data.size(); ++i) {
      double gi = g.data[i] + cfg.weight_decay * w.data[i];
      m.data[i] = b1 * m.data[i] + (1.0 - b1) * gi;
      v.data[i] = b2 * v.data[i] + (1.0 - b2) * gi * gi;
      double mhat = m.data[i] / bc1;
      double vhat = v.data[i] / bc2;
      w.data[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + AdamState::kEps);
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoint persistence
// ---------------------------------------------------------------------------

namespace {

json config_to_json(const model::ModelConfig& c, int wsi_dim,
                    const std::vector<int>& set_sizes) {
  return json{{"d_model", c.d_model},
              {"n_bins", c.n_bins},
              {"n_sets", c.n_sets},
              {"heads", c.heads},
              {"ffn_dim", c.ffn_dim},
              {"encoder_layers", c.encoder_layers},
              {"dropout", c.dropout},
              {"attn_hidden", c.attn_hidden},
              {"coatt_heads", c.coatt_heads},
              {"gene_hidden", c.gene_hidden},
              {"wsi_dim", wsi_dim},
              {"gene_set_sizes", set_sizes}};
}

void config_from_json(const json& j, model::ModelConfig& c, int& wsi_dim,
                      std::vector<int>& set_sizes) {
  c.d_model = j.at("d_model").get<int>();
  c.n_bins = j.at("n_bins").get<int>();
  c.n_sets = j.at("n_sets").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.encoder_layers = j.at("encoder_layers").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.attn_hidden = j.at("attn_hidden").get<int>();
  c.coatt_heads = j.at("coatt_heads").get<int>();
  c.gene_hidden = j.at("gene_hidden").get<int>();
  wsi_dim = j.at("wsi_dim").get<int>();
  set_sizes = j.at("gene_set_sizes").get<std::vector<int>>();
}

void put_f64_le(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i)
    buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json index = json::object();
  std::size_t offset = 0;
  for (const auto& [name, t] : ckpt.params.all()) {
    index[name] = json{{"offset", offset}, {"rows", t.rows}, {"cols", t.cols}};
    offset += t.data.size() * 8;
  }
  json header = {{"format_version", ckpt.format_version},
                 {"model_config",
                  config_to_json(ckpt.config, ckpt.wsi_dim, ckpt.set_sizes)},
                 {"bin_edges", ckpt.edges.edges},
                 {"tensors", index}};
  std::string payload;
  payload.reserve(offset);
  for (const auto& [name, t] : ckpt.params.all())
    for (double v : t.data) put_f64_le(payload, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out << header.dump() << "\n";
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("short write to checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::string header_line;
  if (!std::getline(in, header_line))
    throw FormatError("checkpoint missing header line: " + path.string());
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw FormatError("checkpoint header is not valid JSON (" +
                      std::string(e.what()) + "): " + path.string());
  }
  Checkpoint ckpt;
  try {
    ckpt.format_version = header.at("format_version").get<int>();
    if (ckpt.format_version != 1)
      throw FormatError("checkpoint unknown format_version " +
                        std::to_string(ckpt.format_version) + ": " +
                        path.string());
    config_from_json(header.at("model_config"), ckpt.config, ckpt.wsi_dim,
                     ckpt.set_sizes);
    ckpt.edges.edges = header.at("bin_edges").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw FormatError("checkpoint header malformed (" + std::string(e.what()) +
                      "): " + path.string());
  }

  std::string payload((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  const json& index = header.at("tensors");
  std::size_t total = 0;
  for (const auto& [name, entry] : index.items()) {
    std::size_t rows = entry.at("rows").get<std::size_t>();
    std::size_t cols = entry.at("cols").get<std::size_t>();
    total += rows * cols * 8;
  }
  if (payload.size() != total)
    throw FormatError("checkpoint payload length " +
                      std::to_string(payload.size()) + " != expected " +
                      std::to_string(total) + ": " + path.string());
  const auto* base = reinterpret_cast<const unsigned char*>(payload.data());
  for (const auto& [name, entry] : index.items()) {
    int rows = entry.at("rows").get<int>();
    int cols = entry.at("cols").get<int>();
    std::size_t offset = entry.at("offset").get<std::size_t>();
    std::size_t bytes = static_cast<std::size_t>(rows) * cols * 8;
    if (offset + bytes > payload.size())
      throw FormatError("checkpoint tensor '" + name + "' overruns payload: " +
                        path.string());
    Tensor t(rows, cols);
    const unsigned char* p = base + offset;
    for (std::size_t i = 0; i < t.data.size(); ++i, p += 8)
      t.data[i] = get_f64_le(p);
    ckpt.params.all()[name] = std::move(t);
  }
  return ckpt;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

// forward -> evidential fusion -> modulated risk -> survival NLL, on tape
NodeId patient_loss_node(Tape& tape, const model::BoundParams& bound,
                         const model::ModelConfig& mcfg,
                         const std::vector<std::vector<int>>& members,
                         const dataio::PatientRecord& rec,
                         const survival::SurvivalLabel& label,
                         double hazard_clamp, Rng* dropout_rng) {
  model::ForwardNodes f = model::forward(tape, bound, mcfg, members,
                                         rec.wsi_bag, rec.gene_values,
                                         dropout_rng);
  evidential::FusedNodes fused = evidential::fuse_on_tape(tape, f.e_h, f.e_g);
  NodeId o_risk = evidential::modulate_on_tape(tape, fused.fused_evidence,
                                               f.s_risk);
  return tape.survival_nll(o_risk, label.bin, label.event == 1, hazard_clamp);
}

std::vector<double> row_vector(const Tensor& t) {
  return std::vector<double>(t.data.begin(), t.data.end());
}

}  // namespace

EvalResult evaluate_params(const model::ModelParams& params,
                           const model::ModelConfig& cfg,
                           const dataio::Dataset& ds,
                           const std::vector<int>& indices) {
  const auto members = ds.gene_sets.members();
  EvalResult res;
  std::vector<double> risks;
  std::vector<survival::SurvivalLabel> labels;
  for (int idx : indices) {
    const dataio::PatientRecord& rec =
        ds.records.at(static_cast<std::size_t>(idx));
    model::ForwardOutput out =
        model::forward_eval(params, cfg, members, rec.wsi_bag, rec.gene_values);
    evidential::Opinion oh = evidential::evidence_to_opinion(row_vector(out.e_h));
    evidential::Opinion og = evidential::evidence_to_opinion(row_vector(out.e_g));
    evidential::Opinion fused = evidential::ds_combine(oh, og);
    evidential::DirichletEvidence ev = evidential::opinion_to_evidence(fused);
    std::vector<double> o_risk =
        evidential::modulate_risk(ev.evidence, row_vector(out.s_risk));

    EvalRow row;
    row.id = rec.id;
    row.time = rec.survival_months;
    row.event = rec.event();
    row.o_risk = o_risk;
    row.risk = survival::scalar_risk(o_risk);
    row.u_h = oh.uncertainty;
    row.u_g = og.uncertainty;
    row.u_fused = fused.uncertainty;
    risks.push_back(row.risk);
    labels.push_back(survival::SurvivalLabel{0, row.time, row.event});
    res.rows.push_back(std::move(row));
  }
  res.cindex = survival::c_index(risks, labels);
  return res;
}

EvalResult evaluate(const Checkpoint& ckpt, const dataio::Dataset& ds,
                    const std::vector<int>& indices) {
  if (ckpt.wsi_dim != ds.wsi_dim)
    throw ShapeError("evaluate: checkpoint wsi_dim " +
                     std::to_string(ckpt.wsi_dim) + " vs dataset " +
                     std::to_string(ds.wsi_dim));
  if (ckpt.set_sizes != ds.gene_sets.set_sizes())
    throw ShapeError("evaluate: checkpoint gene-set sizes do not match dataset");
  return evaluate_params(ckpt.params, ckpt.config, ds, indices);
}

TrainResult train(const dataio::Dataset& ds, const dataio::Fold& fold,
                  const model::ModelConfig& mcfg, const TrainConfig& tcfg) {
  mcfg.validate();
  tcfg.validate();
  for (int idx : fold.train)
    if (idx < 0 || idx >= ds.n_patients())
      throw ConfigError("train: fold index " + std::to_string(idx) +
                        " out of range");
  for (int idx : fold.val)
    if (idx < 0 || idx >= ds.n_patients())
      throw ConfigError("train: fold index " + std::to_string(idx) +
                        " out of range");
  if (fold.train.empty()) throw ConfigError("train: empty training fold");

  auto [edges, labels] = dataio::discretize_times(ds, mcfg.n_bins);
  const auto members = ds.gene_sets.members();

  model::ModelParams params = model::ModelParams::init(
      mcfg, ds.wsi_dim, ds.gene_sets.set_sizes(), tcfg.seed);
  AdamState state;
  Rng master(tcfg.seed);
  Rng shuffle_rng = master.fork(1);
  Rng dropout_rng = master.fork(2);

  const bool use_dropout = mcfg.dropout > 0.0;
  std::map<std::string, Tensor> acc;  // gradient accumulation buffers
  int acc_count = 0;

  auto flush_accumulated = [&]() {
    if (acc_count == 0) return;
    std::map<std::string, const Tensor*> grads;
    if (acc_count > 1)
      for (auto& [name, g] : acc) {
        for (double& v : g.data) v /= acc_count;
      }
    for (auto& [name, g] : acc) grads[name] = &g;
    adam_step(params, grads, state, tcfg);
    acc_count = 0;
  };

  TrainResult result;
  std::vector<int> order = fold.train;
  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (int idx : order) {
      const dataio::PatientRecord& rec =
          ds.records.at(static_cast<std::size_t>(idx));
      const survival::SurvivalLabel& label =
          labels.at(static_cast<std::size_t>(idx));
      Tape tape;
      model::BoundParams bound = model::bind(tape, params, true);
      NodeId loss =
          patient_loss_node(tape, bound, mcfg, members, rec, label,
                            tcfg.hazard_clamp,
                            use_dropout ? &dropout_rng : nullptr);
      double lv = tape.value(loss).data[0];
      if (!std::isfinite(lv))
        throw std::runtime_error("train: non-finite loss for patient " +
                                 rec.id + " (epoch " + std::to_string(epoch) +
                                 ")");
      loss_sum += lv;
      tape.backward(loss);

      if (tcfg.grad_accum == 1) {
        std::map<std::string, const Tensor*> grads;
        for (const auto& [name, id] : bound.ids) grads[name] = &tape.grad(id);
        adam_step(params, grads, state, tcfg);
      } else {
        for (const auto& [name, id] : bound.ids) {
          const Tensor& g = tape.grad(id);
          auto [it, inserted] = acc.try_emplace(name, g.rows, g.cols);
          if (acc_count == 0 && !inserted)
            std::fill(it->second.data.begin(), it->second.data.end(), 0.0);
          for (std::size_t i = 0; i < g.data.size(); ++i)
            it->second.data[i] += g.data[i];
        }
        if (++acc_count == tcfg.grad_accum) flush_accumulated();
      }
    }
    flush_accumulated();

    EvalResult val = evaluate_params(params, mcfg, ds, fold.val);
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.val_cindex = val.cindex ? val.cindex->value
                                  : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(stats);
  }

  result.checkpoint.format_version = 1;
  result.checkpoint.config = mcfg;
  result.checkpoint.wsi_dim = ds.wsi_dim;
  result.checkpoint.set_sizes = ds.gene_sets.set_sizes();
  result.checkpoint.edges = edges;
  result.checkpoint.params = std::move(params);
  return result;
}

}  // namespace m2ef::trainer
