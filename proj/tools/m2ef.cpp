// m2ef: synthetic-cohort generation, training, evaluation, Kaplan-Meier
// risk stratification, and co-attention export for the survival pipeline.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "m2ef/dataio.hpp"
#include "m2ef/errors.hpp"
#include "m2ef/evidential.hpp"
#include "m2ef/kernels.hpp"
#include "m2ef/model.hpp"
#include "m2ef/survival.hpp"
#include "m2ef/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace m2ef;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// RunConfig: merged model + training configuration from an optional JSON
// file with command-line overrides. Unknown keys are rejected.
// ---------------------------------------------------------------------------

struct RunConfig {
  model::ModelConfig model;
  trainer::TrainConfig train;

  void load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw ConfigError("config file is not valid JSON (" +
                        std::string(e.what()) + "): " + path.string());
    }
    for (const auto& [key, value] : doc.items()) {
      if (key == "d_model") model.d_model = value.get<int>();
      else if (key == "n_bins") model.n_bins = value.get<int>();
      else if (key == "n_sets") model.n_sets = value.get<int>();
      else if (key == "heads") model.heads = value.get<int>();
      else if (key == "ffn_dim") model.ffn_dim = value.get<int>();
      else if (key == "encoder_layers") model.encoder_layers = value.get<int>();
      else if (key == "dropout") model.dropout = value.get<double>();
      else if (key == "attn_hidden") model.attn_hidden = value.get<int>();
      else if (key == "coatt_heads") model.coatt_heads = value.get<int>();
      else if (key == "gene_hidden") model.gene_hidden = value.get<int>();
      else if (key == "learning_rate") train.learning_rate = value.get<double>();
      else if (key == "weight_decay") train.weight_decay = value.get<double>();
      else if (key == "epochs") train.epochs = value.get<int>();
      else if (key == "seed") train.seed = value.get<std::uint64_t>();
      else if (key == "grad_accum") train.grad_accum = value.get<int>();
      else if (key == "hazard_clamp") train.hazard_clamp = value.get<double>();
      else if (key == "modality_evidence_loss")
        train.modality_evidence_loss = value.get<bool>();
      else
        throw ConfigError("config file: unknown key '" + key + "'");
    }
  }

  void validate() const {
    model.validate();
    train.validate();
  }
};

struct ConfigFlags {
  std::string config_path;
  int epochs = 0;
  double lr = 0.0, weight_decay = -1.0, dropout = -1.0;
  std::uint64_t seed = 0;
  int grad_accum = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run-config file");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--weight-decay", weight_decay, "coupled L2 weight decay");
    cmd->add_option("--dropout", dropout, "dropout rate in encoders");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--grad-accum", grad_accum, "patients per optimizer step");
  }

  RunConfig resolve(const CLI::App* cmd) const {
    RunConfig rc;
    if (!config_path.empty()) rc.load_file(config_path);
    if (cmd->count("--epochs")) rc.train.epochs = epochs;
    if (cmd->count("--lr")) rc.train.learning_rate = lr;
    if (cmd->count("--weight-decay")) rc.train.weight_decay = weight_decay;
    if (cmd->count("--dropout")) rc.model.dropout = dropout;
    if (cmd->count("--seed")) rc.train.seed = seed;
    if (cmd->count("--grad-accum")) rc.train.grad_accum = grad_accum;
    rc.validate();
    return rc;
  }
};

std::vector<int> all_indices(const dataio::Dataset& ds) {
  std::vector<int> idx(static_cast<std::size_t>(ds.n_patients()));
  for (int i = 0; i < ds.n_patients(); ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

void write_risks_csv(const fs::path& path, const trainer::EvalResult& res,
                     int n_bins) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write risks csv: " + path.string());
  out << "patient_id,time,event,scalar_risk";
  for (int k = 0; k < n_bins; ++k) out << ",o_risk_" << k;
  out << ",u_h,u_g,u_fused\n";
  for (const auto& row : res.rows) {
    out << row.id << "," << fmt_double(row.time) << "," << row.event << ","
        << fmt_double(row.risk);
    for (double v : row.o_risk) out << "," << fmt_double(v);
    out << "," << fmt_double(row.u_h) << "," << fmt_double(row.u_g) << ","
        << fmt_double(row.u_fused) << "\n";
  }
}

// minimal CSV row splitter (fields never contain commas here)
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_synth(const dataio::SynthConfig& cfg, const fs::path& out_dir) {
  dataio::SynthInfo info = dataio::synth_generate(cfg, out_dir);
  int censored = 0;
  for (int s : info.status) censored += s;
  int min_bag = 0, max_bag = 0;
  double mean_bag = 0.0;
  {
    dataio::Dataset ds = dataio::load_dataset(out_dir / "manifest.json");
    min_bag = ds.records.front().wsi_bag.rows;
    max_bag = min_bag;
    for (const auto& r : ds.records) {
      min_bag = std::min(min_bag, r.wsi_bag.rows);
      max_bag = std::max(max_bag, r.wsi_bag.rows);
      mean_bag += r.wsi_bag.rows;
    }
    mean_bag /= ds.n_patients();
  }
  std::cout << "wrote " << cfg.patients << " patients to " << out_dir.string()
            << "\n"
            << "censored: " << censored << " ("
            << fmt_double(100.0 * censored / cfg.patients) << "%)\n"
            << "bag size: min " << min_bag << ", mean " << fmt_double(mean_bag)
            << ", max " << max_bag << "\n";
  return 0;
}

int cmd_train(const fs::path& data, const fs::path& ckpt_path,
              const fs::path& history_path, int folds, int fold_index,
              const RunConfig& rc) {
  dataio::Dataset ds = dataio::load_dataset(data);
  std::vector<dataio::Fold> splits =
      dataio::kfold_split(ds.n_patients(), folds, rc.train.seed);
  if (fold_index < 0 || fold_index >= folds)
    throw ConfigError("--fold must be in [0, " + std::to_string(folds) + ")");
  trainer::TrainResult result = trainer::train(
      ds, splits[static_cast<std::size_t>(fold_index)], rc.model, rc.train);

  trainer::save_checkpoint(result.checkpoint, ckpt_path);
  std::ofstream hist(history_path, std::ios::trunc);
  if (!hist) throw IoError("cannot write history csv: " + history_path.string());
  hist << "epoch,train_loss,val_cindex\n";
  for (const auto& e : result.history)
    hist << e.epoch << "," << fmt_double(e.train_loss) << ","
         << fmt_double(e.val_cindex) << "\n";

  const auto& last = result.history.back();
  std::cout << "fold " << fold_index << "/" << folds << ": final train loss "
            << fmt_double(last.train_loss) << ", val c-index "
            << fmt_double(last.val_cindex) << "\n"
            << "checkpoint: " << ckpt_path.string() << "\n"
            << "history: " << history_path.string() << "\n";
  return 0;
}

std::vector<int> resolve_eval_indices(const dataio::Dataset& ds,
                                      const std::string& split, int folds,
                                      int fold_index, std::uint64_t seed) {
  if (split == "all") return all_indices(ds);
  std::vector<dataio::Fold> splits =
      dataio::kfold_split(ds.n_patients(), folds, seed);
  if (fold_index < 0 || fold_index >= folds)
    throw ConfigError("--fold must be in [0, " + std::to_string(folds) + ")");
  const dataio::Fold& f = splits[static_cast<std::size_t>(fold_index)];
  if (split == "val") return f.val;
  if (split == "train") return f.train;
  throw ConfigError("--split must be one of all|val|train, got '" + split + "'");
}

int cmd_eval(const fs::path& data, const fs::path& ckpt_path,
             const fs::path& metrics_path, const fs::path& risks_path,
             const std::string& split, int folds, int fold_index,
             std::uint64_t seed) {
  dataio::Dataset ds = dataio::load_dataset(data);
  trainer::Checkpoint ckpt = trainer::load_checkpoint(ckpt_path);
  std::vector<int> indices =
      resolve_eval_indices(ds, split, folds, fold_index, seed);
  trainer::EvalResult res = trainer::evaluate(ckpt, ds, indices);

  json metrics = {
      {"c_index", res.cindex ? json(res.cindex->value) : json(nullptr)},
      {"n_patients", indices.size()},
      {"n_comparable_pairs", res.cindex ? res.cindex->comparable_pairs : 0}};
  std::ofstream mout(metrics_path, std::ios::trunc);
  if (!mout) throw IoError("cannot write metrics json: " + metrics_path.string());
  mout << metrics.dump(2) << "\n";

  write_risks_csv(risks_path, res, ckpt.config.n_bins);
  std::cout << "evaluated " << indices.size() << " patients, c-index "
            << (res.cindex ? fmt_double(res.cindex->value) : "undefined")
            << "\n";
  return 0;
}

int cmd_km(const fs::path& risks_path, const fs::path& curves_path,
           const fs::path& logrank_path) {
  std::ifstream in(risks_path);
  if (!in) throw IoError("cannot open risks csv: " + risks_path.string());
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("risks csv is empty: " + risks_path.string());
  std::vector<std::string> header = split_csv(line);
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw FormatError("risks csv missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_time = col("time"), c_event = col("event"),
                    c_risk = col("scalar_risk");

  std::vector<double> times, risks;
  std::vector<int> events;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv(line);
    times.push_back(std::stod(f.at(c_time)));
    events.push_back(std::stoi(f.at(c_event)));
    risks.push_back(std::stod(f.at(c_risk)));
  }
  if (times.empty()) throw FormatError("risks csv has no rows");

  // median split: strictly above the 50th-percentile risk is high risk
  std::vector<double> sorted = risks;
  std::sort(sorted.begin(), sorted.end());
  double median;
  {
    std::size_t n = sorted.size();
    median = (n % 2 == 1) ? sorted[n / 2]
                          : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  }
  std::vector<double> t_low, t_high;
  std::vector<int> e_low, e_high;
  for (std::size_t i = 0; i < risks.size(); ++i) {
    if (risks[i] > median) {
      t_high.push_back(times[i]);
      e_high.push_back(events[i]);
    } else {
      t_low.push_back(times[i]);
      e_low.push_back(events[i]);
    }
  }
  if (t_low.empty() || t_high.empty())
    throw DegenerateError(
        "median split is degenerate: every patient fell in one risk group");

  std::ofstream curves(curves_path, std::ios::trunc);
  if (!curves) throw IoError("cannot write km csv: " + curves_path.string());
  curves << "group,time,at_risk,events,survival\n";
  for (const auto& [name, ts, es] :
       {std::tuple{"low", &t_low, &e_low}, std::tuple{"high", &t_high, &e_high}}) {
    survival::KMCurve curve = survival::km_curve(*ts, *es);
    for (const auto& pt : curve.points)
      curves << name << "," << fmt_double(pt.time) << "," << pt.at_risk << ","
             << pt.deaths << "," << fmt_double(pt.survival) << "\n";
  }

  auto lr = survival::log_rank(t_low, e_low, t_high, e_high);
  if (!lr)
    throw DegenerateError("log-rank test is degenerate (zero variance)");
  json out = {{"chi2", lr->chi2}, {"p", lr->p}};
  std::ofstream lout(logrank_path, std::ios::trunc);
  if (!lout) throw IoError("cannot write logrank json: " + logrank_path.string());
  lout << out.dump(2) << "\n";
  std::cout << "low/high: " << t_low.size() << "/" << t_high.size()
            << ", chi2 " << fmt_double(lr->chi2) << ", p " << fmt_double(lr->p)
            << "\n";
  return 0;
}

int cmd_attend(const fs::path& data, const fs::path& ckpt_path,
               const std::string& patient_id, const fs::path& out_path,
               const fs::path& top_path, int top_j) {
  dataio::Dataset ds = dataio::load_dataset(data);
  trainer::Checkpoint ckpt = trainer::load_checkpoint(ckpt_path);
  const dataio::PatientRecord* rec = nullptr;
  for (const auto& r : ds.records)
    if (r.id == patient_id) {
      rec = &r;
      break;
    }
  if (!rec)
    throw ConfigError("unknown patient id '" + patient_id + "'");

  model::ForwardOutput out =
      model::forward_eval(ckpt.params, ckpt.config, ds.gene_sets.members(),
                          rec->wsi_bag, rec->gene_values);
  const Tensor& a = out.a_coat;
  const auto& names = ds.gene_sets.category_names;

  std::ofstream csv(out_path, std::ios::trunc);
  if (!csv) throw IoError("cannot write attention csv: " + out_path.string());
  csv << "category";
  for (int m = 0; m < a.cols; ++m) csv << "," << m;
  csv << "\n";
  for (int r = 0; r < a.rows; ++r) {
    csv << names.at(static_cast<std::size_t>(r));
    for (int m = 0; m < a.cols; ++m) csv << "," << fmt_double(a(r, m));
    csv << "\n";
  }

  if (!top_path.empty()) {
    std::ofstream top(top_path, std::ios::trunc);
    if (!top) throw IoError("cannot write top csv: " + top_path.string());
    top << "category,rank,patch_index,weight\n";
    int j = std::min(top_j, a.cols);
    for (int r = 0; r < a.rows; ++r) {
      std::vector<int> order(static_cast<std::size_t>(a.cols));
      for (int m = 0; m < a.cols; ++m) order[static_cast<std::size_t>(m)] = m;
      std::stable_sort(order.begin(), order.end(),
                       [&](int x, int y) { return a(r, x) > a(r, y); });
      for (int rank = 0; rank < j; ++rank)
        top << names.at(static_cast<std::size_t>(r)) << "," << rank + 1 << ","
            << order[static_cast<std::size_t>(rank)] << ","
            << fmt_double(a(r, order[static_cast<std::size_t>(rank)])) << "\n";
    }
  }
  std::cout << "attention matrix " << a.rows << "x" << a.cols << " for "
            << patient_id << " -> " << out_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal evidential survival pipeline"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
  dataio::SynthConfig scfg;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--patients", scfg.patients, "cohort size");
  synth->add_option("--d-h", scfg.d_h, "WSI feature width");
  synth->add_option("--n-genes", scfg.n_genes, "gene count");
  synth->add_option("--mean-bag-size", scfg.mean_bag_size, "mean patches per bag");
  synth->add_option("--censor-rate", scfg.censor_rate, "fraction censored");
  synth->add_option("--signal-strength", scfg.signal_strength,
                    "latent hazard coefficient");
  synth->add_option("--seed", scfg.seed, "generator seed");

  // train
  auto* train = app.add_subcommand("train", "train one cross-validation fold");
  std::string train_data, train_ckpt = "checkpoint.m2ef",
              train_hist = "history.csv";
  int train_folds = 5, train_fold = 0;
  train->add_option("--data", train_data, "dataset manifest")->required();
  train->add_option("--out-checkpoint", train_ckpt, "checkpoint output path");
  train->add_option("--out-history", train_hist, "history csv output path");
  train->add_option("--folds", train_folds, "number of folds");
  train->add_option("--fold", train_fold, "fold index to train");
  ConfigFlags train_cfg;
  train_cfg.attach(train);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_data, eval_ckpt, eval_metrics = "metrics.json",
              eval_risks = "risks.csv", eval_split = "all";
  int eval_folds = 5, eval_fold = 0;
  std::uint64_t eval_seed = 1;
  eval->add_option("--data", eval_data, "dataset manifest")->required();
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
  eval->add_option("--out-metrics", eval_metrics, "metrics json output");
  eval->add_option("--out-risks", eval_risks, "per-patient risk csv output");
  eval->add_option("--split", eval_split, "all|val|train");
  eval->add_option("--folds", eval_folds, "number of folds (for val/train split)");
  eval->add_option("--fold", eval_fold, "fold index (for val/train split)");
  eval->add_option("--seed", eval_seed, "fold-split seed used at training time");

  // km
  auto* km = app.add_subcommand("km", "median-split KM curves and log-rank test");
  std::string km_risks, km_curves = "km.csv", km_logrank = "logrank.json";
  km->add_option("--risks", km_risks, "risks csv from eval")->required();
  km->add_option("--out-curves", km_curves, "km curve csv output");
  km->add_option("--out-logrank", km_logrank, "log-rank json output");

  // attend
  auto* attend = app.add_subcommand("attend", "export co-attention for a patient");
  std::string at_data, at_ckpt, at_patient, at_out = "attention.csv",
              at_top = "attention_top.csv";
  int at_j = 5;
  attend->add_option("--data", at_data, "dataset manifest")->required();
  attend->add_option("--checkpoint", at_ckpt, "checkpoint path")->required();
  attend->add_option("--patient", at_patient, "patient id")->required();
  attend->add_option("--out", at_out, "attention matrix csv output");
  attend->add_option("--top-out", at_top, "top-j summary csv output");
  attend->add_option("--top", at_j, "patches per category in the summary");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(scfg, synth_out);
    if (train->parsed())
      return cmd_train(train_data, train_ckpt, train_hist, train_folds,
                       train_fold, train_cfg.resolve(train));
    if (eval->parsed())
      return cmd_eval(eval_data, eval_ckpt, eval_metrics, eval_risks,
                      eval_split, eval_folds, eval_fold, eval_seed);
    if (km->parsed()) return cmd_km(km_risks, km_curves, km_logrank);
    if (attend->parsed())
      return cmd_attend(at_data, at_ckpt, at_patient, at_out, at_top, at_j);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
