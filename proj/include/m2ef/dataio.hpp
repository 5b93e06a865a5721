#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "m2ef/survival.hpp"
#include "m2ef/tensor.hpp"

namespace m2ef::dataio {

using survival::SurvivalLabel;

// One patient: WSI patch-feature bag (M x d_h, M varies), raw gene values,
// survival time in months and the cohort status flag (0 = death observed,
// 1 = alive / censored).
struct PatientRecord {
  std::string id;
  double survival_months = 0.0;
  int status = 1;
  Tensor wsi_bag;
  Tensor gene_values;  // 1 x n_genes

  int event() const { return 1 - status; }
};

// Functional gene categories: every gene maps to exactly one category and
// every category is nonempty.
struct GeneSetMap {
  std::vector<std::string> category_names;
  std::vector<int> category_of;  // per gene index

  int n_sets() const { return static_cast<int>(category_names.size()); }
  int n_genes() const { return static_cast<int>(category_of.size()); }
  std::vector<std::vector<int>> members() const;
  std::vector<int> set_sizes() const;
};

struct Dataset {
  int wsi_dim = 0;
  int n_genes = 0;
  GeneSetMap gene_sets;
  std::vector<PatientRecord> records;

  int n_patients() const { return static_cast<int>(records.size()); }
};

// K-1 strictly increasing cut points in months. Intervals are
// [0, e_0], (e_0, e_1], ..., (e_{K-2}, inf): boundary times land in the
// lower interval.
struct BinEdges {
  std::vector<double> edges;

  int n_bins() const { return static_cast<int>(edges.size()) + 1; }
  int bin_of(double t) const;
};

// --- on-disk formats ---------------------------------------------------
// Manifest: JSON {wsi_dim, n_genes, gene_set_map, patients:[{id,
// survival_months, status, wsi_bag, gene_values}]}; paths relative to the
// manifest directory.
// Bag file: "M2EB", u16 version=1, u16 reserved=0, u32 rows, u32 cols,
// rows*cols float32 little-endian row-major. Gene vectors use rows=1.
// Gene-set map: CSV "gene_index,category".

Dataset load_dataset(const std::filesystem::path& manifest_path);

// Values are stored as float32 (what upstream extractors emit) and widened
// back to float64 on read.
void write_bag(const std::filesystem::path& path, const Tensor& t);
Tensor read_bag(const std::filesystem::path& path);

void write_gene_set_map(const std::filesystem::path& path, const GeneSetMap& m);
GeneSetMap read_gene_set_map(const std::filesystem::path& path);

// Default category names for the six-way functional grouping; generic
// labels otherwise.
std::vector<std::string> default_category_names(int n_sets);

// --- label construction -------------------------------------------------
// Edges are the interior quantiles (linear interpolation between order
// statistics) of the *uncensored* event times; every patient is then
// assigned the interval containing its time.
std::pair<BinEdges, std::vector<SurvivalLabel>> discretize_times(
    const Dataset& ds, int n_bins);

std::vector<SurvivalLabel> assign_labels(const Dataset& ds,
                                         const BinEdges& edges);

// --- cross-validation ----------------------------------------------------
struct Fold {
  std::vector<int> train;
  std::vector<int> val;
};

// Deterministic seeded partition; validation folds are disjoint, cover all
// patients, and differ in size by at most one.
std::vector<Fold> kfold_split(int n_patients, int k, std::uint64_t seed);

// --- synthetic cohort ------------------------------------------------------
struct SynthConfig {
  int patients = 200;
  int d_h = 48;
  int n_genes = 120;
  int mean_bag_size = 24;
  double censor_rate = 0.3;
  double signal_strength = 1.5;
  std::uint64_t seed = 42;
};

// Planted ground truth, for oracle checks: the latent risk per patient.
struct SynthInfo {
  std::vector<std::string> ids;
  std::vector<double> latent_risk;
  std::vector<double> times;
  std::vector<int> status;
};

// Writes manifest + gene-set map + bag files under out_dir and returns the
// planted latents. Fully deterministic in cfg.seed.
SynthInfo synth_generate(const SynthConfig& cfg,
                         const std::filesystem::path& out_dir);

}  // namespace m2ef::dataio
