#include "m2ef/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "m2ef/errors.hpp"
#include "m2ef/rng.hpp"

namespace m2ef::dataio {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// GeneSetMap
// ---------------------------------------------------------------------------

std::vector<std::vector<int>> GeneSetMap::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n_sets()));
  for (int g = 0; g < n_genes(); ++g)
    out[static_cast<std::size_t>(category_of[static_cast<std::size_t>(g)])]
        .push_back(g);
  return out;
}

std::vector<int> GeneSetMap::set_sizes() const {
  std::vector<int> sizes(static_cast<std::size_t>(n_sets()), 0);
  for (int c : category_of) sizes[static_cast<std::size_t>(c)] += 1;
  return sizes;
}

std::vector<std::string> default_category_names(int n_sets) {
  static const char* kSix[] = {"tumor_suppressor",     "tumor_occurrence",
                               "protein_kinase",       "cell_differentiation",
                               "transcription",        "cytokine_growth"};
  std::vector<std::string> names;
  if (n_sets == 6) {
    names.assign(kSix, kSix + 6);
  } else {
    for (int i = 0; i < n_sets; ++i) names.push_back("set_" + std::to_string(i));
  }
  return names;
}

// ---------------------------------------------------------------------------
// Bag files
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'M', '2', 'E', 'B'};
constexpr std::uint16_t kBagVersion = 1;

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_bag(const fs::path& path, const Tensor& t) {
  std::string buf;
  buf.reserve(16 + t.data.size() * 4);
  buf.append(kMagic, 4);
  put_u16(buf, kBagVersion);
  put_u16(buf, 0);
  put_u32(buf, static_cast<std::uint32_t>(t.rows));
  put_u32(buf, static_cast<std::uint32_t>(t.cols));
  for (double v : t.data) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(buf, bits);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open bag file for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to bag file: " + path.string());
}

Tensor read_bag(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open bag file: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 16)
    throw FormatError("bag file truncated header: " + path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  if (std::memcmp(p, kMagic, 4) != 0)
    throw FormatError("bag file bad magic: " + path.string());
  std::uint16_t version = get_u16(p + 4);
  if (version != kBagVersion)
    throw FormatError("bag file unsupported version " + std::to_string(version) +
                      ": " + path.string());
  std::uint32_t rows = get_u32(p + 8);
  std::uint32_t cols = get_u32(p + 12);
  std::size_t expect = 16 + static_cast<std::size_t>(rows) * cols * 4;
  if (buf.size() != expect)
    throw FormatError("bag file payload length " + std::to_string(buf.size() - 16) +
                      " does not match " + std::to_string(rows) + "x" +
                      std::to_string(cols) + ": " + path.string());
  Tensor t(static_cast<int>(rows), static_cast<int>(cols));
  const unsigned char* q = p + 16;
  for (std::size_t i = 0; i < t.data.size(); ++i, q += 4) {
    std::uint32_t bits = get_u32(q);
    float f;
    std::memcpy(&f, &bits, 4);
    t.data[i] = static_cast<double>(f);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Gene-set map CSV
// ---------------------------------------------------------------------------

void write_gene_set_map(const fs::path& path, const GeneSetMap& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open gene-set map for writing: " + path.string());
  out << "gene_index,category\n";
  for (int g = 0; g < m.n_genes(); ++g)
    out << g << "," << m.category_of[static_cast<std::size_t>(g)] << "\n";
}

GeneSetMap read_gene_set_map(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open gene-set map: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "gene_index,category")
    throw FormatError("gene-set map missing 'gene_index,category' header: " +
                      path.string());
  std::vector<std::pair<int, int>> entries;
  int max_cat = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw FormatError("gene-set map malformed line '" + line + "': " +
                        path.string());
    int gene = 0, cat = 0;
    try {
      gene = std::stoi(line.substr(0, comma));
      cat = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw FormatError("gene-set map malformed line '" + line + "': " +
                        path.string());
    }
    if (gene < 0 || cat < 0)
      throw FormatError("gene-set map negative index in '" + line + "': " +
                        path.string());
    entries.emplace_back(gene, cat);
    max_cat = std::max(max_cat, cat);
  }
  if (entries.empty())
    throw FormatError("gene-set map has no entries: " + path.string());
  GeneSetMap m;
  m.category_of.assign(entries.size(), -1);
  for (const auto& [gene, cat] : entries) {
    if (gene >= static_cast<int>(entries.size()) ||
        m.category_of[static_cast<std::size_t>(gene)] != -1)
      throw FormatError("gene-set map gene index " + std::to_string(gene) +
                        " duplicated or out of range: " + path.string());
    m.category_of[static_cast<std::size_t>(gene)] = cat;
  }
  m.category_names = default_category_names(max_cat + 1);
  // every category must be nonempty
  std::vector<int> sizes = m.set_sizes();
  for (int c = 0; c < m.n_sets(); ++c)
    if (sizes[static_cast<std::size_t>(c)] == 0)
      throw FormatError("gene-set map category " + std::to_string(c) +
                        " is empty: " + path.string());
  return m;
}

// ---------------------------------------------------------------------------
// Dataset loading
// ---------------------------------------------------------------------------

Dataset load_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest: " + manifest_path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw FormatError("manifest is not valid JSON (" + std::string(e.what()) +
                      "): " + manifest_path.string());
  }
  const fs::path base = manifest_path.parent_path();
  Dataset ds;
  try {
    ds.wsi_dim = doc.at("wsi_dim").get<int>();
    ds.n_genes = doc.at("n_genes").get<int>();
  } catch (const json::exception& e) {
    throw FormatError("manifest missing wsi_dim/n_genes: " +
                      std::string(e.what()));
  }
  if (ds.wsi_dim <= 0 || ds.n_genes <= 0)
    throw FormatError("manifest dims must be positive");
  if (!doc.contains("gene_set_map") || !doc.contains("patients"))
    throw FormatError("manifest missing gene_set_map or patients: " +
                      manifest_path.string());
  ds.gene_sets = read_gene_set_map(base / doc.at("gene_set_map").get<std::string>());
  if (ds.gene_sets.n_genes() != ds.n_genes)
    throw ShapeError("gene-set map covers " +
                     std::to_string(ds.gene_sets.n_genes()) +
                     " genes but manifest declares " + std::to_string(ds.n_genes));

  for (const json& pj : doc.at("patients")) {
    PatientRecord rec;
    try {
      rec.id = pj.at("id").get<std::string>();
      rec.survival_months = pj.at("survival_months").get<double>();
      rec.status = pj.at("status").get<int>();
    } catch (const json::exception& e) {
      throw FormatError("manifest patient entry malformed: " +
                        std::string(e.what()));
    }
    if (!(rec.survival_months >= 0.0) || !std::isfinite(rec.survival_months))
      throw FormatError("patient " + rec.id +
                        ": survival_months must be finite and nonnegative");
    if (rec.status != 0 && rec.status != 1)
      throw FormatError("patient " + rec.id + ": status must be 0 or 1");

    const fs::path wsi_path = base / pj.at("wsi_bag").get<std::string>();
    const fs::path gene_path = base / pj.at("gene_values").get<std::string>();
    try {
      rec.wsi_bag = read_bag(wsi_path);
      rec.gene_values = read_bag(gene_path);
    } catch (const IoError& e) {
      throw IoError("patient " + rec.id + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("patient " + rec.id + ": " + e.what());
    }
    if (rec.wsi_bag.rows < 1 || rec.wsi_bag.cols != ds.wsi_dim)
      throw ShapeError("patient " + rec.id + ": wsi bag is " +
                       rec.wsi_bag.shape_str() + ", expected Mx" +
                       std::to_string(ds.wsi_dim) + " with M >= 1");
    if (rec.gene_values.rows != 1 || rec.gene_values.cols != ds.n_genes)
      throw ShapeError("patient " + rec.id + ": gene vector is " +
                       rec.gene_values.shape_str() + ", expected 1x" +
                       std::to_string(ds.n_genes));
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Discretization
// ---------------------------------------------------------------------------

namespace {

// quantile by linear interpolation between order statistics (sorted input)
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double h = p * static_cast<double>(n - 1);
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo >= n - 1) return sorted[n - 1];
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

int BinEdges::bin_of(double t) const {
  // number of edges strictly below t; boundary times stay in the lower bin
  auto it = std::lower_bound(edges.begin(), edges.end(), t);
  return static_cast<int>(it - edges.begin());
}

std::pair<BinEdges, std::vector<SurvivalLabel>> discretize_times(
    const Dataset& ds, int n_bins) {
  if (n_bins < 1) throw ConfigError("discretize_times: n_bins must be >= 1");
  std::vector<double> event_times;
  for (const PatientRecord& r : ds.records)
    if (r.status == 0) event_times.push_back(r.survival_months);
  if (static_cast<int>(event_times.size()) < n_bins)
    throw DegenerateError("discretize_times: " +
                          std::to_string(event_times.size()) +
                          " uncensored patients < K=" + std::to_string(n_bins));
  BinEdges edges;
  if (n_bins > 1) {
    std::sort(event_times.begin(), event_times.end());
    for (int j = 1; j < n_bins; ++j)
      edges.edges.push_back(
          quantile_sorted(event_times, static_cast<double>(j) / n_bins));
    for (std::size_t i = 1; i < edges.edges.size(); ++i)
      if (!(edges.edges[i - 1] < edges.edges[i]))
        throw DegenerateError(
            "discretize_times: tied event times give non-increasing quantile "
            "edges");
  }
  return {edges, assign_labels(ds, edges)};
}

std::vector<SurvivalLabel> assign_labels(const Dataset& ds,
                                         const BinEdges& edges) {
  std::vector<SurvivalLabel> labels;
  labels.reserve(ds.records.size());
  for (const PatientRecord& r : ds.records)
    labels.push_back(
        SurvivalLabel{edges.bin_of(r.survival_months), r.survival_months,
                      r.event()});
  return labels;
}

// ---------------------------------------------------------------------------
// k-fold split
// ---------------------------------------------------------------------------

std::vector<Fold> kfold_split(int n_patients, int k, std::uint64_t seed) {
  if (k < 2 || k > n_patients)
    throw ConfigError("kfold_split: k=" + std::to_string(k) +
                      " out of range for " + std::to_string(n_patients) +
                      " patients");
  std::vector<int> order(static_cast<std::size_t>(n_patients));
  for (int i = 0; i < n_patients; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  int base = n_patients / k;
  int extra = n_patients % k;
  int pos = 0;
  for (int f = 0; f < k; ++f) {
    int len = base + (f < extra ? 1 : 0);
    Fold& fold = folds[static_cast<std::size_t>(f)];
    fold.val.assign(order.begin() + pos, order.begin() + pos + len);
    fold.train.reserve(static_cast<std::size_t>(n_patients - len));
    for (int i = 0; i < n_patients; ++i) {
      int idx = order[static_cast<std::size_t>(i)];
      if (i < pos || i >= pos + len) fold.train.push_back(idx);
    }
    std::sort(fold.val.begin(), fold.val.end());
    std::sort(fold.train.begin(), fold.train.end());
    pos += len;
  }
  return folds;
}

// ---------------------------------------------------------------------------
// Synthetic cohort
// ---------------------------------------------------------------------------

SynthInfo synth_generate(const SynthConfig& cfg, const fs::path& out_dir) {
  if (cfg.patients < 1 || cfg.d_h < 1 || cfg.mean_bag_size < 1)
    throw ConfigError("synth_generate: counts must be positive");
  if (cfg.n_genes < 6)
    throw ConfigError("synth_generate: need at least 6 genes for 6 categories");
  if (!(cfg.censor_rate >= 0.0 && cfg.censor_rate < 1.0))
    throw ConfigError("synth_generate: censor_rate must be in [0, 1)");

  fs::create_directories(out_dir / "bags");

  Rng rng(cfg.seed);

  // fixed hidden direction the signal instances embed the latent risk along
  std::vector<double> wsi_dir(static_cast<std::size_t>(cfg.d_h));
  double norm = 0.0;
  for (double& v : wsi_dir) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : wsi_dir) v /= norm;

  // fixed random subset of signal genes with fixed signs
  std::vector<int> gene_order(static_cast<std::size_t>(cfg.n_genes));
  for (int g = 0; g < cfg.n_genes; ++g) gene_order[static_cast<std::size_t>(g)] = g;
  rng.shuffle(gene_order);
  int n_signal_genes = std::max(1, cfg.n_genes / 4);
  std::vector<double> gene_coef(static_cast<std::size_t>(cfg.n_genes), 0.0);
  for (int i = 0; i < n_signal_genes; ++i)
    gene_coef[static_cast<std::size_t>(gene_order[static_cast<std::size_t>(i)])] =
        rng.uniform() < 0.5 ? 1.0 : -1.0;

  constexpr double kSignalFraction = 0.4;  // instances carrying the latent
  constexpr double kWsiAmplitude = 2.0;
  constexpr double kGeneAmplitude = 1.5;
  constexpr double kTimeScale = 20.0;  // months at unit hazard

  struct Draft {
    std::string id;
    double z, time;
    Tensor bag, genes;
  };
  std::vector<Draft> drafts;
  drafts.reserve(static_cast<std::size_t>(cfg.patients));

  for (int p = 0; p < cfg.patients; ++p) {
    Draft d;
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "synth_%04d", p);
    d.id = idbuf;
    d.z = rng.normal();
    d.time = kTimeScale * rng.exponential(std::exp(cfg.signal_strength * d.z));

    int bag_size = std::max(
        1, static_cast<int>(std::lround(cfg.mean_bag_size * (0.5 + rng.uniform()))));
    d.bag = Tensor(bag_size, cfg.d_h);
    for (int i = 0; i < bag_size; ++i) {
      bool carries_signal = rng.uniform() < kSignalFraction;
      double* row = d.bag.row_ptr(i);
      for (int c = 0; c < cfg.d_h; ++c) {
        row[c] = rng.normal();
        if (carries_signal)
          row[c] += kWsiAmplitude * d.z * wsi_dir[static_cast<std::size_t>(c)];
      }
    }
    d.genes = Tensor(1, cfg.n_genes);
    for (int g = 0; g < cfg.n_genes; ++g)
      d.genes.data[static_cast<std::size_t>(g)] =
          rng.normal() + kGeneAmplitude * gene_coef[static_cast<std::size_t>(g)] * d.z;
    drafts.push_back(std::move(d));
  }

  // administrative censoring at the (1 - censor_rate) quantile of drawn times
  std::vector<double> sorted_times;
  sorted_times.reserve(drafts.size());
  for (const Draft& d : drafts) sorted_times.push_back(d.time);
  std::sort(sorted_times.begin(), sorted_times.end());
  double horizon = quantile_sorted(sorted_times, 1.0 - cfg.censor_rate);

  GeneSetMap gmap;
  gmap.category_names = default_category_names(6);
  gmap.category_of.resize(static_cast<std::size_t>(cfg.n_genes));
  for (int g = 0; g < cfg.n_genes; ++g)
    gmap.category_of[static_cast<std::size_t>(g)] = g % 6;
  write_gene_set_map(out_dir / "gene_set_map.csv", gmap);

  SynthInfo info;
  json patients = json::array();
  for (const Draft& d : drafts) {
    bool censored = d.time > horizon;
    double recorded = censored ? horizon : d.time;
    int status = censored ? 1 : 0;

    std::string wsi_rel = "bags/" + d.id + "_wsi.bin";
    std::string gene_rel = "bags/" + d.id + "_genes.bin";
    write_bag(out_dir / wsi_rel, d.bag);
    write_bag(out_dir / gene_rel, d.genes);

    patients.push_back(json{{"id", d.id},
                            {"survival_months", recorded},
                            {"status", status},
                            {"wsi_bag", wsi_rel},
                            {"gene_values", gene_rel}});
    info.ids.push_back(d.id);
    info.latent_risk.push_back(d.z);
    info.times.push_back(recorded);
    info.status.push_back(status);
  }

  json manifest = {{"wsi_dim", cfg.d_h},
                   {"n_genes", cfg.n_genes},
                   {"gene_set_map", "gene_set_map.csv"},
                   {"patients", patients}};
  std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
  if (!out)
    throw IoError("cannot write manifest: " + (out_dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
  return info;
}

}  // namespace m2ef::dataio
