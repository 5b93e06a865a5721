// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria run at the tolerances pinned below; the end-to-end runs
// use the library defaults throughout.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "m2ef/dataio.hpp"
#include "m2ef/evidential.hpp"
#include "m2ef/model.hpp"
#include "m2ef/rng.hpp"
#include "m2ef/survival.hpp"
#include "m2ef/tape.hpp"
#include "m2ef/trainer.hpp"
#include "oracles.hpp"

using namespace m2ef;
namespace fs = std::filesystem;

namespace {

int g_checks_failed = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    ++g_checks_failed;
    std::printf("    FAILED: %s\n", what.c_str());
  }
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

Tensor random_tensor(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(r, c);
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

model::ModelConfig tiny_config() {
  model::ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_bins = 4;
  cfg.heads = 2;
  cfg.ffn_dim = 16;
  cfg.dropout = 0.0;
  cfg.attn_hidden = 8;
  cfg.gene_hidden = 6;
  return cfg;
}

std::vector<std::vector<int>> even_sets(int n_sets, int n_genes) {
  std::vector<std::vector<int>> m(static_cast<std::size_t>(n_sets));
  for (int g = 0; g < n_genes; ++g)
    m[static_cast<std::size_t>(g % n_sets)].push_back(g);
  return m;
}

// ---------------------------------------------------------------------------
// 1. gradient correctness
// ---------------------------------------------------------------------------

bool criterion_gradients() {
  const double t0 = now_seconds();
  int before = g_checks_failed;

  // primitives at <= 1e-6 on random small inputs
  {
    Rng rng(2024);
    using Builder = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;
    auto check_primitive = [&](const char* name, std::vector<Tensor> inputs,
                               const Builder& build) {
      Tensor weights;
      Rng wrng(77);
      auto loss_of = [&](Tape& t, const std::vector<NodeId>& ids) {
        NodeId out = build(t, ids);
        if (weights.size() == 0)
          weights =
              random_tensor(t.value(out).rows, t.value(out).cols, wrng, 0.2, 1.0);
        return t.sum(t.mul(out, t.constant(weights)));
      };
      Tape tape;
      std::vector<NodeId> ids;
      for (Tensor& in : inputs) ids.push_back(tape.leaf(in, true));
      tape.backward(loss_of(tape, ids));
      auto loss_value = [&]() {
        Tape t;
        std::vector<NodeId> vids;
        for (Tensor& in : inputs) vids.push_back(t.leaf(in, true));
        return t.value(loss_of(t, vids)).data[0];
      };
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Tensor& analytic = tape.grad(ids[i]);
        for (std::size_t e = 0; e < inputs[i].data.size(); ++e) {
          double num = oracles::central_diff(&inputs[i].data[e], 1e-5, loss_value);
          expect(oracles::rel_err(analytic.data[e], num) <= 1e-6,
                 std::string("primitive ") + name + " gradient");
        }
      }
    };

    check_primitive("matmul", {random_tensor(4, 6, rng), random_tensor(6, 5, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                      return t.matmul(in[0], in[1]);
                    });
    check_primitive("row_softmax", {random_tensor(5, 7, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                      return t.row_softmax(in[0]);
                    });
    check_primitive("activations", {random_tensor(4, 8, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                      return t.activation(
                          Act::softplus,
                          t.activation(Act::tanh,
                                       t.activation(Act::sigmoid, in[0])));
                    });
    check_primitive("layernorm",
                    {random_tensor(4, 8, rng), random_tensor(1, 8, rng, 0.5, 1.5),
                     random_tensor(1, 8, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                      return t.row_layernorm(in[0], in[1], in[2]);
                    });
    check_primitive("weighted pooling",
                    {random_tensor(6, 4, rng), random_tensor(1, 6, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                      return t.row_weighted_sum(in[0], in[1]);
                    });
    check_primitive("nll", {random_tensor(1, 4, rng, 0.2, 0.8)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                      return t.survival_nll(in[0], 2, true);
                    });
  }

  // full composed loss: every trainable parameter at <= 1e-4
  {
    model::ModelConfig cfg = tiny_config();
    auto members = even_sets(6, 12);
    std::vector<int> sizes;
    for (const auto& m : members) sizes.push_back(static_cast<int>(m.size()));
    model::ModelParams params = model::ModelParams::init(cfg, 7, sizes, 424242);
    Rng rng(31415);
    Tensor bag = random_tensor(5, 7, rng);
    Tensor genes = random_tensor(1, 12, rng);

    auto loss_of = [&](Tape& t, const model::BoundParams& b) {
      model::ForwardNodes f =
          model::forward(t, b, cfg, members, bag, genes, nullptr);
      evidential::FusedNodes fused = evidential::fuse_on_tape(t, f.e_h, f.e_g);
      NodeId o_risk =
          evidential::modulate_on_tape(t, fused.fused_evidence, f.s_risk);
      return t.survival_nll(o_risk, 1, true);
    };
    auto loss_value = [&]() {
      Tape t;
      model::BoundParams b = model::bind(t, params, true);
      return t.value(loss_of(t, b)).data[0];
    };

    Tape tape;
    model::BoundParams bound = model::bind(tape, params, true);
    tape.backward(loss_of(tape, bound));

    std::size_t checked = 0;
    double worst = 0.0;
    std::string worst_name;
    for (auto& [name, w] : params.all()) {
      const Tensor& analytic = tape.grad(bound.id(name));
      for (std::size_t i = 0; i < w.data.size(); ++i) {
        double num = oracles::central_diff(&w.data[i], 1e-5, loss_value);
        double err = oracles::rel_err(analytic.data[i], num, 1e-3);
        if (err > worst) {
          worst = err;
          worst_name = name;
        }
        ++checked;
      }
    }
    expect(worst <= 1e-4, "full-model gradient worst rel err " +
                              std::to_string(worst) + " at " + worst_name);
    std::printf("    %zu parameter gradients checked, worst rel err %.3g (%s)\n",
                checked, worst, worst_name.c_str());
  }

  const double elapsed = now_seconds() - t0;
  std::printf("    runtime %.1fs (budget 60s)\n", elapsed);
  expect(elapsed <= 60.0, "gradient criterion exceeded 60s");
  return g_checks_failed == before;
}

// ---------------------------------------------------------------------------
// 2. evidential algebra
// ---------------------------------------------------------------------------

bool criterion_evidential() {
  int before = g_checks_failed;
  Rng rng(7);
  for (int trial = 0; trial < 10000; ++trial) {
    int k = 2 + static_cast<int>(rng.below(5));
    std::vector<double> eh(static_cast<std::size_t>(k)),
        eg(static_cast<std::size_t>(k));
    for (double& v : eh) v = rng.uniform(0.0, 10.0);
    for (double& v : eg) v = rng.uniform(0.0, 10.0);
    evidential::Opinion a = evidential::evidence_to_opinion(eh);
    evidential::Opinion b = evidential::evidence_to_opinion(eg);
    evidential::Opinion f = evidential::ds_combine(a, b);

    expect(std::fabs(f.belief_sum() + f.uncertainty - 1.0) <= 1e-9,
           "fused normalization");
    expect(f.uncertainty <= std::min(a.uncertainty, b.uncertainty) + 1e-12,
           "uncertainty reduction");

    evidential::Opinion g = evidential::ds_combine(b, a);
    bool commutes = std::fabs(f.uncertainty - g.uncertainty) <= 1e-12;
    for (int i = 0; i < k; ++i)
      commutes = commutes && std::fabs(f.belief[static_cast<std::size_t>(i)] -
                                       g.belief[static_cast<std::size_t>(i)]) <=
                                 1e-12;
    expect(commutes, "commutativity");

    evidential::Opinion vf =
        evidential::ds_combine(a, evidential::Opinion::vacuous(k));
    bool vac = std::fabs(vf.uncertainty - a.uncertainty) <= 1e-12;
    for (int i = 0; i < k; ++i)
      vac = vac && std::fabs(vf.belief[static_cast<std::size_t>(i)] -
                             a.belief[static_cast<std::size_t>(i)]) <= 1e-12;
    expect(vac, "vacuous identity");

    evidential::DirichletEvidence d = evidential::opinion_to_evidence(a);
    bool round = true;
    for (int i = 0; i < k; ++i)
      round = round && std::fabs(d.evidence[static_cast<std::size_t>(i)] -
                                 eh[static_cast<std::size_t>(i)]) <= 1e-9;
    expect(round, "evidence<->opinion round trip");
  }

  // worked fixture to five decimals
  evidential::Opinion o1{2, {0.6, 0.2}, 0.2};
  evidential::Opinion o2{2, {0.3, 0.3}, 0.4};
  evidential::Opinion f = evidential::ds_combine(o1, o2);
  expect(std::fabs(f.belief[0] - 0.63158) <= 5e-6, "fixture b0");
  expect(std::fabs(f.belief[1] - 0.26316) <= 5e-6, "fixture b1");
  expect(std::fabs(f.uncertainty - 0.10526) <= 5e-6, "fixture u");
  evidential::DirichletEvidence d = evidential::opinion_to_evidence(f);
  expect(std::fabs(d.alpha[0] - 13.0) <= 1e-5, "fixture alpha0");
  expect(std::fabs(d.alpha[1] - 6.0) <= 1e-5, "fixture alpha1");
  return g_checks_failed == before;
}

// ---------------------------------------------------------------------------
// 3. c-index oracle equivalence
// ---------------------------------------------------------------------------

bool criterion_cindex() {
  int before = g_checks_failed;
  Rng rng(99);
  for (int cohort = 0; cohort < 50; ++cohort) {
    const int n = 100;
    std::vector<double> risks(n), times(n);
    std::vector<int> events(n);
    std::vector<survival::SurvivalLabel> labels(n);
    for (int i = 0; i < n; ++i) {
      std::size_t s = static_cast<std::size_t>(i);
      risks[s] = rng.uniform(-1, 1);
      times[s] = std::floor(rng.uniform(0, 50));  // coarse grid forces ties
      events[s] = rng.uniform() < 0.7 ? 1 : 0;    // ~30% censoring
      labels[s] = {0, times[s], events[s]};
    }
    risks[3] = risks[57];  // exact risk ties exercise the 0.5 rule
    risks[11] = risks[42];
    long oracle_pairs = 0;
    auto oracle = oracles::cindex_bruteforce(risks, times, events, &oracle_pairs);
    auto ours = survival::c_index(risks, labels);
    expect(oracle.has_value() == ours.has_value(), "definedness agreement");
    if (oracle && ours) {
      expect(ours->value == *oracle, "exact value match");
      expect(ours->comparable_pairs == oracle_pairs, "pair count match");
    }
  }
  return g_checks_failed == before;
}

// ---------------------------------------------------------------------------
// 4. survival fixtures
// ---------------------------------------------------------------------------

bool criterion_survival_fixtures() {
  int before = g_checks_failed;
  const double ln2 = std::log(2.0);
  std::vector<double> h = {0.5, 0.5, 0.5, 0.5};
  expect(std::fabs(survival::nll_value(h, 0, true) - ln2) <= 1e-9, "nll ln2");
  expect(std::fabs(survival::nll_value(h, 1, false) - 2 * ln2) <= 1e-9,
         "nll 2ln2");
  expect(std::fabs(survival::nll_value(h, 2, true) - 3 * ln2) <= 1e-9,
         "nll 3ln2");

  survival::KMCurve km = survival::km_curve({1, 2, 3}, {1, 1, 1});
  expect(km.points.size() == 3, "km point count");
  expect(km.points[0].survival == 1.0 - 1.0 / 3.0, "km 2/3 exact");
  expect(km.points[1].survival == (1.0 - 1.0 / 3.0) * 0.5, "km 1/3 exact");
  expect(km.points[2].survival == 0.0, "km 0 exact");

  auto null_lr = survival::log_rank({1, 2, 3}, {1, 1, 0}, {1, 2, 3}, {1, 1, 0});
  expect(null_lr.has_value() && null_lr->chi2 == 0.0 && null_lr->p == 1.0,
         "log-rank null case exact");

  auto split = survival::log_rank({1, 2}, {1, 1}, {3, 4}, {1, 1});
  expect(split.has_value(), "log-rank fixture defined");
  if (split) {
    expect(std::fabs(split->chi2 - 2.882) <= 1e-3, "log-rank chi2 2.882");
    expect(std::fabs(split->p - 0.0896) <= 1e-3, "log-rank p 0.0896");
  }

  expect(std::fabs(survival::chi2_sf_df1(3.841) - 0.0500) <= 5e-4,
         "chi2_sf(3.841, 1) = 0.0500");
  expect(std::fabs(survival::chi2_sf_df1(3.841) -
                   oracles::erfc_series(std::sqrt(3.841 / 2.0))) <= 1e-10,
         "chi2_sf matches series oracle");
  return g_checks_failed == before;
}

// ---------------------------------------------------------------------------
// 5. end-to-end planted signal
// ---------------------------------------------------------------------------

struct CvOutcome {
  double mean_cindex = 0.0;
  double max_logrank_p = 0.0;
  double seconds = 0.0;
};

CvOutcome run_cv(double signal, const fs::path& dir) {
  const double t0 = now_seconds();
  dataio::SynthConfig scfg;  // defaults: 200 patients, seed 42
  scfg.signal_strength = signal;
  dataio::synth_generate(scfg, dir);
  dataio::Dataset ds = dataio::load_dataset(dir / "manifest.json");

  trainer::TrainConfig tcfg;  // defaults
  model::ModelConfig mcfg;    // defaults
  auto folds = dataio::kfold_split(ds.n_patients(), 5, tcfg.seed);

  CvOutcome out;
  for (int f = 0; f < 5; ++f) {
    trainer::TrainResult r =
        trainer::train(ds, folds[static_cast<std::size_t>(f)], mcfg, tcfg);
    out.mean_cindex += r.history.back().val_cindex / 5.0;

    trainer::EvalResult ev = trainer::evaluate(
        r.checkpoint, ds, folds[static_cast<std::size_t>(f)].val);
    std::vector<double> risks;
    for (const auto& row : ev.rows) risks.push_back(row.risk);
    std::vector<double> sorted = risks;
    std::sort(sorted.begin(), sorted.end());
    double median = 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    std::vector<double> tl, th;
    std::vector<int> el, eh;
    for (const auto& row : ev.rows) {
      if (row.risk > median) {
        th.push_back(row.time);
        eh.push_back(row.event);
      } else {
        tl.push_back(row.time);
        el.push_back(row.event);
      }
    }
    auto lr = survival::log_rank(tl, el, th, eh);
    double p = lr ? lr->p : 1.0;
    out.max_logrank_p = std::max(out.max_logrank_p, p);
    std::printf("    fold %d: val c-index %.4f, median-split log-rank p %.3g\n",
                f, r.history.back().val_cindex, p);
  }
  out.seconds = now_seconds() - t0;
  return out;
}

bool criterion_end_to_end(const fs::path& workdir) {
  int before = g_checks_failed;

  std::printf("    planted signal (strength 1.5):\n");
  CvOutcome planted = run_cv(1.5, workdir / "planted");
  std::printf("    mean val c-index %.4f, runtime %.1fs (budget 300s)\n",
              planted.mean_cindex, planted.seconds);
  expect(planted.mean_cindex >= 0.70, "planted mean c-index >= 0.70");
  expect(planted.max_logrank_p < 0.05, "log-rank p < 0.05 on every fold");
  expect(planted.seconds <= 300.0, "planted 5-fold run within 5 minutes");

  std::printf("    null control (strength 0):\n");
  CvOutcome null_run = run_cv(0.0, workdir / "null");
  std::printf("    mean val c-index %.4f\n", null_run.mean_cindex);
  expect(null_run.mean_cindex >= 0.40 && null_run.mean_cindex <= 0.60,
         "null-signal mean c-index in [0.40, 0.60]");
  return g_checks_failed == before;
}

// ---------------------------------------------------------------------------
// 6. structural invariants
// ---------------------------------------------------------------------------

bool criterion_structural() {
  int before = g_checks_failed;
  model::ModelConfig cfg;  // defaults
  auto members = even_sets(6, 60);
  std::vector<int> sizes;
  for (const auto& m : members) sizes.push_back(static_cast<int>(m.size()));
  model::ModelParams params = model::ModelParams::init(cfg, 32, sizes, 8);
  Rng rng(88);

  for (int trial = 0; trial < 5; ++trial) {
    int m = 3 + static_cast<int>(rng.below(40));
    Tensor bag = random_tensor(m, 32, rng);
    Tensor genes = random_tensor(1, 60, rng);
    model::ForwardOutput out =
        model::forward_eval(params, cfg, members, bag, genes);

    for (int r = 0; r < out.a_coat.rows; ++r) {
      double s = 0.0;
      for (int c = 0; c < out.a_coat.cols; ++c) {
        expect(out.a_coat(r, c) > 0.0, "a_coat entries positive");
        s += out.a_coat(r, c);
      }
      expect(std::fabs(s - 1.0) <= 1e-12, "a_coat row sums to 1");
    }
    for (const Tensor* w : {&out.pool_h, &out.pool_g}) {
      double s = 0.0;
      for (double v : w->data) {
        expect(v > 0.0, "pool weight positive");
        s += v;
      }
      expect(std::fabs(s - 1.0) <= 1e-12, "pool weights sum to 1");
    }
    for (double v : out.s_risk.data)
      expect(v > 0.0 && v < 1.0, "s_risk in (0,1)");
    for (double v : out.e_h.data) expect(v >= 0.0, "e_h >= 0");
    for (double v : out.e_g.data) expect(v >= 0.0, "e_g >= 0");

    // o_risk in (s_risk/2, s_risk) elementwise
    auto rv = [](const Tensor& t) {
      return std::vector<double>(t.data.begin(), t.data.end());
    };
    evidential::Opinion oh = evidential::evidence_to_opinion(rv(out.e_h));
    evidential::Opinion og = evidential::evidence_to_opinion(rv(out.e_g));
    evidential::DirichletEvidence fused =
        evidential::opinion_to_evidence(evidential::ds_combine(oh, og));
    std::vector<double> o_risk =
        evidential::modulate_risk(fused.evidence, rv(out.s_risk));
    for (std::size_t i = 0; i < o_risk.size(); ++i) {
      expect(o_risk[i] > 0.5 * out.s_risk.data[i] - 1e-15,
             "o_risk above s_risk/2");
      expect(o_risk[i] < out.s_risk.data[i], "o_risk below s_risk");
    }

    // permutation invariance of the patch bag
    Tensor perm(m, 32);
    int shift = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < 32; ++c) perm(r, c) = bag((r + shift) % m, c);
    model::ForwardOutput out2 =
        model::forward_eval(params, cfg, members, perm, genes);
    expect(max_abs_diff(out.s_risk, out2.s_risk) <= 1e-10,
           "s_risk permutation drift");
    expect(max_abs_diff(out.e_h, out2.e_h) <= 1e-10, "e_h permutation drift");
    expect(max_abs_diff(out.e_g, out2.e_g) <= 1e-10, "e_g permutation drift");
    expect(max_abs_diff(out.r_h, out2.r_h) <= 1e-10, "r_h permutation drift");
  }
  return g_checks_failed == before;
}

// ---------------------------------------------------------------------------
// 7. determinism & persistence
// ---------------------------------------------------------------------------

bool criterion_determinism(const fs::path& workdir) {
  int before = g_checks_failed;
  dataio::SynthConfig scfg;
  scfg.patients = 40;
  scfg.d_h = 16;
  scfg.n_genes = 18;
  scfg.mean_bag_size = 8;
  scfg.seed = 3;
  dataio::synth_generate(scfg, workdir / "det");
  dataio::Dataset ds = dataio::load_dataset(workdir / "det" / "manifest.json");

  model::ModelConfig mcfg;
  mcfg.d_model = 32;
  mcfg.ffn_dim = 64;
  mcfg.attn_hidden = 32;
  mcfg.gene_hidden = 16;
  trainer::TrainConfig tcfg;
  tcfg.epochs = 3;
  tcfg.seed = 77;
  auto folds = dataio::kfold_split(ds.n_patients(), 4, tcfg.seed);

  trainer::TrainResult a = trainer::train(ds, folds[0], mcfg, tcfg);
  trainer::TrainResult b = trainer::train(ds, folds[0], mcfg, tcfg);
  bool same_history = a.history.size() == b.history.size();
  for (std::size_t i = 0; same_history && i < a.history.size(); ++i)
    same_history = a.history[i].train_loss == b.history[i].train_loss &&
                   a.history[i].val_cindex == b.history[i].val_cindex;
  expect(same_history, "bitwise-identical training histories");

  fs::path p1 = workdir / "det" / "a.m2ef";
  fs::path p2 = workdir / "det" / "b.m2ef";
  trainer::save_checkpoint(a.checkpoint, p1);
  trainer::Checkpoint loaded = trainer::load_checkpoint(p1);
  trainer::save_checkpoint(loaded, p2);

  auto slurp = [](const fs::path& p) {
    std::FILE* f = std::fopen(p.c_str(), "rb");
    std::string s;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) s.append(buf, n);
    std::fclose(f);
    return s;
  };
  expect(slurp(p1) == slurp(p2), "save/load/save byte-identical");

  trainer::EvalResult e1 = trainer::evaluate(a.checkpoint, ds, folds[0].val);
  trainer::EvalResult e2 = trainer::evaluate(loaded, ds, folds[0].val);
  bool same_eval = e1.rows.size() == e2.rows.size();
  for (std::size_t i = 0; same_eval && i < e1.rows.size(); ++i)
    same_eval = e1.rows[i].risk == e2.rows[i].risk &&
                e1.rows[i].o_risk == e2.rows[i].o_risk &&
                e1.rows[i].u_fused == e2.rows[i].u_fused;
  expect(same_eval, "loaded checkpoint reproduces evaluation bitwise");
  return g_checks_failed == before;
}

}  // namespace

int main() {
  const fs::path workdir =
      fs::temp_directory_path() / ("m2ef_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(workdir);
  fs::create_directories(workdir);

  struct Criterion {
    const char* name;
    std::function<bool()> run;
  };
  const std::vector<Criterion> criteria = {
      {"1. gradient correctness (full model <= 1e-4, primitives <= 1e-6)",
       [] { return criterion_gradients(); }},
      {"2. evidential algebra (10^4 random pairs + worked fixture)",
       [] { return criterion_evidential(); }},
      {"3. c-index oracle equivalence (50 cohorts, exact)",
       [] { return criterion_cindex(); }},
      {"4. survival fixtures (nll, km, log-rank, chi2_sf)",
       [] { return criterion_survival_fixtures(); }},
      {"5. end-to-end planted signal (5-fold CV at defaults)",
       [&] { return criterion_end_to_end(workdir); }},
      {"6. structural invariants (probability vectors, ranges, permutation)",
       [] { return criterion_structural(); }},
      {"7. determinism & persistence",
       [&] { return criterion_determinism(workdir); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    std::printf("criterion %s\n", c.name);
    bool ok = false;
    try {
      ok = c.run();
    } catch (const std::exception& e) {
      std::printf("    EXCEPTION: %s\n", e.what());
    }
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", c.name);
    if (!ok) ++failures;
  }

  fs::remove_all(workdir);
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
