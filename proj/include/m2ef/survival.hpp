#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace m2ef::survival {

// Discrete survival target: time bin, raw time in months, and the event
// indicator (1 = death observed; the complement of the cohort status flag).
struct SurvivalLabel {
  int bin = 0;
  double time = 0.0;
  int event = 0;
};

// Negative log-likelihood of one patient under per-bin hazards, clamped to
// [clamp, 1-clamp] before the logs. Matches the tape op bit for bit; this
// plain version serves evaluation and tests.
double nll_value(const std::vector<double>& hazards, int bin, bool event,
                 double clamp = 1e-7);

// One scalar risk per patient: the negated sum of the discrete survival
// curve, strictly increasing in every hazard.
double scalar_risk(const std::vector<double>& hazards);

struct CIndexResult {
  double value = 0.0;
  std::int64_t comparable_pairs = 0;
};

// Harrell's concordance over pairs (i, j) with event_i = 1 and
// time_i < time_j; risk ties score 0.5, time ties are not comparable.
// Empty when no comparable pair exists.
std::optional<CIndexResult> c_index(const std::vector<double>& risks,
                                    const std::vector<SurvivalLabel>& labels);

struct KMPoint {
  double time = 0.0;
  int at_risk = 0;
  int deaths = 0;
  double survival = 0.0;
};

struct KMCurve {
  std::vector<KMPoint> points;  // at distinct death times, ascending
  double survival_at(double t) const;
};

// Product-limit estimator; events[i] = 1 means death at times[i].
KMCurve km_curve(const std::vector<double>& times,
                 const std::vector<int>& events);

struct LogRankResult {
  double chi2 = 0.0;
  double p = 1.0;
};

// Two-group log-rank test. Empty when the hypergeometric variance is zero
// (no time at which both groups are at risk with an event).
std::optional<LogRankResult> log_rank(const std::vector<double>& times_a,
                                      const std::vector<int>& events_a,
                                      const std::vector<double>& times_b,
                                      const std::vector<int>& events_b);

// Survival function of chi-square with one degree of freedom.
double chi2_sf_df1(double x);

}  // namespace m2ef::survival
