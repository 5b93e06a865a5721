#include "m2ef/survival.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "m2ef/errors.hpp"

namespace m2ef::survival {

double nll_value(const std::vector<double>& hazards, int bin, bool event,
                 double clamp) {
  const int k = static_cast<int>(hazards.size());
  if (bin < 0 || bin >= k)
    throw ShapeError("nll_value: bin " + std::to_string(bin) +
                     " out of range for K=" + std::to_string(k));
  double loss = 0.0;
  int survive_through = event ? bin - 1 : bin;
  for (int c = 0; c <= survive_through; ++c) {
    double h = std::min(std::max(hazards[static_cast<std::size_t>(c)], clamp),
                        1.0 - clamp);
    loss -= std::log(1.0 - h);
  }
  if (event) {
    double h = std::min(std::max(hazards[static_cast<std::size_t>(bin)], clamp),
                        1.0 - clamp);
    loss -= std::log(h);
  }
  return loss;
}

double scalar_risk(const std::vector<double>& hazards) {
  double surv = 1.0;
  double acc = 0.0;
  for (double h : hazards) {
    surv *= 1.0 - h;
    acc += surv;
  }
  return -acc;
}

std::optional<CIndexResult> c_index(const std::vector<double>& risks,
                                    const std::vector<SurvivalLabel>& labels) {
  if (risks.size() != labels.size())
    throw ShapeError("c_index: " + std::to_string(risks.size()) +
                     " risks vs " + std::to_string(labels.size()) + " labels");
  const std::size_t n = risks.size();
  std::int64_t pairs = 0;
  double concordant = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i].event != 1) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !(labels[i].time < labels[j].time)) continue;
      ++pairs;
      if (risks[i] > risks[j])
        concordant += 1.0;
      else if (risks[i] == risks[j])
        concordant += 0.5;
    }
  }
  if (pairs == 0) return std::nullopt;
  return CIndexResult{concordant / static_cast<double>(pairs), pairs};
}

KMCurve km_curve(const std::vector<double>& times,
                 const std::vector<int>& events) {
  if (times.empty() || times.size() != events.size())
    throw ShapeError("km_curve: need a nonempty, equal-length cohort");
  // deaths and censorings grouped by distinct time
  std::map<double, std::pair<int, int>> by_time;  // time -> (deaths, total)
  for (std::size_t i = 0; i < times.size(); ++i) {
    auto& slot = by_time[times[i]];
    slot.first += events[i] ? 1 : 0;
    slot.second += 1;
  }
  KMCurve curve;
  int at_risk = static_cast<int>(times.size());
  double surv = 1.0;
  for (const auto& [t, slot] : by_time) {
    const auto [deaths, total] = slot;
    if (deaths > 0) {
      surv *= 1.0 - static_cast<double>(deaths) / at_risk;
      curve.points.push_back(KMPoint{t, at_risk, deaths, surv});
    }
    at_risk -= total;
  }
  return curve;
}

double KMCurve::survival_at(double t) const {
  double s = 1.0;
  for (const KMPoint& p : points) {
    if (p.time > t) break;
    s = p.survival;
  }
  return s;
}

std::optional<LogRankResult> log_rank(const std::vector<double>& times_a,
                                      const std::vector<int>& events_a,
                                      const std::vector<double>& times_b,
                                      const std::vector<int>& events_b) {
  if (times_a.empty() || times_b.empty())
    throw ShapeError("log_rank: both groups must be nonempty");
  if (times_a.size() != events_a.size() || times_b.size() != events_b.size())
    throw ShapeError("log_rank: times/events length mismatch");

  // per distinct time: deaths in A, deaths in B, leavers in A, leavers in B
  struct Slot {
    int deaths_a = 0, deaths_b = 0, total_a = 0, total_b = 0;
  };
  std::map<double, Slot> by_time;
  for (std::size_t i = 0; i < times_a.size(); ++i) {
    Slot& s = by_time[times_a[i]];
    s.deaths_a += events_a[i] ? 1 : 0;
    s.total_a += 1;
  }
  for (std::size_t i = 0; i < times_b.size(); ++i) {
    Slot& s = by_time[times_b[i]];
    s.deaths_b += events_b[i] ? 1 : 0;
    s.total_b += 1;
  }

  double at_risk_a = static_cast<double>(times_a.size());
  double at_risk_b = static_cast<double>(times_b.size());
  double observed_a = 0.0, expected_a = 0.0, variance = 0.0;
  for (const auto& [t, s] : by_time) {
    const double deaths = s.deaths_a + s.deaths_b;
    const double n = at_risk_a + at_risk_b;
    if (deaths > 0 && n > 0) {
      observed_a += s.deaths_a;
      expected_a += deaths * at_risk_a / n;
      if (n > 1)
        variance += deaths * (at_risk_a / n) * (at_risk_b / n) * (n - deaths) /
                    (n - 1);
    }
    at_risk_a -= s.total_a;
    at_risk_b -= s.total_b;
  }
  if (variance <= 0.0) return std::nullopt;
  double diff = observed_a - expected_a;
  double chi2 = diff * diff / variance;
  return LogRankResult{chi2, chi2_sf_df1(chi2)};
}

double chi2_sf_df1(double x) {
  if (x < 0.0) throw ShapeError("chi2_sf_df1: negative statistic");
  return std::erfc(std::sqrt(x / 2.0));
}

}  // namespace m2ef::survival
