#pragma once

// Comparison scorers working directly on the event space: a sparsity attack
// on raw timestamps (NFLX), Jensen-Shannon matching of empirical event
// distributions (JS-Dist) and a Poisson visit model (POIS).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ldalink/corpus.h"
#include "ldalink/linkage.h"

namespace ldalink {

// ---- NFLX ----

struct LocationVisits {
  int location = 0;
  std::vector<std::int64_t> times;  // sorted
};

// A view keeping raw timestamps per spatial cell, sorted by location id.
struct TimedView {
  std::string id;
  Domain domain = Domain::kX;
  std::vector<LocationVisits> visits;
};

// One timed view per (domain, user_id) in first-seen order. Locations are
// spatial cells at `spatial_digits`, registered in `locations`.
std::vector<TimedView> build_timed_views(std::span<const ActivityRecord> records,
                                         int spatial_digits, Vocabulary& locations);

struct NflxParams {
  double n0 = 3.0;
  double tau0 = 3600.0;  // seconds
  double eccentricity_eps = 0.5;

  void validate() const;
};

// Total Y visits per location over the whole Y corpus.
struct NflxIndex {
  std::vector<double> y_visits;
};

NflxIndex build_nflx_index(std::span<const TimedView> y_views, int num_locations);

struct NflxDiagnostics {
  int skipped_locations = 0;  // common locations with global Y count <= 1
};

// Sum over common locations l of w_l * f_l with w_l = 1 / ln(global Y count)
// and f_l = exp(X(l)/n0) + exp(-(1/X(l)) sum_t min_t' |t - t'| / tau0).
double nflx_score(const TimedView& x, const TimedView& y, const NflxIndex& index,
                  const NflxParams& params, NflxDiagnostics* diagnostics = nullptr);

struct NflxLinkage {
  LinkageResult result;       // descending similarity
  std::vector<bool> abstain;  // per X view, aligned with result.rows
  int skipped_locations = 0;
};

// Abstains when best - second <= eps * stddev(row); rows with a single
// candidate never abstain.
NflxLinkage nflx_link(std::span<const TimedView> x_views,
                      std::span<const TimedView> y_views, int num_locations,
                      const NflxParams& params, int k, int threads = 1);

// Abstain rule on one row of scores.
bool nflx_abstains(std::span<const double> row_scores, double eccentricity_eps);

// ---- JS-Dist ----

double jsdist_score(const FrequencyVector& px, const FrequencyVector& py);

LinkageResult jsdist_link(std::span<const View> x_views, std::span<const View> y_views,
                          int vocab_size, int k, int threads = 1);

// ---- POIS ----

struct PoisParams {
  std::vector<double> rates;  // per event-space cell, all > 0
  double p1 = 0.5;
  double p2 = 0.5;
  int series_truncation = 200;

  void validate() const;
};

// ln phi(x, y) where the expectation runs over X ~ Poisson(rate (1-p1)(1-p2))
// and is evaluated as a truncated series in log space.
double pois_log_phi(std::int64_t x, std::int64_t y, double rate, double p1, double p2,
                    int truncation);
double pois_phi(std::int64_t x, std::int64_t y, double rate, double p1, double p2,
                int truncation);

// Sum of ln phi over every cell; all-zero cells contribute -rate*p1*p2.
double pois_score(const View& x, const View& y, const PoisParams& params);

// Rates are cell totals over both corpora divided by the number of X views
// (floored at 1e-6); p1 and p2 are the X and Y shares of all events.
PoisParams estimate_pois_params(std::span<const View> x_views,
                                std::span<const View> y_views, int vocab_size);

LinkageResult pois_link(std::span<const View> x_views, std::span<const View> y_views,
                        const PoisParams& params, int k, int threads = 1);

}  // namespace ldalink
