#pragma once

// Rank-k recall, cohorts of hard cases, and granularity sweeps comparing
// linkage methods over re-binned event spaces.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ldalink/baselines.h"
#include "ldalink/corpus.h"
#include "ldalink/lda.h"
#include "ldalink/linkage.h"

namespace ldalink {

// Fraction of X views whose whole truth set lies within the top k. A truth
// member seated exactly at rank k only counts when its score is strictly
// better than the candidate at rank k + 1 (when the list has one). Views
// with more than k truth members fail. With a cohort, only those X views
// are scored. Throws InputError for X views missing from the truth or
// cohort ids missing from the result.
double rank_k_recall(const LinkageResult& result, const IdentityMap& truth, int k,
                     std::optional<std::span<const std::string>> cohort = std::nullopt);

struct RecallReport {
  std::vector<int> ks;
  std::vector<double> recalls;
  std::string cohort = "all";
  int population = 0;
};

// ks must be ascending. Throws Error if the curve is not monotone.
RecallReport recall_curve(const LinkageResult& result, const IdentityMap& truth,
                          std::span<const int> ks,
                          std::optional<std::span<const std::string>> cohort = std::nullopt,
                          std::string cohort_label = "all");

void write_recall_report(std::ostream& out, const RecallReport& report);

// The ceil(fraction * |truth|) X views with the largest L1 distance between
// their relative frequencies and those of the union of their Y views. Ties
// go to the smaller view id. Result is sorted by id.
std::vector<std::string> sparse_cohort(std::span<const View> x_views,
                                       std::span<const View> y_views,
                                       const IdentityMap& truth, double fraction,
                                       int vocab_size);

// X views sharing no event with any of their linked Y views, sorted by id.
std::vector<std::string> zero_overlap_cohort(std::span<const View> x_views,
                                             std::span<const View> y_views,
                                             const IdentityMap& truth);

enum class Method { kLdaLink, kJsDist, kNflx, kPois };

std::string_view method_name(Method method);
// "lda-link", "js-dist", "nflx" or "pois"; throws InputError otherwise.
Method parse_method(std::string_view text);

struct MethodConfig {
  LdaConfig lda;
  ThetaEstimator estimator = ThetaEstimator::kPosteriorMean;
  NflxParams nflx;
  int pois_truncation = 200;
  int threads = 1;
};

// Runs one method end to end on a binned event space and keeps `k`
// candidates per X view. LDA-Link fits its topics on every view of the
// space. NFLX needs the raw records and bins locations at `spatial_digits`.
LinkageResult run_method(Method method, const EventSpace& space,
                         std::span<const ActivityRecord> records, int spatial_digits,
                         const MethodConfig& config, int k);

struct SweepConfig {
  std::vector<Granularity> grid;
  std::vector<Method> methods;
  std::vector<int> ks;
  MethodConfig method;
  std::optional<double> sparse_fraction;  // also score the sparse cohort
};

struct SweepRow {
  Granularity granularity;
  Method method = Method::kLdaLink;
  int k = 0;
  std::string cohort;
  double recall = 0.0;
  int population = 0;
};

// Truth is keyed by user ids, which are the view ids of the event space.
std::vector<SweepRow> granularity_sweep(std::span<const ActivityRecord> records,
                                        const IdentityMap& truth,
                                        const SweepConfig& config);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace ldalink
