#pragma once

// Dimension reduction (per-view topic proportions under fixed topics) and
// Rank-k linkage by Jensen-Shannon scoring.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldalink/corpus.h"
#include "ldalink/lda.h"

namespace ldalink {

enum class ThetaEstimator {
  kPosteriorMean,  // gamma / sum(gamma)
  kMode,           // Dirichlet mode; needs every gamma_k > 1
};

struct TopicProportion {
  std::vector<double> gamma;
  std::vector<double> theta;
};

TopicProportion infer_proportions(const View& view, const TopicWeights& weights,
                                  const LdaConfig& cfg,
                                  ThetaEstimator estimator = ThetaEstimator::kPosteriorMean);
TopicProportion infer_proportions(const View& view, const TopicModel& model,
                                  const LdaConfig& cfg,
                                  ThetaEstimator estimator = ThetaEstimator::kPosteriorMean);

// KL(p || m) + KL(q || m) with m = (p + q) / 2, natural log, 0 log 0 = 0.
// Note the absence of the usual 1/2 factors: the range is [0, 2 ln 2].
double js_divergence(std::span<const double> p, std::span<const double> q);
// Same quantity over sparse distributions.
double js_divergence(const FrequencyVector& p, const FrequencyVector& q);

struct ScoreMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  std::vector<double> values;  // row-major

  double at(std::size_t i, std::size_t j) const { return values[i * col_ids.size() + j]; }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * col_ids.size(), col_ids.size()};
  }
};

ScoreMatrix score_matrix(std::span<const std::string> x_ids,
                         std::span<const TopicProportion> x_props,
                         std::span<const std::string> y_ids,
                         std::span<const TopicProportion> y_props, int threads = 1);

// Whether smaller scores (dissimilarities) or larger scores (similarities)
// rank first.
enum class ScoreOrder { kAscending, kDescending };

struct Candidate {
  std::string y_id;
  double score = 0.0;
};

struct CandidateList {
  std::string x_id;
  std::vector<Candidate> candidates;  // best first
};

struct LinkageResult {
  ScoreOrder order = ScoreOrder::kAscending;
  std::vector<CandidateList> rows;
};

// Up to k best candidates per row; ties are broken by ascending Y view id.
// With a reject threshold, candidates scoring worse than it are dropped.
LinkageResult rank_k(const ScoreMatrix& scores, int k,
                     ScoreOrder order = ScoreOrder::kAscending,
                     std::optional<double> reject_threshold = std::nullopt);

struct LinkOptions {
  int k = 10;
  int threads = 1;
  ThetaEstimator estimator = ThetaEstimator::kPosteriorMean;
  std::optional<double> reject_threshold;
};

std::vector<TopicProportion> infer_all(std::span<const View> views,
                                       const TopicModel& model, const LdaConfig& cfg,
                                       ThetaEstimator estimator, int threads);

// Infers proportions for every view, scores all pairs, ranks.
LinkageResult link(std::span<const View> x_views, std::span<const View> y_views,
                   const TopicModel& model, const LdaConfig& cfg,
                   const LinkOptions& options);

std::vector<std::string> view_ids(std::span<const View> views);

// CSV "x_view_id,rank,y_view_id,score" with header, rank 1-based, scores with
// 12 significant digits. A leading comment line records the version and the
// score order.
void write_linkage(std::ostream& out, const LinkageResult& result);
LinkageResult read_linkage(std::istream& in);

}  // namespace ldalink
