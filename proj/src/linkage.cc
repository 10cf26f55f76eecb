#include "ldalink/linkage.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "ldalink/error.h"
#include "ldalink/parallel.h"
#include "ldalink/version.h"

namespace ldalink {
namespace {

// Contribution of one coordinate pair to KL(p||m) + KL(q||m).
inline double js_term(double a, double b) {
  const double s = a + b;
  if (s <= 0.0) return 0.0;
  double t = 0.0;
  if (a > 0.0) t += a * std::log(2.0 * a / s);
  if (b > 0.0) t += b * std::log(2.0 * b / s);
  return t;
}

std::string_view order_name(ScoreOrder order) {
  return order == ScoreOrder::kAscending ? "ascending" : "descending";
}

}  // namespace

TopicProportion infer_proportions(const View& view, const TopicWeights& weights,
                                  const LdaConfig& cfg, ThetaEstimator estimator) {
  EStepResult r = e_step(view, weights, cfg);
  TopicProportion prop;
  prop.gamma = std::move(r.gamma);
  if (estimator == ThetaEstimator::kMode) {
    prop.theta = dirichlet_mode(prop.gamma);
  } else {
    const double total = std::accumulate(prop.gamma.begin(), prop.gamma.end(), 0.0);
    prop.theta.resize(prop.gamma.size());
    for (std::size_t k = 0; k < prop.gamma.size(); ++k) prop.theta[k] = prop.gamma[k] / total;
  }
  return prop;
}

TopicProportion infer_proportions(const View& view, const TopicModel& model,
                                  const LdaConfig& cfg, ThetaEstimator estimator) {
  return infer_proportions(view, TopicWeights(model), cfg, estimator);
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw InputError("js_divergence: dimension mismatch (" + std::to_string(p.size()) +
                     " vs " + std::to_string(q.size()) + ")");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += js_term(p[i], q[i]);
  return std::max(0.0, sum);
}

double js_divergence(const FrequencyVector& p, const FrequencyVector& q) {
  double sum = 0.0;
  auto a = p.entries.begin();
  auto b = q.entries.begin();
  while (a != p.entries.end() || b != q.entries.end()) {
    if (b == q.entries.end() || (a != p.entries.end() && a->id < b->id)) {
      sum += js_term(a->p, 0.0);
      ++a;
    } else if (a == p.entries.end() || b->id < a->id) {
      sum += js_term(0.0, b->p);
      ++b;
    } else {
      sum += js_term(a->p, b->p);
      ++a;
      ++b;
    }
  }
  return std::max(0.0, sum);
}

ScoreMatrix score_matrix(std::span<const std::string> x_ids,
                         std::span<const TopicProportion> x_props,
                         std::span<const std::string> y_ids,
                         std::span<const TopicProportion> y_props, int threads) {
  if (x_ids.size() != x_props.size() || y_ids.size() != y_props.size())
    throw InputError("score_matrix: ids and proportions must align");
  ScoreMatrix m;
  m.row_ids.assign(x_ids.begin(), x_ids.end());
  m.col_ids.assign(y_ids.begin(), y_ids.end());
  m.values.resize(x_ids.size() * y_ids.size());
  parallel_for(x_ids.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < y_ids.size(); ++j)
      m.values[i * y_ids.size() + j] = js_divergence(x_props[i].theta, y_props[j].theta);
  });
  return m;
}

LinkageResult rank_k(const ScoreMatrix& scores, int k, ScoreOrder order,
                     std::optional<double> reject_threshold) {
  if (k < 1) throw InputError("k must be >= 1");
  LinkageResult result;
  result.order = order;
  const std::size_t cols = scores.col_ids.size();
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), cols);
  std::vector<std::size_t> idx(cols);
  for (std::size_t i = 0; i < scores.row_ids.size(); ++i) {
    auto row = scores.row(i);
    std::iota(idx.begin(), idx.end(), 0);
    auto better = [&](std::size_t a, std::size_t b) {
      if (row[a] != row[b])
        return order == ScoreOrder::kAscending ? row[a] < row[b] : row[a] > row[b];
      return scores.col_ids[a] < scores.col_ids[b];
    };
    std::partial_sort(idx.begin(), idx.begin() + keep, idx.end(), better);
    CandidateList list;
    list.x_id = scores.row_ids[i];
    for (std::size_t r = 0; r < keep; ++r) {
      const double s = row[idx[r]];
      if (reject_threshold) {
        const bool worse = order == ScoreOrder::kAscending ? s > *reject_threshold
                                                           : s < *reject_threshold;
        if (worse) break;
      }
      list.candidates.push_back({scores.col_ids[idx[r]], s});
    }
    result.rows.push_back(std::move(list));
  }
  return result;
}

std::vector<std::string> view_ids(std::span<const View> views) {
  std::vector<std::string> ids;
  ids.reserve(views.size());
  for (const auto& v : views) ids.push_back(v.id);
  return ids;
}

std::vector<TopicProportion> infer_all(std::span<const View> views,
                                       const TopicModel& model, const LdaConfig& cfg,
                                       ThetaEstimator estimator, int threads) {
  const TopicWeights weights(model);
  std::vector<TopicProportion> props(views.size());
  parallel_for(views.size(), threads, [&](std::size_t i) {
    props[i] = infer_proportions(views[i], weights, cfg, estimator);
  });
  return props;
}

LinkageResult link(std::span<const View> x_views, std::span<const View> y_views,
                   const TopicModel& model, const LdaConfig& cfg,
                   const LinkOptions& options) {
  const auto x_props = infer_all(x_views, model, cfg, options.estimator, options.threads);
  const auto y_props = infer_all(y_views, model, cfg, options.estimator, options.threads);
  const auto x_ids = view_ids(x_views);
  const auto y_ids = view_ids(y_views);
  const ScoreMatrix scores = score_matrix(x_ids, x_props, y_ids, y_props, options.threads);
  return rank_k(scores, options.k, ScoreOrder::kAscending, options.reject_threshold);
}

void write_linkage(std::ostream& out, const LinkageResult& result) {
  out << "# ldalink " << kVersion << " order=" << order_name(result.order) << '\n';
  out << "x_view_id,rank,y_view_id,score\n";
  char buf[40];
  for (const auto& row : result.rows) {
    for (std::size_t r = 0; r < row.candidates.size(); ++r) {
      std::snprintf(buf, sizeof(buf), "%.12g", row.candidates[r].score);
      out << row.x_id << ',' << (r + 1) << ',' << row.candidates[r].y_id << ',' << buf
          << '\n';
    }
  }
}

LinkageResult read_linkage(std::istream& in) {
  LinkageResult result;
  std::unordered_map<std::string, std::size_t> row_index;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.find("order=descending") != std::string::npos)
        result.order = ScoreOrder::kDescending;
      continue;
    }
    if (line == "x_view_id,rank,y_view_id,score") continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1)
      f.push_back(line.substr(start, pos - start));
    f.push_back(line.substr(start));
    if (f.size() != 4) throw ParseError(line_no, "record", "expected 4 fields");
    char* end = nullptr;
    const long rank = std::strtol(f[1].c_str(), &end, 10);
    if (end == f[1].c_str() || *end != '\0' || rank < 1)
      throw ParseError(line_no, "rank", "not a positive integer");
    const double score = std::strtod(f[3].c_str(), &end);
    if (end == f[3].c_str() || *end != '\0') throw ParseError(line_no, "score", "not a number");
    auto [it, inserted] = row_index.emplace(f[0], result.rows.size());
    if (inserted) result.rows.push_back({f[0], {}});
    auto& cands = result.rows[it->second].candidates;
    if (static_cast<std::size_t>(rank) != cands.size() + 1)
      throw ParseError(line_no, "rank", "ranks must be consecutive per X view");
    cands.push_back({f[2], score});
  }
  return result;
}

}  // namespace ldalink
