#include "ldalink/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <unordered_map>

#include "ldalink/error.h"
#include "ldalink/version.h"

namespace ldalink {
namespace {

bool strictly_better(double a, double b, ScoreOrder order) {
  return order == ScoreOrder::kAscending ? a < b : a > b;
}

bool row_hits(const CandidateList& row, const std::vector<std::string>& truth, int k,
              ScoreOrder order) {
  if (truth.empty() || static_cast<int>(truth.size()) > k) return false;
  const auto& c = row.candidates;
  const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k), c.size());
  for (const auto& t : truth) {
    std::size_t pos = top;
    for (std::size_t r = 0; r < top; ++r) {
      if (c[r].y_id == t) {
        pos = r;
        break;
      }
    }
    if (pos == top) return false;
    if (pos + 1 == static_cast<std::size_t>(k) && c.size() > pos + 1 &&
        !strictly_better(c[pos].score, c[pos + 1].score, order))
      return false;
  }
  return true;
}

std::string fmt(double v, const char* spec) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

double rank_k_recall(const LinkageResult& result, const IdentityMap& truth, int k,
                     std::optional<std::span<const std::string>> cohort) {
  if (k < 1) throw InputError("recall: k must be >= 1");
  std::unordered_map<std::string, const CandidateList*> rows;
  for (const auto& row : result.rows) rows.emplace(row.x_id, &row);
  std::vector<const CandidateList*> scored;
  if (cohort) {
    for (const auto& id : *cohort) {
      auto it = rows.find(id);
      if (it == rows.end()) throw InputError("recall: unknown X view id " + id);
      scored.push_back(it->second);
    }
  } else {
    for (const auto& row : result.rows) scored.push_back(&row);
  }
  if (scored.empty()) return 0.0;
  int hits = 0;
  for (const CandidateList* row : scored) {
    auto t = truth.find(row->x_id);
    if (t == truth.end()) throw InputError("recall: X view " + row->x_id + " missing from truth");
    if (row_hits(*row, t->second, k, result.order)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scored.size());
}

RecallReport recall_curve(const LinkageResult& result, const IdentityMap& truth,
                          std::span<const int> ks,
                          std::optional<std::span<const std::string>> cohort,
                          std::string cohort_label) {
  if (!std::is_sorted(ks.begin(), ks.end())) throw InputError("recall: ks must be ascending");
  RecallReport report;
  report.cohort = std::move(cohort_label);
  report.population = static_cast<int>(cohort ? cohort->size() : result.rows.size());
  for (int k : ks) {
    const double r = rank_k_recall(result, truth, k, cohort);
    if (!report.recalls.empty() && r < report.recalls.back())
      throw Error("recall curve is not monotone in k");
    report.ks.push_back(k);
    report.recalls.push_back(r);
  }
  return report;
}

void write_recall_report(std::ostream& out, const RecallReport& report) {
  out << "# ldalink " << kVersion << " cohort=" << report.cohort
      << " population=" << report.population << '\n';
  out << "k,recall\n";
  for (std::size_t i = 0; i < report.ks.size(); ++i)
    out << report.ks[i] << ',' << fmt(report.recalls[i], "%.6f") << '\n';
}

std::vector<std::string> sparse_cohort(std::span<const View> x_views,
                                       std::span<const View> y_views,
                                       const IdentityMap& truth, double fraction,
                                       int vocab_size) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InputError("cohort: fraction must lie in (0, 1]");
  std::unordered_map<std::string, const View*> ys;
  for (const auto& v : y_views) ys.emplace(v.id, &v);
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& x : x_views) {
    auto t = truth.find(x.id);
    if (t == truth.end()) continue;
    std::vector<View> linked;
    for (const auto& id : t->second) {
      auto it = ys.find(id);
      if (it == ys.end()) throw InputError("cohort: unknown Y view id " + id);
      linked.push_back(*it->second);
    }
    const View merged = merge_views(x.id, Domain::kY, linked);
    const double l1 = l1_distance(relative_frequency(x, vocab_size),
                                  relative_frequency(merged, vocab_size));
    scored.emplace_back(l1, x.id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const auto take = std::min<std::size_t>(
      scored.size(), static_cast<std::size_t>(std::ceil(fraction * truth.size() - 1e-9)));
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < take; ++i) ids.push_back(scored[i].second);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::string> zero_overlap_cohort(std::span<const View> x_views,
                                             std::span<const View> y_views,
                                             const IdentityMap& truth) {
  std::unordered_map<std::string, const View*> ys;
  for (const auto& v : y_views) ys.emplace(v.id, &v);
  std::vector<std::string> ids;
  for (const auto& x : x_views) {
    auto t = truth.find(x.id);
    if (t == truth.end()) continue;
    std::set<int> xs;
    for (const auto& c : x.counts) xs.insert(c.id);
    bool disjoint = true;
    for (const auto& id : t->second) {
      auto it = ys.find(id);
      if (it == ys.end()) throw InputError("cohort: unknown Y view id " + id);
      for (const auto& c : it->second->counts) disjoint = disjoint && !xs.count(c.id);
    }
    if (disjoint) ids.push_back(x.id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kLdaLink: return "lda-link";
    case Method::kJsDist: return "js-dist";
    case Method::kNflx: return "nflx";
    case Method::kPois: return "pois";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  for (Method m : {Method::kLdaLink, Method::kJsDist, Method::kNflx, Method::kPois})
    if (method_name(m) == text) return m;
  throw InputError("unknown method '" + std::string(text) +
                   "' (expected lda-link, js-dist, nflx or pois)");
}

LinkageResult run_method(Method method, const EventSpace& space,
                         std::span<const ActivityRecord> records, int spatial_digits,
                         const MethodConfig& config, int k) {
  const auto x = select_domain(space.views, Domain::kX);
  const auto y = select_domain(space.views, Domain::kY);
  const int W = space.vocabulary.size();
  switch (method) {
    case Method::kLdaLink: {
      const TopicModel model = fit_online(space.views, W, config.lda);
      LinkOptions opt;
      opt.k = k;
      opt.threads = config.threads;
      opt.estimator = config.estimator;
      return link(x, y, model, config.lda, opt);
    }
    case Method::kJsDist:
      return jsdist_link(x, y, W, k, config.threads);
    case Method::kPois: {
      PoisParams params = estimate_pois_params(x, y, W);
      params.series_truncation = config.pois_truncation;
      return pois_link(x, y, params, k, config.threads);
    }
    case Method::kNflx: {
      Vocabulary locations;
      const auto timed = build_timed_views(records, spatial_digits, locations);
      std::vector<TimedView> tx, ty;
      for (const auto& v : timed) (v.domain == Domain::kX ? tx : ty).push_back(v);
      return nflx_link(tx, ty, locations.size(), config.nflx, k, config.threads).result;
    }
  }
  throw Error("unhandled method");
}

std::vector<SweepRow> granularity_sweep(std::span<const ActivityRecord> records,
                                        const IdentityMap& truth,
                                        const SweepConfig& config) {
  if (config.grid.empty()) throw InputError("sweep: granularity grid is empty");
  if (config.methods.empty()) throw InputError("sweep: no methods selected");
  if (config.ks.empty() || !std::is_sorted(config.ks.begin(), config.ks.end()))
    throw InputError("sweep: ks must be non-empty and ascending");
  // One extra candidate so the rank-k boundary tie rule can be applied.
  const int keep = config.ks.back() + 1;
  std::vector<SweepRow> rows;
  for (const auto& g : config.grid) {
    g.validate();
    const EventSpace space = build_event_space(records, g);
    std::optional<std::vector<std::string>> cohort;
    if (config.sparse_fraction) {
      const auto x = select_domain(space.views, Domain::kX);
      const auto y = select_domain(space.views, Domain::kY);
      cohort = sparse_cohort(x, y, truth, *config.sparse_fraction, space.vocabulary.size());
    }
    for (Method m : config.methods) {
      const LinkageResult result =
          run_method(m, space, records, g.spatial_digits, config.method, keep);
      for (int k : config.ks) {
        rows.push_back({g, m, k, "all", rank_k_recall(result, truth, k),
                        static_cast<int>(result.rows.size())});
        if (cohort)
          rows.push_back({g, m, k, "sparse",
                          rank_k_recall(result, truth, k, std::span<const std::string>(*cohort)),
                          static_cast<int>(cohort->size())});
      }
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "# ldalink " << kVersion << '\n';
  out << "granularity_spatial,granularity_temporal,method,k,cohort,recall,population\n";
  for (const auto& r : rows)
    out << r.granularity.spatial_digits << ',' << r.granularity.temporal_bins << ','
        << method_name(r.method) << ',' << r.k << ',' << r.cohort << ','
        << fmt(r.recall, "%.6f") << ',' << r.population << '\n';
}

}  // namespace ldalink
