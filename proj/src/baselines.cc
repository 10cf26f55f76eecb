#include "ldalink/baselines.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ldalink/error.h"
#include "ldalink/parallel.h"

namespace ldalink {
namespace {

template <typename V, typename Score>
ScoreMatrix pairwise(std::span<const V> x_views, std::span<const V> y_views, int threads,
                     Score&& score) {
  ScoreMatrix m;
  for (const auto& v : x_views) m.row_ids.push_back(v.id);
  for (const auto& v : y_views) m.col_ids.push_back(v.id);
  m.values.resize(x_views.size() * y_views.size());
  parallel_for(x_views.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < y_views.size(); ++j)
      m.values[i * y_views.size() + j] = score(x_views[i], y_views[j]);
  });
  return m;
}

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

}  // namespace

std::vector<TimedView> build_timed_views(std::span<const ActivityRecord> records,
                                         int spatial_digits, Vocabulary& locations) {
  Granularity{spatial_digits, 1}.validate();
  std::vector<TimedView> views;
  std::vector<std::map<int, std::vector<std::int64_t>>> by_location;
  std::map<std::pair<Domain, std::string>, std::size_t> index;
  for (const auto& r : records) {
    const int loc = locations.add(bin_spatial(r.lat, r.lon, spatial_digits));
    auto [it, inserted] = index.emplace(std::make_pair(r.domain, r.user_id), views.size());
    if (inserted) {
      views.push_back({r.user_id, r.domain, {}});
      by_location.emplace_back();
    }
    by_location[it->second][loc].push_back(r.timestamp);
  }
  for (std::size_t i = 0; i < views.size(); ++i) {
    for (auto& [loc, times] : by_location[i]) {
      std::sort(times.begin(), times.end());
      views[i].visits.push_back({loc, std::move(times)});
    }
  }
  return views;
}

void NflxParams::validate() const {
  if (!(n0 > 0.0)) throw InputError("nflx: n0 must be positive");
  if (!(tau0 > 0.0)) throw InputError("nflx: tau0 must be positive");
  if (!(eccentricity_eps >= 0.0)) throw InputError("nflx: eccentricity_eps must be >= 0");
}

NflxIndex build_nflx_index(std::span<const TimedView> y_views, int num_locations) {
  NflxIndex index;
  index.y_visits.assign(num_locations, 0.0);
  for (const auto& v : y_views)
    for (const auto& lv : v.visits) index.y_visits.at(lv.location) += lv.times.size();
  return index;
}

double nflx_score(const TimedView& x, const TimedView& y, const NflxIndex& index,
                  const NflxParams& params, NflxDiagnostics* diagnostics) {
  double score = 0.0;
  auto a = x.visits.begin();
  auto b = y.visits.begin();
  while (a != x.visits.end() && b != y.visits.end()) {
    if (a->location < b->location) {
      ++a;
      continue;
    }
    if (b->location < a->location) {
      ++b;
      continue;
    }
    const double global = index.y_visits.at(a->location);
    if (global <= 1.0) {
      if (diagnostics) ++diagnostics->skipped_locations;
    } else {
      const auto& yt = b->times;
      double gap_sum = 0.0;
      for (std::int64_t t : a->times) {
        auto it = std::lower_bound(yt.begin(), yt.end(), t);
        double best = std::numeric_limits<double>::infinity();
        if (it != yt.end()) best = static_cast<double>(*it - t);
        if (it != yt.begin()) best = std::min(best, static_cast<double>(t - *(it - 1)));
        gap_sum += best / params.tau0;
      }
      const double nx = static_cast<double>(a->times.size());
      const double f = std::exp(nx / params.n0) + std::exp(-gap_sum / nx);
      score += f / std::log(global);
    }
    ++a;
    ++b;
  }
  return score;
}

bool nflx_abstains(std::span<const double> row_scores, double eccentricity_eps) {
  if (row_scores.size() < 2) return false;
  double mean = 0.0;
  for (double s : row_scores) mean += s;
  mean /= row_scores.size();
  double var = 0.0;
  for (double s : row_scores) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / row_scores.size());
  double best = -std::numeric_limits<double>::infinity();
  double second = best;
  for (double s : row_scores) {
    if (s > best) {
      second = best;
      best = s;
    } else if (s > second) {
      second = s;
    }
  }
  return best - second <= eccentricity_eps * sd;
}

NflxLinkage nflx_link(std::span<const TimedView> x_views,
                      std::span<const TimedView> y_views, int num_locations,
                      const NflxParams& params, int k, int threads) {
  params.validate();
  const NflxIndex index = build_nflx_index(y_views, num_locations);
  std::vector<NflxDiagnostics> diag(x_views.size());
  ScoreMatrix m;
  for (const auto& v : x_views) m.row_ids.push_back(v.id);
  for (const auto& v : y_views) m.col_ids.push_back(v.id);
  m.values.resize(x_views.size() * y_views.size());
  parallel_for(x_views.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < y_views.size(); ++j)
      m.values[i * y_views.size() + j] =
          nflx_score(x_views[i], y_views[j], index, params, &diag[i]);
  });
  NflxLinkage out;
  out.result = rank_k(m, k, ScoreOrder::kDescending);
  for (std::size_t i = 0; i < x_views.size(); ++i) {
    out.abstain.push_back(nflx_abstains(m.row(i), params.eccentricity_eps));
    out.skipped_locations += diag[i].skipped_locations;
  }
  return out;
}

double jsdist_score(const FrequencyVector& px, const FrequencyVector& py) {
  return js_divergence(px, py);
}

LinkageResult jsdist_link(std::span<const View> x_views, std::span<const View> y_views,
                          int vocab_size, int k, int threads) {
  std::vector<FrequencyVector> fx, fy;
  for (const auto& v : x_views) fx.push_back(relative_frequency(v, vocab_size));
  for (const auto& v : y_views) fy.push_back(relative_frequency(v, vocab_size));
  ScoreMatrix m;
  m.row_ids = view_ids(x_views);
  m.col_ids = view_ids(y_views);
  m.values.resize(fx.size() * fy.size());
  parallel_for(fx.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < fy.size(); ++j)
      m.values[i * fy.size() + j] = jsdist_score(fx[i], fy[j]);
  });
  return rank_k(m, k, ScoreOrder::kAscending);
}

void PoisParams::validate() const {
  if (!(p1 > 0.0 && p1 < 1.0) || !(p2 > 0.0 && p2 < 1.0))
    throw InputError("pois: p1 and p2 must lie strictly inside (0, 1)");
  if (series_truncation < 50) throw InputError("pois: series truncation must be >= 50");
  for (double r : rates)
    if (!(r > 0.0)) throw InputError("pois: every rate must be positive");
}

double pois_log_phi(std::int64_t x, std::int64_t y, double rate, double p1, double p2,
                    int truncation) {
  if (x < 0 || y < 0) throw InputError("pois: counts must be non-negative");
  if (!(rate > 0.0)) throw InputError("pois: rate must be positive");
  if (truncation < 50) throw InputError("pois: series truncation must be >= 50");
  const double mu = rate * (1.0 - p1) * (1.0 - p2);
  const std::int64_t lo = std::min(x, y);
  const double hi = static_cast<double>(std::max(x, y));
  const double diff = static_cast<double>(std::llabs(x - y));
  double log_phi = -rate * p1 * p2 + y * std::log1p(-p1) + x * std::log1p(-p2);
  if (lo == 0) return log_phi;  // (X + d)! / (X + d)! = 1
  log_phi -= lo * std::log(mu);

  const double log_mu = std::log(mu);
  double log_sum = -std::numeric_limits<double>::infinity();
  double log_term = 0.0;
  double ratio = 0.0;
  for (int n = 0; n <= truncation; ++n) {
    log_term = -mu + n * log_mu - std::lgamma(n + 1.0) + std::lgamma(n + hi + 1.0) -
               std::lgamma(n + diff + 1.0);
    log_sum = log_add(log_sum, log_term);
    ratio = mu * (n + hi + 1.0) / ((n + 1.0) * (n + diff + 1.0));
    if (ratio < 0.5 && log_term - log_sum < -40.0) break;
  }
  if (ratio >= 1.0 || log_term + std::log(ratio / (1.0 - ratio)) - log_sum > std::log(1e-12))
    throw InputError("pois: series truncation too small for rate " + std::to_string(rate));
  return log_phi + log_sum;
}

double pois_phi(std::int64_t x, std::int64_t y, double rate, double p1, double p2,
                int truncation) {
  return std::exp(pois_log_phi(x, y, rate, p1, p2, truncation));
}

double pois_score(const View& x, const View& y, const PoisParams& params) {
  const double pp = params.p1 * params.p2;
  double score = 0.0;
  for (double r : params.rates) score -= r * pp;
  auto cell = [&](int id, std::int64_t cx, std::int64_t cy) {
    const double r = params.rates.at(id);
    score += pois_log_phi(cx, cy, r, params.p1, params.p2, params.series_truncation) + r * pp;
  };
  auto a = x.counts.begin();
  auto b = y.counts.begin();
  while (a != x.counts.end() || b != y.counts.end()) {
    if (b == y.counts.end() || (a != x.counts.end() && a->id < b->id)) {
      cell(a->id, a->count, 0);
      ++a;
    } else if (a == x.counts.end() || b->id < a->id) {
      cell(b->id, 0, b->count);
      ++b;
    } else {
      cell(a->id, a->count, b->count);
      ++a;
      ++b;
    }
  }
  return score;
}

PoisParams estimate_pois_params(std::span<const View> x_views,
                                std::span<const View> y_views, int vocab_size) {
  if (x_views.empty() || y_views.empty())
    throw InputError("pois: both corpora must be non-empty");
  std::vector<double> totals(vocab_size, 0.0);
  double nx = 0.0, ny = 0.0;
  auto add = [&](const View& v, double& n) {
    for (const auto& c : v.counts) {
      if (c.id < 0 || c.id >= vocab_size)
        throw InputError("pois: event id out of range in view " + v.id);
      totals[c.id] += c.count;
      n += c.count;
    }
  };
  for (const auto& v : x_views) add(v, nx);
  for (const auto& v : y_views) add(v, ny);
  if (nx <= 0.0 || ny <= 0.0) throw InputError("pois: both corpora need events");
  PoisParams p;
  const double entities = static_cast<double>(x_views.size());
  p.rates.resize(vocab_size);
  for (int w = 0; w < vocab_size; ++w) p.rates[w] = std::max(1e-6, totals[w] / entities);
  p.p1 = nx / (nx + ny);
  p.p2 = ny / (nx + ny);
  return p;
}

LinkageResult pois_link(std::span<const View> x_views, std::span<const View> y_views,
                        const PoisParams& params, int k, int threads) {
  params.validate();
  const ScoreMatrix m = pairwise(x_views, y_views, threads, [&](const View& a, const View& b) {
    return pois_score(a, b, params);
  });
  return rank_k(m, k, ScoreOrder::kDescending);
}

}  // namespace ldalink
