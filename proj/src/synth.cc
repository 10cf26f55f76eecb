#include "ldalink/synth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ldalink/error.h"

namespace ldalink {
namespace {

constexpr int kMaxRedraws = 100;

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int sample_index(std::span<const double> cumulative, Rng& rng) {
  const double u = uniform01(rng) * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<int>(it - cumulative.begin());
}

std::vector<double> cumulate(std::span<const double> p) {
  std::vector<double> c(p.size());
  std::partial_sum(p.begin(), p.end(), c.begin());
  return c;
}

struct Entity {
  std::vector<double> theta;
  std::vector<int> topic_counts;
  std::vector<EventCount> x;
  std::vector<std::vector<EventCount>> y;
};

enum class Routing { kPlain, kZeroOverlap };

// One attempt at an entity; returns false when a view came out empty.
bool draw_entity(const SynthConfig& cfg, const std::vector<std::vector<double>>& beta_cum,
                 Routing routing, Rng& rng, Entity& e) {
  const std::vector<double> prior(cfg.num_topics, cfg.alpha);
  e.theta = sample_dirichlet(prior, rng);
  const auto theta_cum = cumulate(e.theta);
  const int m = cfg.y_views_min +
                static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.y_views_max -
                                                                     cfg.y_views_min + 1));
  e.topic_counts.assign(cfg.num_topics, 0);
  std::vector<std::int64_t> x_counts(cfg.vocab_size, 0);
  std::vector<std::vector<std::int64_t>> y_counts(m, std::vector<std::int64_t>(cfg.vocab_size, 0));
  // 0 unused, 1 first used by X, 2 first used by Y.
  std::vector<char> owner(routing == Routing::kZeroOverlap ? cfg.vocab_size : 0, 0);
  for (int i = 0; i < cfg.events_per_entity; ++i) {
    const int z = sample_index(theta_cum, rng);
    const int w = sample_index(beta_cum[z], rng);
    ++e.topic_counts[z];
    bool to_x = uniform01(rng) < cfg.split_prob;
    const int yv = static_cast<int>(rng() % static_cast<std::uint64_t>(m));
    if (routing == Routing::kZeroOverlap) {
      if (owner[w] == 0) owner[w] = to_x ? 1 : 2;
      to_x = owner[w] == 1;
    }
    if (to_x)
      ++x_counts[w];
    else
      ++y_counts[yv][w];
  }
  auto sparse = [](const std::vector<std::int64_t>& dense) {
    std::vector<EventCount> out;
    for (std::size_t w = 0; w < dense.size(); ++w)
      if (dense[w] > 0) out.push_back({static_cast<int>(w), dense[w]});
    return out;
  };
  e.x = sparse(x_counts);
  if (e.x.empty()) return false;
  e.y.clear();
  for (const auto& yc : y_counts) {
    e.y.push_back(sparse(yc));
    if (e.y.back().empty()) return false;
  }
  return true;
}

SyntheticWorld build_world(const SynthConfig& cfg, Routing routing) {
  cfg.validate();
  SyntheticWorld world;
  world.config = cfg;
  const int K = cfg.num_topics, W = cfg.vocab_size, D = cfg.num_entities;

  Rng beta_rng(derive_seed(cfg.seed, "synth-beta"));
  const std::vector<double> eta(W, cfg.eta);
  std::vector<std::vector<double>> beta_cum;
  world.truth.true_beta.reserve(static_cast<std::size_t>(K) * W);
  for (int k = 0; k < K; ++k) {
    auto row = sample_dirichlet(eta, beta_rng);
    world.truth.true_beta.insert(world.truth.true_beta.end(), row.begin(), row.end());
    beta_cum.push_back(cumulate(row));
  }

  std::vector<Entity> entities(D);
  for (int d = 0; d < D; ++d) {
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRedraws && !ok; ++attempt) {
      Rng rng(derive_seed(cfg.seed, "synth-entity",
                          static_cast<std::uint64_t>(d) * kMaxRedraws + attempt));
      ok = draw_entity(cfg, beta_cum, routing, rng, entities[d]);
    }
    if (!ok)
      throw InputError("synth: entity " + std::to_string(d) + " produced an empty view in " +
                       std::to_string(kMaxRedraws) + " attempts");
  }

  struct PendingY {
    int entity;
    std::vector<EventCount> counts;
  };
  std::vector<PendingY> pending;
  for (int d = 0; d < D; ++d) {
    const auto& e = entities[d];
    world.x_views.push_back(make_view("x" + std::to_string(d), Domain::kX, e.x));
    for (const auto& y : e.y) pending.push_back({d, y});
    world.truth.true_theta.insert(world.truth.true_theta.end(), e.theta.begin(), e.theta.end());
    world.truth.topic_counts.insert(world.truth.topic_counts.end(), e.topic_counts.begin(),
                                    e.topic_counts.end());
  }
  Rng order_rng(derive_seed(cfg.seed, "synth-y-order"));
  for (std::size_t i = pending.size(); i > 1; --i)
    std::swap(pending[i - 1], pending[order_rng() % i]);
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const std::string id = "y" + std::to_string(i);
    world.y_views.push_back(make_view(id, Domain::kY, std::move(pending[i].counts)));
    world.truth.pi[world.x_views[pending[i].entity].id].push_back(id);
  }
  for (int w = 0; w < W; ++w) world.vocabulary.add("w" + std::to_string(w));
  return world;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_entities < 1 || num_topics < 1 || vocab_size < 1 || events_per_entity < 1)
    throw InputError("synth: D, K, W and N must be >= 1");
  if (!(alpha > 0.0) || !(eta > 0.0)) throw InputError("synth: alpha and eta must be positive");
  if (!(split_prob > 0.0 && split_prob < 1.0))
    throw InputError("synth: split_prob must lie in (0, 1)");
  if (y_views_min < 1 || y_views_max < y_views_min)
    throw InputError("synth: Y view range must satisfy 1 <= min <= max");
  if (events_per_entity < 1 + y_views_max)
    throw InputError("synth: N must be at least 1 + the maximum number of Y views");
}

std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng) {
  // log Gamma(a) draws via Gamma(a + 1) * U^(1/a), normalized in log space.
  std::vector<double> logs(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    std::gamma_distribution<double> g(alpha[i] + 1.0, 1.0);
    const double u = std::max(uniform01(rng), std::numeric_limits<double>::min());
    logs[i] = std::log(g(rng)) + std::log(u) / alpha[i];
  }
  const double mx = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double& l : logs) sum += (l = std::exp(l - mx));
  for (double& l : logs) l /= sum;
  return logs;
}

SyntheticWorld generate_world(const SynthConfig& cfg) {
  return build_world(cfg, Routing::kPlain);
}

SyntheticWorld zero_overlap_world(const SynthConfig& cfg) {
  return build_world(cfg, Routing::kZeroOverlap);
}

std::vector<ActivityRecord> render_activity_log(const SyntheticWorld& world,
                                                const RenderConfig& render) {
  if (!(render.jitter >= 0.0) || render.jitter > 0.0099)
    throw InputError("render: jitter must lie in [0, 0.0099]");
  if (render.time_span < 0) throw InputError("render: time span must be >= 0");
  Rng rng(derive_seed(render.seed, "render"));
  const auto jitter_micro = static_cast<std::uint64_t>(std::llround(render.jitter * 1e6));
  const auto lat0 = std::llround(render.origin_lat * 1e6);
  const auto lon0 = std::llround(render.origin_lon * 1e6);
  std::vector<ActivityRecord> records;
  auto emit = [&](const View& v) {
    for (const auto& c : v.counts) {
      const long long w = c.id;
      const long long lat_cell = (w / 100 % 10) * 1000000 + (w / 10 % 10) * 100000 + (w % 10) * 10000;
      const long long lon_cell = (w / 1000) * 10000;
      for (std::int64_t i = 0; i < c.count; ++i) {
        const auto jl = jitter_micro ? static_cast<long long>(rng() % jitter_micro) : 0;
        const auto jo = jitter_micro ? static_cast<long long>(rng() % jitter_micro) : 0;
        ActivityRecord r;
        r.domain = v.domain;
        r.user_id = v.id;
        r.lat = static_cast<double>(lat0 + lat_cell + 50 + jl) / 1e6;
        r.lon = static_cast<double>(lon0 + lon_cell + 50 + jo) / 1e6;
        r.timestamp = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(render.time_span + 1));
        records.push_back(std::move(r));
      }
    }
  };
  for (const auto& v : world.x_views) emit(v);
  for (const auto& v : world.y_views) emit(v);
  return records;
}

}  // namespace ldalink
