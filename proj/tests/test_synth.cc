#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "ldalink/error.h"
#include "ldalink/linkage.h"
#include "ldalink/synth.h"

namespace ldalink {
namespace {

SynthConfig small(std::uint64_t seed) {
  SynthConfig c;
  c.num_entities = 40;
  c.num_topics = 4;
  c.vocab_size = 200;
  c.events_per_entity = 80;
  c.seed = seed;
  return c;
}

void expect_same_world(const SyntheticWorld& a, const SyntheticWorld& b) {
  EXPECT_EQ(a.x_views, b.x_views);
  EXPECT_EQ(a.y_views, b.y_views);
  EXPECT_EQ(a.truth.pi, b.truth.pi);
  EXPECT_EQ(a.truth.true_beta, b.truth.true_beta);
  EXPECT_EQ(a.truth.true_theta, b.truth.true_theta);
  EXPECT_EQ(a.truth.topic_counts, b.truth.topic_counts);
}

TEST(GenerateWorld, Deterministic) {
  expect_same_world(generate_world(small(3)), generate_world(small(3)));
  EXPECT_NE(generate_world(small(3)).x_views, generate_world(small(4)).x_views);
}

TEST(GenerateWorld, SplitFollowsBinomialMean) {
  SynthConfig c = small(9);
  c.num_entities = 200;
  c.events_per_entity = 100;
  c.split_prob = 0.3;
  const SyntheticWorld w = generate_world(c);
  double mean = 0.0;
  for (const auto& v : w.x_views) mean += static_cast<double>(v.total);
  mean /= c.num_entities;
  const double sigma = std::sqrt(c.events_per_entity * 0.3 * 0.7 / c.num_entities);
  EXPECT_NEAR(mean, 0.3 * c.events_per_entity, 3 * sigma);
}

TEST(GenerateWorld, SingleYViewGivesBijection) {
  const SyntheticWorld w = generate_world(small(5));
  ASSERT_EQ(w.truth.pi.size(), w.x_views.size());
  std::set<std::string> seen;
  for (const auto& [x, ys] : w.truth.pi) {
    ASSERT_EQ(ys.size(), 1u);
    EXPECT_TRUE(seen.insert(ys[0]).second);
  }
  EXPECT_EQ(seen.size(), w.y_views.size());
}

TEST(GenerateWorld, ConservationAndPartition) {
  SynthConfig c = small(12);
  c.y_views_min = 1;
  c.y_views_max = 3;
  const SyntheticWorld w = generate_world(c);
  std::map<std::string, const View*> ys;
  for (const auto& v : w.y_views) ys[v.id] = &v;
  std::multiset<std::string> used;
  for (std::size_t d = 0; d < w.x_views.size(); ++d) {
    const auto& x = w.x_views[d];
    EXPECT_GT(x.total, 0);
    std::int64_t total = x.total;
    const auto& linked = w.truth.pi.at(x.id);
    EXPECT_GE(linked.size(), 1u);
    EXPECT_LE(linked.size(), 3u);
    for (const auto& id : linked) {
      used.insert(id);
      ASSERT_TRUE(ys.count(id));
      EXPECT_GT(ys[id]->total, 0);
      total += ys[id]->total;
    }
    EXPECT_EQ(total, c.events_per_entity);
    std::int64_t drawn = 0;
    for (int k = 0; k < c.num_topics; ++k) drawn += w.truth.topic_counts[d * c.num_topics + k];
    EXPECT_EQ(drawn, c.events_per_entity);
  }
  EXPECT_EQ(used.size(), w.y_views.size());
  EXPECT_EQ(std::set<std::string>(used.begin(), used.end()).size(), used.size());
}

TEST(GenerateWorld, SimplexRows) {
  const SyntheticWorld w = generate_world(small(2));
  const auto& c = w.config;
  for (int k = 0; k < c.num_topics; ++k) {
    double s = 0.0;
    for (int v = 0; v < c.vocab_size; ++v) s += w.truth.true_beta[k * c.vocab_size + v];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  for (int d = 0; d < c.num_entities; ++d) {
    double s = 0.0;
    for (int k = 0; k < c.num_topics; ++k) s += w.truth.true_theta[d * c.num_topics + k];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(GenerateWorld, EmpiricalProportionsConverge) {
  auto mean_l1 = [](int n) {
    SynthConfig c;
    c.num_entities = 50;
    c.num_topics = 5;
    c.vocab_size = 100;
    c.events_per_entity = n;
    c.seed = 21;
    const SyntheticWorld w = generate_world(c);
    double err = 0.0;
    for (int d = 0; d < c.num_entities; ++d)
      for (int k = 0; k < c.num_topics; ++k)
        err += std::fabs(static_cast<double>(w.truth.topic_counts[d * 5 + k]) / n -
                         w.truth.true_theta[d * 5 + k]);
    return err / c.num_entities;
  };
  EXPECT_LT(mean_l1(10000), mean_l1(100));
}

TEST(GenerateWorld, RejectsImpossibleConfig) {
  SynthConfig c = small(1);
  c.events_per_entity = 3;
  c.y_views_max = 3;
  EXPECT_THROW(generate_world(c), InputError);
  c = small(1);
  c.split_prob = 1.0;
  EXPECT_THROW(generate_world(c), InputError);
}

TEST(ZeroOverlapWorld, DisjointSupportsSharedVocabulary) {
  SynthConfig c = small(7);
  c.vocab_size = 400;
  const SyntheticWorld w = zero_overlap_world(c);
  std::map<std::string, const View*> ys;
  for (const auto& v : w.y_views) ys[v.id] = &v;
  std::set<int> x_words, y_words;
  for (const auto& x : w.x_views) {
    for (const auto& e : x.counts) x_words.insert(e.id);
    std::int64_t total = x.total;
    for (const auto& id : w.truth.pi.at(x.id)) {
      const View& y = *ys[id];
      total += y.total;
      EXPECT_EQ(overlap_stats(x, y, c.vocab_size).common_event_count, 0);
      const double js = js_divergence(relative_frequency(x, c.vocab_size),
                                      relative_frequency(y, c.vocab_size));
      EXPECT_NEAR(js, 2 * std::log(2.0), 1e-12);
      EXPECT_GT(y.total, 0);
    }
    EXPECT_EQ(total, c.events_per_entity);
  }
  for (const auto& y : w.y_views)
    for (const auto& e : y.counts) y_words.insert(e.id);
  std::vector<int> shared;
  std::set_intersection(x_words.begin(), x_words.end(), y_words.begin(), y_words.end(),
                        std::back_inserter(shared));
  EXPECT_FALSE(shared.empty());
}

TEST(ZeroOverlapWorld, Deterministic) {
  expect_same_world(zero_overlap_world(small(8)), zero_overlap_world(small(8)));
}

TEST(SampleDirichlet, SmallConcentrationStaysOnSimplex) {
  Rng rng(4);
  const std::vector<double> a(50, 1e-3);
  for (int t = 0; t < 100; ++t) {
    const auto p = sample_dirichlet(a, rng);
    double s = 0.0;
    for (double x : p) {
      ASSERT_TRUE(std::isfinite(x));
      ASSERT_GE(x, 0.0);
      s += x;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(RenderActivityLog, BinningRecoversViews) {
  SynthConfig c = small(6);
  c.vocab_size = 3000;
  const SyntheticWorld w = generate_world(c);
  RenderConfig r;
  r.seed = 6;
  const auto records = render_activity_log(w, r);
  const EventSpace space = build_event_space(records, {2, 1});

  auto key_of = [&](int word) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f|0",
                  r.origin_lat + word / 100 % 10 + (word / 10 % 10) / 10.0 + (word % 10) / 100.0,
                  r.origin_lon + (word / 1000) / 100.0);
    return std::string(buf);
  };
  std::map<std::string, const View*> built;
  for (const auto& v : space.views) built[v.id] = &v;
  auto check = [&](const View& v) {
    ASSERT_TRUE(built.count(v.id));
    const View& b = *built[v.id];
    EXPECT_EQ(b.domain, v.domain);
    EXPECT_EQ(b.total, v.total);
    ASSERT_EQ(b.counts.size(), v.counts.size());
    for (const auto& e : v.counts) {
      const auto id = space.vocabulary.find(key_of(e.id));
      ASSERT_TRUE(id.has_value()) << key_of(e.id);
      auto it = std::find_if(b.counts.begin(), b.counts.end(),
                             [&](const EventCount& x) { return x.id == *id; });
      ASSERT_NE(it, b.counts.end());
      EXPECT_EQ(it->count, e.count);
    }
  };
  for (const auto& v : w.x_views) check(v);
  for (const auto& v : w.y_views) check(v);
  EXPECT_EQ(space.views.size(), w.x_views.size() + w.y_views.size());
}

}  // namespace
}  // namespace ldalink
