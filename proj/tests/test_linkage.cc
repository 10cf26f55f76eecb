#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ldalink/error.h"
#include "ldalink/linkage.h"
#include "ldalink/rng.h"
#include "ldalink/synth.h"

namespace ldalink {
namespace {

const double kLn2 = std::log(2.0);

std::vector<double> random_simplex(int n, Rng& rng, double sparsity = 0.0) {
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& x : p) s += (x = u(rng) < sparsity ? 0.0 : e(rng));
  if (s == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (auto& x : p) x /= s;
  return p;
}

TopicProportion prop(std::vector<double> theta) {
  return {theta, theta};
}

ScoreMatrix matrix(std::vector<std::vector<double>> rows) {
  ScoreMatrix m;
  for (std::size_t i = 0; i < rows.size(); ++i) m.row_ids.push_back("X" + std::to_string(i + 1));
  for (std::size_t j = 0; j < rows[0].size(); ++j) m.col_ids.push_back("Y" + std::to_string(j + 1));
  for (const auto& r : rows) m.values.insert(m.values.end(), r.begin(), r.end());
  return m;
}

std::vector<std::string> ids(const CandidateList& row) {
  std::vector<std::string> out;
  for (const auto& c : row.candidates) out.push_back(c.y_id);
  return out;
}

TEST(JsDivergence, Examples) {
  const std::vector<double> p = {0.3, 0.7};
  EXPECT_EQ(js_divergence(p, p), 0.0);
  const std::vector<double> a = {1.0, 0.0}, b = {0.0, 1.0};
  EXPECT_NEAR(js_divergence(a, b), 2 * kLn2, 1e-15);
  EXPECT_NEAR(js_divergence(a, b), 1.386294, 1e-6);
  const std::vector<double> c = {0.75, 0.25}, d = {0.25, 0.75};
  EXPECT_NEAR(js_divergence(c, d), 0.261624, 1e-6);
  // Hand evaluation against m = (0.5, 0.5).
  const double kl = 0.75 * std::log(1.5) + 0.25 * std::log(0.5);
  EXPECT_NEAR(js_divergence(c, d), 2 * kl, 1e-15);
}

TEST(JsDivergence, DimensionMismatch) {
  const std::vector<double> a = {1.0}, b = {0.5, 0.5};
  EXPECT_THROW(js_divergence(a, b), InputError);
}

TEST(JsDivergence, SparseMatchesDense) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto p = random_simplex(9, rng, 0.4), q = random_simplex(9, rng, 0.4);
    FrequencyVector fp, fq;
    for (int i = 0; i < 9; ++i) {
      if (p[i] > 0) fp.entries.push_back({i, p[i]});
      if (q[i] > 0) fq.entries.push_back({i, q[i]});
    }
    EXPECT_NEAR(js_divergence(fp, fq), js_divergence(p, q), 1e-14);
  }
}

TEST(JsDivergence, RandomPairProperties) {
  Rng rng(42);
  for (int t = 0; t < 20000; ++t) {
    const int n = 2 + t % 12;
    const auto p = random_simplex(n, rng, t % 3 == 0 ? 0.5 : 0.0);
    const auto q = random_simplex(n, rng, t % 5 == 0 ? 0.5 : 0.0);
    const double js = js_divergence(p, q);
    ASSERT_EQ(js, js_divergence(q, p));
    ASSERT_GE(js, 0.0);
    ASSERT_LE(js, 2 * kLn2 + 1e-12);
    ASSERT_EQ(js_divergence(p, p), 0.0);
    double l1 = 0.0;
    for (int i = 0; i < n; ++i) l1 += std::fabs(p[i] - q[i]);
    ASSERT_LE(l1, 2 * std::sqrt(2 * js) + 1e-12);
  }
}

TEST(JsDivergence, PrintedPinskerConstantFailsOnPointMasses) {
  const std::vector<double> a = {1.0, 0.0}, b = {0.0, 1.0};
  EXPECT_GT(2.0, std::sqrt(2 * js_divergence(a, b)));
  EXPECT_LE(2.0, 2 * std::sqrt(2 * js_divergence(a, b)));
}

TEST(InferProportions, SingleTopicAndDeterminism) {
  TopicModel m;
  m.num_topics = 1;
  m.vocab_size = 3;
  m.alpha = 0.1;
  m.eta = 0.1;
  m.lambda = {1, 2, 3};
  LdaConfig cfg;
  cfg.num_topics = 1;
  const View v = make_view("v", Domain::kX, {{1, 4}});
  const auto t = infer_proportions(v, m, cfg);
  ASSERT_EQ(t.theta.size(), 1u);
  EXPECT_DOUBLE_EQ(t.theta[0], 1.0);

  m.num_topics = 2;
  m.lambda = {5, 1, 2, 1, 4, 3};
  cfg.num_topics = 2;
  const View w = make_view("w", Domain::kY, {{1, 4}});
  const auto a = infer_proportions(v, m, cfg), b = infer_proportions(w, m, cfg);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.gamma, b.gamma);
  EXPECT_NEAR(a.theta[0] + a.theta[1], 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(a.theta[0], a.gamma[0] / (a.gamma[0] + a.gamma[1]));
}

TEST(InferProportions, ModeEstimator) {
  TopicModel m;
  m.num_topics = 2;
  m.vocab_size = 2;
  m.alpha = 1.0;
  m.eta = 0.1;
  m.lambda = {10, 1, 1, 10};
  LdaConfig cfg;
  cfg.num_topics = 2;
  cfg.alpha = 1.0;
  const View v = make_view("v", Domain::kX, {{0, 30}, {1, 10}});
  const auto t = infer_proportions(v, m, cfg, ThetaEstimator::kMode);
  const double s = t.gamma[0] + t.gamma[1] - 2;
  EXPECT_NEAR(t.theta[0], (t.gamma[0] - 1) / s, 1e-14);
  m.alpha = 0.01;
  cfg.alpha = 0.01;
  const View tiny = make_view("t", Domain::kX, {{0, 1}});
  EXPECT_THROW(infer_proportions(tiny, m, cfg, ThetaEstimator::kMode), InputError);
}

TEST(ScoreMatrix, DiagonalSymmetryAndSingleCell) {
  Rng rng(3);
  std::vector<TopicProportion> a, b;
  std::vector<std::string> aid, bid;
  for (int i = 0; i < 6; ++i) {
    a.push_back(prop(random_simplex(4, rng)));
    aid.push_back("a" + std::to_string(i));
  }
  for (int i = 0; i < 4; ++i) {
    b.push_back(prop(random_simplex(4, rng)));
    bid.push_back("b" + std::to_string(i));
  }
  const auto self = score_matrix(aid, a, aid, a);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(self.at(i, i), 0.0);
  const auto ab = score_matrix(aid, a, bid, b, 3);
  const auto ba = score_matrix(bid, b, aid, a);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      EXPECT_EQ(ab.at(i, j), ba.at(j, i));
      EXPECT_GE(ab.at(i, j), 0.0);
    }
  const auto one = score_matrix(std::span(aid).first(1), std::span(a).first(1),
                                std::span(bid).first(1), std::span(b).first(1));
  EXPECT_EQ(one.values.size(), 1u);
  EXPECT_EQ(one.values[0], js_divergence(a[0].theta, b[0].theta));
}

TEST(RankK, Examples) {
  const auto r = rank_k(matrix({{0.1, 0.2}, {0.3, 0.05}}), 1);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(ids(r.rows[0]), std::vector<std::string>{"Y1"});
  EXPECT_EQ(ids(r.rows[1]), std::vector<std::string>{"Y2"});

  const auto all = rank_k(matrix({{0.4, 0.1, 0.3}}), 10);
  EXPECT_EQ(ids(all.rows[0]), (std::vector<std::string>{"Y2", "Y3", "Y1"}));

  const auto tie = rank_k(matrix({{0.5, 0.5, 0.1}}), 2);
  EXPECT_EQ(ids(tie.rows[0]), (std::vector<std::string>{"Y3", "Y1"}));
}

TEST(RankK, DescendingAndReject) {
  const auto d = rank_k(matrix({{0.4, 0.1, 0.9}}), 2, ScoreOrder::kDescending);
  EXPECT_EQ(ids(d.rows[0]), (std::vector<std::string>{"Y3", "Y1"}));
  const auto r = rank_k(matrix({{0.4, 0.1, 0.9}}), 3, ScoreOrder::kAscending, 0.5);
  EXPECT_EQ(ids(r.rows[0]), (std::vector<std::string>{"Y2", "Y1"}));
  EXPECT_THROW(rank_k(matrix({{0.1}}), 0), InputError);
}

TEST(RankK, InvariantUnderIncreasingTransform) {
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> rows(15, std::vector<double>(12));
  for (auto& r : rows)
    for (auto& x : r) x = std::round(u(rng) * 20) / 20;  // plenty of ties
  const ScoreMatrix m = matrix(rows);
  ScoreMatrix t = m;
  for (auto& x : t.values) x = std::exp(3 * x) + x * x * x;
  for (int k : {1, 3, 12}) {
    const auto a = rank_k(m, k), b = rank_k(t, k);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      EXPECT_EQ(ids(a.rows[i]), ids(b.rows[i]));
      EXPECT_LE(a.rows[i].candidates.size(), static_cast<std::size_t>(k));
      for (std::size_t c = 1; c < a.rows[i].candidates.size(); ++c) {
        const auto& p = a.rows[i].candidates[c - 1];
        const auto& q = a.rows[i].candidates[c];
        EXPECT_TRUE(p.score < q.score || (p.score == q.score && p.y_id < q.y_id));
      }
    }
  }
}

TEST(Link, SelfMatchOnCopiedViews) {
  SynthConfig sc;
  sc.num_entities = 30;
  sc.num_topics = 4;
  sc.vocab_size = 60;
  sc.events_per_entity = 100;
  sc.seed = 6;
  const SyntheticWorld world = generate_world(sc);
  LdaConfig cfg;
  cfg.num_topics = 4;
  cfg.epochs = 3;
  const TopicModel model = fit_online(world.x_views, sc.vocab_size, cfg);
  std::vector<View> copies = world.x_views;
  for (auto& v : copies) {
    v.id = "copy-" + v.id;
    v.domain = Domain::kY;
  }
  LinkOptions opt;
  opt.k = 30;
  const auto result = link(world.x_views, copies, model, cfg, opt);
  for (const auto& row : result.rows) {
    // Distinct views can share bit-identical proportions, so the copy only
    // has to be among the zero-score candidates.
    ASSERT_FALSE(row.candidates.empty());
    EXPECT_EQ(row.candidates[0].score, 0.0);
    bool found = false;
    for (const auto& c : row.candidates)
      found = found || (c.score == 0.0 && c.y_id == "copy-" + row.x_id);
    EXPECT_TRUE(found) << row.x_id;
  }
  const auto single = link(std::span(world.x_views).first(1), std::span(copies).subspan(5, 1),
                           model, cfg, opt);
  ASSERT_EQ(single.rows.size(), 1u);
  EXPECT_EQ(single.rows[0].candidates.size(), 1u);
}

TEST(LinkageIo, RoundTrip) {
  LinkageResult r;
  r.order = ScoreOrder::kDescending;
  r.rows = {{"x1", {{"y2", 3.25}, {"y1", 1.0 / 3}}}, {"x2", {{"y1", -0.5}}}};
  std::stringstream io;
  write_linkage(io, r);
  const LinkageResult back = read_linkage(io);
  EXPECT_EQ(back.order, ScoreOrder::kDescending);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(ids(back.rows[0]), (std::vector<std::string>{"y2", "y1"}));
  EXPECT_NEAR(back.rows[0].candidates[1].score, 1.0 / 3, 1e-12);
  EXPECT_EQ(back.rows[1].candidates[0].score, -0.5);
}

TEST(LinkageIo, RejectsBrokenRanks) {
  std::istringstream in("x_view_id,rank,y_view_id,score\nx1,2,y1,0.1\n");
  EXPECT_THROW(read_linkage(in), InputError);
}

}  // namespace
}  // namespace ldalink
