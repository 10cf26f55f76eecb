#include "ldalink/lda.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include <boost/math/special_functions/digamma.hpp>

#include "json.hpp"
#include "ldalink/error.h"
#include "ldalink/rng.h"
#include "ldalink/version.h"

namespace ldalink {
namespace {

using boost::math::digamma;

// Below this the scaled product form of the responsibilities risks underflow
// and the word falls back to log-space normalization.
constexpr double kMinScaledNorm = 1e-280;

void check_support(const View& view, int vocab_size) {
  if (view.total <= 0) throw InputError("view '" + view.id + "' is empty");
  if (!view.counts.empty() && view.counts.back().id >= vocab_size)
    throw InputError("view '" + view.id + "' has event ids outside the model vocabulary");
}

void check_views(std::span<const View> views, int vocab_size) {
  if (views.empty()) throw InputError("empty corpus");
  for (const auto& v : views) check_support(v, vocab_size);
}

double log_sum_exp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

void LdaConfig::validate() const {
  if (num_topics < 1) throw InputError("num_topics must be >= 1");
  if (!(alpha > 0)) throw InputError("alpha must be > 0");
  if (!(eta > 0)) throw InputError("eta must be > 0");
  if (!(rho0 >= 0)) throw InputError("rho0 must be >= 0");
  if (!(kappa > 0.5 && kappa <= 1.0)) throw InputError("kappa must be in (0.5, 1]");
  if (epochs < 1) throw InputError("epochs must be >= 1");
  if (minibatch_size < 1) throw InputError("minibatch_size must be >= 1");
  if (!(e_step_tol > 0)) throw InputError("e_step_tol must be > 0");
  if (e_step_max_iter < 1) throw InputError("e_step_max_iter must be >= 1");
}

std::vector<std::vector<double>> TopicModel::topic_means() const {
  std::vector<std::vector<double>> out(num_topics);
  for (int k = 0; k < num_topics; ++k) {
    auto r = row(k);
    const double s = std::accumulate(r.begin(), r.end(), 0.0);
    out[k].resize(vocab_size);
    for (int w = 0; w < vocab_size; ++w) out[k][w] = r[w] / s;
  }
  return out;
}

TopicWeights::TopicWeights(const TopicModel& model)
    : num_topics_(model.num_topics),
      vocab_size_(model.vocab_size),
      alpha_(model.alpha),
      log_beta_(static_cast<std::size_t>(model.num_topics) * model.vocab_size),
      scaled_beta_(log_beta_.size()) {
  if (model.lambda.size() != log_beta_.size())
    throw InputError("lambda has the wrong number of entries");
  for (int k = 0; k < num_topics_; ++k) {
    auto r = model.row(k);
    const double psi_total = digamma(std::accumulate(r.begin(), r.end(), 0.0));
    for (int w = 0; w < vocab_size_; ++w) {
      if (!(r[w] > 0)) throw InputError("lambda entries must be positive");
      log_beta_[static_cast<std::size_t>(w) * num_topics_ + k] =
          digamma(r[w]) - psi_total;
    }
  }
  for (int w = 0; w < vocab_size_; ++w) {
    auto lb = log_beta(w);
    const double m = *std::max_element(lb.begin(), lb.end());
    double* out = scaled_beta_.data() + static_cast<std::size_t>(w) * num_topics_;
    for (int k = 0; k < num_topics_; ++k) out[k] = std::exp(lb[k] - m);
  }
}

std::vector<double> dirichlet_expectation_log(std::span<const double> param) {
  double total = 0.0;
  for (double p : param) {
    if (!(p > 0)) throw InputError("Dirichlet parameters must be positive");
    total += p;
  }
  const double psi_total = digamma(total);
  std::vector<double> out(param.size());
  for (std::size_t i = 0; i < param.size(); ++i) out[i] = digamma(param[i]) - psi_total;
  return out;
}

std::vector<double> dirichlet_mode(std::span<const double> param) {
  double total = 0.0;
  for (double p : param) {
    if (!(p >= 1.0)) throw InputError("Dirichlet mode needs every parameter >= 1");
    total += p;
  }
  const double concentration = total - static_cast<double>(param.size());
  if (!(concentration > 0))
    throw InputError("Dirichlet mode needs sum(param) > dimension");
  std::vector<double> mode(param.size());
  for (std::size_t i = 0; i < param.size(); ++i) mode[i] = (param[i] - 1.0) / concentration;
  return mode;
}

EStepResult e_step(const View& view, const TopicWeights& weights,
                   const LdaConfig& cfg, std::span<const double> initial_gamma) {
  const int K = weights.num_topics();
  check_support(view, weights.vocab_size());
  const std::size_t S = view.counts.size();
  const double alpha = weights.alpha();

  EStepResult result;
  if (initial_gamma.empty()) {
    result.gamma.assign(K, 1.0);
  } else {
    if (static_cast<int>(initial_gamma.size()) != K)
      throw InputError("initial gamma has the wrong length");
    result.gamma.assign(initial_gamma.begin(), initial_gamma.end());
  }
  result.sstats.assign(static_cast<std::size_t>(K) * S, 0.0);

  std::vector<double> theta_weight(K), phi(K), logits(K), next(K);
  for (int it = 1; it <= cfg.e_step_max_iter; ++it) {
    const std::vector<double> log_theta = dirichlet_expectation_log(result.gamma);
    const double m = *std::max_element(log_theta.begin(), log_theta.end());
    for (int k = 0; k < K; ++k) theta_weight[k] = std::exp(log_theta[k] - m);

    std::fill(next.begin(), next.end(), alpha);
    for (std::size_t s = 0; s < S; ++s) {
      const int w = view.counts[s].id;
      const double count = static_cast<double>(view.counts[s].count);
      auto beta = weights.scaled_beta(w);
      double norm = 0.0;
      for (int k = 0; k < K; ++k) {
        phi[k] = theta_weight[k] * beta[k];
        norm += phi[k];
      }
      if (norm >= kMinScaledNorm) {
        for (int k = 0; k < K; ++k) phi[k] /= norm;
      } else {
        auto lb = weights.log_beta(w);
        for (int k = 0; k < K; ++k) logits[k] = log_theta[k] + lb[k];
        const double lse = log_sum_exp(logits);
        for (int k = 0; k < K; ++k) phi[k] = std::exp(logits[k] - lse);
      }
      for (int k = 0; k < K; ++k) {
        const double c = count * phi[k];
        result.sstats[static_cast<std::size_t>(k) * S + s] = c;
        next[k] += c;
      }
    }

    double change = 0.0;
    for (int k = 0; k < K; ++k) change += std::fabs(next[k] - result.gamma[k]);
    change /= K;
    result.gamma.swap(next);
    result.iterations = it;
    if (change < cfg.e_step_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

EStepResult e_step(const View& view, const TopicModel& model, const LdaConfig& cfg) {
  return e_step(view, TopicWeights(model), cfg);
}

double learning_rate(std::int64_t t, double rho0, double kappa) {
  // Capped at 1 so that rho0 = 0 gives a full replacement step at t = 0.
  return std::min(1.0, std::pow(rho0 + static_cast<double>(t), -kappa));
}

std::vector<double> initial_lambda(int num_topics, int vocab_size, double eta,
                                   std::int64_t total_events, std::uint64_t seed) {
  const double mean =
      eta + static_cast<double>(total_events) /
                (static_cast<double>(num_topics) * static_cast<double>(vocab_size));
  Rng rng(seed);
  std::gamma_distribution<double> draw(100.0, mean / 100.0);
  std::vector<double> lambda(static_cast<std::size_t>(num_topics) * vocab_size);
  for (auto& v : lambda) {
    v = draw(rng);
    if (!(v > 0)) v = std::numeric_limits<double>::min();
  }
  return lambda;
}

TopicModel fit_online(std::span<const View> views, int vocab_size,
                      const LdaConfig& cfg, const FitOptions& options) {
  cfg.validate();
  if (vocab_size < 1) throw InputError("vocabulary is empty");
  check_views(views, vocab_size);
  const int K = cfg.num_topics;
  const std::size_t D = views.size();

  TopicModel model;
  model.num_topics = K;
  model.vocab_size = vocab_size;
  model.alpha = cfg.alpha;
  model.eta = cfg.eta;
  model.corpus_size_used = static_cast<std::int64_t>(D);
  if (options.initial_lambda) {
    if (options.initial_lambda->size() != static_cast<std::size_t>(K) * vocab_size)
      throw InputError("initial lambda has the wrong shape");
    model.lambda = *options.initial_lambda;
  } else {
    std::int64_t total = 0;
    for (const auto& v : views) total += v.total;
    model.lambda = initial_lambda(K, vocab_size, cfg.eta, total,
                                  derive_seed(cfg.seed, "lambda-init"));
  }

  Rng order_rng(derive_seed(cfg.seed, "visit-order"));
  std::vector<std::size_t> order(D);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::min<std::size_t>(cfg.minibatch_size, D);

  // Dense K x W accumulator; only touched columns are reset between batches.
  std::vector<double> sstats(model.lambda.size(), 0.0);
  std::vector<int> touched;
  std::vector<char> is_touched(vocab_size, 0);
  std::int64_t t = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    for (std::size_t start = 0; start < D; start += batch) {
      const std::size_t end = std::min(D, start + batch);
      const TopicWeights weights(model);
      for (std::size_t i = start; i < end; ++i) {
        const View& view = views[order[i]];
        const EStepResult r = e_step(view, weights, cfg);
        const std::size_t S = view.counts.size();
        for (std::size_t s = 0; s < S; ++s) {
          const int w = view.counts[s].id;
          if (!is_touched[w]) {
            is_touched[w] = 1;
            touched.push_back(w);
          }
          for (int k = 0; k < K; ++k)
            sstats[static_cast<std::size_t>(k) * vocab_size + w] +=
                r.sstats[static_cast<std::size_t>(k) * S + s];
        }
      }
      const double rho = learning_rate(t, cfg.rho0, cfg.kappa);
      const double scale = static_cast<double>(D) / static_cast<double>(end - start);
      for (auto& v : model.lambda) v = (1.0 - rho) * v + rho * cfg.eta;
      for (int w : touched) {
        for (int k = 0; k < K; ++k) {
          const std::size_t idx = static_cast<std::size_t>(k) * vocab_size + w;
          model.lambda[idx] += rho * scale * sstats[idx];
          sstats[idx] = 0.0;
        }
        is_touched[w] = 0;
      }
      touched.clear();
      ++t;
    }
    if (options.on_epoch) options.on_epoch(epoch, model);
  }
  return model;
}

std::vector<View> merge_coreferent(std::span<const View> x_views,
                                   std::span<const View> y_views,
                                   const IdentityMap& pi) {
  std::unordered_map<std::string, std::size_t> y_index;
  for (std::size_t j = 0; j < y_views.size(); ++j) y_index.emplace(y_views[j].id, j);
  std::set<std::string> covered;
  std::vector<View> merged;
  merged.reserve(x_views.size());
  for (const auto& x : x_views) {
    auto it = pi.find(x.id);
    if (it == pi.end())
      throw InputError("X view '" + x.id + "' is missing from the identity map");
    std::vector<View> group{x};
    for (const auto& y_id : it->second) {
      auto yj = y_index.find(y_id);
      if (yj == y_index.end())
        throw InputError("identity map references unknown Y view '" + y_id + "'");
      group.push_back(y_views[yj->second]);
      covered.insert(y_id);
    }
    merged.push_back(merge_views(x.id, Domain::kX, group));
  }
  for (const auto& y : y_views) {
    if (!covered.count(y.id))
      throw InputError("Y view '" + y.id + "' is missing from the identity map");
  }
  return merged;
}

TopicModel fit_omniscient(std::span<const View> x_views,
                          std::span<const View> y_views, const IdentityMap& pi,
                          int vocab_size, const LdaConfig& cfg,
                          const FitOptions& options) {
  const std::vector<View> merged = merge_coreferent(x_views, y_views, pi);
  return fit_online(merged, vocab_size, cfg, options);
}

double elbo_document_term(const View& view, const TopicWeights& weights,
                          std::span<const double> gamma) {
  const int K = weights.num_topics();
  if (static_cast<int>(gamma.size()) != K) throw InputError("gamma has the wrong length");
  check_support(view, weights.vocab_size());
  const double alpha = weights.alpha();
  const std::vector<double> log_theta = dirichlet_expectation_log(gamma);

  double bound = 0.0;
  std::vector<double> logits(K);
  for (const auto& c : view.counts) {
    auto lb = weights.log_beta(c.id);
    for (int k = 0; k < K; ++k) logits[k] = log_theta[k] + lb[k];
    bound += static_cast<double>(c.count) * log_sum_exp(logits);
  }
  double gamma_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    bound += (alpha - gamma[k]) * log_theta[k];
    bound += std::lgamma(gamma[k]) - std::lgamma(alpha);
    gamma_sum += gamma[k];
  }
  bound += std::lgamma(K * alpha) - std::lgamma(gamma_sum);
  return bound;
}

double elbo_topic_term(const TopicModel& model) {
  const int W = model.vocab_size;
  const double eta = model.eta;
  double bound = 0.0;
  for (int k = 0; k < model.num_topics; ++k) {
    auto r = model.row(k);
    const double total = std::accumulate(r.begin(), r.end(), 0.0);
    const double psi_total = digamma(total);
    for (int w = 0; w < W; ++w) {
      const double log_beta = digamma(r[w]) - psi_total;
      bound += (eta - r[w]) * log_beta + std::lgamma(r[w]) - std::lgamma(eta);
    }
    bound += std::lgamma(W * eta) - std::lgamma(total);
  }
  return bound;
}

double elbo(std::span<const View> views, const TopicModel& model,
            std::span<const std::vector<double>> gammas) {
  if (gammas.size() != views.size())
    throw InputError("gammas must align with views");
  const TopicWeights weights(model);
  double bound = elbo_topic_term(model);
  for (std::size_t d = 0; d < views.size(); ++d)
    bound += elbo_document_term(views[d], weights, gammas[d]);
  return bound;
}

BatchFitResult fit_batch(std::span<const View> views, int vocab_size,
                         const LdaConfig& cfg, int sweeps) {
  cfg.validate();
  check_views(views, vocab_size);
  const int K = cfg.num_topics;
  BatchFitResult result;
  TopicModel& model = result.model;
  model.num_topics = K;
  model.vocab_size = vocab_size;
  model.alpha = cfg.alpha;
  model.eta = cfg.eta;
  model.corpus_size_used = static_cast<std::int64_t>(views.size());
  std::int64_t total = 0;
  for (const auto& v : views) total += v.total;
  model.lambda = initial_lambda(K, vocab_size, cfg.eta, total,
                                derive_seed(cfg.seed, "lambda-init"));
  result.gammas.assign(views.size(), std::vector<double>(K, 1.0));

  // One pass at fixed gamma gives the responsibilities optimal for it, so the
  // topic update and the recorded bound refer to the same (gamma, phi).
  LdaConfig single = cfg;
  single.e_step_max_iter = 1;
  std::vector<double> sstats(model.lambda.size());
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    const TopicWeights weights(model);
    std::fill(sstats.begin(), sstats.end(), 0.0);
    for (std::size_t d = 0; d < views.size(); ++d) {
      const View& view = views[d];
      result.gammas[d] = e_step(view, weights, cfg, result.gammas[d]).gamma;
      const EStepResult r = e_step(view, weights, single, result.gammas[d]);
      const std::size_t S = view.counts.size();
      for (std::size_t s = 0; s < S; ++s) {
        for (int k = 0; k < K; ++k)
          sstats[static_cast<std::size_t>(k) * vocab_size + view.counts[s].id] +=
              r.sstats[static_cast<std::size_t>(k) * S + s];
      }
    }
    for (std::size_t i = 0; i < sstats.size(); ++i) model.lambda[i] = cfg.eta + sstats[i];
    result.elbo_trace.push_back(elbo(views, model, result.gammas));
  }
  return result;
}

void write_model(std::ostream& out, const TopicModel& model) {
  using nlohmann::json;
  char buf[40];
  auto real = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  };
  out << R"({"format":"ldalink-model","version":)" << json(kVersion).dump()
      << R"(,"K":)" << model.num_topics << R"(,"W":)" << model.vocab_size
      << R"(,"alpha":)" << real(model.alpha) << R"(,"eta":)" << real(model.eta)
      << R"(,"corpus_size_used":)" << model.corpus_size_used
      << R"(,"vocabulary_ref":)" << json(model.vocabulary_ref).dump()
      << R"(,"lambda":[)";
  for (std::size_t i = 0; i < model.lambda.size(); ++i) {
    if (i) out << ',';
    if (i % static_cast<std::size_t>(std::max(1, model.vocab_size)) == 0) out << '\n';
    out << real(model.lambda[i]);
  }
  out << "\n]}\n";
}

TopicModel read_model(std::istream& in) {
  using nlohmann::json;
  json obj;
  try {
    obj = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
  TopicModel model;
  try {
    model.num_topics = obj.at("K").get<int>();
    model.vocab_size = obj.at("W").get<int>();
    model.alpha = obj.at("alpha").get<double>();
    model.eta = obj.at("eta").get<double>();
    model.lambda = obj.at("lambda").get<std::vector<double>>();
    model.corpus_size_used = obj.value("corpus_size_used", std::int64_t{0});
    model.vocabulary_ref = obj.value("vocabulary_ref", std::string());
  } catch (const json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
  if (model.num_topics < 1 || model.vocab_size < 1 ||
      model.lambda.size() != static_cast<std::size_t>(model.num_topics) * model.vocab_size)
    throw InputError("model file: lambda does not match K x W");
  for (double v : model.lambda) {
    if (!(v > 0)) throw InputError("model file: lambda entries must be positive");
  }
  return model;
}

}  // namespace ldalink
