#pragma once

// Online stochastic variational inference for LDA where every view is its
// own document, plus an omniscient variant that merges co-referent views
// first, and the mean-field evidence lower bound used for monitoring.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldalink/corpus.h"

namespace ldalink {

struct LdaConfig {
  int num_topics = 10;
  double alpha = 0.1;  // symmetric Dirichlet prior on topic proportions
  double eta = 0.01;   // symmetric Dirichlet prior on topics
  double rho0 = 1.0;   // learning-rate delay
  double kappa = 0.7;  // forgetting rate, in (0.5, 1]
  int epochs = 10;
  int minibatch_size = 1;
  double e_step_tol = 1e-4;  // mean absolute change in gamma
  int e_step_max_iter = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

// Variational Dirichlet parameters of the topics, K x W row-major.
struct TopicModel {
  int num_topics = 0;
  int vocab_size = 0;
  double alpha = 0.0;
  double eta = 0.0;
  std::vector<double> lambda;
  std::int64_t corpus_size_used = 0;  // documents per pass used to scale updates
  std::string vocabulary_ref;

  double at(int k, int w) const {
    return lambda[static_cast<std::size_t>(k) * vocab_size + w];
  }
  std::span<const double> row(int k) const {
    return {lambda.data() + static_cast<std::size_t>(k) * vocab_size,
            static_cast<std::size_t>(vocab_size)};
  }
  // Posterior-mean topics, lambda rows normalized.
  std::vector<std::vector<double>> topic_means() const;
};

// Precomputed E_q[log beta] for a fixed model, laid out word-major (W x K),
// together with exp(E_q[log beta]) rescaled per word so that its maximum over
// topics is 1. The per-word scale cancels in the topic responsibilities.
class TopicWeights {
 public:
  explicit TopicWeights(const TopicModel& model);

  int num_topics() const { return num_topics_; }
  int vocab_size() const { return vocab_size_; }
  double alpha() const { return alpha_; }
  std::span<const double> log_beta(int w) const {
    return {log_beta_.data() + static_cast<std::size_t>(w) * num_topics_,
            static_cast<std::size_t>(num_topics_)};
  }
  std::span<const double> scaled_beta(int w) const {
    return {scaled_beta_.data() + static_cast<std::size_t>(w) * num_topics_,
            static_cast<std::size_t>(num_topics_)};
  }

 private:
  int num_topics_;
  int vocab_size_;
  double alpha_;
  std::vector<double> log_beta_;
  std::vector<double> scaled_beta_;
};

// psi(param_k) - psi(sum param), i.e. E[log x_k] under Dir(param).
std::vector<double> dirichlet_expectation_log(std::span<const double> param);

// Mode of Dir(param): (param_w - 1) / (sum(param) - W). Throws InputError when
// an entry is below 1 or the sum does not exceed W.
std::vector<double> dirichlet_mode(std::span<const double> param);

struct EStepResult {
  std::vector<double> gamma;
  // Expected counts, K x S row-major over the view's support in view order:
  // sstats[k * S + s] = count(s) * phi(s, k).
  std::vector<double> sstats;
  int iterations = 0;
  bool converged = false;
};

// Coordinate ascent on (phi, gamma) for one view with the topics held fixed.
// gamma starts at all-ones unless `initial_gamma` is given.
EStepResult e_step(const View& view, const TopicWeights& weights,
                   const LdaConfig& cfg,
                   std::span<const double> initial_gamma = {});
EStepResult e_step(const View& view, const TopicModel& model,
                   const LdaConfig& cfg);

// (rho0 + t)^(-kappa), capped at 1.
double learning_rate(std::int64_t t, double rho0, double kappa);

struct FitOptions {
  // Starting lambda (K x W); drawn from cfg.seed when absent.
  std::optional<std::vector<double>> initial_lambda;
  // Called after every epoch with the current model.
  std::function<void(int epoch, const TopicModel&)> on_epoch;
};

// Seeded positive initialization: Gamma(100, mean/100) entries with mean
// eta + total_events / (K * W).
std::vector<double> initial_lambda(int num_topics, int vocab_size, double eta,
                                   std::int64_t total_events, std::uint64_t seed);

// Online VB over the views. Each minibatch update is
//   lambda <- (1 - rho_t) lambda + rho_t (eta + (D / |batch|) sstats),
// with D the number of views in the corpus. Views are visited in a seeded
// random order each epoch.
TopicModel fit_online(std::span<const View> views, int vocab_size,
                      const LdaConfig& cfg, const FitOptions& options = {});

// Merges every X view with its co-referent Y views and fits the merged corpus.
std::vector<View> merge_coreferent(std::span<const View> x_views,
                                   std::span<const View> y_views,
                                   const IdentityMap& pi);
TopicModel fit_omniscient(std::span<const View> x_views,
                          std::span<const View> y_views, const IdentityMap& pi,
                          int vocab_size, const LdaConfig& cfg,
                          const FitOptions& options = {});

// Per-document part of the mean-field bound with phi at its optimum for the
// given gamma.
double elbo_document_term(const View& view, const TopicWeights& weights,
                          std::span<const double> gamma);
// Prior-versus-posterior part of the bound for the topics.
double elbo_topic_term(const TopicModel& model);
double elbo(std::span<const View> views, const TopicModel& model,
            std::span<const std::vector<double>> gammas);

struct BatchFitResult {
  TopicModel model;
  std::vector<std::vector<double>> gammas;
  std::vector<double> elbo_trace;  // bound after each sweep
};

// Batch coordinate ascent (minibatch = whole corpus, rho = 1) with gamma
// warm-started across sweeps.
BatchFitResult fit_batch(std::span<const View> views, int vocab_size,
                         const LdaConfig& cfg, int sweeps);

// Model file: JSON {"K", "W", "alpha", "eta", "lambda", "vocabulary_ref"},
// reals written with 17 significant digits.
void write_model(std::ostream& out, const TopicModel& model);
TopicModel read_model(std::istream& in);

}  // namespace ldalink
