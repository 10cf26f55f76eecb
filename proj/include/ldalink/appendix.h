#pragma once

// Numerical checks of the analysis behind topic-proportion linkage: the
// Dirichlet-mode divergence bound, the large-document fixed point of the
// proportion update and its implicit derivatives, concentration of the JS
// statistic, decay of the linkage error with sequence length, and a probe
// comparing independent-view and omniscient topic learning.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldalink/lda.h"
#include "ldalink/synth.h"

namespace ldalink {

// sum_w (eta_w - eta'_w) (psi(eta_w) - psi(eta'_w)). Entries must be > 0.
double skl_dirichlet(std::span<const double> eta, std::span<const double> eta_prime);

struct BoundCheckReport {
  int samples = 0;
  int vocab_size = 0;
  double ratio = 1.0;
  double pair_concentration = 0.0;
  std::vector<double> concentrations;
  // Per C: max over samples of JS(modes) - SKL / (4 min C), floored at 0.
  std::vector<double> max_margin;
  std::vector<double> scaled_margin;  // max_margin * C
  // Same for sums over 5 independent pairs against the summed bound.
  std::vector<double> corollary_scaled_margin;
  bool pass = false;  // scaled margins non-increasing in C
};

// Pairs are eta = 1 + C u and eta' = 1 + ratio C u' with u uniform on the
// simplex and u' ~ Dir(pair_concentration * u), so sum(eta) - W = C and
// sum(eta') - W = ratio C. The same u, u' are reused for every C.
BoundCheckReport check_mode_bound(int num_samples, int vocab_size,
                                  std::span<const double> concentrations, double ratio,
                                  std::uint64_t seed, double pair_concentration = 100.0);

// K x W topic matrix with non-negative rows summing to 1.
struct TopicMatrix {
  int num_topics = 0;
  int vocab_size = 0;
  std::vector<double> values;

  double at(int k, int w) const {
    return values[static_cast<std::size_t>(k) * vocab_size + w];
  }
  void validate() const;
};

struct FixedPointResult {
  std::vector<double> theta;
  int iterations = 0;
  bool converged = false;
};

// theta_k <- sum_w P_w theta_k b_kw / sum_l theta_l b_lw until the L1 change
// drops below tol.
FixedPointResult simplified_fixed_point(std::span<const double> p, const TopicMatrix& beta,
                                        std::span<const double> theta0, int max_iter,
                                        double tol);

// max_k |theta_k (1 - sum_w P_w eta_kw)|, eta_kw = b_kw / sum_l theta_l b_lw.
double residual_fixed_point(std::span<const double> theta, std::span<const double> p,
                            const TopicMatrix& beta);

struct ResidualReport {
  double residual = 0.0;
  double tolerance = 0.0;
  double step = 0.0;
  int reference = 0;  // coordinate lowered to keep perturbations on the simplex
  bool pass = false;
};

// Derivatives are taken along directions e_v - e_ref, with ref the largest
// coordinate of P0, estimated by central differences of the fixed point
// (continued from theta(P0)) at steps h and h/2 with Richardson
// extrapolation. The residual is the directional form of the first- or
// second-order implicit condition, maximized over k and directions.
// Throws Error when a perturbed solve lands more than 100 h away or on the
// simplex boundary.
ResidualReport check_first_order(std::span<const double> p0, const TopicMatrix& beta,
                                 std::span<const double> theta0, double h,
                                 double tolerance = 1e-4);
ResidualReport check_second_order(std::span<const double> p0, const TopicMatrix& beta,
                                  std::span<const double> theta0, double h,
                                  double tolerance = 1e-2);

// A seeded interior test instance: rows ~ Dir(1), theta_true ~ Dir(2),
// P0 = sum_k theta_true_k b_k, redrawn until every theta_true_k >= 0.05 and
// every P0_w >= 0.02 and theta(P) moves at most 20 (L1) per unit step of P.
struct FixedPointInstance {
  TopicMatrix beta;
  std::vector<double> theta_true;
  std::vector<double> p0;
};
FixedPointInstance random_fixed_point_instance(int num_topics, int vocab_size,
                                               std::uint64_t seed);

struct ConcentrationPoint {
  int n = 0;
  int trials = 0;
  int hits = 0;                     // trials with JS >= lambda
  double probability = 0.0;
  double std_error = 0.0;
  std::optional<double> exponent;   // -(1/n) ln p, absent when p = 0
};

enum class ConcentrationSampler {
  kDirect,  // both samples drawn from q
  // Importance sampling: sample pairs come from an equal mixture of
  // (q + t d, q - t d) over directions d = 1_S/|S| - 1_S'/|S'| for every
  // proper subset S of symbols, with t putting the pair at JS = lambda.
  // Unbiased for the same probability; usable for q with at most 16 symbols.
  kTilted,
};

// Two independent length-n samples per trial; empirical frequency pairs are
// compared with the JS statistic.
std::vector<ConcentrationPoint> js_concentration_mc(
    std::span<const double> q, std::span<const int> ns, double lambda, int trials,
    std::uint64_t seed, ConcentrationSampler sampler = ConcentrationSampler::kDirect);

struct ErrorRatePoint {
  int n = 0;
  int decisions = 0;
  int errors = 0;
  int rejections = 0;
  double error_rate = 0.0;  // errors / decisions
  double stderr_rate = 0.0;
};

struct ErrorExponentConfig {
  int num_entities = 10;
  int num_topics = 5;
  int vocab_size = 50;
  double alpha = 0.1;
  double eta = 0.05;
  double lambda = 0.02;  // runner-up JS below this rejects the decision
  int trials = 100;
  std::uint64_t seed = 0;
};

// Worlds with 2n events per entity (about n per view) are linked under the
// true topics: each X view picks the Y view of minimal JS between posterior
// mean proportions, unless the second smallest JS is below lambda
// (rejection). Rejections are counted apart and never as errors.
std::vector<ErrorRatePoint> error_exponent_mc(const ErrorExponentConfig& config,
                                              std::span<const int> ns);

struct TrackingPoint {
  int epoch = 0;
  double skl = 0.0;
};

// Fits the independent-view model and the omniscient model from the same
// starting topics and seed, and records the SKL between greedily aligned
// topic rows after every epoch.
std::vector<TrackingPoint> surrogate_tracking_probe(const SyntheticWorld& world,
                                                    const LdaConfig& cfg);

// Greedy one-to-one matching of rows by minimal JS between normalized rows;
// result[k] is the row of `b` matched to row k of `a`.
std::vector<int> align_topics(const TopicModel& a, const TopicModel& b);

}  // namespace ldalink
