#pragma once

// Synthetic Split-Document worlds: every entity draws topic proportions and
// a stream of events, and each event lands in exactly one of the entity's
// views (its X view or one of its Y views).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ldalink/corpus.h"
#include "ldalink/rng.h"

namespace ldalink {

struct SynthConfig {
  int num_entities = 200;
  int num_topics = 10;
  int vocab_size = 1000;
  double alpha = 0.1;
  double eta = 0.05;
  int events_per_entity = 1000;
  double split_prob = 0.5;  // probability an event goes to the X view
  int y_views_min = 1;
  int y_views_max = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruth {
  IdentityMap pi;
  std::vector<double> true_beta;     // K x W row-major
  std::vector<double> true_theta;    // D x K row-major, entity order
  std::vector<int> topic_counts;     // D x K, events drawn per topic
};

struct SyntheticWorld {
  std::vector<View> x_views;  // x_views[d] belongs to entity d
  std::vector<View> y_views;  // shuffled, ids follow the shuffled order
  GroundTruth truth;
  SynthConfig config;
  Vocabulary vocabulary;  // keys "w<id>"
};

SyntheticWorld generate_world(const SynthConfig& cfg);

// Like generate_world, but an event whose word was first used by the other
// domain of the same entity is rerouted there, so the entity's X and Y views
// share no event. Entities with an empty view are redrawn, at most 100 times.
SyntheticWorld zero_overlap_world(const SynthConfig& cfg);

// Dirichlet draw that stays finite for small concentrations.
std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng);

// Placement of synthetic events as raw geo-timestamped records. Word w owns
// the 2-decimal cell with lat = origin_lat + (w / 100 % 10) + (w / 10 % 10) / 10
// + (w % 10) / 100 and lon = origin_lon + (w / 1000) / 100, so truncating to
// 1 or 0 decimals merges groups of 10 or 100 words. Each event sits 5e-5
// inside its cell plus a uniform jitter in [0, jitter) on both coordinates,
// rounded to micro-degrees, at a uniform timestamp in [0, time_span].
struct RenderConfig {
  double origin_lat = 10.0;
  double origin_lon = 20.0;
  double jitter = 0.002;
  std::int64_t time_span = 86400 * 28;
  std::uint64_t seed = 0;
};

// X views become domain X records with user ids equal to view ids, same for Y.
std::vector<ActivityRecord> render_activity_log(const SyntheticWorld& world,
                                                const RenderConfig& render);

}  // namespace ldalink
