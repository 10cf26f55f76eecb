#pragma once

// Event-space construction: raw timestamped geo-events are binned into a
// discrete vocabulary and reduced to per-view bags of events.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ldalink {

enum class Domain { kX, kY };

std::string_view domain_name(Domain domain);
// Accepts "X" or "Y"; throws InputError otherwise.
Domain parse_domain(std::string_view text);

struct ActivityRecord {
  Domain domain = Domain::kX;
  std::string user_id;
  std::int64_t timestamp = 0;  // epoch seconds, >= 0
  double lat = 0.0;            // degrees in [-90, 90]
  double lon = 0.0;            // degrees in [-180, 180]
};

struct Granularity {
  int spatial_digits = 2;  // decimals kept after truncation, in [0, 6]
  int temporal_bins = 1;   // equal-width bins over the observed span, >= 1

  void validate() const;
  bool operator==(const Granularity&) const = default;
};

// Dense bijection between event keys and ids 0..W-1, ids assigned in
// first-seen order.
class Vocabulary {
 public:
  int add(const std::string& key);
  std::optional<int> find(std::string_view key) const;
  const std::string& key(int id) const { return keys_.at(id); }
  int size() const { return static_cast<int>(keys_.size()); }
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> keys_;
};

struct EventCount {
  int id = 0;
  std::int64_t count = 0;
  bool operator==(const EventCount&) const = default;
};

// One entity's events within one data set, as sparse event counts sorted by
// id. Every count is positive and `total` is their sum.
struct View {
  std::string id;
  Domain domain = Domain::kX;
  std::vector<EventCount> counts;
  std::int64_t total = 0;

  bool operator==(const View&) const = default;
};

// Builds a view from unsorted (id, count) pairs; duplicate ids are summed and
// zero counts dropped. Throws InputError on negative counts or ids.
View make_view(std::string id, Domain domain, std::vector<EventCount> counts);

// Sums the counts of several views into one view with the given identity.
View merge_views(std::string id, Domain domain, std::span<const View> views);

std::vector<View> select_domain(std::span<const View> views, Domain domain);

// Relative frequencies over the vocabulary, sparse and sorted by id.
struct FrequencyVector {
  struct Entry {
    int id;
    double p;
  };
  std::vector<Entry> entries;
};

// Parses "domain,user_id,timestamp,lat,lon" lines. Blank lines are skipped.
// Throws ParseError naming the line and field on malformed or out-of-range
// input.
std::vector<ActivityRecord> parse_activity_log(std::istream& in);
void write_activity_log(std::ostream& out,
                        std::span<const ActivityRecord> records);

// Truncates both coordinates toward zero to `spatial_digits` decimals and
// renders "lat,lon". A truncated value of zero never carries a sign.
std::string bin_spatial(double lat, double lon, int spatial_digits);

// Equal-width bin of `timestamp` within [span_start, span_end]; the right edge
// falls into the last bin.
int bin_temporal(std::int64_t timestamp, std::int64_t span_start,
                 std::int64_t span_end, int temporal_bins);

struct EventSpace {
  Vocabulary vocabulary;
  std::vector<View> views;  // one per (domain, user_id), first-seen order
};

// Bins every record into a (spatial cell, time bin) event. The time span is
// [min, max] timestamp over both domains so X and Y share bins.
EventSpace build_event_space(std::span<const ActivityRecord> records,
                             const Granularity& granularity);

// Throws InputError for an empty view or ids outside [0, vocab_size).
FrequencyVector relative_frequency(const View& view, int vocab_size);

double l1_distance(const FrequencyVector& p, const FrequencyVector& q);

struct OverlapStats {
  int common_event_count = 0;
  double l1 = 0.0;
};

OverlapStats overlap_stats(const View& x, const View& y, int vocab_size);

// Identity association from X view ids to the set of co-referent Y view ids.
using IdentityMap = std::map<std::string, std::vector<std::string>>;

// Views file: one JSON object per line,
//   {"view_id": str, "domain": "X"|"Y", "counts": {"<event id>": int}}
// preceded by a metadata line carrying the format version.
void write_views(std::ostream& out, std::span<const View> views);
std::vector<View> read_views(std::istream& in);

// Vocabulary file: JSON object {"version", "W", "events": {key: id}}.
void write_vocabulary(std::ostream& out, const Vocabulary& vocabulary);
Vocabulary read_vocabulary(std::istream& in);

// Truth file: CSV "x_view_id,y_view_id", one pair per line, with header.
void write_truth(std::ostream& out, const IdentityMap& pi);
IdentityMap read_truth(std::istream& in);

}  // namespace ldalink
