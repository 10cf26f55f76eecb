#include "ldalink/corpus.h"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "ldalink/error.h"
#include "ldalink/version.h"

namespace ldalink {
namespace {

using json = nlohmann::json;

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool parse_int64(std::string_view s, std::int64_t* out) {
  if (s.empty()) return false;
  std::string buf(s);
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(buf.c_str(), &end, 10);
  if (errno != 0 || end != buf.c_str() + buf.size()) return false;
  *out = v;
  return true;
}

bool parse_double(std::string_view s, double* out) {
  if (s.empty()) return false;
  std::string buf(s);
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(buf.c_str(), &end);
  if (errno != 0 || end != buf.c_str() + buf.size() || !std::isfinite(v))
    return false;
  *out = v;
  return true;
}

// Truncates |value| toward zero to `digits` decimals, working on the decimal
// rendering so that e.g. 4.35 keeps its written digits.
std::string truncate_coordinate(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10f", std::fabs(value));
  std::string s(buf);
  const std::size_t dot = s.find('.');
  s = digits == 0 ? s.substr(0, dot) : s.substr(0, dot + 1 + digits);
  const bool is_zero =
      s.find_first_not_of("0.") == std::string::npos;
  if (value < 0 && !is_zero) s.insert(s.begin(), '-');
  return s;
}

}  // namespace

std::string_view domain_name(Domain domain) {
  return domain == Domain::kX ? "X" : "Y";
}

Domain parse_domain(std::string_view text) {
  if (text == "X") return Domain::kX;
  if (text == "Y") return Domain::kY;
  throw InputError("unknown domain '" + std::string(text) + "'");
}

void Granularity::validate() const {
  if (spatial_digits < 0 || spatial_digits > 6)
    throw InputError("spatial_digits must be in [0, 6]");
  if (temporal_bins < 1) throw InputError("temporal_bins must be >= 1");
}

int Vocabulary::add(const std::string& key) {
  auto [it, inserted] = index_.emplace(key, static_cast<int>(keys_.size()));
  if (inserted) keys_.push_back(key);
  return it->second;
}

std::optional<int> Vocabulary::find(std::string_view key) const {
  auto it = index_.find(std::string(key));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

View make_view(std::string id, Domain domain, std::vector<EventCount> counts) {
  std::sort(counts.begin(), counts.end(),
            [](const EventCount& a, const EventCount& b) { return a.id < b.id; });
  View view;
  view.id = std::move(id);
  view.domain = domain;
  for (const auto& c : counts) {
    if (c.id < 0) throw InputError("negative event id in view " + view.id);
    if (c.count < 0) throw InputError("negative count in view " + view.id);
    if (c.count == 0) continue;
    if (!view.counts.empty() && view.counts.back().id == c.id) {
      view.counts.back().count += c.count;
    } else {
      view.counts.push_back(c);
    }
    view.total += c.count;
  }
  return view;
}

View merge_views(std::string id, Domain domain, std::span<const View> views) {
  std::vector<EventCount> all;
  for (const auto& v : views) all.insert(all.end(), v.counts.begin(), v.counts.end());
  return make_view(std::move(id), domain, std::move(all));
}

std::vector<View> select_domain(std::span<const View> views, Domain domain) {
  std::vector<View> out;
  for (const auto& v : views) {
    if (v.domain == domain) out.push_back(v);
  }
  return out;
}

std::vector<ActivityRecord> parse_activity_log(std::istream& in) {
  std::vector<ActivityRecord> records;
  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, ',');
    if (fields.size() != 5) {
      throw ParseError(line_no, "record",
                       "expected 5 comma-separated fields, got " +
                           std::to_string(fields.size()));
    }
    for (auto& f : fields) f = trim(f);
    ActivityRecord r;
    try {
      r.domain = parse_domain(fields[0]);
    } catch (const InputError&) {
      throw ParseError(line_no, "domain", "expected X or Y");
    }
    if (fields[1].empty()) throw ParseError(line_no, "user_id", "empty");
    r.user_id = std::string(fields[1]);
    if (!parse_int64(fields[2], &r.timestamp))
      throw ParseError(line_no, "timestamp", "not an integer");
    if (r.timestamp < 0) throw ParseError(line_no, "timestamp", "negative");
    if (!parse_double(fields[3], &r.lat))
      throw ParseError(line_no, "lat", "not a number");
    if (r.lat < -90.0 || r.lat > 90.0)
      throw ParseError(line_no, "lat", "outside [-90, 90]");
    if (!parse_double(fields[4], &r.lon))
      throw ParseError(line_no, "lon", "not a number");
    if (r.lon < -180.0 || r.lon > 180.0)
      throw ParseError(line_no, "lon", "outside [-180, 180]");
    records.push_back(std::move(r));
  }
  return records;
}

void write_activity_log(std::ostream& out,
                        std::span<const ActivityRecord> records) {
  char buf[128];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), ",%lld,%.6f,%.6f\n",
                  static_cast<long long>(r.timestamp), r.lat, r.lon);
    out << domain_name(r.domain) << ',' << r.user_id << buf;
  }
}

std::string bin_spatial(double lat, double lon, int spatial_digits) {
  if (spatial_digits < 0 || spatial_digits > 6)
    throw InputError("spatial_digits must be in [0, 6]");
  return truncate_coordinate(lat, spatial_digits) + "," +
         truncate_coordinate(lon, spatial_digits);
}

int bin_temporal(std::int64_t timestamp, std::int64_t span_start,
                 std::int64_t span_end, int temporal_bins) {
  if (temporal_bins < 1) throw InputError("temporal_bins must be >= 1");
  if (span_end <= span_start) throw InputError("empty time span");
  if (timestamp < span_start || timestamp > span_end)
    throw InputError("timestamp " + std::to_string(timestamp) +
                     " outside the binning span");
  const __int128 offset = timestamp - span_start;
  const auto bin = static_cast<int>(offset * temporal_bins / (span_end - span_start));
  return std::min(bin, temporal_bins - 1);
}

EventSpace build_event_space(std::span<const ActivityRecord> records,
                             const Granularity& granularity) {
  granularity.validate();
  if (records.empty()) throw InputError("no activity records");
  std::int64_t t_min = std::numeric_limits<std::int64_t>::max();
  std::int64_t t_max = std::numeric_limits<std::int64_t>::min();
  for (const auto& r : records) {
    t_min = std::min(t_min, r.timestamp);
    t_max = std::max(t_max, r.timestamp);
  }

  EventSpace space;
  std::map<std::pair<Domain, std::string>, std::size_t> view_index;
  std::vector<std::vector<EventCount>> raw_counts;
  for (const auto& r : records) {
    const int bin = t_max > t_min ? bin_temporal(r.timestamp, t_min, t_max,
                                                 granularity.temporal_bins)
                                  : 0;
    const std::string key = bin_spatial(r.lat, r.lon, granularity.spatial_digits) +
                            "|" + std::to_string(bin);
    const int id = space.vocabulary.add(key);
    auto [it, inserted] =
        view_index.emplace(std::make_pair(r.domain, r.user_id), space.views.size());
    if (inserted) {
      View v;
      v.id = r.user_id;
      v.domain = r.domain;
      space.views.push_back(std::move(v));
      raw_counts.emplace_back();
    }
    raw_counts[it->second].push_back({id, 1});
  }
  for (std::size_t i = 0; i < space.views.size(); ++i) {
    space.views[i] = make_view(std::move(space.views[i].id), space.views[i].domain,
                               std::move(raw_counts[i]));
  }
  return space;
}

FrequencyVector relative_frequency(const View& view, int vocab_size) {
  if (view.total <= 0) throw InputError("view '" + view.id + "' is empty");
  FrequencyVector out;
  out.entries.reserve(view.counts.size());
  const double total = static_cast<double>(view.total);
  for (const auto& c : view.counts) {
    if (c.id < 0 || c.id >= vocab_size)
      throw InputError("event id " + std::to_string(c.id) + " of view '" +
                       view.id + "' outside the vocabulary");
    out.entries.push_back({c.id, static_cast<double>(c.count) / total});
  }
  return out;
}

double l1_distance(const FrequencyVector& p, const FrequencyVector& q) {
  double sum = 0.0;
  auto a = p.entries.begin();
  auto b = q.entries.begin();
  while (a != p.entries.end() || b != q.entries.end()) {
    if (b == q.entries.end() || (a != p.entries.end() && a->id < b->id)) {
      sum += a->p;
      ++a;
    } else if (a == p.entries.end() || b->id < a->id) {
      sum += b->p;
      ++b;
    } else {
      sum += std::fabs(a->p - b->p);
      ++a;
      ++b;
    }
  }
  return sum;
}

OverlapStats overlap_stats(const View& x, const View& y, int vocab_size) {
  OverlapStats stats;
  auto a = x.counts.begin();
  auto b = y.counts.begin();
  while (a != x.counts.end() && b != y.counts.end()) {
    if (a->id < b->id) {
      ++a;
    } else if (b->id < a->id) {
      ++b;
    } else {
      ++stats.common_event_count;
      ++a;
      ++b;
    }
  }
  stats.l1 = l1_distance(relative_frequency(x, vocab_size),
                         relative_frequency(y, vocab_size));
  return stats;
}

void write_views(std::ostream& out, std::span<const View> views) {
  out << R"({"format":"ldalink-views","version":)" << json(kVersion).dump()
      << "}\n";
  for (const auto& v : views) {
    out << R"({"view_id":)" << json(v.id).dump() << R"(,"domain":")"
        << domain_name(v.domain) << R"(","counts":{)";
    for (std::size_t i = 0; i < v.counts.size(); ++i) {
      if (i) out << ',';
      out << '"' << v.counts[i].id << "\":" << v.counts[i].count;
    }
    out << "}}\n";
  }
}

std::vector<View> read_views(std::istream& in) {
  std::vector<View> views;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(line_no, "json", e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "json", "expected an object");
    if (!obj.contains("view_id")) {
      if (obj.contains("format")) continue;
      throw ParseError(line_no, "view_id", "missing");
    }
    try {
      std::vector<EventCount> counts;
      for (const auto& [key, value] : obj.at("counts").items()) {
        std::int64_t id = 0;
        if (!parse_int64(key, &id)) throw ParseError(line_no, "counts", "bad event id");
        counts.push_back({static_cast<int>(id), value.get<std::int64_t>()});
      }
      views.push_back(make_view(obj.at("view_id").get<std::string>(),
                                parse_domain(obj.at("domain").get<std::string>()),
                                std::move(counts)));
    } catch (const json::exception& e) {
      throw ParseError(line_no, "view", e.what());
    }
  }
  return views;
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocabulary) {
  out << R"({"format":"ldalink-vocabulary","version":)" << json(kVersion).dump()
      << R"(,"W":)" << vocabulary.size() << R"(,"events":{)";
  for (int i = 0; i < vocabulary.size(); ++i) {
    if (i) out << ',';
    out << '\n' << json(vocabulary.key(i)).dump() << ':' << i;
  }
  out << "\n}}\n";
}

Vocabulary read_vocabulary(std::istream& in) {
  json obj;
  try {
    obj = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(std::string("vocabulary: ") + e.what());
  }
  try {
    const auto& events = obj.at("events");
    std::vector<std::string> keys(events.size());
    for (const auto& [key, value] : events.items()) {
      const auto id = value.get<std::int64_t>();
      if (id < 0 || id >= static_cast<std::int64_t>(keys.size()) || !keys[id].empty())
        throw InputError("vocabulary ids must be dense and unique");
      keys[id] = key;
    }
    Vocabulary vocab;
    for (const auto& k : keys) vocab.add(k);
    return vocab;
  } catch (const json::exception& e) {
    throw InputError(std::string("vocabulary: ") + e.what());
  }
}

void write_truth(std::ostream& out, const IdentityMap& pi) {
  out << "# ldalink " << kVersion << '\n';
  out << "x_view_id,y_view_id\n";
  for (const auto& [x, ys] : pi) {
    for (const auto& y : ys) out << x << ',' << y << '\n';
  }
}

IdentityMap read_truth(std::istream& in) {
  IdentityMap pi;
  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "x_view_id,y_view_id") continue;
    auto fields = split(line, ',');
    if (fields.size() != 2 || trim(fields[0]).empty() || trim(fields[1]).empty())
      throw ParseError(line_no, "record", "expected x_view_id,y_view_id");
    pi[std::string(trim(fields[0]))].emplace_back(trim(fields[1]));
  }
  return pi;
}

}  // namespace ldalink
