#include "ldalink/cli.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ldalink/appendix.h"
#include "ldalink/baselines.h"
#include "ldalink/corpus.h"
#include "ldalink/error.h"
#include "ldalink/eval.h"
#include "ldalink/lda.h"
#include "ldalink/linkage.h"
#include "ldalink/synth.h"
#include "ldalink/version.h"

namespace ldalink {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

int to_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError("bad integer '" + s + "' in " + what);
}

std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  for (const auto& s : split_list(text)) ks.push_back(to_int(s, "k list"));
  if (ks.empty()) throw InputError("k list is empty");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.front() < 1) throw InputError("k values must be >= 1");
  return ks;
}

// "digits:bins,digits:bins,..."
std::vector<Granularity> parse_grid(const std::string& text) {
  std::vector<Granularity> grid;
  for (const auto& item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw InputError("grid point '" + item + "' needs digits:bins");
    Granularity g{to_int(item.substr(0, colon), "grid"), to_int(item.substr(colon + 1), "grid")};
    g.validate();
    grid.push_back(g);
  }
  if (grid.empty()) throw InputError("granularity grid is empty");
  return grid;
}

// Expands a flat JSON config into "--key value" tokens placed ahead of the
// real arguments; options take their last value, so flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") path = args[i + 1];
  for (const auto& a : args)
    if (a.rfind("--config=", 0) == 0) path = a.substr(9);
  if (path.empty() || args.size() < 2) return args;
  auto in = open_in(path);
  Json cfg;
  try {
    cfg = Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError("config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw InputError("config " + path + " must be a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back("--" + key);
      continue;
    }
    tokens.push_back("--" + key);
    if (value.is_string()) {
      tokens.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      tokens.push_back(joined);
    } else if (value.is_number() || value.is_null()) {
      tokens.push_back(value.dump());
    } else {
      throw InputError("config key '" + key + "' must be a scalar or a list");
    }
  }
  // args[0] is the program, args[1] the subcommand.
  args.insert(args.begin() + 2, tokens.begin(), tokens.end());
  return args;
}

void add_lda_options(CLI::App* cmd, LdaConfig& cfg) {
  cmd->add_option("--topics", cfg.num_topics, "Number of topics K");
  cmd->add_option("--alpha", cfg.alpha, "Topic proportion prior");
  cmd->add_option("--eta", cfg.eta, "Topic prior");
  cmd->add_option("--rho0", cfg.rho0, "Learning-rate delay");
  cmd->add_option("--kappa", cfg.kappa, "Forgetting rate in (0.5, 1]");
  cmd->add_option("--epochs", cfg.epochs, "Passes over the corpus");
  cmd->add_option("--minibatch", cfg.minibatch_size, "Views per update");
  cmd->add_option("--e-step-tol", cfg.e_step_tol, "Mean absolute gamma change to stop");
  cmd->add_option("--e-step-max-iter", cfg.e_step_max_iter, "E-step iteration cap");
}

std::string version_line() { return std::string("ldalink ") + kVersion; }

std::vector<View> load_views(const std::string& path) {
  auto in = open_in(path);
  return read_views(in);
}

int vocab_size_of(const std::string& vocab_path, std::span<const View> views) {
  if (!vocab_path.empty()) {
    auto in = open_in(vocab_path);
    return read_vocabulary(in).size();
  }
  int w = 0;
  for (const auto& v : views)
    if (!v.counts.empty()) w = std::max(w, v.counts.back().id + 1);
  return w;
}

// ---- subcommands ----

struct SynthArgs {
  SynthConfig cfg;
  bool zero_overlap = false;
  bool render_log = false;
  RenderConfig render;
  std::string out;
};

void run_synth(SynthArgs& a, std::uint64_t seed) {
  a.cfg.seed = seed;
  a.render.seed = seed;
  const SyntheticWorld world = a.zero_overlap ? zero_overlap_world(a.cfg) : generate_world(a.cfg);
  const fs::path dir(a.out);
  std::vector<View> all = world.x_views;
  all.insert(all.end(), world.y_views.begin(), world.y_views.end());
  {
    auto out = open_out((dir / "views.jsonl").string());
    write_views(out, all);
  }
  {
    auto out = open_out((dir / "vocabulary.json").string());
    write_vocabulary(out, world.vocabulary);
  }
  {
    auto out = open_out((dir / "truth.csv").string());
    write_truth(out, world.truth.pi);
  }
  if (a.render_log) {
    auto out = open_out((dir / "activity.csv").string());
    out << "# " << version_line() << '\n';
    write_activity_log(out, render_activity_log(world, a.render));
  }
}

struct IngestArgs {
  std::string log;
  Granularity granularity;
  std::string out;
};

void run_ingest(const IngestArgs& a) {
  a.granularity.validate();
  auto in = open_in(a.log);
  const auto records = parse_activity_log(in);
  const EventSpace space = build_event_space(records, a.granularity);
  const fs::path dir(a.out);
  {
    auto out = open_out((dir / "views.jsonl").string());
    write_views(out, space.views);
  }
  auto out = open_out((dir / "vocabulary.json").string());
  write_vocabulary(out, space.vocabulary);
}

struct FitArgs {
  LdaConfig cfg;
  std::string views;
  std::string vocab;
  std::string truth;  // omniscient fit when given
  std::string out;
};

void run_fit(FitArgs& a, std::uint64_t seed) {
  a.cfg.seed = seed;
  const auto views = load_views(a.views);
  const int W = vocab_size_of(a.vocab, views);
  TopicModel model;
  if (!a.truth.empty()) {
    auto in = open_in(a.truth);
    const IdentityMap pi = read_truth(in);
    model = fit_omniscient(select_domain(views, Domain::kX), select_domain(views, Domain::kY), pi,
                           W, a.cfg);
  } else {
    model = fit_online(views, W, a.cfg);
  }
  model.vocabulary_ref = a.vocab.empty() ? "" : fs::path(a.vocab).filename().string();
  auto out = open_out(a.out);
  write_model(out, model);
}

struct LinkArgs {
  std::string method = "lda-link";
  std::string model;
  std::string views;
  std::string vocab;
  std::string log;
  int spatial_digits = 2;
  int k = 10;
  std::string estimator = "mean";
  std::optional<double> reject;
  LdaConfig cfg;
  NflxParams nflx;
  int pois_truncation = 200;
  std::string out;
};

void run_link(LinkArgs& a, int threads) {
  const Method method = parse_method(a.method);
  LinkageResult result;
  if (method == Method::kNflx) {
    if (a.log.empty()) throw InputError("nflx needs --log with raw timestamps");
    auto in = open_in(a.log);
    const auto records = parse_activity_log(in);
    Vocabulary locations;
    const auto timed = build_timed_views(records, a.spatial_digits, locations);
    std::vector<TimedView> tx, ty;
    for (const auto& v : timed) (v.domain == Domain::kX ? tx : ty).push_back(v);
    const auto r = nflx_link(tx, ty, locations.size(), a.nflx, a.k, threads);
    result = r.result;
    int abstained = 0;
    for (bool b : r.abstain) abstained += b;
    std::fprintf(stderr, "nflx: %d of %zu X views abstain, %d location skips\n", abstained,
                 r.abstain.size(), r.skipped_locations);
  } else {
    if (a.views.empty()) throw InputError(a.method + " needs --views");
    const auto views = load_views(a.views);
    const auto x = select_domain(views, Domain::kX);
    const auto y = select_domain(views, Domain::kY);
    if (method == Method::kLdaLink) {
      if (a.model.empty()) throw InputError("lda-link needs --model");
      auto in = open_in(a.model);
      const TopicModel model = read_model(in);
      a.cfg.num_topics = model.num_topics;
      a.cfg.alpha = model.alpha;
      LinkOptions opt;
      opt.k = a.k;
      opt.threads = threads;
      opt.reject_threshold = a.reject;
      if (a.estimator == "mode")
        opt.estimator = ThetaEstimator::kMode;
      else if (a.estimator != "mean")
        throw InputError("--estimator must be mean or mode");
      result = link(x, y, model, a.cfg, opt);
    } else {
      const int W = vocab_size_of(a.vocab, views);
      if (method == Method::kJsDist) {
        result = jsdist_link(x, y, W, a.k, threads);
      } else {
        PoisParams params = estimate_pois_params(x, y, W);
        params.series_truncation = a.pois_truncation;
        result = pois_link(x, y, params, a.k, threads);
      }
    }
  }
  auto out = open_out(a.out);
  write_linkage(out, result);
}

struct EvalArgs {
  std::string linkage;
  std::string truth;
  std::string ks = "1,5,10";
  std::string cohort = "all";  // all | zero-overlap | sparse:<fraction>
  std::string views;
  std::string vocab;
  std::string out;
};

void run_eval(const EvalArgs& a) {
  auto lin = open_in(a.linkage);
  const LinkageResult result = read_linkage(lin);
  auto tin = open_in(a.truth);
  const IdentityMap truth = read_truth(tin);
  const auto ks = parse_ks(a.ks);
  std::optional<std::vector<std::string>> cohort;
  if (a.cohort != "all") {
    if (a.views.empty()) throw InputError("cohort selection needs --views");
    const auto views = load_views(a.views);
    const auto x = select_domain(views, Domain::kX);
    const auto y = select_domain(views, Domain::kY);
    if (a.cohort == "zero-overlap") {
      cohort = zero_overlap_cohort(x, y, truth);
    } else if (a.cohort.rfind("sparse:", 0) == 0) {
      const double f = std::stod(a.cohort.substr(7));
      cohort = sparse_cohort(x, y, truth, f, vocab_size_of(a.vocab, views));
    } else {
      throw InputError("--cohort must be all, zero-overlap or sparse:<fraction>");
    }
  }
  const RecallReport report =
      cohort ? recall_curve(result, truth, ks, std::span<const std::string>(*cohort), a.cohort)
             : recall_curve(result, truth, ks);
  if (a.out.empty()) {
    write_recall_report(std::cout, report);
  } else {
    auto out = open_out(a.out);
    write_recall_report(out, report);
  }
}

struct SweepArgs {
  std::string log;
  std::string truth;
  std::string grid = "1:1,2:1,2:4,3:4";
  std::string methods = "lda-link,js-dist";
  std::string ks = "1,5,10";
  std::optional<double> sparse_fraction;
  LdaConfig cfg;
  NflxParams nflx;
  int pois_truncation = 200;
  std::string out;
};

void run_sweep(SweepArgs& a, std::uint64_t seed, int threads) {
  auto in = open_in(a.log);
  const auto records = parse_activity_log(in);
  auto tin = open_in(a.truth);
  const IdentityMap truth = read_truth(tin);
  SweepConfig sc;
  sc.grid = parse_grid(a.grid);
  for (const auto& m : split_list(a.methods)) sc.methods.push_back(parse_method(m));
  sc.ks = parse_ks(a.ks);
  a.cfg.seed = seed;
  sc.method.lda = a.cfg;
  sc.method.nflx = a.nflx;
  sc.method.pois_truncation = a.pois_truncation;
  sc.method.threads = threads;
  sc.sparse_fraction = a.sparse_fraction;
  const auto rows = granularity_sweep(records, truth, sc);
  auto out = open_out(a.out);
  write_sweep_csv(out, rows);
}

struct AppendixArgs {
  int samples = 500;
  int instances = 20;
  int concentration_trials = 10000;
  int error_trials = 100;
  std::string out;
};

Json bench_json(const AppendixArgs& a, std::uint64_t seed) {
  Json report;
  report["format"] = "ldalink-appendix-report";
  report["version"] = kVersion;
  report["seed"] = seed;

  const std::vector<double> cs = {1e3, 1e4, 1e5};
  const BoundCheckReport bound = check_mode_bound(a.samples, 10, cs, 1.0, seed);
  report["mode_bound"] = {{"samples", bound.samples},
                          {"W", bound.vocab_size},
                          {"ratio", bound.ratio},
                          {"pair_concentration", bound.pair_concentration},
                          {"C", bound.concentrations},
                          {"max_margin", bound.max_margin},
                          {"scaled_margin", bound.scaled_margin},
                          {"corollary_scaled_margin", bound.corollary_scaled_margin},
                          {"pass", bound.pass}};

  Json fp = Json::array();
  for (int i = 0; i < a.instances; ++i) {
    const int K = 2 + i % 3;
    const int W = K + 2;
    const auto inst = random_fixed_point_instance(K, W, derive_seed(seed, "bench-instance", i));
    const std::vector<double> start(K, 1.0 / K);
    const auto fixed = simplified_fixed_point(inst.p0, inst.beta, start, 1000000, 1e-12);
    const auto first = check_first_order(inst.p0, inst.beta, start, 1e-5);
    const auto second = check_second_order(inst.p0, inst.beta, start, 1e-3);
    fp.push_back({{"K", K},
                  {"W", W},
                  {"fixed_point_residual", residual_fixed_point(fixed.theta, inst.p0, inst.beta)},
                  {"fixed_point_converged", fixed.converged},
                  {"first_order_residual", first.residual},
                  {"first_order_pass", first.pass},
                  {"second_order_residual", second.residual},
                  {"second_order_pass", second.pass},
                  {"reference_coordinate", first.reference}});
  }
  report["fixed_point"] = {{"direction", "e_v - e_ref, ref = largest coordinate of P0"},
                           {"h_first", 1e-5},
                           {"h_second", 1e-3},
                           {"instances", fp}};

  const std::vector<double> q(4, 0.25);
  const std::vector<int> ns = {20, 40, 80};
  Json conc = Json::array();
  for (const auto& pt : js_concentration_mc(q, ns, 0.2, a.concentration_trials, seed,
                                           ConcentrationSampler::kTilted)) {
    Json j = {{"n", pt.n},
              {"trials", pt.trials},
              {"hits", pt.hits},
              {"probability", pt.probability},
              {"std_error", pt.std_error}};
    j["exponent"] = pt.exponent ? Json(*pt.exponent) : Json(nullptr);
    conc.push_back(j);
  }
  report["js_concentration"] = {{"Q", q}, {"lambda", 0.2}, {"sampler", "tilted mixture"}, {"points", conc}};

  ErrorExponentConfig ec;
  ec.trials = a.error_trials;
  ec.seed = seed;
  const std::vector<int> en = {50, 100, 200, 400};
  Json err = Json::array();
  for (const auto& pt : error_exponent_mc(ec, en))
    err.push_back({{"n", pt.n},
                   {"decisions", pt.decisions},
                   {"errors", pt.errors},
                   {"rejections", pt.rejections},
                   {"error_rate", pt.error_rate},
                   {"stderr", pt.stderr_rate}});
  report["error_exponent"] = {{"D", ec.num_entities}, {"K", ec.num_topics}, {"W", ec.vocab_size},
                              {"alpha", ec.alpha},    {"eta", ec.eta},      {"lambda", ec.lambda},
                              {"points", err}};

  SynthConfig sc;
  sc.num_entities = 50;
  sc.num_topics = 5;
  sc.vocab_size = 200;
  sc.events_per_entity = 500;
  sc.seed = seed;
  LdaConfig lc;
  lc.num_topics = 5;
  lc.epochs = 5;
  lc.seed = seed;
  Json probe = Json::array();
  for (const auto& pt : surrogate_tracking_probe(generate_world(sc), lc))
    probe.push_back({{"epoch", pt.epoch}, {"skl", pt.skl}});
  report["surrogate_probe"] = {{"D", sc.num_entities}, {"K", sc.num_topics},
                               {"W", sc.vocab_size},   {"N", sc.events_per_entity},
                               {"series", probe}};
  return report;
}

void print_summary(const Json& r) {
  const auto& b = r["mode_bound"];
  std::printf("mode bound: scaled margins");
  for (const auto& m : b["scaled_margin"]) std::printf(" %.3g", m.get<double>());
  std::printf(" -> %s\n", b["pass"].get<bool>() ? "non-increasing" : "NOT non-increasing");
  double fp = 0, r1 = 0, r2 = 0;
  for (const auto& i : r["fixed_point"]["instances"]) {
    fp = std::max(fp, i["fixed_point_residual"].get<double>());
    r1 = std::max(r1, i["first_order_residual"].get<double>());
    r2 = std::max(r2, i["second_order_residual"].get<double>());
  }
  std::printf("fixed point: max residual %.3g, first order %.3g, second order %.3g\n", fp, r1, r2);
  std::printf("js concentration:");
  for (const auto& p : r["js_concentration"]["points"]) {
    if (p["exponent"].is_null())
      std::printf(" n=%d:none", p["n"].get<int>());
    else
      std::printf(" n=%d:%.4f", p["n"].get<int>(), p["exponent"].get<double>());
  }
  std::printf("\nerror rate:");
  for (const auto& p : r["error_exponent"]["points"])
    std::printf(" n=%d:%.4f", p["n"].get<int>(), p["error_rate"].get<double>());
  std::printf("\nsurrogate probe skl:");
  for (const auto& p : r["surrogate_probe"]["series"]) std::printf(" %.4g", p["skl"].get<double>());
  std::printf("\n");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Topic-model linkage of entity views across data sets"};
  app.set_version_flag("--version", version_line());
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::uint64_t seed = 0;
  int threads = 1;
  std::string config_path;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--config", config_path, "Flat JSON file of option defaults");
  };

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic world");
  common(c_synth);
  c_synth->add_option("--d", synth.cfg.num_entities, "Entities");
  c_synth->add_option("--k", synth.cfg.num_topics, "Topics");
  c_synth->add_option("--w", synth.cfg.vocab_size, "Vocabulary size");
  c_synth->add_option("--n", synth.cfg.events_per_entity, "Events per entity");
  c_synth->add_option("--alpha", synth.cfg.alpha, "Topic proportion prior");
  c_synth->add_option("--eta", synth.cfg.eta, "Topic prior");
  c_synth->add_option("--split-prob", synth.cfg.split_prob, "Probability an event goes to X");
  c_synth->add_option("--y-views-min", synth.cfg.y_views_min, "Fewest Y views per entity");
  c_synth->add_option("--y-views-max", synth.cfg.y_views_max, "Most Y views per entity");
  c_synth->add_flag("--zero-overlap", synth.zero_overlap, "Disjoint X/Y supports per entity");
  c_synth->add_flag("--render-log", synth.render_log, "Also write activity.csv");
  c_synth->add_option("--jitter", synth.render.jitter, "Coordinate jitter of rendered events");
  c_synth->add_option("--time-span", synth.render.time_span, "Timestamp span of rendered events");
  c_synth->add_option("--out", synth.out, "Output directory")->required();

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Bin an activity log into views");
  common(c_ingest);
  c_ingest->add_option("--log", ingest.log, "Activity log CSV")->required();
  c_ingest->add_option("--spatial-digits", ingest.granularity.spatial_digits, "Decimals kept");
  c_ingest->add_option("--temporal-bins", ingest.granularity.temporal_bins, "Time bins");
  c_ingest->add_option("--out", ingest.out, "Output directory")->required();

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Learn topics from views");
  common(c_fit);
  add_lda_options(c_fit, fit.cfg);
  c_fit->add_option("--views", fit.views, "Views JSONL")->required();
  c_fit->add_option("--vocab", fit.vocab, "Vocabulary JSON");
  c_fit->add_option("--truth", fit.truth, "Truth CSV; fits merged co-referent views");
  c_fit->add_option("--out", fit.out, "Model JSON")->required();

  LinkArgs lk;
  auto* c_link = app.add_subcommand("link", "Rank candidate Y views for every X view");
  common(c_link);
  c_link->add_option("--method", lk.method, "lda-link, js-dist, nflx or pois");
  c_link->add_option("--model", lk.model, "Model JSON (lda-link)");
  c_link->add_option("--views", lk.views, "Views JSONL");
  c_link->add_option("--vocab", lk.vocab, "Vocabulary JSON");
  c_link->add_option("--log", lk.log, "Activity log (nflx)");
  c_link->add_option("--spatial-digits", lk.spatial_digits, "Location decimals (nflx)");
  c_link->add_option("--k", lk.k, "Candidates kept per X view");
  c_link->add_option("--estimator", lk.estimator, "mean or mode");
  c_link->add_option("--reject", lk.reject, "Drop candidates with JS above this");
  c_link->add_option("--e-step-tol", lk.cfg.e_step_tol, "E-step tolerance");
  c_link->add_option("--e-step-max-iter", lk.cfg.e_step_max_iter, "E-step iteration cap");
  c_link->add_option("--n0", lk.nflx.n0, "NFLX visit scale");
  c_link->add_option("--tau0", lk.nflx.tau0, "NFLX time scale in seconds");
  c_link->add_option("--eccentricity", lk.nflx.eccentricity_eps, "NFLX abstention factor");
  c_link->add_option("--pois-truncation", lk.pois_truncation, "POIS series terms");
  c_link->add_option("--out", lk.out, "Linkage CSV")->required();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Rank-k recall of a linkage");
  common(c_eval);
  c_eval->add_option("--linkage", ev.linkage, "Linkage CSV")->required();
  c_eval->add_option("--truth", ev.truth, "Truth CSV")->required();
  c_eval->add_option("--ks", ev.ks, "Comma-separated k values");
  c_eval->add_option("--cohort", ev.cohort, "all, zero-overlap or sparse:<fraction>");
  c_eval->add_option("--views", ev.views, "Views JSONL (cohorts)");
  c_eval->add_option("--vocab", ev.vocab, "Vocabulary JSON (cohorts)");
  c_eval->add_option("--out", ev.out, "Report CSV; stdout when absent");

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "Recall across granularities");
  common(c_sweep);
  add_lda_options(c_sweep, sw.cfg);
  c_sweep->add_option("--log", sw.log, "Activity log CSV")->required();
  c_sweep->add_option("--truth", sw.truth, "Truth CSV keyed by user id")->required();
  c_sweep->add_option("--grid", sw.grid, "digits:bins list");
  c_sweep->add_option("--methods", sw.methods, "Comma-separated methods");
  c_sweep->add_option("--ks", sw.ks, "Comma-separated k values");
  c_sweep->add_option("--sparse-fraction", sw.sparse_fraction, "Also score the sparse cohort");
  c_sweep->add_option("--n0", sw.nflx.n0, "NFLX visit scale");
  c_sweep->add_option("--tau0", sw.nflx.tau0, "NFLX time scale in seconds");
  c_sweep->add_option("--pois-truncation", sw.pois_truncation, "POIS series terms");
  c_sweep->add_option("--out", sw.out, "Long-format CSV")->required();

  AppendixArgs ap;
  auto* c_app = app.add_subcommand("verify-appendix", "Run the numerical verification bench");
  common(c_app);
  c_app->add_option("--samples", ap.samples, "Parameter pairs per concentration");
  c_app->add_option("--instances", ap.instances, "Fixed-point instances");
  c_app->add_option("--concentration-trials", ap.concentration_trials, "Trials per n");
  c_app->add_option("--error-trials", ap.error_trials, "Worlds per n");
  c_app->add_option("--out", ap.out, "Report JSON")->required();

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  try {
    if (c_synth->parsed()) run_synth(synth, seed);
    if (c_ingest->parsed()) run_ingest(ingest);
    if (c_fit->parsed()) run_fit(fit, seed);
    if (c_link->parsed()) run_link(lk, threads);
    if (c_eval->parsed()) run_eval(ev);
    if (c_sweep->parsed()) run_sweep(sw, seed, threads);
    if (c_app->parsed()) {
      const Json report = bench_json(ap, seed);
      auto out = open_out(ap.out);
      out << report.dump(2) << '\n';
      print_summary(report);
    }
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
  return 0;
}

}  // namespace ldalink
