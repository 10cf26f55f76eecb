#include "ldalink/appendix.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include <boost/math/special_functions/digamma.hpp>

#include "ldalink/error.h"
#include "ldalink/linkage.h"
#include "ldalink/rng.h"

namespace ldalink {
namespace {

using Vec = std::vector<double>;

double l1(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

Vec mixture(std::span<const double> theta, const TopicMatrix& beta) {
  Vec s(beta.vocab_size, 0.0);
  for (int k = 0; k < beta.num_topics; ++k)
    for (int w = 0; w < beta.vocab_size; ++w) s[w] += theta[k] * beta.at(k, w);
  return s;
}

// Solves A x = b in place by Gaussian elimination with partial pivoting.
bool solve_linear(std::vector<Vec>& a, Vec& b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (std::abs(a[piv][c]) < 1e-300) return false;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j < n; ++j) a[r][j] -= f * a[c][j];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t c = n; c-- > 0;) {
    for (std::size_t j = c + 1; j < n; ++j) b[c] -= a[c][j] * b[j];
    b[c] /= a[c][c];
  }
  return true;
}

// Fixed point to near machine precision: the iteration from `start`, then
// Newton steps on sum_w P_w b_kw / s_w = 1 while the iterate stays interior.
Vec solve_precise(std::span<const double> p, const TopicMatrix& beta,
                  std::span<const double> start) {
  Vec theta = simplified_fixed_point(p, beta, start, 200000, 1e-15).theta;
  const int K = beta.num_topics, W = beta.vocab_size;
  for (int it = 0; it < 8; ++it) {
    const Vec s = mixture(theta, beta);
    Vec g(K, -1.0);
    std::vector<Vec> jac(K, Vec(K, 0.0));
    for (int w = 0; w < W; ++w) {
      if (p[w] == 0.0 || s[w] <= 0.0) continue;
      for (int k = 0; k < K; ++k) {
        g[k] += p[w] * beta.at(k, w) / s[w];
        for (int l = 0; l < K; ++l)
          jac[k][l] -= p[w] * beta.at(k, w) * beta.at(l, w) / (s[w] * s[w]);
      }
    }
    if (!solve_linear(jac, g)) break;
    Vec next(K);
    bool interior = true;
    for (int k = 0; k < K; ++k) {
      next[k] = theta[k] - g[k];
      interior = interior && next[k] > 0.0;
    }
    if (!interior) break;
    theta = std::move(next);
  }
  return theta;
}

// Quantities of the implicit conditions at (theta, P).
struct Terms {
  std::vector<Vec> eta;  // K x W
  Vec g;                 // 1 - sum_w P_w eta_kw
  std::vector<Vec> s;    // sum_w P_w eta_kw eta_lw
};

Terms terms(std::span<const double> theta, std::span<const double> p,
            const TopicMatrix& beta) {
  const int K = beta.num_topics, W = beta.vocab_size;
  const Vec mix = mixture(theta, beta);
  Terms t;
  t.eta.assign(K, Vec(W));
  t.g.assign(K, 1.0);
  t.s.assign(K, Vec(K, 0.0));
  for (int k = 0; k < K; ++k)
    for (int w = 0; w < W; ++w) {
      t.eta[k][w] = mix[w] > 0.0 ? beta.at(k, w) / mix[w] : 0.0;
      t.g[k] -= p[w] * t.eta[k][w];
    }
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l)
      for (int w = 0; w < W; ++w) t.s[k][l] += p[w] * t.eta[k][w] * t.eta[l][w];
  return t;
}

double dot_eta(const Vec& eta_row, std::span<const double> dir) {
  double s = 0.0;
  for (std::size_t w = 0; w < dir.size(); ++w) s += dir[w] * eta_row[w];
  return s;
}

struct Bench {
  std::span<const double> p0;
  const TopicMatrix& beta;
  Vec theta;
  int ref;
  double h;

  Vec at(std::span<const double> shift) const {
    Vec p(p0.begin(), p0.end());
    for (std::size_t w = 0; w < p.size(); ++w) {
      p[w] += shift[w];
      if (p[w] < 0.0) throw Error("perturbation leaves the simplex; lower h");
    }
    Vec out = solve_precise(p, beta, theta);
    if (*std::min_element(out.begin(), out.end()) < 1e-8)
      throw Error("perturbed fixed point reached the simplex boundary; lower h");
    if (l1(out, theta) > 100.0 * h)
      throw Error("fixed-point continuation jumped to another branch");
    return out;
  }

  Vec direction(int v) const {
    Vec a(p0.size(), 0.0);
    a[v] += 1.0;
    a[ref] -= 1.0;
    return a;
  }

  // Central differences at steps h and h/2, Richardson-combined so that the
  // O(h^2) truncation term cancels.
  Vec derivative(const Vec& a) const {
    const Vec coarse = central(a, h), fine = central(a, 0.5 * h);
    return richardson(coarse, fine);
  }

  Vec mixed(const Vec& a, const Vec& c) const {
    const Vec coarse = mixed_at(a, c, h), fine = mixed_at(a, c, 0.5 * h);
    return richardson(coarse, fine);
  }

  Vec central(const Vec& a, double step) const {
    Vec plus(a.size()), minus(a.size());
    for (std::size_t w = 0; w < a.size(); ++w) {
      plus[w] = step * a[w];
      minus[w] = -step * a[w];
    }
    const Vec tp = at(plus), tm = at(minus);
    Vec d(theta.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = (tp[k] - tm[k]) / (2.0 * step);
    return d;
  }

  Vec mixed_at(const Vec& a, const Vec& c, double step) const {
    const std::size_t W = a.size();
    Vec pp(W), pm(W), mp(W), mm(W);
    for (std::size_t w = 0; w < W; ++w) {
      pp[w] = step * (a[w] + c[w]);
      pm[w] = step * (a[w] - c[w]);
      mp[w] = -pm[w];
      mm[w] = -pp[w];
    }
    const Vec tpp = at(pp), tpm = at(pm), tmp = at(mp), tmm = at(mm);
    Vec d(theta.size());
    for (std::size_t k = 0; k < d.size(); ++k)
      d[k] = (tpp[k] - tpm[k] - tmp[k] + tmm[k]) / (4.0 * step * step);
    return d;
  }

  static Vec richardson(const Vec& coarse, const Vec& fine) {
    Vec d(coarse.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = (4.0 * fine[k] - coarse[k]) / 3.0;
    return d;
  }
};

Bench make_bench(std::span<const double> p0, const TopicMatrix& beta,
                 std::span<const double> theta0, double h) {
  beta.validate();
  if (static_cast<int>(p0.size()) != beta.vocab_size ||
      static_cast<int>(theta0.size()) != beta.num_topics)
    throw InputError("bench: dimension mismatch");
  if (!(h > 0.0)) throw InputError("bench: step must be positive");
  Bench b{p0, beta, solve_precise(p0, beta, theta0), 0, h};
  for (double t : b.theta)
    if (!(t > 0.0)) throw InputError("bench: fixed point is not interior");
  b.ref = static_cast<int>(std::max_element(p0.begin(), p0.end()) - p0.begin());
  return b;
}

// Largest L1 response of theta(P) per unit step along e_v - e_ref.
double max_sensitivity(const FixedPointInstance& inst) {
  const double step = 1e-6;
  const auto ref = static_cast<std::size_t>(
      std::max_element(inst.p0.begin(), inst.p0.end()) - inst.p0.begin());
  double worst = 0.0;
  for (std::size_t v = 0; v < inst.p0.size(); ++v) {
    if (v == ref) continue;
    Vec p = inst.p0;
    p[v] += step;
    p[ref] -= step;
    worst = std::max(worst, l1(solve_precise(p, inst.beta, inst.theta_true), inst.theta_true) / step);
  }
  return worst;
}

}  // namespace

double skl_dirichlet(std::span<const double> eta, std::span<const double> eta_prime) {
  if (eta.size() != eta_prime.size()) throw InputError("skl: dimension mismatch");
  double s = 0.0;
  for (std::size_t w = 0; w < eta.size(); ++w) {
    if (!(eta[w] > 0.0) || !(eta_prime[w] > 0.0))
      throw InputError("skl: parameters must be positive");
    if (eta[w] == eta_prime[w]) continue;
    s += (eta[w] - eta_prime[w]) *
         (boost::math::digamma(eta[w]) - boost::math::digamma(eta_prime[w]));
  }
  return s;
}

BoundCheckReport check_mode_bound(int num_samples, int vocab_size,
                                  std::span<const double> concentrations, double ratio,
                                  std::uint64_t seed, double pair_concentration) {
  if (num_samples < 1 || vocab_size < 2) throw InputError("bound: need samples and W >= 2");
  if (!(ratio > 0.0)) throw InputError("bound: ratio must be positive");
  BoundCheckReport rep;
  rep.samples = num_samples;
  rep.vocab_size = vocab_size;
  rep.ratio = ratio;
  rep.pair_concentration = pair_concentration;
  rep.concentrations.assign(concentrations.begin(), concentrations.end());

  Rng rng(derive_seed(seed, "mode-bound"));
  const Vec flat(vocab_size, 1.0);
  std::vector<Vec> us, vs;
  for (int s = 0; s < num_samples; ++s) {
    us.push_back(sample_dirichlet(flat, rng));
    if (pair_concentration > 0.0) {
      Vec conc(vocab_size);
      for (int w = 0; w < vocab_size; ++w) conc[w] = pair_concentration * us.back()[w];
      vs.push_back(sample_dirichlet(conc, rng));
    } else {
      vs.push_back(sample_dirichlet(flat, rng));
    }
  }
  constexpr int kGroup = 5;
  for (double c : concentrations) {
    if (!(c > 0.0)) throw InputError("bound: concentrations must be positive");
    const double cmin = std::min(c, ratio * c);
    double worst = 0.0, worst_group = 0.0, group = 0.0;
    for (int s = 0; s < num_samples; ++s) {
      Vec eta(vocab_size), etap(vocab_size);
      for (int w = 0; w < vocab_size; ++w) {
        eta[w] = 1.0 + c * us[s][w];
        etap[w] = 1.0 + ratio * c * vs[s][w];
      }
      const double m = js_divergence(dirichlet_mode(eta), dirichlet_mode(etap)) -
                       skl_dirichlet(eta, etap) / (4.0 * cmin);
      worst = std::max(worst, m);
      group += m;
      if ((s + 1) % kGroup == 0) {
        worst_group = std::max(worst_group, group);
        group = 0.0;
      }
    }
    rep.max_margin.push_back(worst);
    rep.scaled_margin.push_back(worst * c);
    rep.corollary_scaled_margin.push_back(worst_group * c);
  }
  rep.pass = true;
  for (std::size_t i = 1; i < rep.scaled_margin.size(); ++i)
    if (rep.scaled_margin[i] > rep.scaled_margin[i - 1] + 1e-12) rep.pass = false;
  return rep;
}

void TopicMatrix::validate() const {
  if (num_topics < 1 || vocab_size < 1 ||
      values.size() != static_cast<std::size_t>(num_topics) * vocab_size)
    throw InputError("topic matrix: shape mismatch");
  for (int k = 0; k < num_topics; ++k) {
    double s = 0.0;
    for (int w = 0; w < vocab_size; ++w) {
      if (!(at(k, w) >= 0.0)) throw InputError("topic matrix: entries must be non-negative");
      s += at(k, w);
    }
    if (std::abs(s - 1.0) > 1e-9) throw InputError("topic matrix: rows must sum to 1");
  }
}

FixedPointResult simplified_fixed_point(std::span<const double> p, const TopicMatrix& beta,
                                        std::span<const double> theta0, int max_iter,
                                        double tol) {
  const int K = beta.num_topics, W = beta.vocab_size;
  if (static_cast<int>(p.size()) != W || static_cast<int>(theta0.size()) != K)
    throw InputError("fixed point: dimension mismatch");
  FixedPointResult r;
  r.theta.assign(theta0.begin(), theta0.end());
  Vec next(K);
  while (r.iterations < max_iter) {
    const Vec mix = mixture(r.theta, beta);
    std::fill(next.begin(), next.end(), 0.0);
    for (int w = 0; w < W; ++w) {
      if (p[w] == 0.0) continue;
      if (mix[w] <= 0.0) continue;
      for (int k = 0; k < K; ++k) next[k] += p[w] * r.theta[k] * beta.at(k, w) / mix[w];
    }
    ++r.iterations;
    const double change = l1(next, r.theta);
    r.theta.swap(next);
    if (change < tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

double residual_fixed_point(std::span<const double> theta, std::span<const double> p,
                            const TopicMatrix& beta) {
  const Terms t = terms(theta, p, beta);
  double worst = 0.0;
  for (int k = 0; k < beta.num_topics; ++k) worst = std::max(worst, std::abs(theta[k] * t.g[k]));
  return worst;
}

ResidualReport check_first_order(std::span<const double> p0, const TopicMatrix& beta,
                                 std::span<const double> theta0, double h, double tolerance) {
  const Bench b = make_bench(p0, beta, theta0, h);
  const Terms t = terms(b.theta, p0, beta);
  const int K = beta.num_topics, W = beta.vocab_size;
  ResidualReport rep{0.0, tolerance, h, b.ref, false};
  for (int v = 0; v < W; ++v) {
    if (v == b.ref) continue;
    const Vec a = b.direction(v);
    const Vec d = b.derivative(a);
    for (int k = 0; k < K; ++k) {
      double inner = -dot_eta(t.eta[k], a);
      for (int l = 0; l < K; ++l) inner += d[l] * t.s[k][l];
      rep.residual = std::max(rep.residual, std::abs(d[k] * t.g[k] + b.theta[k] * inner));
    }
  }
  rep.pass = rep.residual <= tolerance;
  return rep;
}

ResidualReport check_second_order(std::span<const double> p0, const TopicMatrix& beta,
                                  std::span<const double> theta0, double h, double tolerance) {
  const Bench b = make_bench(p0, beta, theta0, h);
  const Terms t = terms(b.theta, p0, beta);
  const int K = beta.num_topics, W = beta.vocab_size;
  ResidualReport rep{0.0, tolerance, h, b.ref, false};

  std::vector<int> coords;
  std::vector<Vec> dirs, firsts;
  for (int v = 0; v < W; ++v) {
    if (v == b.ref) continue;
    coords.push_back(v);
    dirs.push_back(b.direction(v));
    firsts.push_back(b.derivative(dirs.back()));
  }
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    for (std::size_t j = i; j < dirs.size(); ++j) {
      const Vec& a = dirs[i];
      const Vec& c = dirs[j];
      const Vec& da = firsts[i];
      const Vec& db = firsts[j];
      const Vec dab = b.mixed(a, c);

      // sum_m D_b theta_m eta_mw, per word.
      Vec db_eta(W, 0.0);
      for (int w = 0; w < W; ++w)
        for (int m = 0; m < K; ++m) db_eta[w] += db[m] * t.eta[m][w];

      for (int k = 0; k < K; ++k) {
        const double ak = dot_eta(t.eta[k], a);
        const double bk = dot_eta(t.eta[k], c);
        double sa = 0.0, sb = 0.0, sab = 0.0;
        for (int l = 0; l < K; ++l) {
          sa += da[l] * t.s[k][l];
          sb += db[l] * t.s[k][l];
          sab += dab[l] * t.s[k][l];
        }
        double cross = 0.0;
        for (int w = 0; w < W; ++w) cross += a[w] * t.eta[k][w] * db_eta[w];
        double ds = 0.0;
        for (int l = 0; l < K; ++l) {
          double bl = 0.0, pl = 0.0;
          for (int w = 0; w < W; ++w) {
            bl += c[w] * t.eta[k][w] * t.eta[l][w];
            pl += p0[w] * t.eta[k][w] * t.eta[l][w] * db_eta[w];
          }
          ds += da[l] * (bl - 2.0 * pl);
        }
        const double lhs = dab[k] * t.g[k] + da[k] * (-bk + sb) + db[k] * (-ak + sa) +
                           b.theta[k] * (cross + sab + ds);
        rep.residual = std::max(rep.residual, std::abs(lhs));
      }
    }
  }
  rep.pass = rep.residual <= tolerance;
  return rep;
}

FixedPointInstance random_fixed_point_instance(int num_topics, int vocab_size,
                                               std::uint64_t seed) {
  if (num_topics < 1 || vocab_size < num_topics)
    throw InputError("instance: need 1 <= K <= W");
  Rng rng(derive_seed(seed, "fixed-point-instance"));
  FixedPointInstance inst;
  inst.beta.num_topics = num_topics;
  inst.beta.vocab_size = vocab_size;
  const Vec flat(vocab_size, 1.0);
  // Redraw until theta and P0 sit well inside their simplices, so that steps
  // of 1e-3 do not reach a boundary.
  for (;;) {
    inst.beta.values.clear();
    for (int k = 0; k < num_topics; ++k) {
      const Vec row = sample_dirichlet(flat, rng);
      inst.beta.values.insert(inst.beta.values.end(), row.begin(), row.end());
    }
    inst.theta_true = sample_dirichlet(Vec(num_topics, 2.0), rng);
    inst.p0 = mixture(inst.theta_true, inst.beta);
    if (*std::min_element(inst.theta_true.begin(), inst.theta_true.end()) < 0.05 ||
        *std::min_element(inst.p0.begin(), inst.p0.end()) < 0.02)
      continue;
    if (max_sensitivity(inst) <= 20.0) return inst;
  }
}

std::vector<ConcentrationPoint> js_concentration_mc(std::span<const double> q,
                                                    std::span<const int> ns, double lambda,
                                                    int trials, std::uint64_t seed,
                                                    ConcentrationSampler sampler) {
  const std::size_t S = q.size();
  if (S < 2 || trials < 1) throw InputError("concentration: need 2+ symbols and trials");
  for (double v : q)
    if (!(v > 0.0)) throw InputError("concentration: q must be strictly positive");

  // Proposal pairs; the direct sampler is the single pair (q, q).
  std::vector<std::pair<Vec, Vec>> props;
  if (sampler == ConcentrationSampler::kDirect) {
    props.emplace_back(Vec(q.begin(), q.end()), Vec(q.begin(), q.end()));
  } else {
    if (S > 16) throw InputError("concentration: tilted sampler supports at most 16 symbols");
    for (unsigned mask = 1; mask + 1 < (1u << S); ++mask) {
      const int in = std::popcount(mask);
      Vec d(S);
      for (std::size_t i = 0; i < S; ++i)
        d[i] = (mask >> i & 1u) ? 1.0 / in : -1.0 / (static_cast<int>(S) - in);
      double t_max = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < S; ++i) t_max = std::min(t_max, q[i] / std::abs(d[i]));
      t_max *= 0.999;
      auto pair_at = [&](double t) {
        Vec a(S), b(S);
        for (std::size_t i = 0; i < S; ++i) {
          a[i] = q[i] + t * d[i];
          b[i] = q[i] - t * d[i];
        }
        return std::make_pair(a, b);
      };
      double lo = 0.0, hi = t_max;
      {
        const auto [a, b] = pair_at(hi);
        if (js_divergence(a, b) < lambda) lo = hi;
      }
      for (int it = 0; it < 100 && lo < hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto [a, b] = pair_at(mid);
        (js_divergence(a, b) < lambda ? lo : hi) = mid;
      }
      props.push_back(pair_at(hi));
    }
  }
  std::vector<std::pair<Vec, Vec>> logs, cums;
  for (const auto& [a, b] : props) {
    Vec la(S), lb(S), ca(S), cb(S);
    for (std::size_t i = 0; i < S; ++i) {
      la[i] = std::log(a[i]);
      lb[i] = std::log(b[i]);
    }
    std::partial_sum(a.begin(), a.end(), ca.begin());
    std::partial_sum(b.begin(), b.end(), cb.begin());
    logs.emplace_back(la, lb);
    cums.emplace_back(ca, cb);
  }
  Vec log_q(S);
  for (std::size_t i = 0; i < S; ++i) log_q[i] = std::log(q[i]);
  const double log_m = std::log(static_cast<double>(props.size()));

  std::vector<ConcentrationPoint> out;
  for (int n : ns) {
    if (n < 1) throw InputError("concentration: n must be >= 1");
    Rng rng(derive_seed(seed, "js-concentration", static_cast<std::uint64_t>(n)));
    auto draw = [&](const Vec& cum) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * cum.back();
      const auto it = std::upper_bound(cum.begin(), cum.end(), u);
      return std::min<std::size_t>(it - cum.begin(), S - 1);
    };
    ConcentrationPoint pt;
    pt.n = n;
    pt.trials = trials;
    Vec ca(S), cb(S), fa(S), fb(S), mix(props.size());
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < trials; ++t) {
      const std::size_t m = props.size() == 1 ? 0 : rng() % props.size();
      std::fill(ca.begin(), ca.end(), 0.0);
      std::fill(cb.begin(), cb.end(), 0.0);
      for (int i = 0; i < n; ++i) ca[draw(cums[m].first)] += 1.0;
      for (int i = 0; i < n; ++i) cb[draw(cums[m].second)] += 1.0;
      for (std::size_t i = 0; i < S; ++i) {
        fa[i] = ca[i] / n;
        fb[i] = cb[i] / n;
      }
      if (js_divergence(fa, fb) < lambda) continue;
      ++pt.hits;
      double weight = 1.0;
      if (sampler == ConcentrationSampler::kTilted) {
        double target = 0.0;
        for (std::size_t i = 0; i < S; ++i) target += (ca[i] + cb[i]) * log_q[i];
        for (std::size_t j = 0; j < props.size(); ++j) {
          mix[j] = 0.0;
          for (std::size_t i = 0; i < S; ++i)
            mix[j] += ca[i] * logs[j].first[i] + cb[i] * logs[j].second[i];
        }
        const double mx = *std::max_element(mix.begin(), mix.end());
        double acc = 0.0;
        for (double v : mix) acc += std::exp(v - mx);
        weight = std::exp(target - (mx + std::log(acc) - log_m));
      }
      sum += weight;
      sum_sq += weight * weight;
    }
    pt.probability = sum / trials;
    const double var = std::max(0.0, sum_sq / trials - pt.probability * pt.probability);
    pt.std_error = std::sqrt(var / trials);
    if (pt.probability > 0.0) pt.exponent = -std::log(pt.probability) / n;
    out.push_back(pt);
  }
  return out;
}

std::vector<ErrorRatePoint> error_exponent_mc(const ErrorExponentConfig& config,
                                              std::span<const int> ns) {
  if (config.num_entities < 2) throw InputError("error exponent: need at least 2 entities");
  if (config.trials < 1) throw InputError("error exponent: need trials");
  LdaConfig lda;
  lda.num_topics = config.num_topics;
  lda.alpha = config.alpha;
  lda.eta = config.eta;
  lda.e_step_max_iter = 1000;
  lda.e_step_tol = 1e-8;
  std::vector<ErrorRatePoint> out;
  for (int n : ns) {
    if (n < 1) throw InputError("error exponent: n must be >= 1");
    ErrorRatePoint pt;
    pt.n = n;
    for (int trial = 0; trial < config.trials; ++trial) {
      SynthConfig sc;
      sc.num_entities = config.num_entities;
      sc.num_topics = config.num_topics;
      sc.vocab_size = config.vocab_size;
      sc.alpha = config.alpha;
      sc.eta = config.eta;
      sc.events_per_entity = 2 * n;
      sc.split_prob = 0.5;
      sc.seed = derive_seed(config.seed, "error-exponent",
                            static_cast<std::uint64_t>(n) * 1000003u + trial);
      const SyntheticWorld world = generate_world(sc);

      // Topics pinned at the truth: lambda = 1e12 beta, floored at 1.
      TopicModel model;
      model.num_topics = config.num_topics;
      model.vocab_size = config.vocab_size;
      model.alpha = config.alpha;
      model.eta = config.eta;
      model.lambda.resize(world.truth.true_beta.size());
      for (std::size_t i = 0; i < model.lambda.size(); ++i)
        model.lambda[i] = std::max(1.0, 1e12 * world.truth.true_beta[i]);
      const auto px = infer_all(world.x_views, model, lda, ThetaEstimator::kPosteriorMean, 1);
      const auto py = infer_all(world.y_views, model, lda, ThetaEstimator::kPosteriorMean, 1);
      for (std::size_t i = 0; i < px.size(); ++i) {
        std::size_t best = 0;
        double best_js = std::numeric_limits<double>::infinity();
        double second_js = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < py.size(); ++j) {
          const double js = js_divergence(px[i].theta, py[j].theta);
          if (js < best_js) {
            second_js = best_js;
            best_js = js;
            best = j;
          } else if (js < second_js) {
            second_js = js;
          }
        }
        ++pt.decisions;
        // Accept the argmin only when the runner-up is at least lambda away.
        if (second_js < config.lambda) {
          ++pt.rejections;
          continue;
        }
        if (world.truth.pi.at(world.x_views[i].id).front() != world.y_views[best].id)
          ++pt.errors;
      }
    }
    pt.error_rate = static_cast<double>(pt.errors) / pt.decisions;
    pt.stderr_rate = std::sqrt(pt.error_rate * (1.0 - pt.error_rate) / pt.decisions);
    out.push_back(pt);
  }
  return out;
}

std::vector<int> align_topics(const TopicModel& a, const TopicModel& b) {
  if (a.num_topics != b.num_topics || a.vocab_size != b.vocab_size)
    throw InputError("align: models differ in shape");
  const auto ma = a.topic_means();
  const auto mb = b.topic_means();
  const int K = a.num_topics;
  std::vector<std::tuple<double, int, int>> pairs;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) pairs.emplace_back(js_divergence(ma[i], mb[j]), i, j);
  std::sort(pairs.begin(), pairs.end());
  std::vector<int> match(K, -1);
  std::vector<bool> used(K, false);
  for (const auto& [d, i, j] : pairs) {
    if (match[i] >= 0 || used[j]) continue;
    match[i] = j;
    used[j] = true;
  }
  return match;
}

std::vector<TrackingPoint> surrogate_tracking_probe(const SyntheticWorld& world,
                                                    const LdaConfig& cfg) {
  cfg.validate();
  const int W = world.config.vocab_size;
  std::vector<View> all = world.x_views;
  all.insert(all.end(), world.y_views.begin(), world.y_views.end());
  std::int64_t total = 0;
  for (const auto& v : all) total += v.total;

  std::vector<TopicModel> independent, omniscient;
  FitOptions opt;
  opt.initial_lambda = initial_lambda(cfg.num_topics, W, cfg.eta, total,
                                      derive_seed(cfg.seed, "probe-init"));
  opt.on_epoch = [&](int, const TopicModel& m) { independent.push_back(m); };
  fit_online(all, W, cfg, opt);
  opt.on_epoch = [&](int, const TopicModel& m) { omniscient.push_back(m); };
  fit_omniscient(world.x_views, world.y_views, world.truth.pi, W, cfg, opt);

  std::vector<TrackingPoint> series;
  for (std::size_t e = 0; e < independent.size() && e < omniscient.size(); ++e) {
    const auto match = align_topics(independent[e], omniscient[e]);
    double skl = 0.0;
    for (int k = 0; k < cfg.num_topics; ++k)
      skl += skl_dirichlet(independent[e].row(k), omniscient[e].row(match[k]));
    series.push_back({static_cast<int>(e) + 1, skl});
  }
  return series;
}

}  // namespace ldalink
