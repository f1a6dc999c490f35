#include "ksat/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#if defined(_OPENMP) && defined(__GLIBCXX__)
#include <parallel/algorithm>
#define KSAT_SORT __gnu_parallel::sort
#else
#define KSAT_SORT std::sort
#endif

namespace ksat {

double Population::mean() const {
  long double s = 0.0L;
  for (double x : samples) s += x;
  return samples.empty() ? 0.0 : static_cast<double>(s / samples.size());
}

double Population::stddev() const {
  if (samples.size() < 2) return 0.0;
  const long double mu = mean();
  long double s = 0.0L;
  for (double x : samples) s += (x - mu) * (x - mu);
  return static_cast<double>(std::sqrt(s / (samples.size() - 1)));
}

namespace {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double clamp_open01(double x) {
  if (!(x > 0.0)) return std::numeric_limits<double>::min();
  if (!(x < 1.0)) return 1.0 - 0x1p-53;
  return x;
}

// log of prod_{i<count} (1 - deficit * prod_{j<km1} pop[idx_ij]) with the
// population indices drawn from rs.  Two factor chains run interleaved to
// hide multiply latency; the running product is rescaled by powers of two
// well before it can underflow.
double log_factor_product(RngStream& rs, const double* pop, uint32_t n, uint64_t count, int km1,
                          double deficit) {
  double acc = 1.0;
  int64_t scale_bits = 0;
  uint64_t i = 0;
  for (; i + 2 <= count; i += 2) {
    double m0 = pop[rs.index(n)];
    double m1 = pop[rs.index(n)];
    for (int j = 1; j < km1; ++j) {
      m0 *= pop[rs.index(n)];
      m1 *= pop[rs.index(n)];
    }
    acc *= std::max(1.0 - deficit * m0, 1e-300) * std::max(1.0 - deficit * m1, 1e-300);
    if (acc < 0x1p-500) {
      acc *= 0x1p+500;
      scale_bits -= 500;
    }
  }
  if (i < count) {
    double m0 = pop[rs.index(n)];
    for (int j = 1; j < km1; ++j) m0 *= pop[rs.index(n)];
    acc *= std::max(1.0 - deficit * m0, 1e-300);
    if (acc < 0x1p-500) {
      acc *= 0x1p+500;
      scale_bits -= 500;
    }
  }
  return std::log(acc) + static_cast<double>(scale_bits) * M_LN2;
}

// Same walk evaluated on two populations with shared indices (the rank
// coupling used by the contraction probe).
void log_factor_product_pair(RngStream& rs, const double* pa, const double* pb, uint32_t n,
                             uint64_t count, int km1, double deficit, double& out_a,
                             double& out_b) {
  double acc_a = 1.0, acc_b = 1.0;
  int64_t bits_a = 0, bits_b = 0;
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t idx = rs.index(n);
    double ma = pa[idx], mb = pb[idx];
    for (int j = 1; j < km1; ++j) {
      idx = rs.index(n);
      ma *= pa[idx];
      mb *= pb[idx];
    }
    acc_a *= std::max(1.0 - deficit * ma, 1e-300);
    acc_b *= std::max(1.0 - deficit * mb, 1e-300);
    if (acc_a < 0x1p-500) {
      acc_a *= 0x1p+500;
      bits_a -= 500;
    }
    if (acc_b < 0x1p-500) {
      acc_b *= 0x1p+500;
      bits_b -= 500;
    }
  }
  out_a = std::log(acc_a) + static_cast<double>(bits_a) * M_LN2;
  out_b = std::log(acc_b) + static_cast<double>(bits_b) * M_LN2;
}

Population apply_R_impl(const Population& pop, const ModelParams& p, RngStream rng,
                        int64_t n_out, bool parallel) {
  p.validate();
  if (!p.beta_finite()) throw invalid_input("apply_R needs finite beta");
  if (n_out < 1) throw invalid_input("n_out must be positive");
  if (pop.size() < 1) throw invalid_input("empty population");
  const double deficit = p.violation_deficit();
  const double half_d = 0.5 * p.d;
  const int km1 = p.k - 1;
  const double* src = pop.samples.data();
  const uint32_t n = static_cast<uint32_t>(pop.size());

  Population out;
  out.samples.resize(n_out);
#pragma omp parallel for schedule(dynamic, 64) if (parallel)
  for (int64_t s = 0; s < n_out; ++s) {
    RngStream g = rng.child(static_cast<uint64_t>(s));
    const uint64_t gp = g.poisson(half_d);
    const uint64_t gm = g.poisson(half_d);
    const double lp = log_factor_product(g, src, n, gp, km1, deficit);
    const double lm = log_factor_product(g, src, n, gm, km1, deficit);
    out.samples[s] = clamp_open01(sigmoid(lp - lm));
  }
  return out;
}

}  // namespace

Population apply_R(const Population& pop, const ModelParams& p, RngStream rng, int64_t n_out) {
  return apply_R_impl(pop, p, rng, n_out, true);
}

Population apply_R_serial(const Population& pop, const ModelParams& p, RngStream rng,
                          int64_t n_out) {
  return apply_R_impl(pop, p, rng, n_out, false);
}

Population symmetrize(const Population& pop, RngStream rng) {
  Population out;
  out.samples.resize(pop.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < pop.size(); ++i) {
    RngStream g = rng.child(static_cast<uint64_t>(i));
    out.samples[i] = g.sign() > 0 ? pop.samples[i] : 1.0 - pop.samples[i];
  }
  return out;
}

Population truncate(const Population& pop, double eps) {
  if (!(eps >= 0.0) || !(eps < 0.5)) throw invalid_input("eps must lie in [0, 1/2)");
  Population out;
  out.samples.resize(pop.size());
  for (int64_t i = 0; i < pop.size(); ++i) {
    const double x = pop.samples[i];
    out.samples[i] = (x < eps || x > 1.0 - eps) ? 0.5 : x;
  }
  return out;
}

double wasserstein(const Population& a, const Population& b, double r) {
  if (!(r >= 1.0)) throw invalid_input("Wasserstein order must be >= 1");
  if (a.size() < 1 || b.size() < 1) throw invalid_input("empty population");
  std::vector<double> qa = a.samples, qb = b.samples;
  KSAT_SORT(qa.begin(), qa.end());
  KSAT_SORT(qb.begin(), qb.end());

  const int64_t na = a.size(), nb = b.size();
  // quantile functions are step functions; walk the merged grid in exact
  // units of 1/(na*nb)
  const int64_t total = na * nb;
  auto walk = [&](auto&& segment) {
    int64_t i = 0, j = 0, pos = 0;
    while (pos < total) {
      const int64_t end_a = (i + 1) * nb;
      const int64_t end_b = (j + 1) * na;
      const int64_t end = std::min(end_a, end_b);
      segment(end - pos, std::fabs(qa[i] - qb[j]));
      pos = end;
      if (end == end_a) ++i;
      if (end == end_b) ++j;
    }
  };

  double max_gap = 0.0;
  walk([&](int64_t, double gap) { max_gap = std::max(max_gap, gap); });
  if (max_gap == 0.0) return 0.0;

  long double acc = 0.0L;
  walk([&](int64_t len, double gap) {
    acc += static_cast<long double>(len) * std::pow(gap / max_gap, r);
  });
  return max_gap * static_cast<double>(std::pow(static_cast<double>(acc / total), 1.0 / r));
}

TailReport tail_report(const Population& pop, int k, double beta_max) {
  TailReport rep;
  const int64_t n = pop.size();
  const double scale = std::exp2(static_cast<double>(k) / 4.0);

  std::vector<double> sorted = pop.samples;
  KSAT_SORT(sorted.begin(), sorted.end());
  auto mass_at_least = [&](double x) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(sorted.end() - it) / static_cast<double>(n);
  };
  auto mass_at_most = [&](double x) {
    auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(n);
  };

  rep.p_dagger_pass = true;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const int grid = static_cast<int>(std::ceil(k / 4.0 + std::log2(beta_max)));
  for (int j = 0; j <= grid; ++j) {
    const double s = std::exp2(-static_cast<double>(k) / 4.0 + j);
    const double bound = std::exp(-s * scale);
    const double threshold = 1.0 / (1.0 + std::exp(-s));  // e^s/(1+e^s)
    const double mass = std::max(mass_at_least(threshold), mass_at_most(1.0 - threshold));
    rep.worst_margin = std::min(rep.worst_margin, bound - mass);
    if (mass > bound) rep.p_dagger_pass = false;
  }

  const double width = std::exp2(-static_cast<double>(k) / 10.0);
  const double lo = std::max(0.0, 0.5 - width);
  const double hi = std::min(1.0, 0.5 + width);
  rep.tail_mass = mass_at_most(lo) + mass_at_least(hi);
  rep.slim = rep.tail_mass <= width;
  rep.very_slim = rep.tail_mass <= std::exp2(-static_cast<double>(k) / 9.0);
  return rep;
}

FixedPointResult fixed_point(const ModelParams& p, int64_t n, int64_t max_iters, double tol,
                             RngStream rng) {
  if (!p.beta_finite()) throw invalid_input("fixed_point needs finite beta");
  if (max_iters < 1) throw invalid_input("max_iters must be positive");
  FixedPointResult r;
  r.pop = Population::delta(0.5, n);
  for (int64_t t = 1; t <= max_iters; ++t) {
    Population next = apply_R(r.pop, p, rng.child(static_cast<uint64_t>(t)), n);
    const double w1 = wasserstein(r.pop, next, 1.0);
    r.w1_trace.push_back(w1);
    r.pop = std::move(next);
    r.iterations = t;
    if (w1 < tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

ContractionProbe contraction_probe(const ModelParams& p, int64_t n, double r, int pairs,
                                   RngStream rng) {
  if (!p.beta_finite()) throw invalid_input("contraction_probe needs finite beta");
  const double band = std::exp2(-static_cast<double>(p.k) / 10.0);
  const double deficit = p.violation_deficit();
  const double half_d = 0.5 * p.d;
  const int km1 = p.k - 1;

  ContractionProbe probe;
  for (int pair = 0; pair < pairs; ++pair) {
    RngStream pr = rng.child(static_cast<uint64_t>(pair));

    // random slim-tailed perturbations of delta_{1/2}
    auto make_pop = [&](RngStream g) {
      const double w = band * (0.05 + 0.95 * g.u01());
      const int shape = static_cast<int>(g.index(3));
      Population pop;
      pop.samples.resize(n);
      for (int64_t i = 0; i < n; ++i) {
        double x = 0.5;
        switch (shape) {
          case 0: x = 0.5 + w * (2.0 * g.u01() - 1.0); break;            // uniform band
          case 1: x = 0.5 + (g.sign() > 0 ? w : -w); break;              // symmetric atoms
          default: x = 0.5 + w * (g.u01() + g.u01() - 1.0); break;       // triangular
        }
        pop.samples[i] = x;
      }
      KSAT_SORT(pop.samples.begin(), pop.samples.end());
      return pop;
    };
    const Population pa = make_pop(pr.child(1));
    const Population pb = make_pop(pr.child(2));

    const double before = wasserstein(pa, pb, r);
    if (before == 0.0) {
      ++probe.skipped;
      continue;
    }

    Population oa, ob;
    oa.samples.resize(n);
    ob.samples.resize(n);
    RngStream base = pr.child(3);
    const double* da = pa.samples.data();
    const double* db = pb.samples.data();
#pragma omp parallel for schedule(dynamic, 64)
    for (int64_t s = 0; s < n; ++s) {
      RngStream g = base.child(static_cast<uint64_t>(s));
      const uint64_t gp = g.poisson(half_d);
      const uint64_t gm = g.poisson(half_d);
      double lpa, lpb, lma, lmb;
      log_factor_product_pair(g, da, db, static_cast<uint32_t>(n), gp, km1, deficit, lpa, lpb);
      log_factor_product_pair(g, da, db, static_cast<uint32_t>(n), gm, km1, deficit, lma, lmb);
      oa.samples[s] = clamp_open01(sigmoid(lpa - lma));
      ob.samples[s] = clamp_open01(sigmoid(lpb - lmb));
    }
    probe.ratios.push_back(wasserstein(oa, ob, r) / before);
  }

  if (!probe.ratios.empty()) {
    double sum = 0.0, sum2 = 0.0;
    for (double x : probe.ratios) {
      probe.max_ratio = std::max(probe.max_ratio, x);
      sum += x;
      sum2 += x * x;
    }
    const double m = sum / probe.ratios.size();
    probe.mean_ratio = m;
    if (probe.ratios.size() > 1)
      probe.stderr_ratio = std::sqrt(std::max(0.0, sum2 / probe.ratios.size() - m * m) /
                                     (probe.ratios.size() - 1));
  }
  return probe;
}

}  // namespace ksat
