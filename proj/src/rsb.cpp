#include "ksat/rsb.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace ksat {

namespace {

inline double log1p_exp(double x) {  // log(1+e^x)
  if (x > 36.0) return x;
  if (x < -36.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

// Doubling the sample array realises the Rademacher reflection exactly: a
// uniform index into {rho_i} u {1-rho_i} is a draw from the symmetrised law.
std::vector<double> reflected_copy(const Population& pop) {
  std::vector<double> v;
  v.reserve(2 * pop.samples.size());
  v.insert(v.end(), pop.samples.begin(), pop.samples.end());
  for (double x : pop.samples) v.push_back(1.0 - x);
  return v;
}

// log prod_{i<count} (1 - deficit * prod_{j<width} src[idx]), as in the
// density kernel
double log_factor_product(RngStream& rs, const double* src, uint32_t n, uint64_t count,
                          int width, double deficit) {
  double acc = 1.0;
  int64_t bits = 0;
  for (uint64_t i = 0; i < count; ++i) {
    double m = src[rs.index(n)];
    for (int j = 1; j < width; ++j) m *= src[rs.index(n)];
    acc *= std::max(1.0 - deficit * m, 1e-300);
    if (acc < 0x1p-500) {
      acc *= 0x1p+500;
      bits -= 500;
    }
  }
  return std::log(acc) + static_cast<double>(bits) * M_LN2;
}

struct MeanVar {
  long double sum = 0.0L;
  long double sum2 = 0.0L;
  int64_t n = 0;
  void add(double x) {
    sum += x;
    sum2 += static_cast<long double>(x) * x;
    ++n;
  }
  void merge(const MeanVar& o) {
    sum += o.sum;
    sum2 += o.sum2;
    n += o.n;
  }
  McEstimate estimate() const {
    McEstimate e;
    e.samples = n;
    if (n == 0) return e;
    const long double m = sum / n;
    e.value = static_cast<double>(m);
    if (n > 1) {
      const long double var = std::max(0.0L, (sum2 - n * m * m) / (n - 1));
      e.stderr_ = static_cast<double>(std::sqrt(var / n));
    }
    return e;
  }
};

constexpr int kMeanVarBlocks = 64;

}  // namespace

McEstimate bethe_functional(const Population& pop, const ModelParams& p, int64_t samples,
                            RngStream rng) {
  p.validate();
  if (!p.beta_finite()) throw invalid_input("bethe_functional needs finite beta");
  if (samples < 1) throw invalid_input("need at least one sample");
  const std::vector<double> sym = reflected_copy(pop);
  const double* src = sym.data();
  const uint32_t n = static_cast<uint32_t>(sym.size());
  const double deficit = p.violation_deficit();
  const double half_d = 0.5 * p.d;
  const double clause_weight = p.d * (p.k - 1) / static_cast<double>(p.k);

  std::vector<MeanVar> blocks(kMeanVarBlocks);
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < kMeanVarBlocks; ++b) {
    MeanVar mv;
    for (int64_t s = b; s < samples; s += kMeanVarBlocks) {
      RngStream g = rng.child(static_cast<uint64_t>(s));
      const uint64_t gp = g.poisson(half_d);
      const uint64_t gm = g.poisson(half_d);
      const double lp = log_factor_product(g, src, n, gp, p.k - 1, deficit);
      const double lm = log_factor_product(g, src, n, gm, p.k - 1, deficit);
      const double term1 = std::max(lp, lm) + log1p_exp(std::min(lp, lm) - std::max(lp, lm));
      const double lc = log_factor_product(g, src, n, 1, p.k, deficit);
      mv.add(term1 - clause_weight * lc);
    }
    blocks[b] = mv;
  }
  MeanVar total;
  for (const auto& mv : blocks) total.merge(mv);
  return total.estimate();
}

double bethe_functional_delta_half(const ModelParams& p) {
  p.validate();
  if (!p.beta_finite()) throw invalid_input("needs finite beta");
  const double deficit = p.violation_deficit();
  const double logq = std::log1p(-deficit * std::exp2(1 - p.k));
  const double half_d = 0.5 * p.d;
  const int hi = static_cast<int>(std::ceil(half_d + 12.0 * std::sqrt(half_d) + 30.0));

  std::vector<double> pmf(hi + 1);
  const double loghd = std::log(half_d);
  for (int g = 0; g <= hi; ++g) pmf[g] = std::exp(g * loghd - half_d - std::lgamma(g + 1.0));

  long double first = 0.0L;
  for (int a = 0; a <= hi; ++a)
    for (int b = 0; b <= hi; ++b) {
      const int lo = std::min(a, b), span = std::abs(a - b);
      first += static_cast<long double>(pmf[a]) * pmf[b] * (lo * logq + log1p_exp(span * logq));
    }
  const double clause = std::log1p(-deficit / std::exp2(p.k));
  return static_cast<double>(first) - p.d * (p.k - 1) / static_cast<double>(p.k) * clause;
}

McEstimate interpolation_bound_atomic(const ModelParams& p, double y, int64_t samples,
                                      RngStream rng) {
  p.validate();
  if (!p.beta_finite()) throw invalid_input("needs finite beta");
  if (!(y > 0.0 && y <= 1.0)) throw invalid_input("y must lie in (0,1]");
  const double q1 = std::exp2(1 - p.k);  // P(all k-1 atomic messages equal 1)
  const double half_d = 0.5 * p.d;
  const double log_q1 = std::log(q1), log_1mq1 = std::log1p(-q1);

  // (e^{-beta b+} + e^{-beta b-})^y table over plausible Binomial values
  const double bin_mean = half_d * q1;
  const int bmax = static_cast<int>(std::ceil(bin_mean + 12.0 * std::sqrt(bin_mean) + 25.0));
  std::vector<double> vtab((bmax + 1) * (bmax + 1));
  for (int a = 0; a <= bmax; ++a)
    for (int b = 0; b <= bmax; ++b) {
      const double lse = -p.beta * std::min(a, b) + log1p_exp(-p.beta * std::abs(a - b));
      vtab[a * (bmax + 1) + b] = std::exp(y * lse);
    }

  auto bin_pmf = [&](uint64_t g, std::vector<double>& w) {
    const int top = static_cast<int>(std::min<uint64_t>(g, bmax));
    w.assign(bmax + 1, 0.0);
    for (int b = 0; b <= top; ++b)
      w[b] = std::exp(std::lgamma(static_cast<double>(g) + 1.0) - std::lgamma(b + 1.0) -
                      std::lgamma(static_cast<double>(g) - b + 1.0) + b * log_q1 +
                      (static_cast<double>(g) - b) * log_1mq1);
  };

  std::vector<MeanVar> blocks(kMeanVarBlocks);
#pragma omp parallel for schedule(dynamic)
  for (int blk = 0; blk < kMeanVarBlocks; ++blk) {
    MeanVar mv;
    std::vector<double> wp, wm;
    for (int64_t s = blk; s < samples; s += kMeanVarBlocks) {
      RngStream g = rng.child(static_cast<uint64_t>(s));
      const uint64_t gp = g.poisson(half_d);
      const uint64_t gm = g.poisson(half_d);
      bin_pmf(gp, wp);
      bin_pmf(gm, wm);
      long double inner = 0.0L;
      for (int a = 0; a <= bmax; ++a) {
        if (wp[a] == 0.0) continue;
        long double row = 0.0L;
        for (int b = 0; b <= bmax; ++b) row += static_cast<long double>(wm[b]) * vtab[a * (bmax + 1) + b];
        inner += wp[a] * row;
      }
      mv.add(std::log(static_cast<double>(inner)));
    }
    blocks[blk] = mv;
  }
  MeanVar total;
  for (const auto& mv : blocks) total.merge(mv);
  McEstimate first = total.estimate();

  // exact clause term: E[(1 - (1-e^{-beta}) prod_k mu)^y] = 1 - 2^-k + 2^-k e^{-beta y}
  const double clause = std::log(1.0 - std::exp2(-p.k) + std::exp2(-p.k) * std::exp(-p.beta * y));
  McEstimate out;
  out.samples = first.samples;
  out.value = first.value / y - p.d * (p.k - 1) / (static_cast<double>(p.k) * y) * clause;
  out.stderr_ = first.stderr_ / y;
  return out;
}

NestedBound interpolation_bound_population(const Population& pop, const ModelParams& p, double y,
                                           int64_t samples, int inner_replicas, RngStream rng) {
  p.validate();
  if (!p.beta_finite()) throw invalid_input("needs finite beta");
  if (!(y > 0.0 && y <= 1.0)) throw invalid_input("y must lie in (0,1]");
  if (inner_replicas < 2) throw invalid_input("need at least two inner replicas");
  const std::vector<double> sym = reflected_copy(pop);
  const double* src = sym.data();
  const uint32_t n = static_cast<uint32_t>(sym.size());
  const double deficit = p.violation_deficit();
  const double half_d = 0.5 * p.d;

  std::vector<MeanVar> blocks(kMeanVarBlocks);
  std::vector<long double> jack_blocks(kMeanVarBlocks, 0.0L);
#pragma omp parallel for schedule(dynamic)
  for (int blk = 0; blk < kMeanVarBlocks; ++blk) {
    MeanVar mv;
    long double jack = 0.0L;
    std::vector<double> vals(inner_replicas);
    for (int64_t s = blk; s < samples; s += kMeanVarBlocks) {
      RngStream g = rng.child(static_cast<uint64_t>(s));
      const uint64_t gp = g.poisson(half_d);
      const uint64_t gm = g.poisson(half_d);
      long double sum = 0.0L;
      for (int r = 0; r < inner_replicas; ++r) {
        const double lp = log_factor_product(g, src, n, gp, p.k - 1, deficit);
        const double lm = log_factor_product(g, src, n, gm, p.k - 1, deficit);
        const double lse = std::max(lp, lm) + log1p_exp(std::min(lp, lm) - std::max(lp, lm));
        vals[r] = std::exp(y * lse);
        sum += vals[r];
      }
      const double plain = std::log(static_cast<double>(sum / inner_replicas));
      mv.add(plain);
      long double loo = 0.0L;  // leave-one-out mean of the log
      for (int r = 0; r < inner_replicas; ++r)
        loo += std::log(static_cast<double>((sum - vals[r]) / (inner_replicas - 1)));
      jack += inner_replicas * static_cast<long double>(plain) -
              (inner_replicas - 1.0L) * loo / inner_replicas;
    }
    blocks[blk] = mv;
    jack_blocks[blk] = jack;
  }
  MeanVar total;
  long double jack_total = 0.0L;
  for (int b = 0; b < kMeanVarBlocks; ++b) {
    total.merge(blocks[b]);
    jack_total += jack_blocks[b];
  }
  McEstimate first = total.estimate();

  // clause term by nested MC through the same population
  MeanVar clause_mv;
  RngStream cg = rng.child(0xC1A05Eull);
  const int64_t clause_samples = samples;
  for (int64_t s = 0; s < clause_samples; ++s) {
    RngStream g = cg.child(static_cast<uint64_t>(s));
    double m = src[g.index(n)];
    for (int j = 1; j < p.k; ++j) m *= src[g.index(n)];
    clause_mv.add(std::pow(1.0 - deficit * m, y));
  }
  const McEstimate clause_mean = clause_mv.estimate();
  const double clause = std::log(clause_mean.value);
  const double w = p.d * (p.k - 1) / (static_cast<double>(p.k) * y);

  NestedBound out;
  out.plain.samples = first.samples;
  out.plain.value = first.value / y - w * clause;
  out.plain.stderr_ =
      first.stderr_ / y + w * clause_mean.stderr_ / clause_mean.value;  // conservative
  out.jackknife = static_cast<double>(jack_total) / samples / y - w * clause;
  return out;
}

InterpolationScan interpolation_scan_atomic(const ModelParams& p, const std::vector<double>& ys,
                                            int64_t samples, RngStream rng) {
  p.validate();
  if (!p.beta_finite()) throw invalid_input("needs finite beta");
  const double q1 = std::exp2(1 - p.k);
  const double half_d = 0.5 * p.d;
  const double log_q1 = std::log(q1), log_1mq1 = std::log1p(-q1);
  const double bin_mean = half_d * q1;
  const int bmax = static_cast<int>(std::ceil(bin_mean + 12.0 * std::sqrt(bin_mean) + 25.0));

  const size_t ny = ys.size();
  std::vector<std::vector<double>> vtab(ny, std::vector<double>((bmax + 1) * (bmax + 1)));
  std::vector<double> vtab1((bmax + 1) * (bmax + 1));
  for (int a = 0; a <= bmax; ++a)
    for (int b = 0; b <= bmax; ++b) {
      const double lse = -p.beta * std::min(a, b) + log1p_exp(-p.beta * std::abs(a - b));
      for (size_t i = 0; i < ny; ++i) vtab[i][a * (bmax + 1) + b] = std::exp(ys[i] * lse);
      vtab1[a * (bmax + 1) + b] = std::exp(lse);
    }

  auto bin_pmf = [&](uint64_t g, std::vector<double>& w) {
    const int top = static_cast<int>(std::min<uint64_t>(g, bmax));
    w.assign(bmax + 1, 0.0);
    for (int b = 0; b <= top; ++b)
      w[b] = std::exp(std::lgamma(static_cast<double>(g) + 1.0) - std::lgamma(b + 1.0) -
                      std::lgamma(static_cast<double>(g) - b + 1.0) + b * log_q1 +
                      (static_cast<double>(g) - b) * log_1mq1);
  };
  auto inner_sum = [&](const std::vector<double>& wp, const std::vector<double>& wm,
                       const std::vector<double>& tab) {
    long double inner = 0.0L;
    for (int a = 0; a <= bmax; ++a) {
      if (wp[a] == 0.0) continue;
      long double row = 0.0L;
      for (int b = 0; b <= bmax; ++b)
        row += static_cast<long double>(wm[b]) * tab[a * (bmax + 1) + b];
      inner += wp[a] * row;
    }
    return std::log(static_cast<double>(inner));
  };

  // per-sample log-inner values for every y and for y=1, sharing the Poisson
  // draws so the y-comparison is paired
  std::vector<std::vector<MeanVar>> val_blocks(kMeanVarBlocks,
                                               std::vector<MeanVar>(ny));
  std::vector<std::vector<MeanVar>> diff_blocks(kMeanVarBlocks,
                                                std::vector<MeanVar>(ny));
#pragma omp parallel for schedule(dynamic)
  for (int blk = 0; blk < kMeanVarBlocks; ++blk) {
    std::vector<double> wp, wm;
    for (int64_t s = blk; s < samples; s += kMeanVarBlocks) {
      RngStream g = rng.child(static_cast<uint64_t>(s));
      bin_pmf(g.poisson(half_d), wp);
      bin_pmf(g.poisson(half_d), wm);
      const double at1 = inner_sum(wp, wm, vtab1);
      for (size_t i = 0; i < ny; ++i) {
        const double at_y = inner_sum(wp, wm, vtab[i]);
        val_blocks[blk][i].add(at_y / ys[i]);
        diff_blocks[blk][i].add(at_y / ys[i] - at1);
      }
    }
  }

  const double clause_weight = p.d * (p.k - 1) / static_cast<double>(p.k);
  auto clause_term = [&](double y) {
    return std::log(1.0 - std::exp2(-p.k) + std::exp2(-p.k) * std::exp(-p.beta * y)) / y;
  };

  InterpolationScan scan;
  scan.y = ys;
  for (size_t i = 0; i < ny; ++i) {
    MeanVar val, diff;
    for (int blk = 0; blk < kMeanVarBlocks; ++blk) {
      val.merge(val_blocks[blk][i]);
      diff.merge(diff_blocks[blk][i]);
    }
    const McEstimate ve = val.estimate();
    const McEstimate de = diff.estimate();
    scan.value.push_back(ve.value - clause_weight * clause_term(ys[i]));
    scan.stderr_.push_back(ve.stderr_);
    scan.diff_vs_y1.push_back(de.value - clause_weight * (clause_term(ys[i]) - clause_term(1.0)));
    scan.diff_stderr.push_back(de.stderr_);
  }
  return scan;
}

ScalarGap rsb_scalar_gap(double c, const std::vector<double>& y_grid) {
  if (!(c > 0.0)) throw invalid_input("c must be positive");
  ScalarGap gap;
  gap.phi_at_1 = c - 0.5 * M_LN2;

  auto phi = [&](double y) { return (c - 1.0 + std::exp2(y - 1.0) - 0.5 * M_LN2) / y; };

  // phi'(1) = (3/2) ln2 - c: minimum sits at the boundary when negative
  if (1.5 * M_LN2 - c <= 0.0) {
    gap.argmin_y = 1.0;
    gap.phi_min = gap.phi_at_1;
    return gap;
  }

  double lo = 1e-6, hi = 1.0;
  if (!y_grid.empty()) {
    double best = y_grid.front();
    for (double y : y_grid)
      if (y > 0.0 && y <= 1.0 && phi(y) < phi(best)) best = y;
    lo = std::max(1e-9, best * 0.5);
    hi = std::min(1.0, best * 2.0);
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = phi(x1), f2 = phi(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
    if (f1 > f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = phi(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = phi(x1);
    }
  }
  gap.argmin_y = 0.5 * (a + b);
  gap.phi_min = phi(gap.argmin_y);
  if (gap.phi_at_1 < gap.phi_min) {
    gap.argmin_y = 1.0;
    gap.phi_min = gap.phi_at_1;
  }
  return gap;
}

int64_t support_count(const Formula& f, const Assignment& a, int32_t x) {
  int64_t count = 0;
  for (int32_t e : f.occurrences(x)) {
    const int64_t c = e / f.k();
    if (a[x] != f.sign(c, e % f.k())) continue;
    int sat = 0;
    for (int j = 0; j < f.k(); ++j)
      if (a[f.var(c, j)] == f.sign(c, j)) ++sat;
    if (sat == 1) ++count;
  }
  return count;
}

namespace {

struct PeelState {
  std::vector<char> in_set;
  std::vector<int32_t> internal_support;  // supported clauses with all vars in S
  std::vector<int32_t> bad;               // incident clauses with no S-satisfier
  std::vector<int32_t> clause_sat_S;      // satisfied literals from S per clause
  std::vector<int32_t> clause_out;        // variables outside S per clause
  std::vector<int32_t> supporter;         // unique satisfying var, or -1
};

}  // namespace

StableSet stable_set(const Formula& f, const Assignment& a) {
  const int n = f.n();
  const int64_t m = f.m();
  const int k = f.k();
  const double st1 = 1e-5 * k;
  const double st2 = 1e-6 * k;

  PeelState st;
  st.in_set.assign(n, 1);
  st.internal_support.assign(n, 0);
  st.bad.assign(n, 0);
  st.clause_sat_S.assign(m, 0);
  st.clause_out.assign(m, 0);
  st.supporter.assign(m, -1);

  for (int64_t c = 0; c < m; ++c) {
    int sat = 0;
    int32_t last = -1;
    for (int j = 0; j < k; ++j) {
      const int32_t x = f.var(c, j);
      if (a[x] == f.sign(c, j)) {
        ++sat;
        last = x;
      }
    }
    st.clause_sat_S[c] = sat;  // everyone starts inside S
    if (sat == 1) {
      st.supporter[c] = last;
      ++st.internal_support[last];  // all variables are inside S initially
    }
    if (sat == 0)
      for (int j = 0; j < k; ++j) ++st.bad[f.var(c, j)];
  }

  auto violates = [&](int32_t x) {
    return st.internal_support[x] < st1 || st.bad[x] > st2;
  };

  std::deque<int32_t> queue;
  std::vector<char> queued(n, 0);
  for (int32_t x = 0; x < n; ++x)
    if (violates(x)) {
      queue.push_back(x);
      queued[x] = 1;
    }

  auto enqueue = [&](int32_t x) {
    if (st.in_set[x] && !queued[x] && violates(x)) {
      queue.push_back(x);
      queued[x] = 1;
    }
  };

  while (!queue.empty()) {
    const int32_t x = queue.front();
    queue.pop_front();
    queued[x] = 0;
    if (!st.in_set[x] || !violates(x)) continue;
    st.in_set[x] = 0;
    for (int32_t e : f.occurrences(x)) {
      const int64_t c = e / k;
      // the clause now has one more variable outside S
      if (st.clause_out[c]++ == 0 && st.supporter[c] >= 0 && st.in_set[st.supporter[c]]) {
        --st.internal_support[st.supporter[c]];
        enqueue(st.supporter[c]);
      }
      if (a[x] == f.sign(c, e % k)) {
        // the clause lost an S-satisfier
        if (--st.clause_sat_S[c] == 0) {
          for (int j = 0; j < k; ++j) {
            const int32_t y = f.var(c, j);
            if (st.in_set[y]) {
              ++st.bad[y];
              enqueue(y);
            }
          }
        }
      }
    }
  }

  StableSet out;
  for (int32_t x = 0; x < n; ++x)
    if (st.in_set[x]) out.members.push_back(x);
  return out;
}

bool stable_set_verify(const Formula& f, const Assignment& a, const StableSet& s) {
  const int k = f.k();
  std::vector<char> in(f.n(), 0);
  for (int32_t x : s.members) in[x] = 1;
  for (int32_t x : s.members) {
    int64_t internal = 0, bad = 0;
    for (int32_t e : f.occurrences(x)) {
      const int64_t c = e / k;
      int sat = 0, sat_from_S = 0;
      bool all_in = true;
      int32_t the_sat = -1;
      for (int j = 0; j < k; ++j) {
        const int32_t y = f.var(c, j);
        all_in &= static_cast<bool>(in[y]);
        if (a[y] == f.sign(c, j)) {
          ++sat;
          the_sat = y;
          if (in[y]) ++sat_from_S;
        }
      }
      if (sat == 1 && the_sat == x && all_in) ++internal;
      if (sat_from_S == 0) ++bad;
    }
    if (internal < 1e-5 * k || bad > 1e-6 * k) return false;
  }
  return true;
}

PolarizationReport polarization_check(const std::vector<double>& marginals, int k, double beta) {
  if (!std::isfinite(beta)) throw invalid_input("needs finite beta");
  const double eb = std::exp(-beta);
  int64_t polarized = 0;
  for (double q : marginals)
    if ((q > 0.0 && q < eb) || (q > 1.0 - eb && q < 1.0)) ++polarized;
  PolarizationReport rep;
  rep.fraction_polarized =
      marginals.empty() ? 0.0 : static_cast<double>(polarized) / marginals.size();
  rep.passes_A = rep.fraction_polarized >= 1.0 - std::exp2(-0.98 * k);
  return rep;
}

}  // namespace ksat
