#include "ksat/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace ksat {

namespace {

struct Tallies {
  int64_t m = 0;
  std::vector<uint64_t> by_h;                 // states per energy
  std::vector<std::vector<uint64_t>> var_h;   // [x][h]: states with sigma_x=+1
  std::vector<std::vector<uint64_t>> pair_h;  // [pair][h], pairs i<j flattened
};

inline size_t pair_index(int i, int j, int n) {  // i < j
  return static_cast<size_t>(i) * n - static_cast<size_t>(i) * (i + 1) / 2 + (j - i - 1);
}

// Satisfied-literal counts for the assignment encoded by bitmask (bit=+1).
void init_satcounts(const Formula& f, uint64_t mask, std::vector<int32_t>& sat, int64_t& h) {
  const int64_t m = f.m();
  sat.assign(m, 0);
  for (int64_t c = 0; c < m; ++c)
    for (int j = 0; j < f.k(); ++j) {
      int32_t x = f.var(c, j);
      int8_t v = (mask >> x) & 1 ? 1 : -1;
      if (v == f.sign(c, j)) ++sat[c];
    }
  h = 0;
  for (int64_t c = 0; c < m; ++c)
    if (sat[c] == 0) ++h;
}

// Flip variable x in (mask, sat, h).
inline void flip_var(const Formula& f, int32_t x, uint64_t& mask, std::vector<int32_t>& sat,
                     int64_t& h) {
  const int8_t newv = (mask >> x) & 1 ? -1 : 1;
  mask ^= (1ull << x);
  for (int32_t e : f.occurrences(x)) {
    const int8_t s = f.sign(e / f.k(), e % f.k());
    auto& cnt = sat[e / f.k()];
    if (s == newv) {
      if (cnt++ == 0) --h;
    } else {
      if (--cnt == 0) ++h;
    }
  }
}

// Gray-code walk over all 2^n assignments, split into fixed-size blocks over
// the high bits of the walk counter so the tallies parallelize; integer
// tallies merge exactly regardless of thread count.
Tallies enumerate(const Formula& f, bool want_marginals, bool want_pairs) {
  const int n = f.n();
  const int64_t m = f.m();
  const int block_bits = std::min(std::max(n - 14, 0), 6);
  const int low_bits = n - block_bits;
  const uint64_t blocks = 1ull << block_bits;
  const uint64_t per_block = 1ull << low_bits;

  std::vector<Tallies> parts(blocks);
#pragma omp parallel for schedule(dynamic)
  for (int64_t b = 0; b < static_cast<int64_t>(blocks); ++b) {
    Tallies& t = parts[b];
    t.m = m;
    t.by_h.assign(m + 1, 0);
    if (want_marginals) t.var_h.assign(n, std::vector<uint64_t>(m + 1, 0));
    if (want_pairs)
      t.pair_h.assign(static_cast<size_t>(n) * (n - 1) / 2, std::vector<uint64_t>(m + 1, 0));

    const uint64_t start = static_cast<uint64_t>(b) * per_block;
    uint64_t mask = start ^ (start >> 1);
    std::vector<int32_t> sat;
    int64_t h = 0;
    init_satcounts(f, mask, sat, h);

    auto tally = [&](uint64_t mk, int64_t hh) {
      ++t.by_h[hh];
      if (want_marginals || want_pairs) {
        uint64_t w = mk;
        while (w) {
          int i = std::countr_zero(w);
          w &= w - 1;
          if (want_marginals) ++t.var_h[i][hh];
          if (want_pairs) {
            uint64_t w2 = w;
            while (w2) {
              int j = std::countr_zero(w2);
              w2 &= w2 - 1;
              ++t.pair_h[pair_index(i, j, n)][hh];
            }
          }
        }
      }
    };

    tally(mask, h);
    for (uint64_t step = 1; step < per_block; ++step) {
      flip_var(f, std::countr_zero(step), mask, sat, h);
      tally(mask, h);
    }
  }

  Tallies total = std::move(parts[0]);
  for (uint64_t b = 1; b < blocks; ++b) {
    for (int64_t h = 0; h <= m; ++h) total.by_h[h] += parts[b].by_h[h];
    if (want_marginals)
      for (int x = 0; x < n; ++x)
        for (int64_t h = 0; h <= m; ++h) total.var_h[x][h] += parts[b].var_h[x][h];
    if (want_pairs)
      for (size_t q = 0; q < total.pair_h.size(); ++q)
        for (int64_t h = 0; h <= m; ++h) total.pair_h[q][h] += parts[b].pair_h[q][h];
  }
  return total;
}

void check_cap(const Formula& f, int cap, const char* what) {
  if (f.n() > cap) throw resource_limit(std::string(what) + ": n exceeds configured cap");
  if (f.n() > 62) throw resource_limit("enumeration mask limited to 62 variables");
}

int64_t min_energy(const std::vector<uint64_t>& by_h) {
  for (size_t h = 0; h < by_h.size(); ++h)
    if (by_h[h]) return static_cast<int64_t>(h);
  return 0;
}

// weights e^{-beta (h - h0)}, exact at beta = inf
std::vector<double> energy_weights(const std::vector<uint64_t>& by_h, double beta, int64_t h0) {
  std::vector<double> w(by_h.size(), 0.0);
  for (size_t h = 0; h < by_h.size(); ++h) {
    double e = static_cast<double>(static_cast<int64_t>(h) - h0);
    w[h] = (e == 0.0) ? 1.0 : std::exp(-beta * e);
  }
  return w;
}

}  // namespace

double exact_logZ(const Formula& f, const ModelParams& p, const ExactConfig& cfg) {
  check_cap(f, cfg.cap_n, "exact_logZ");
  Tallies t = enumerate(f, false, false);
  const int64_t h0 = min_energy(t.by_h);
  if (!p.beta_finite())
    return h0 == 0 ? std::log(static_cast<double>(t.by_h[0]))
                   : -std::numeric_limits<double>::infinity();
  const auto w = energy_weights(t.by_h, p.beta, h0);
  long double s = 0.0L;
  for (size_t h = 0; h < t.by_h.size(); ++h) s += static_cast<long double>(t.by_h[h]) * w[h];
  return std::log(static_cast<double>(s)) - p.beta * static_cast<double>(h0);
}

std::vector<double> exact_marginals(const Formula& f, const ModelParams& p,
                                    const ExactConfig& cfg) {
  check_cap(f, cfg.cap_n, "exact_marginals");
  Tallies t = enumerate(f, true, false);
  const int64_t h0 = min_energy(t.by_h);
  const auto w = energy_weights(t.by_h, p.beta, h0);
  long double z = 0.0L;
  for (size_t h = 0; h < t.by_h.size(); ++h) z += static_cast<long double>(t.by_h[h]) * w[h];
  std::vector<double> q(f.n());
  for (int x = 0; x < f.n(); ++x) {
    long double s = 0.0L;
    for (size_t h = 0; h < t.by_h.size(); ++h) s += static_cast<long double>(t.var_h[x][h]) * w[h];
    q[x] = static_cast<double>(s / z);
  }
  return q;
}

double rs_defect(const Formula& f, const ModelParams& p, const ExactConfig& cfg) {
  check_cap(f, cfg.cap_n, "rs_defect");
  Tallies t = enumerate(f, true, true);
  const int64_t h0 = min_energy(t.by_h);
  const auto w = energy_weights(t.by_h, p.beta, h0);
  long double z = 0.0L;
  for (size_t h = 0; h < t.by_h.size(); ++h) z += static_cast<long double>(t.by_h[h]) * w[h];

  const int n = f.n();
  std::vector<double> q(n);
  for (int x = 0; x < n; ++x) {
    long double s = 0.0L;
    for (size_t h = 0; h < t.by_h.size(); ++h) s += static_cast<long double>(t.var_h[x][h]) * w[h];
    q[x] = static_cast<double>(s / z);
  }
  long double defect = 0.0L;
  for (int i = 0; i < n; ++i) {
    defect += std::fabs(q[i] - q[i] * q[i]);  // diagonal, as written
    for (int j = i + 1; j < n; ++j) {
      long double s = 0.0L;
      const auto& ph = t.pair_h[pair_index(i, j, n)];
      for (size_t h = 0; h < ph.size(); ++h) s += static_cast<long double>(ph[h]) * w[h];
      defect += 2.0L * std::fabs(static_cast<double>(s / z) - q[i] * q[j]);
    }
  }
  return static_cast<double>(defect / (static_cast<long double>(n) * n));
}

OverlapStatistics overlap_statistics(const Formula& f, const ModelParams& p,
                                     const ExactConfig& cfg) {
  check_cap(f, cfg.cap_n_overlap, "overlap_statistics");
  const int n = f.n();
  const int64_t m = f.m();

  Tallies zt = enumerate(f, false, false);
  const int64_t h0 = min_energy(zt.by_h);
  const auto wh = energy_weights(zt.by_h, p.beta, h0);
  long double z = 0.0L;
  for (size_t h = 0; h < zt.by_h.size(); ++h) z += static_cast<long double>(zt.by_h[h]) * wh[h];

  const int block_bits = std::min(std::max(n - 10, 0), 6);
  const int low_bits = n - block_bits;
  const uint64_t blocks = 1ull << block_bits;
  const uint64_t per_block = 1ull << low_bits;

  std::vector<std::vector<long double>> parts(blocks);
#pragma omp parallel for schedule(dynamic)
  for (int64_t b = 0; b < static_cast<int64_t>(blocks); ++b) {
    std::vector<long double> hist(n + 1, 0.0L);

    const uint64_t start = static_cast<uint64_t>(b) * per_block;
    uint64_t sm = start ^ (start >> 1);
    std::vector<int32_t> ssat;
    int64_t sh = 0;
    init_satcounts(f, sm, ssat, sh);

    uint64_t tm = 0;
    std::vector<int32_t> tsat;
    int64_t th = 0;
    init_satcounts(f, tm, tsat, th);

    auto inner = [&](uint64_t smask, int64_t shh) {
      const double ws = wh[shh];
      int agree = n - std::popcount(smask ^ tm);
      hist[agree] += static_cast<long double>(ws) * wh[th];
      for (uint64_t step = 1; step < (1ull << n); ++step) {
        const int x = std::countr_zero(step);
        flip_var(f, x, tm, tsat, th);
        agree += ((tm >> x) & 1) == ((smask >> x) & 1) ? 1 : -1;
        hist[agree] += static_cast<long double>(ws) * wh[th];
      }
      flip_var(f, n - 1, tm, tsat, th);  // Gray walk ends at the top-bit state; rewind
    };

    inner(sm, sh);
    for (uint64_t step = 1; step < per_block; ++step) {
      flip_var(f, std::countr_zero(step), sm, ssat, sh);
      inner(sm, sh);
    }
    parts[b] = std::move(hist);
  }

  std::vector<long double> hist(n + 1, 0.0L);
  for (uint64_t b = 0; b < blocks; ++b)
    for (int a = 0; a <= n; ++a) hist[a] += parts[b][a];

  OverlapStatistics st;
  st.histogram.resize(n + 1);
  const long double z2 = z * z;
  long double mean = 0.0L;
  for (int a = 0; a <= n; ++a) {
    st.histogram[a] = static_cast<double>(hist[a] / z2);
    mean += (static_cast<long double>(a) / n) * (hist[a] / z2);
  }
  st.mean = static_cast<double>(mean);
  (void)m;
  return st;
}

GlauberChain::GlauberChain(const Formula& f, const ModelParams& p, RngStream rng)
    : f_(f), p_(p), rng_(rng) {
  if (!p_.beta_finite()) throw invalid_input("Glauber dynamics needs finite beta");
  state_ = random_assignment(f.n(), rng_);
  order_.resize(f.n());
  for (int i = 0; i < f.n(); ++i) order_[i] = i;
  rebuild_satcounts();
}

void GlauberChain::rebuild_satcounts() {
  satcount_.assign(f_.m(), 0);
  for (int64_t c = 0; c < f_.m(); ++c)
    for (int j = 0; j < f_.k(); ++j)
      if (state_[f_.var(c, j)] == f_.sign(c, j)) ++satcount_[c];
}

double GlauberChain::site_prob_plus(int32_t x) const {
  // H(x=+1) - H(x=-1) from the clauses where x is pivotal
  int delta = 0;
  for (int32_t e : f_.occurrences(x)) {
    const int64_t c = e / f_.k();
    const int8_t s = f_.sign(c, e % f_.k());
    const int sat_other = satcount_[c] - (state_[x] == s ? 1 : 0);
    if (sat_other == 0) delta += (s == -1) ? 1 : -1;
  }
  // P(+1) = 1 / (1 + e^{beta (H(+1)-H(-1))})
  return 1.0 / (1.0 + std::exp(p_.beta * delta));
}

void GlauberChain::update_site(int32_t x) {
  const double p_plus = site_prob_plus(x);
  const int8_t newv = rng_.u01() < p_plus ? 1 : -1;
  if (newv == state_[x]) return;
  state_[x] = newv;
  for (int32_t e : f_.occurrences(x)) {
    const int64_t c = e / f_.k();
    const int8_t s = f_.sign(c, e % f_.k());
    satcount_[c] += (s == newv) ? 1 : -1;
  }
}

void GlauberChain::sweep() { steps(f_.n()); }

void GlauberChain::steps(int64_t count) {
  const int n = f_.n();
  for (int64_t t = 0; t < count; ++t) {
    if (pos_in_sweep_ == 0) {
      for (int i = n - 1; i > 0; --i)
        std::swap(order_[i], order_[rng_.index(static_cast<uint32_t>(i + 1))]);
    }
    update_site(order_[pos_in_sweep_]);
    pos_in_sweep_ = (pos_in_sweep_ + 1) % n;
  }
}

}  // namespace ksat
