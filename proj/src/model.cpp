#include "ksat/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace ksat {

void ModelParams::validate() const {
  if (k < 2 || k > kMaxClauseLength) throw invalid_input("k must be in [2,30]");
  if (!(d > 0.0)) throw invalid_input("d must be positive");
  if (!(beta > 0.0)) throw invalid_input("beta must be positive (or inf)");
}

Formula::Formula(int n, int k, std::vector<int32_t> vars, std::vector<int8_t> signs)
    : n_(n), k_(k), vars_(std::move(vars)), signs_(std::move(signs)) {
  if (n_ < 0) throw invalid_input("negative variable count");
  if (k_ < 2 || k_ > kMaxClauseLength) throw invalid_input("clause length out of range");
  if (vars_.size() != signs_.size() || vars_.size() % k_ != 0)
    throw invalid_input("clause storage not a multiple of k");
  const int64_t m = static_cast<int64_t>(vars_.size()) / k_;
  occ_.resize(n_);
  for (int64_t i = 0; i < m; ++i) {
    for (int a = 0; a < k_; ++a) {
      int32_t x = vars_[i * k_ + a];
      if (x < 0 || x >= n_) throw invalid_input("variable id out of range");
      if (std::abs(signs_[i * k_ + a]) != 1) throw invalid_input("sign must be +1 or -1");
      for (int b = 0; b < a; ++b)
        if (vars_[i * k_ + b] == x) throw invalid_input("repeated variable within a clause");
      occ_[x].push_back(static_cast<int32_t>(i * k_ + a));
    }
  }
}

LiteralDegrees Formula::literal_degrees() const {
  LiteralDegrees deg;
  deg.d_plus.assign(n_, 0);
  deg.d_minus.assign(n_, 0);
  const int64_t e = edges();
  for (int64_t i = 0; i < e; ++i) {
    if (signs_[i] > 0)
      ++deg.d_plus[vars_[i]];
    else
      ++deg.d_minus[vars_[i]];
  }
  return deg;
}

Formula Formula::without_clause(int64_t clause) const {
  std::vector<int64_t> keep;
  keep.reserve(m() - 1);
  for (int64_t i = 0; i < m(); ++i)
    if (i != clause) keep.push_back(i);
  return with_clauses(keep);
}

Formula Formula::with_clauses(const std::vector<int64_t>& keep) const {
  std::vector<int32_t> v;
  std::vector<int8_t> s;
  v.reserve(keep.size() * k_);
  s.reserve(keep.size() * k_);
  for (int64_t i : keep) {
    for (int a = 0; a < k_; ++a) {
      v.push_back(vars_[i * k_ + a]);
      s.push_back(signs_[i * k_ + a]);
    }
  }
  return Formula(n_, k_, std::move(v), std::move(s));
}

namespace {

// k distinct indices from [n] by partial Fisher-Yates on a sparse pool: only
// displaced entries are tracked, so the cost is O(k^2) with k <= 30.
void sample_without_replacement(RngStream& rng, int n, int k, int32_t* out) {
  int32_t displaced_idx[2 * kMaxClauseLength];
  int32_t displaced_val[2 * kMaxClauseLength];
  int nd = 0;
  auto pool_at = [&](int32_t i) -> int32_t {
    for (int t = 0; t < nd; ++t)
      if (displaced_idx[t] == i) return displaced_val[t];
    return i;
  };
  auto pool_set = [&](int32_t i, int32_t v) {
    for (int t = 0; t < nd; ++t)
      if (displaced_idx[t] == i) {
        displaced_val[t] = v;
        return;
      }
    displaced_idx[nd] = i;
    displaced_val[nd] = v;
    ++nd;
  };
  for (int j = 0; j < k; ++j) {
    int32_t r = j + static_cast<int32_t>(rng.index(static_cast<uint32_t>(n - j)));
    out[j] = pool_at(r);
    pool_set(r, pool_at(j));
  }
}

void fill_clause_vars(const ModelParams& params, int n, RngStream base, int64_t m,
                      std::vector<int32_t>& vars) {
  const int k = params.k;
  vars.resize(m * k);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    RngStream cl = base.child(static_cast<uint64_t>(i));
    sample_without_replacement(cl, n, k, &vars[i * k]);
  }
}

}  // namespace

Formula gen_random(const ModelParams& params, int n, RngStream rng) {
  params.validate();
  if (n < params.k) throw invalid_input("need n >= k");
  const int k = params.k;
  const int64_t m = static_cast<int64_t>(rng.child(0).poisson(params.d * n / k));
  std::vector<int32_t> vars;
  fill_clause_vars(params, n, rng.child(1), m, vars);
  std::vector<int8_t> signs(m * k);
  RngStream sgn_base = rng.child(2);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    RngStream cl = sgn_base.child(static_cast<uint64_t>(i));
    for (int a = 0; a < k; ++a) signs[i * k + a] = static_cast<int8_t>(cl.sign());
  }
  return Formula(n, k, std::move(vars), std::move(signs));
}

double planted_violation_probability(int k, double beta) {
  const double eb = std::exp(-beta);
  return eb / (std::exp2(k) - 1.0 + eb);
}

PlantedInstance gen_planted(const ModelParams& params, int n, RngStream rng,
                            bool allow_infinite_beta) {
  params.validate();
  if (n < params.k) throw invalid_input("need n >= k");
  if (!params.beta_finite() && !allow_infinite_beta)
    throw invalid_input("planted model needs finite beta (or the rejection fallback flag)");
  const int k = params.k;
  const double p_violate = params.beta_finite() ? planted_violation_probability(k, params.beta) : 0.0;

  Assignment planted(n);
  RngStream arng = rng.child(2);
  for (int i = 0; i < n; ++i) planted[i] = static_cast<int8_t>(arng.sign());

  const int64_t m = static_cast<int64_t>(rng.child(0).poisson(params.d * n / k));
  std::vector<int32_t> vars;
  fill_clause_vars(params, n, rng.child(1), m, vars);

  std::vector<int8_t> signs(m * k);
  RngStream sgn_base = rng.child(3);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    RngStream cl = sgn_base.child(static_cast<uint64_t>(i));
    int8_t* s = &signs[i * k];
    const int32_t* v = &vars[i * k];
    if (cl.bernoulli(p_violate)) {
      // unique all-false pattern relative to the planted assignment
      for (int a = 0; a < k; ++a) s[a] = static_cast<int8_t>(-planted[v[a]]);
    } else {
      // uniform over the 2^k-1 satisfying patterns, by rejection
      for (;;) {
        bool any_true = false;
        for (int a = 0; a < k; ++a) {
          s[a] = static_cast<int8_t>(cl.sign());
          any_true |= (s[a] == planted[v[a]]);
        }
        if (any_true) break;
      }
    }
  }
  return PlantedInstance{Formula(n, k, std::move(vars), std::move(signs)), std::move(planted)};
}

bool clause_satisfied(const Formula& f, int64_t clause, const Assignment& a) {
  for (int j = 0; j < f.k(); ++j)
    if (a[f.var(clause, j)] == f.sign(clause, j)) return true;
  return false;
}

int64_t hamiltonian(const Formula& f, const Assignment& a) {
  if (static_cast<int>(a.size()) != f.n()) throw invalid_input("assignment length mismatch");
  int64_t h = 0;
  for (int64_t i = 0; i < f.m(); ++i)
    if (!clause_satisfied(f, i, a)) ++h;
  return h;
}

double overlap(const Assignment& a, const Assignment& b) {
  if (a.size() != b.size()) throw invalid_input("assignment length mismatch");
  if (a.empty()) throw invalid_input("empty assignments");
  int64_t agree = 0;
  for (size_t i = 0; i < a.size(); ++i) agree += (a[i] == b[i]);
  return static_cast<double>(agree) / static_cast<double>(a.size());
}

double weighted_overlap(const Formula& f, const Assignment& a, const Assignment& b) {
  if (f.m() == 0) throw invalid_input("weighted overlap undefined for empty formulas");
  if (static_cast<int>(a.size()) != f.n() || static_cast<int>(b.size()) != f.n())
    throw invalid_input("assignment length mismatch");
  const LiteralDegrees deg = f.literal_degrees();
  int64_t s = 0;
  for (int x = 0; x < f.n(); ++x) {
    if (a[x] == 1 && b[x] == 1) s += deg.d_plus[x];
    if (a[x] == -1 && b[x] == -1) s += deg.d_minus[x];
  }
  return static_cast<double>(s) / static_cast<double>(f.k() * f.m());
}

BalanceReport balance_check(const Formula& f, const Assignment& a) {
  const LiteralDegrees deg = f.literal_degrees();
  int64_t s = 0;
  for (int x = 0; x < f.n(); ++x) s += static_cast<int64_t>(a[x]) * (deg.d_plus[x] - deg.d_minus[x]);
  const bool km_even = (f.k() * f.m()) % 2 == 0;
  BalanceReport rep;
  rep.balanced = km_even ? (s == 0) : (s == 1);
  if (rep.balanced) {
    // per degree-class signed counts, |sum| <= sqrt(n)
    const double root_n = std::sqrt(static_cast<double>(f.n()));
    std::vector<std::pair<int64_t, int64_t>> classes;
    std::vector<int64_t> sums;
    rep.strongly_balanced = true;
    for (int x = 0; x < f.n(); ++x) {
      std::pair<int64_t, int64_t> key{deg.d_plus[x], deg.d_minus[x]};
      size_t idx = 0;
      for (; idx < classes.size(); ++idx)
        if (classes[idx] == key) break;
      if (idx == classes.size()) {
        classes.push_back(key);
        sums.push_back(0);
      }
      sums[idx] += a[x];
    }
    for (int64_t v : sums)
      if (std::llabs(v) > root_n) rep.strongly_balanced = false;
  }
  return rep;
}

Assignment random_assignment(int n, RngStream& rng) {
  Assignment a(n);
  for (int i = 0; i < n; ++i) a[i] = static_cast<int8_t>(rng.sign());
  return a;
}

}  // namespace ksat
