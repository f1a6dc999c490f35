#include "ksat/bp.hpp"

#include <algorithm>
#include <cmath>

namespace ksat {

namespace {

constexpr double kFactorFloor = 1e-300;  // clause factor floor at beta = inf

// log(1 + e^x), stable for any x
inline double softplus(double x) {
  if (x > 36.0) return x + std::exp(-x);
  if (x < -36.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

// log mu(-J) for a message with log-odds lambda = log mu(+1)/mu(-1)
inline double log_mu_disagree(double lambda, int8_t J) { return -softplus(J > 0 ? lambda : -lambda); }

inline double sigmoid(double x) {
  if (x >= 0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 - deficit * e^{s}) with the documented floor for hard constraints
inline double log_clause_factor(double log_prod, double deficit) {
  double v = -deficit * std::exp(log_prod);
  if (v <= -1.0) return std::log(kFactorFloor);
  return std::log1p(v);
}

void update_c2v(const Formula& f, const ModelParams& p, const std::vector<double>& v2c,
                std::vector<double>& c2v_out) {
  const int k = f.k();
  const double deficit = p.violation_deficit();
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < f.m(); ++c) {
    double logw[kMaxClauseLength];
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
      logw[j] = log_mu_disagree(v2c[c * k + j], f.sign(c, j));
      total += logw[j];
    }
    for (int j = 0; j < k; ++j) {
      const double log_factor = log_clause_factor(total - logw[j], deficit);
      c2v_out[c * k + j] = f.sign(c, j) > 0 ? -log_factor : log_factor;
    }
  }
}

void update_v2c(const Formula& f, const std::vector<double>& c2v, std::vector<double>& v2c_out) {
#pragma omp parallel for schedule(static)
  for (int32_t x = 0; x < f.n(); ++x) {
    const auto& occ = f.occurrences(x);
    double total = 0.0;
    for (int32_t e : occ) total += c2v[e];
    for (int32_t e : occ) v2c_out[e] = total - c2v[e];
  }
}

}  // namespace

MessageSet init_messages(const Formula& f) {
  MessageSet m;
  m.c2v.assign(f.edges(), 0.0);
  m.v2c.assign(f.edges(), 0.0);
  m.t = 0;
  return m;
}

MessageSet bp_step(const Formula& f, const ModelParams& p, const MessageSet& msgs,
                   double damping) {
  MessageSet next;
  next.c2v.resize(f.edges());
  next.v2c.resize(f.edges());
  next.t = msgs.t + 1;
  update_c2v(f, p, msgs.v2c, next.c2v);
  update_v2c(f, next.c2v, next.v2c);
  if (damping > 0.0) {
    for (int64_t e = 0; e < f.edges(); ++e) {
      next.c2v[e] = (1.0 - damping) * next.c2v[e] + damping * msgs.c2v[e];
      next.v2c[e] = (1.0 - damping) * next.v2c[e] + damping * msgs.v2c[e];
    }
  }
  return next;
}

BpResult run_bp(const Formula& f, const ModelParams& p, int64_t t_max, double tol,
                double damping, const BpTraceFn& trace) {
  if (t_max < 1) throw invalid_input("t_max must be at least 1");
  if (!(tol > 0.0)) throw invalid_input("tol must be positive");
  BpResult r;
  r.msgs = init_messages(f);
  for (int64_t it = 1; it <= t_max; ++it) {
    MessageSet next = bp_step(f, p, r.msgs, damping);
    double delta = 0.0;
    for (int64_t e = 0; e < f.edges(); ++e) {
      delta = std::max(delta, std::fabs(next.c2v[e] - r.msgs.c2v[e]));
      delta = std::max(delta, std::fabs(next.v2c[e] - r.msgs.v2c[e]));
    }
    r.msgs = std::move(next);
    r.iterations = it;
    r.last_delta = delta;
    if (trace) trace(it, delta, bethe_free_energy(f, p, r.msgs));
    if (delta < tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

double bp_marginal(const Formula& f, const ModelParams& p, const MessageSet& msgs, int32_t x) {
  (void)p;
  double total = 0.0;
  for (int32_t e : f.occurrences(x)) total += msgs.c2v[e];
  return sigmoid(total);
}

std::vector<double> bp_marginals(const Formula& f, const ModelParams& p, const MessageSet& msgs) {
  std::vector<double> q(f.n());
#pragma omp parallel for schedule(static)
  for (int32_t x = 0; x < f.n(); ++x) q[x] = bp_marginal(f, p, msgs, x);
  return q;
}

double bethe_free_energy(const Formula& f, const ModelParams& p, const MessageSet& msgs) {
  const int k = f.k();
  const double deficit = p.violation_deficit();

  const int64_t nblk = std::max<int64_t>(1, std::min<int64_t>(64, f.n()));
  std::vector<double> var_part(nblk, 0.0);
#pragma omp parallel for schedule(static)
  for (int64_t b = 0; b < nblk; ++b) {
    double acc = 0.0;
    for (int32_t x = static_cast<int32_t>(b); x < f.n(); x += static_cast<int32_t>(nblk)) {
      double ap = 0.0, am = 0.0;  // log prod mu_{a->x}(+1), (-1)
      for (int32_t e : f.occurrences(x)) {
        ap += -softplus(-msgs.c2v[e]);
        am += -softplus(msgs.c2v[e]);
      }
      double hi = std::max(ap, am);
      acc += hi + std::log1p(std::exp(std::min(ap, am) - hi));
    }
    var_part[b] = acc;
  }

  const int64_t mblk = std::max<int64_t>(1, std::min<int64_t>(64, f.m()));
  std::vector<double> clause_part(mblk, 0.0), edge_part(mblk, 0.0);
#pragma omp parallel for schedule(static)
  for (int64_t b = 0; b < mblk; ++b) {
    double cacc = 0.0, eacc = 0.0;
    for (int64_t c = b; c < f.m(); c += mblk) {
      double total = 0.0;
      for (int j = 0; j < k; ++j) total += log_mu_disagree(msgs.v2c[c * k + j], f.sign(c, j));
      cacc += log_clause_factor(total, deficit);
      for (int j = 0; j < k; ++j) {
        const double la = msgs.c2v[c * k + j], lv = msgs.v2c[c * k + j];
        const double lp = -softplus(-la) - softplus(-lv);  // log mu_a(1) mu_v(1)
        const double lm = -softplus(la) - softplus(lv);
        const double hi = std::max(lp, lm);
        eacc += hi + std::log1p(std::exp(std::min(lp, lm) - hi));
      }
    }
    clause_part[b] = cacc;
    edge_part[b] = eacc;
  }

  double bethe = 0.0;
  for (double v : var_part) bethe += v;
  for (double v : clause_part) bethe += v;
  for (double v : edge_part) bethe -= v;
  return bethe;
}

double pseudo_message_gap(const Formula& f, const ModelParams& p, int64_t t, int cap_n,
                          const ExactConfig& cfg) {
  if (f.n() > cap_n) throw resource_limit("pseudo_message_gap: n exceeds cap");
  if (f.edges() == 0) return 0.0;

  MessageSet msgs = init_messages(f);
  for (int64_t it = 0; it < t; ++it) msgs = bp_step(f, p, msgs);

  ExactConfig ecfg = cfg;
  ecfg.cap_n = std::max(ecfg.cap_n, cap_n);

  double gap = 0.0;
  const int k = f.k();
  for (int64_t c = 0; c < f.m(); ++c) {
    const Formula without = f.without_clause(c);
    const std::vector<double> q_v2c = exact_marginals(without, p, ecfg);
    for (int j = 0; j < k; ++j) {
      const int32_t x = f.var(c, j);
      const int64_t e = c * k + j;
      gap += std::fabs(q_v2c[x] - sigmoid(msgs.v2c[e]));

      // keep only clause c among the clauses incident to x
      std::vector<int64_t> keep;
      for (int64_t cc = 0; cc < f.m(); ++cc) {
        bool contains_x = false;
        for (int jj = 0; jj < k; ++jj) contains_x |= (f.var(cc, jj) == x);
        if (cc == c || !contains_x) keep.push_back(cc);
      }
      const Formula star = f.with_clauses(keep);
      const std::vector<double> q_c2v = exact_marginals(star, p, ecfg);
      gap += std::fabs(q_c2v[x] - sigmoid(msgs.c2v[e]));
    }
  }
  return gap / static_cast<double>(f.edges());
}

}  // namespace ksat
