#include "ksat/scalars.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ksat {

namespace {

double deficit_of(double beta) { return std::isfinite(beta) ? -std::expm1(-beta) : 1.0; }

double p_equation(double p, int k, double c) { return 1.0 - 2.0 * p - c * std::pow(1.0 - p, k); }

}  // namespace

double solve_p(int k, double beta) {
  if (k < 2) throw invalid_input("k must be at least 2");
  if (!(beta > 0.0)) throw invalid_input("beta must be positive");
  const double c = deficit_of(beta);
  // g(0+) >= 0 (equality only at beta=inf), g(1/2) < 0; g strictly crosses once
  double lo = 0.0, hi = 0.5;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (p_equation(mid, k, c) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double p = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {  // Newton polish
    const double g = p_equation(p, k, c);
    const double dg = -2.0 + c * k * std::pow(1.0 - p, k - 1);
    const double step = g / dg;
    const double next = p - step;
    if (!(next > 0.0) || !(next <= 0.5)) break;
    p = next;
    if (std::fabs(step) < 1e-17) break;
  }
  return p;
}

double compute_u(int k, double beta, bool limit_at_inf) {
  if (!std::isfinite(beta)) {
    if (limit_at_inf) return 0.0;
    throw invalid_input("u undefined at beta = inf (limit available behind the flag)");
  }
  const double p = solve_p(k, beta);
  return (1.0 - 2.0 * p) / (2.0 * p * std::expm1(beta));
}

RateParams rate_params(const ModelParams& mp) {
  RateParams r;
  r.p = solve_p(mp.k, mp.beta);
  r.u = mp.beta_finite() ? compute_u(mp.k, mp.beta) : 0.0;
  r.c = std::exp2(mp.k) * M_LN2 - mp.d / mp.k;
  return r;
}

FAlpha f_alpha(double alpha, const ModelParams& p) {
  if (!(alpha >= 0.0) || !(alpha <= 1.0)) throw invalid_input("alpha must lie in [0,1]");
  const double c = p.violation_deficit();
  const double dk = p.d / p.k;
  const double twok = std::exp2(p.k);
  FAlpha out;

  // D(alpha) - 1 assembled directly so log1p keeps full precision even when
  // d/k is exponentially large
  const double dm1 = (c / twok) * (std::pow(alpha, p.k) * c - 2.0);
  const double D = 1.0 + dm1;
  const double entropy =
      (alpha <= 0.0 || alpha >= 1.0)
          ? 0.0
          : -alpha * std::log(alpha) - (1.0 - alpha) * std::log1p(-alpha);
  out.value = M_LN2 + entropy + dk * std::log1p(dm1);

  if (alpha <= 0.0 || alpha >= 1.0) {
    const double inf = std::numeric_limits<double>::infinity();
    out.d1 = alpha <= 0.0 ? inf : -inf;
    out.d2 = -inf;
    return out;
  }
  const double powm1 = std::pow(alpha, p.k - 1);
  out.d1 = std::log((1.0 - alpha) / alpha) + p.d * powm1 * c * c / (twok * D);
  out.d2 = -1.0 / alpha - 1.0 / (1.0 - alpha) +
           (p.k - 1) * p.d * std::pow(alpha, p.k - 2) * c * c / (twok * D) -
           p.k * p.d * powm1 * powm1 * c * c * c * c / (twok * twok * D * D);
  return out;
}

namespace {

double d1_of(double alpha, const ModelParams& p) { return f_alpha(alpha, p).d1; }

// bracket a sign change of f' and bisect it down to machine resolution
double refine_root(const ModelParams& p, double lo, double hi) {
  double flo = d1_of(lo, p);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double fm = d1_of(mid, p);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// golden-section maximum of f on [lo,hi] (used to seed the d1 bracket)
double golden_max(const ModelParams& p, double lo, double hi) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f_alpha(x1, p).value, f2 = f_alpha(x2, p).value;
  for (int it = 0; it < 120 && (b - a) > 1e-15; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f_alpha(x2, p).value;
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f_alpha(x1, p).value;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

LandscapeScan scan_f(const ModelParams& p, int grid_resolution) {
  p.validate();
  LandscapeScan scan;

  // maximum near 1/2: f'(1/2) > 0 and the entropy wins shortly after
  {
    double hi = 0.5 + 1.0 / 16.0;
    while (d1_of(hi, p) > 0.0 && hi < 0.75) hi = 0.5 + 2.0 * (hi - 0.5);
    if (d1_of(hi, p) > 0.0) hi = golden_max(p, 0.5, 1.0 - 1e-9);
    scan.alpha_star = refine_root(p, 0.5, hi);
  }

  // work in eps = 1-alpha for the structure near alpha = 1
  const double eps_mid = std::pow(static_cast<double>(p.k), -1.5);
  const double eps_wide = 2.0 * std::log(static_cast<double>(p.k)) / p.k;
  auto d1_eps = [&](double le) { return d1_of(1.0 - std::exp(le), p); };

  // local maximum in [1-k^{-3/2}, 1): f' goes - -> + as eps grows
  {
    double lo = std::log(1e-14), hi = std::log(eps_mid);
    double flo = d1_eps(lo);
    double fhi = d1_eps(hi);
    if (flo < 0.0 && fhi > 0.0) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (d1_eps(mid) < 0.0)
          lo = mid;
        else
          hi = mid;
      }
      scan.alpha_low_star = 1.0 - std::exp(0.5 * (lo + hi));
    } else {
      scan.alpha_low_star = 1.0 - eps_mid;  // no interior stationary point found
    }
  }

  // local minimum in [1-2 ln(k)/k, 1-k^{-3/2}]
  {
    double lo = std::log(eps_mid), hi = std::log(eps_wide);
    double flo = d1_eps(lo);
    double fhi = d1_eps(hi);
    if (flo > 0.0 && fhi < 0.0) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (d1_eps(mid) > 0.0)
          lo = mid;
        else
          hi = mid;
      }
      scan.local_min = 1.0 - std::exp(0.5 * (lo + hi));
    } else {
      scan.local_min = 1.0 - eps_wide;
    }
  }

  (void)grid_resolution;
  scan.global_max_location = f_alpha(scan.alpha_star, p).value >=
                                     f_alpha(scan.alpha_low_star, p).value
                                 ? scan.alpha_star
                                 : scan.alpha_low_star;
  return scan;
}

namespace {

struct KlArgs {
  double mu[4];
  double nu[4];
};

// mu entries of the s-side KL (weights of the four unsat/unsat classes)
void kl1_mu(double s, double u, double* mu) {
  mu[0] = s;
  mu[1] = u - s;
  mu[2] = u - s;
  mu[3] = 1.0 - 2.0 * u + s;
}

// nu entries of the s-side KL from the token probabilities
void kl1_nu(const OverlapSolution& q, int k, double* nu) {
  const double pm1 = q.p1m1 + q.pm1m1;
  const double pk = std::pow(pm1, k);
  const double pkk = std::pow(q.pm1m1, k);
  nu[0] = pkk;
  nu[1] = pk - pkk;
  nu[2] = pk - pkk;
  nu[3] = 1.0 - 2.0 * pk + pkk;
}

void kl2_mu(double omega, double* mu) {
  mu[0] = omega;
  mu[1] = 0.5 - omega;
  mu[2] = 0.5 - omega;
  mu[3] = omega;
}

void kl2_nu(const OverlapSolution& q, double* nu) {
  nu[0] = q.p11;
  nu[1] = q.p1m1;
  nu[2] = q.p1m1;
  nu[3] = q.pm1m1;
}

double kl4(const double* mu, const double* nu) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (mu[i] < 0.0 || nu[i] <= 0.0) throw invalid_input("invalid simplex input");
    if (mu[i] > 0.0) s += mu[i] * std::log(mu[i] / nu[i]);
  }
  return s;
}

double u_of(const ModelParams& p) { return compute_u(p.k, p.beta); }

}  // namespace

double frak_F(double omega, double s, const OverlapSolution& q, const ModelParams& p) {
  const double u = u_of(p);
  if (!(omega > 0.0) || !(omega < 0.5)) throw invalid_input("omega must lie in (0, 1/2)");
  if (!(s >= 0.0) || !(s <= u)) throw invalid_input("s must lie in [0, u]");
  KlArgs a;
  kl1_mu(s, u, a.mu);
  kl1_nu(q, p.k, a.nu);
  const double kl1 = kl4(a.mu, a.nu);
  kl2_mu(omega, a.mu);
  kl2_nu(q, a.nu);
  const double kl2 = kl4(a.mu, a.nu);
  return -kl1 + p.k * kl2;
}

FrakFGrad frak_F_partials(double omega, double s, const OverlapSolution& q,
                          const ModelParams& p) {
  const double u = u_of(p);
  const int k = p.k;
  const double pm1 = q.p1m1 + q.pm1m1;
  const double pm1_k = std::pow(pm1, k);
  const double pm1_km1 = std::pow(pm1, k - 1);
  const double pmm_k = std::pow(q.pm1m1, k);
  const double pmm_km1 = std::pow(q.pm1m1, k - 1);
  const double den = 1.0 - 2.0 * pm1_k + pmm_k;

  FrakFGrad g;
  g.d_omega = k * (std::log(omega / q.p11) + std::log(omega / q.pm1m1) -
                   2.0 * std::log((0.5 - omega) / q.p1m1));
  g.d_s = -std::log(s / pmm_k) + 2.0 * std::log((u - s) / (pm1_k - pmm_k)) -
          std::log((1.0 - 2.0 * u + s) / den);
  g.d_p11 = -k * s / q.pm1m1 -
            2.0 * (u - s) * k * (pmm_km1 - pm1_km1) / (pmm_k - pm1_k) -
            (1.0 - 2.0 * u + s) * k * (pmm_km1 - 2.0 * pm1_km1) / den -
            (1.0 - 2.0 * q.p11 - 2.0 * q.p1m1) * k * omega / (q.p11 * q.pm1m1);
  g.d_p1m1 = -2.0 * k * s / q.pm1m1 -
             2.0 * k * (u - s) * (2.0 * pmm_km1 - pm1_km1) / (pmm_k - pm1_k) -
             2.0 * k * (1.0 - 2.0 * u + s) * (pmm_km1 - pm1_km1) / den +
             k * (2.0 * omega / q.pm1m1 - (1.0 - 2.0 * omega) / q.p1m1);
  return g;
}

namespace {

// moment-matching equations G(p11, p1m1; omega, s) = 0
void frakp_equations(double p11, double p1m1, double omega, double s, double u, int k,
                     double& g1, double& g2) {
  const double pm1m1 = 1.0 - p11 - 2.0 * p1m1;
  const double pm1 = p1m1 + pm1m1;
  const double pm1_k = std::pow(pm1, k);
  const double pm1_km1 = std::pow(pm1, k - 1);
  const double pmm_k = std::pow(pm1m1, k);
  const double den = 1.0 - 2.0 * pm1_k + pmm_k;
  g1 = (1.0 - 2.0 * u + s) * p11 / den - omega;
  g2 = (u - s) * p1m1 * pm1_km1 / (pm1_k - pmm_k) +
       (1.0 - 2.0 * u + s) * p1m1 * (1.0 - pm1_km1) / den - 0.5;
}

}  // namespace

OverlapSolution solve_frakp(double omega, double s, const ModelParams& p) {
  const double u = u_of(p);
  if (!(s >= 0.0) || !(s <= u)) throw invalid_input("s must lie in [0, u]");
  const int k = p.k;
  double p11 = omega, p1m1 = 0.5 - omega;  // leading-order seed
  double g1, g2;
  frakp_equations(p11, p1m1, omega, s, u, k, g1, g2);
  double res = std::max(std::fabs(g1), std::fabs(g2));
  std::ostringstream trace;
  for (int it = 0; it < 100 && res > 1e-15; ++it) {
    // numerical Jacobian (central differences)
    const double h = 1e-8;
    double a1, a2, b1, b2;
    frakp_equations(p11 + h, p1m1, omega, s, u, k, a1, a2);
    frakp_equations(p11 - h, p1m1, omega, s, u, k, b1, b2);
    const double j11 = (a1 - b1) / (2 * h), j21 = (a2 - b2) / (2 * h);
    frakp_equations(p11, p1m1 + h, omega, s, u, k, a1, a2);
    frakp_equations(p11, p1m1 - h, omega, s, u, k, b1, b2);
    const double j12 = (a1 - b1) / (2 * h), j22 = (a2 - b2) / (2 * h);
    const double det = j11 * j22 - j12 * j21;
    if (det == 0.0) throw solver_failure("singular Jacobian in solve_frakp", trace.str());
    double dx = (g1 * j22 - g2 * j12) / det;
    double dy = (g2 * j11 - g1 * j21) / det;
    // backtracking on the residual norm
    double step = 1.0;
    for (int bt = 0; bt < 40; ++bt) {
      const double n11 = p11 - step * dx, n1m1 = p1m1 - step * dy;
      if (n11 > 0.0 && n1m1 > 0.0 && 1.0 - n11 - 2.0 * n1m1 > 0.0) {
        double t1, t2;
        frakp_equations(n11, n1m1, omega, s, u, k, t1, t2);
        const double nres = std::max(std::fabs(t1), std::fabs(t2));
        if (nres < res || step < 1e-6) {
          p11 = n11;
          p1m1 = n1m1;
          g1 = t1;
          g2 = t2;
          res = nres;
          break;
        }
      }
      step *= 0.5;
    }
    trace << "it=" << it << " residual=" << res << "\n";
  }
  if (res > 1e-12)
    throw solver_failure("solve_frakp did not reach the residual target", trace.str());
  OverlapSolution q;
  q.p11 = p11;
  q.p1m1 = p1m1;
  q.pm11 = p1m1;
  q.pm1m1 = 1.0 - p11 - 2.0 * p1m1;
  return q;
}

double F_of(double omega, double s, const ModelParams& p) {
  return frak_F(omega, s, solve_frakp(omega, s, p), p);
}

namespace {

// difference of x^k - y^k given the exact delta = x - y
double pow_diff(double x, double y, int k, double delta) {
  double s = 0.0;
  double xa = 1.0;  // x^i
  for (int i = 0; i < k; ++i) {
    s += xa * std::pow(y, k - 1 - i);
    xa *= x;
  }
  return delta * s;
}

struct KlSide {
  double mu[4];
  double nu[4];
};

// difference KL(A) - KL(B) assembled term by term so that the O(h) signal
// survives: each term is (mu_a-mu_b) ln(mu_a/nu_a) + mu_b [log1p(dmu/mu_b) -
// log1p(dnu/nu_b)] with exact dmu and polynomial-difference dnu.
double kl_difference(const KlSide& a, const KlSide& b, const double* dmu, const double* dnu) {
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    double term = dmu[i] * std::log(a.mu[i] / a.nu[i]);
    if (b.mu[i] > 0.0)
      term += b.mu[i] * (std::log1p(dmu[i] / b.mu[i]) - std::log1p(dnu[i] / b.nu[i]));
    total += term;
  }
  return total;
}

struct SolvedPoint {
  OverlapSolution q;
  KlSide kl1;
  KlSide kl2;
  double pm1 = 0.0;
};

SolvedPoint solved_point(double omega, double s, const ModelParams& p, double u) {
  SolvedPoint sp;
  sp.q = solve_frakp(omega, s, p);
  kl1_mu(s, u, sp.kl1.mu);
  kl1_nu(sp.q, p.k, sp.kl1.nu);
  kl2_mu(omega, sp.kl2.mu);
  kl2_nu(sp.q, sp.kl2.nu);
  sp.pm1 = sp.q.p1m1 + sp.q.pm1m1;
  return sp;
}

double f_difference(const SolvedPoint& a, const SolvedPoint& b, double d_omega, double d_s,
                    int k) {
  // exact mu differences
  const double dmu1[4] = {d_s, -d_s, -d_s, d_s};
  const double dmu2[4] = {d_omega, -d_omega, -d_omega, d_omega};

  // nu differences through the solved token probabilities
  const double d_p11 = a.q.p11 - b.q.p11;
  const double d_p1m1 = a.q.p1m1 - b.q.p1m1;
  const double d_pm1m1 = -d_p11 - 2.0 * d_p1m1;
  const double d_pm1 = d_p1m1 + d_pm1m1;

  const double d_pm1_k = pow_diff(a.pm1, b.pm1, k, d_pm1);
  const double d_pmm_k = pow_diff(a.q.pm1m1, b.q.pm1m1, k, d_pm1m1);
  const double dnu1[4] = {d_pmm_k, d_pm1_k - d_pmm_k, d_pm1_k - d_pmm_k,
                          -2.0 * d_pm1_k + d_pmm_k};
  const double dnu2[4] = {d_p11, d_p1m1, d_p1m1, d_pm1m1};

  const double dkl1 = kl_difference(a.kl1, b.kl1, dmu1, dnu1);
  const double dkl2 = kl_difference(a.kl2, b.kl2, dmu2, dnu2);
  return -dkl1 + k * dkl2;
}

}  // namespace

FGrad grad_F(double omega, double s, const ModelParams& p) {
  const double u = u_of(p);
  FGrad g;
  {
    const double h = 0x1p-20;
    const SolvedPoint a = solved_point(omega + h, s, p, u);
    const SolvedPoint b = solved_point(omega - h, s, p, u);
    const double d_omega = (omega + h) - (omega - h);
    g.d_omega = f_difference(a, b, d_omega, 0.0, p.k) / d_omega;
  }
  {
    const double h = std::ldexp(s, -10);
    const double sa = s + h, sb = s - h;
    const SolvedPoint a = solved_point(omega, sa, p, u);
    const SolvedPoint b = solved_point(omega, sb, p, u);
    const double d_s = sa - sb;
    g.d_s = f_difference(a, b, 0.0, d_s, p.k) / d_s;
  }
  return g;
}

double first_moment_rate(const ModelParams& p) {
  return M_LN2 + (p.d / p.k) * std::log1p(-p.violation_deficit() / std::exp2(p.k));
}

double balanced_lower_bound(const ModelParams& p) {
  const double pp = solve_p(p.k, p.beta);
  return (1.0 - (p.k - 1) * p.d / p.k) * M_LN2 - 0.5 * p.d * std::log(pp * (1.0 - pp)) +
         (p.d / p.k) * std::log(pp);
}

LagrangeOverlap lagrange_overlap(double omega_target, double d, int trunc) {
  if (!(d > 0.0)) throw invalid_input("d must be positive");
  if (!(omega_target > 0.0) || !(omega_target < 0.5))
    throw invalid_input("target overlap outside the achievable range (0, 1/2)");
  LagrangeOverlap out;
  out.trunc = trunc > 0 ? trunc : static_cast<int>(std::max(50.0, std::ceil(d + 12.0 * std::sqrt(d))));

  // Po(d) pmf over the total literal degree
  std::vector<double> pmf(out.trunc + 1);
  const double logd = std::log(d);
  for (int l = 0; l <= out.trunc; ++l) pmf[l] = std::exp(l * logd - d - std::lgamma(l + 1.0));

  auto tanh_sum = [&](double lambda) {
    double s = 0.0;
    for (int l = 0; l <= out.trunc; ++l) s += pmf[l] * l * std::tanh(0.5 * lambda * l);
    return s;  // strictly increasing in lambda
  };
  auto omega_of = [&](double lambda) { return 0.25 - tanh_sum(lambda) / (4.0 * d); };

  double lo = -1.0, hi = 1.0;
  while (omega_of(lo) < omega_target) lo *= 2.0;
  while (omega_of(hi) > omega_target) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (omega_of(mid) > omega_target)
      lo = mid;
    else
      hi = mid;
  }
  out.lambda = 0.5 * (lo + hi);

  out.alpha11.resize(out.trunc + 1);
  double achieved = 0.0, entropy = 0.0;
  for (int l = 0; l <= out.trunc; ++l) {
    const double a = (1.0 - std::tanh(0.5 * out.lambda * l)) / 4.0;
    out.alpha11[l] = a;
    achieved += pmf[l] * l * a;
    if (a > 0.0) entropy += pmf[l] * a * std::log(a);
    if (a < 0.5) entropy += pmf[l] * (0.5 - a) * std::log(0.5 - a);
  }
  out.achieved = achieved;
  out.m_value = -2.0 * entropy;
  return out;
}

ReferenceThresholds reference_thresholds(int k) {
  if (k < 3) throw invalid_input("k must be at least 3");
  ReferenceThresholds t;
  const double base = std::exp2(k) * k * M_LN2;
  t.d_sat_asym = base - 0.5 * (1.0 + M_LN2) * k;
  t.d_star = base - 10.0 * static_cast<double>(k) * k;
  t.rsb_low = base - 1.5 * k * M_LN2;
  return t;
}

}  // namespace ksat
