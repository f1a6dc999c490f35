#pragma once

#include <vector>

#include "ksat/model.hpp"

namespace ksat {

// Root of 1 - 2p - (1-e^{-beta})(1-p)^k = 0 in (0, 1/2], residual < 1e-12.
double solve_p(int k, double beta);

// u = (1-2p) / (2p (e^beta - 1)) in (0,1).  At beta = inf the denominator
// diverges; the limit 0 is returned only behind the explicit flag.
double compute_u(int k, double beta, bool limit_at_inf = false);

struct RateParams {
  double p = 0.0;
  double u = 0.0;
  double c = 0.0;  // d/k = 2^k ln2 - c
};

RateParams rate_params(const ModelParams& mp);

struct FAlpha {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// Second-moment rate f(alpha) with first and second derivatives; boundary
// alpha in {0,1} returns the entropy-limit values (derivatives diverge).
FAlpha f_alpha(double alpha, const ModelParams& p);

struct LandscapeScan {
  double alpha_star = 0.0;      // maximum near 1/2
  double alpha_low_star = 0.0;  // high-overlap local maximum near 1
  double local_min = 0.0;       // the minimum separating them
  double global_max_location = 0.0;
};

// Stationary points of f located by sign changes of f' on a coarse grid,
// then refined.  The structural claims behind the three named points hold
// for k >= 10.
LandscapeScan scan_f(const ModelParams& p, int grid_resolution = 4096);

struct OverlapSolution {
  double p11 = 0.0;
  double p1m1 = 0.0;
  double pm11 = 0.0;
  double pm1m1 = 0.0;
};

// The two-KL functional of the weighted-overlap second moment.
double frak_F(double omega, double s, const OverlapSolution& q, const ModelParams& p);

struct FrakFGrad {
  double d_omega = 0.0;
  double d_s = 0.0;
  double d_p11 = 0.0;
  double d_p1m1 = 0.0;
};

// Closed-form partial derivatives of frak_F (independent of the solver).
FrakFGrad frak_F_partials(double omega, double s, const OverlapSolution& q,
                          const ModelParams& p);

// Moment-matching solution: Newton with backtracking from the seed
// (omega, 1/2 - omega); residual below 1e-12 or solver_failure.
OverlapSolution solve_frakp(double omega, double s, const ModelParams& p);

// F(omega, s) = frak_F at the solved point.
double F_of(double omega, double s, const ModelParams& p);

struct FGrad {
  double d_omega = 0.0;
  double d_s = 0.0;
};

// Central differences of F along both coordinates, evaluated through
// pairwise term differences so the tiny s-scale (s ~ u^2) does not lose the
// signal to cancellation.
FGrad grad_F(double omega, double s, const ModelParams& p);

// ln2 + (d/k) ln(1 - 2^{-k}(1-e^{-beta})), the annealed rate.
double first_moment_rate(const ModelParams& p);

// (1-(k-1)d/k) ln2 - (d/2) ln(p(1-p)) + (d/k) ln p.
double balanced_lower_bound(const ModelParams& p);

struct LagrangeOverlap {
  double lambda = 0.0;
  std::vector<double> alpha11;  // indexed by total literal degree
  double m_value = 0.0;         // entropy objective at the optimum
  double achieved = 0.0;        // sum P P (d+ + d-) alpha11
  int trunc = 0;
};

// Solves the overlap constraint for the Lagrange multiplier by monotone
// bisection on the tanh sum; trunc <= 0 picks max(50, ceil(d + 12 sqrt d)).
LagrangeOverlap lagrange_overlap(double omega_target, double d, int trunc = 0);

struct ReferenceThresholds {
  double d_sat_asym = 0.0;  // 2^k k ln2 - (1+ln2) k / 2
  double d_star = 0.0;      // k 2^k ln2 - 10 k^2
  double rsb_low = 0.0;     // 2^k k ln2 - 3 k ln2 / 2
};

// Asymptotic reference values (vanishing terms dropped), not certified
// finite-k thresholds.
ReferenceThresholds reference_thresholds(int k);

}  // namespace ksat
