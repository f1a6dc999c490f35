#pragma once

#include <cstdint>
#include <vector>

#include "ksat/density.hpp"
#include "ksat/model.hpp"

namespace ksat {

struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  int64_t samples = 0;
};

// Monte Carlo estimate of the limiting Bethe functional of the message law
// given by the population.  Per sample: gamma+-, Rademacher-reflected
// population draws, log of the two-product sum minus the reweighted clause
// term.
McEstimate bethe_functional(const Population& pop, const ModelParams& p, int64_t samples,
                            RngStream rng);

// Deterministic double-Poisson-sum value of the functional at delta_{1/2}.
double bethe_functional_delta_half(const ModelParams& p);

// 1-RSB interpolation bound on (1/n) E log Z at Parisi weight y, for the
// atomic message law pi = (delta_0 + delta_1)/2: the inner conditional
// expectation is an exact Binomial sum, the outer expectation over the
// Poisson offspring is Monte Carlo.
McEstimate interpolation_bound_atomic(const ModelParams& p, double y, int64_t samples,
                                      RngStream rng);

struct NestedBound {
  McEstimate plain;      // log-of-inner-mean estimator
  double jackknife = 0;  // bias-corrected value reported alongside
};

// Same bound for a general population law; the inner conditional expectation
// is estimated by nested Monte Carlo with the given number of replicas.
NestedBound interpolation_bound_population(const Population& pop, const ModelParams& p, double y,
                                           int64_t samples, int inner_replicas, RngStream rng);

// Bound evaluated on a y-grid with common random numbers, plus the paired
// stderr of (bound(y) - bound(1)).
struct InterpolationScan {
  std::vector<double> y;
  std::vector<double> value;
  std::vector<double> stderr_;
  std::vector<double> diff_vs_y1;
  std::vector<double> diff_stderr;
};

InterpolationScan interpolation_scan_atomic(const ModelParams& p, const std::vector<double>& ys,
                                            int64_t samples, RngStream rng);

struct ScalarGap {
  double argmin_y = 1.0;
  double phi_min = 0.0;
  double phi_at_1 = 0.0;
};

// Minimum over y in (0,1] of (c - 1 + 2^{y-1} - ln2/2)/y.
ScalarGap rsb_scalar_gap(double c, const std::vector<double>& y_grid = {});

// Number of clauses where x carries the unique satisfied literal.
int64_t support_count(const Formula& f, const Assignment& a, int32_t x);

struct StableSet {
  std::vector<int32_t> members;
};

// Largest stable set by iterative peeling; with real-valued thresholds the
// small-k conditions read "supports >= 1e-5 k internal clauses" and
// "at most 1e-6 k externally unsatisfied clauses".
StableSet stable_set(const Formula& f, const Assignment& a);

// Certifying re-check of ST1/ST2 for every member, independent of the peeler.
bool stable_set_verify(const Formula& f, const Assignment& a, const StableSet& s);

struct PolarizationReport {
  double fraction_polarized = 0.0;
  bool passes_A = false;
};

// Fraction of marginals inside (0, e^-beta) or (1-e^-beta, 1); the event
// requires at least 1 - 2^{-0.98 k} of them.
PolarizationReport polarization_check(const std::vector<double>& marginals, int k, double beta);

}  // namespace ksat
