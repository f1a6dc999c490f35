#pragma once

#include <cstdint>
#include <vector>

#include "ksat/model.hpp"
#include "ksat/rng.hpp"

namespace ksat {

// Empirical measure on [0,1]: plain sample array, all functionals are
// plug-in estimators.
struct Population {
  std::vector<double> samples;

  static Population delta(double value, int64_t n) {
    return Population{std::vector<double>(n, value)};
  }
  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  double mean() const;
  double stddev() const;
};

// One application of the distributional operator: every output sample draws
// gamma+, gamma- ~ Po(d/2), builds the two clause-factor products from
// k-1 -fold products of population samples and returns the normalised ratio.
// Output samples use per-index substreams, so the result is independent of
// thread count.
Population apply_R(const Population& pop, const ModelParams& p, RngStream rng, int64_t n_out);

// Serial reference of the same map; bit-identical to apply_R by construction.
Population apply_R_serial(const Population& pop, const ModelParams& p, RngStream rng,
                          int64_t n_out);

// Each sample reflected x -> 1-x with probability 1/2.
Population symmetrize(const Population& pop, RngStream rng);

// Samples outside [eps, 1-eps] replaced by 1/2.
Population truncate(const Population& pop, double eps);

// Empirical W_r via the sorted-quantile coupling (optimal in one dimension);
// exact for unequal sizes by integrating the quantile functions over the
// merged grid.  Normalised by the largest quantile gap so huge r does not
// overflow.
double wasserstein(const Population& a, const Population& b, double r);

struct TailReport {
  bool p_dagger_pass = false;
  bool slim = false;
  bool very_slim = false;
  double worst_margin = 0.0;  // min over the grid of bound - observed mass
  double tail_mass = 0.0;     // mass outside the slim-tail band
};

// Empirical check of the tail class (geometric grid in the log-odds
// coordinate) and of the slim / very-slim tail conditions.
TailReport tail_report(const Population& pop, int k, double beta_max = 700.0);

struct FixedPointResult {
  Population pop;
  std::vector<double> w1_trace;  // W_1 between consecutive iterates
  int64_t iterations = 0;
  bool converged = false;
};

// Iterate apply_R from delta_{1/2} until the W_1 step drops below tol.
// Non-convergence is reported through the flag, not an exception.
FixedPointResult fixed_point(const ModelParams& p, int64_t n, int64_t max_iters, double tol,
                             RngStream rng);

struct ContractionProbe {
  std::vector<double> ratios;  // W_r(R a, R b) / W_r(a, b) per surviving pair
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  double stderr_ratio = 0.0;
  int skipped = 0;  // degenerate pairs (zero input distance)
};

// Couples R across random slim-tailed population pairs: shared Poisson
// offspring and shared sample ranks realise the monotone coupling.
ContractionProbe contraction_probe(const ModelParams& p, int64_t n, double r, int pairs,
                                   RngStream rng);

}  // namespace ksat
