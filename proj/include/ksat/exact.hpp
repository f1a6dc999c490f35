#pragma once

#include <cstdint>
#include <vector>

#include "ksat/model.hpp"
#include "ksat/rng.hpp"

namespace ksat {

struct ExactConfig {
  int cap_n = 24;          // exact_logZ / exact_marginals / rs_defect
  int cap_n_overlap = 14;  // overlap_statistics walks pairs of assignments
};

struct ExactSummary {
  double logZ = 0.0;
  std::vector<double> marginals;
  double pair_defect = 0.0;
  double mean_overlap = 0.0;
};

// log of the full 2^n Boltzmann sum.
double exact_logZ(const Formula& f, const ModelParams& p, const ExactConfig& cfg = {});

// Exact Boltzmann marginals P(sigma_x = +1).
std::vector<double> exact_marginals(const Formula& f, const ModelParams& p,
                                    const ExactConfig& cfg = {});

// (1/n^2) sum_{i,j} |mu(s_i=s_j=1) - mu(s_i=1) mu(s_j=1)|, diagonal included.
double rs_defect(const Formula& f, const ModelParams& p, const ExactConfig& cfg = {});

struct OverlapStatistics {
  double mean = 0.0;
  std::vector<double> histogram;  // mass of overlap a/n at index a
};

// Exact law of the overlap of two independent Boltzmann samples.
OverlapStatistics overlap_statistics(const Formula& f, const ModelParams& p,
                                     const ExactConfig& cfg = {});

// Single-site heat-bath chain with stationary distribution mu_{F,beta}.
// One sweep performs n site updates in random order.
class GlauberChain {
 public:
  GlauberChain(const Formula& f, const ModelParams& p, RngStream rng);

  void sweep();
  void steps(int64_t count);  // single-site updates
  const Assignment& state() const { return state_; }

  // Conditional probability of setting x to +1 given the rest; exposed so the
  // transition kernel can be built explicitly in tests.
  double site_prob_plus(int32_t x) const;

 private:
  void update_site(int32_t x);
  void rebuild_satcounts();

  const Formula& f_;
  ModelParams p_;
  RngStream rng_;
  Assignment state_;
  std::vector<int32_t> satcount_;  // satisfied literals per clause
  std::vector<int32_t> order_;
  int64_t pos_in_sweep_ = 0;
};

}  // namespace ksat
