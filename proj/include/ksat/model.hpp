#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "ksat/errors.hpp"
#include "ksat/rng.hpp"

namespace ksat {

inline constexpr double kBetaInf = std::numeric_limits<double>::infinity();
inline constexpr int kMaxClauseLength = 30;

struct ModelParams {
  int k = 3;        // clause length, 2 <= k <= 30
  double d = 1.0;   // expected variable degree
  double beta = 1;  // inverse temperature; kBetaInf for hard constraints

  bool beta_finite() const { return std::isfinite(beta); }
  // Weight deficit of a violated clause, 1 - e^{-beta}; equals 1 at beta=inf.
  double violation_deficit() const { return beta_finite() ? -std::expm1(-beta) : 1.0; }
  void validate() const;
};

// Truth assignment, one +1/-1 per variable.
using Assignment = std::vector<int8_t>;

struct LiteralDegrees {
  std::vector<int32_t> d_plus;
  std::vector<int32_t> d_minus;
};

// A k-CNF with fixed clause length.  Immutable after construction; occurrence
// lists are built once so all modules can walk variable neighbourhoods.
class Formula {
 public:
  Formula(int n, int k, std::vector<int32_t> vars, std::vector<int8_t> signs);

  static Formula empty(int n, int k) { return Formula(n, k, {}, {}); }

  int n() const { return n_; }
  int k() const { return k_; }
  int64_t m() const { return static_cast<int64_t>(vars_.size()) / k_; }
  int64_t edges() const { return static_cast<int64_t>(vars_.size()); }

  int32_t var(int64_t clause, int slot) const { return vars_[clause * k_ + slot]; }
  int8_t sign(int64_t clause, int slot) const { return signs_[clause * k_ + slot]; }

  // Occurrences of variable x as flat (clause*k + slot) edge ids.
  const std::vector<int32_t>& occurrences(int32_t x) const { return occ_[x]; }

  LiteralDegrees literal_degrees() const;

  // New formula with one clause removed (variable ids preserved).
  Formula without_clause(int64_t clause) const;
  // New formula keeping exactly the given clauses.
  Formula with_clauses(const std::vector<int64_t>& keep) const;

 private:
  int n_;
  int k_;
  std::vector<int32_t> vars_;
  std::vector<int8_t> signs_;
  std::vector<std::vector<int32_t>> occ_;
};

// Random formula: Po(dn/k) clauses, per-clause variables sampled uniformly
// without replacement, fair independent signs.
Formula gen_random(const ModelParams& params, int n, RngStream rng);

struct PlantedInstance {
  Formula formula;
  Assignment assignment;
};

// Planted pair: uniform assignment, clause variables as in gen_random, each
// clause violated with probability e^{-beta}/(2^k-1+e^{-beta}) and the sign
// pattern uniform given (un)satisfaction.  At beta=inf the probability
// degenerates; pass allow_infinite_beta to fall back to rejection of
// violating patterns (all clauses satisfied).
PlantedInstance gen_planted(const ModelParams& params, int n, RngStream rng,
                            bool allow_infinite_beta = false);

double planted_violation_probability(int k, double beta);

// Number of clauses with no satisfied literal.
int64_t hamiltonian(const Formula& f, const Assignment& a);

bool clause_satisfied(const Formula& f, int64_t clause, const Assignment& a);

// Fraction of coordinates on which the assignments agree.
double overlap(const Assignment& a, const Assignment& b);

// Fraction of literal occurrences true under both assignments.
double weighted_overlap(const Formula& f, const Assignment& a, const Assignment& b);

struct BalanceReport {
  bool balanced = false;
  bool strongly_balanced = false;
};

// Balanced: sum_x sigma_x (d_x^+ - d_x^-) is 0 (km even) or 1 (km odd).
// Strongly balanced: additionally every degree class sums to at most sqrt(n).
BalanceReport balance_check(const Formula& f, const Assignment& a);

Assignment random_assignment(int n, RngStream& rng);

}  // namespace ksat
