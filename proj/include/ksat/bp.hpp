#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ksat/exact.hpp"
#include "ksat/model.hpp"

namespace ksat {

// Directed BP messages, stored as the log-odds of the +1 value so that the
// pair (mu(1), mu(-1)) is normalised by construction and large beta does not
// underflow.  Indexed by the flat edge id clause*k + slot.
struct MessageSet {
  std::vector<double> c2v;  // clause -> variable
  std::vector<double> v2c;  // variable -> clause
  int64_t t = 0;
};

// All messages 1/2 (log-odds zero), t = 0.
MessageSet init_messages(const Formula& f);

// One synchronous (Jacobi) update: clause->variable from the time-t
// variable->clause messages, then variable->clause from the fresh
// clause->variable messages.  Optional damping mixes old and new log-odds.
MessageSet bp_step(const Formula& f, const ModelParams& p, const MessageSet& msgs,
                   double damping = 0.0);

struct BpResult {
  MessageSet msgs;
  int64_t iterations = 0;
  bool converged = false;
  double last_delta = 0.0;
};

using BpTraceFn = std::function<void(int64_t iteration, double max_delta, double bethe)>;

// Iterate bp_step until the max absolute log-odds change drops below tol.
// The trace callback, when set, also evaluates the Bethe free energy per
// iteration.
BpResult run_bp(const Formula& f, const ModelParams& p, int64_t t_max, double tol,
                double damping = 0.0, const BpTraceFn& trace = nullptr);

// BP marginal P(sigma_x = +1): normalised product of incoming messages.
double bp_marginal(const Formula& f, const ModelParams& p, const MessageSet& msgs, int32_t x);

std::vector<double> bp_marginals(const Formula& f, const ModelParams& p, const MessageSet& msgs);

// The three-part Bethe free energy evaluated on the current messages.
double bethe_free_energy(const Formula& f, const ModelParams& p, const MessageSet& msgs);

// Mean absolute difference between BP messages after t iterations and the
// pseudo-messages (exact cavity marginals of deletion-modified formulas),
// averaged over edges with both directions summed.
double pseudo_message_gap(const Formula& f, const ModelParams& p, int64_t t, int cap_n,
                          const ExactConfig& cfg = {});

}  // namespace ksat
