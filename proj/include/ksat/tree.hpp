#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ksat/model.hpp"
#include "ksat/rng.hpp"

namespace ksat {

// Two-type Galton-Watson tree: a variable begets Po(d) clauses, a clause
// begets k-1 variables, every clause/variable edge carries a fair sign.
// Materialised breadth-first up to a variable depth and a node budget.
struct GWTree {
  struct VarNode {
    int32_t depth = 0;
    int32_t parent_clause = -1;
    std::vector<int32_t> clauses;
  };
  struct ClauseNode {
    int32_t parent_var = -1;
    int8_t parent_sign = 1;
    std::vector<int32_t> vars;   // k-1 children
    std::vector<int8_t> signs;   // matching child signs
  };
  std::vector<VarNode> vars;
  std::vector<ClauseNode> clauses;
  int k = 3;
  int depth = 0;

  size_t node_count() const { return vars.size() + clauses.size(); }
};

inline constexpr size_t kDefaultTreeNodeBudget = 1000000;

GWTree sample_gw(const ModelParams& p, int depth, RngStream rng,
                 size_t node_budget = kDefaultTreeNodeBudget);

// Source of time-zero leaf messages: returns mu_{x->a,0}(+1).
using LeafInit = std::function<double(RngStream&)>;

inline LeafInit leaf_delta_half() {
  return [](RngStream&) { return 0.5; };
}

// Root marginal after `rounds` BP iterations with the time-zero messages of
// the depth-`rounds` variables drawn i.i.d. from the init source.
double tree_bp(const GWTree& t, const ModelParams& p, const LeafInit& init, int rounds,
               RngStream rng);

// Flatten the materialised tree into a k-CNF (each clause node joins its
// parent and its k-1 children).
Formula tree_to_formula(const GWTree& t);

}  // namespace ksat
