#include "ksat/tree.hpp"

#include <cmath>

namespace ksat {

GWTree sample_gw(const ModelParams& p, int depth, RngStream rng, size_t node_budget) {
  p.validate();
  if (depth < 0) throw invalid_input("depth must be non-negative");
  GWTree t;
  t.k = p.k;
  t.depth = depth;
  t.vars.push_back({});

  std::vector<int32_t> frontier{0};
  uint64_t tag = 0;
  for (int level = 0; level < depth && !frontier.empty(); ++level) {
    std::vector<int32_t> next;
    for (int32_t v : frontier) {
      RngStream vr = rng.child(tag++);
      const uint64_t offspring = vr.poisson(p.d);
      for (uint64_t c = 0; c < offspring; ++c) {
        if (t.node_count() + p.k > node_budget)
          throw resource_limit("tree node budget exceeded");
        GWTree::ClauseNode cl;
        cl.parent_var = v;
        cl.parent_sign = static_cast<int8_t>(vr.sign());
        for (int j = 0; j < p.k - 1; ++j) {
          GWTree::VarNode child;
          child.depth = level + 1;
          child.parent_clause = static_cast<int32_t>(t.clauses.size());
          cl.vars.push_back(static_cast<int32_t>(t.vars.size()));
          cl.signs.push_back(static_cast<int8_t>(vr.sign()));
          t.vars.push_back(child);
          next.push_back(cl.vars.back());
        }
        t.vars[v].clauses.push_back(static_cast<int32_t>(t.clauses.size()));
        t.clauses.push_back(std::move(cl));
      }
    }
    frontier = std::move(next);
  }
  return t;
}

namespace {

inline double softplus(double x) {
  if (x > 36.0) return x + std::exp(-x);
  if (x < -36.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

struct TreeBpEval {
  const GWTree& t;
  const ModelParams& p;
  const LeafInit& init;
  int rounds;
  RngStream& rng;
  double deficit;

  // log-odds of the variable->parent message; vars at depth == rounds send a
  // time-zero message drawn from the init source
  double v2c_logodds(int32_t v) {
    const auto& node = t.vars[v];
    if (node.depth >= rounds) {
      double mu = init(rng);
      if (!(mu > 0.0) || !(mu < 1.0)) throw invalid_input("leaf message must lie in (0,1)");
      return std::log(mu / (1.0 - mu));
    }
    double total = 0.0;
    for (int32_t c : node.clauses) total += c2v_logodds(c, /*to_parent=*/true);
    return total;
  }

  // log-odds of the clause->parent message
  double c2v_logodds(int32_t c, bool to_parent) {
    (void)to_parent;
    const auto& cl = t.clauses[c];
    double log_prod = 0.0;  // sum of log mu_{y->c}(-J_y)
    for (size_t j = 0; j < cl.vars.size(); ++j) {
      const double lambda = v2c_logodds(cl.vars[j]);
      log_prod += -softplus(cl.signs[j] > 0 ? lambda : -lambda);
    }
    double v = -deficit * std::exp(log_prod);
    double log_factor = v <= -1.0 ? std::log(1e-300) : std::log1p(v);
    return cl.parent_sign > 0 ? -log_factor : log_factor;
  }
};

}  // namespace

double tree_bp(const GWTree& t, const ModelParams& p, const LeafInit& init, int rounds,
               RngStream rng) {
  if (rounds < 1) throw invalid_input("rounds must be at least 1");
  TreeBpEval eval{t, p, init, rounds, rng, p.violation_deficit()};
  double total = 0.0;
  for (int32_t c : t.vars[0].clauses) total += eval.c2v_logodds(c, true);
  return sigmoid(total);
}

Formula tree_to_formula(const GWTree& t) {
  std::vector<int32_t> vars;
  std::vector<int8_t> signs;
  for (const auto& cl : t.clauses) {
    vars.push_back(cl.parent_var);
    signs.push_back(cl.parent_sign);
    for (size_t j = 0; j < cl.vars.size(); ++j) {
      vars.push_back(cl.vars[j]);
      signs.push_back(cl.signs[j]);
    }
  }
  return Formula(static_cast<int>(t.vars.size()), t.k, std::move(vars), std::move(signs));
}

}  // namespace ksat
