#include <doctest.h>

#include <cmath>

#include "ksat/bp.hpp"
#include "ksat/density.hpp"
#include "ksat/exact.hpp"
#include "ksat/tree.hpp"
#include "test_util.hpp"

using namespace ksat;

TEST_CASE("sample_gw shape") {
  SUBCASE("vanishing density gives a lone root") {
    const GWTree t = sample_gw(ModelParams{3, 1e-12, 1.0}, 5, RngStream(1));
    CHECK(t.vars.size() == 1);
    CHECK(t.clauses.empty());
  }
  SUBCASE("depth zero truncates everything") {
    const GWTree t = sample_gw(ModelParams{3, 5.0, 1.0}, 0, RngStream(2));
    CHECK(t.vars.size() == 1);
  }
  SUBCASE("root offspring is Po(d)") {
    const double d = 2.5;
    int64_t total = 0;
    const int64_t reps = 10000;
    for (int64_t r = 0; r < reps; ++r) {
      const GWTree t = sample_gw(ModelParams{3, d, 1.0}, 1, RngStream(7).child(r));
      total += static_cast<int64_t>(t.vars[0].clauses.size());
    }
    CHECK(std::fabs(testutil::mean_z(static_cast<double>(total) / reps, reps, d, std::sqrt(d))) <
          3.0);
  }
  SUBCASE("every clause has k-1 children") {
    const GWTree t = sample_gw(ModelParams{4, 2.0, 1.0}, 3, RngStream(3));
    for (const auto& c : t.clauses) CHECK(c.vars.size() == 3);
  }
  SUBCASE("node budget enforced") {
    CHECK_THROWS_AS(sample_gw(ModelParams{3, 50.0, 1.0}, 6, RngStream(4), 1000), resource_limit);
  }
}

TEST_CASE("tree_bp basics") {
  ModelParams p{3, 1.0, 1.0};
  SUBCASE("lone root gives one half") {
    const GWTree t = sample_gw(ModelParams{3, 1e-12, 1.0}, 3, RngStream(1));
    CHECK(tree_bp(t, p, leaf_delta_half(), 5, RngStream(2)) == 0.5);
  }
  SUBCASE("depth-1 tree equals the single-clause BP marginal") {
    for (int rep = 0; rep < 20; ++rep) {
      GWTree t = sample_gw(ModelParams{3, 1.5, 1.0}, 1, RngStream(100).child(rep));
      if (t.clauses.empty()) continue;
      const double root = tree_bp(t, p, leaf_delta_half(), 3, RngStream(5));
      const Formula f = tree_to_formula(t);
      const BpResult r = run_bp(f, p, 20, 1e-13);
      CHECK(root == doctest::Approx(bp_marginal(f, p, r.msgs, 0)).epsilon(1e-10));
    }
  }
  SUBCASE("deep tree with delta-half init matches enumeration") {
    for (int rep = 0; rep < 15; ++rep) {
      GWTree t;
      bool ok = false;
      for (int tries = 0; tries < 50 && !ok; ++tries) {
        t = sample_gw(ModelParams{3, 1.0, 1.0}, 3, RngStream(2000 + rep).child(tries));
        ok = t.vars.size() <= 18 && !t.clauses.empty();
      }
      if (!ok) continue;
      const double root = tree_bp(t, p, leaf_delta_half(), 10, RngStream(6));
      const Formula f = tree_to_formula(t);
      const auto exact = exact_marginals(f, p);
      CHECK(std::fabs(root - exact[0]) < 1e-9);
    }
  }
}

TEST_CASE("root marginal symmetric when the init law is symmetric") {
  ModelParams p{3, 1.5, 1.0};
  // symmetric two-point law at 0.4/0.6
  const LeafInit init = [](RngStream& g) { return g.sign() > 0 ? 0.6 : 0.4; };
  std::vector<double> roots;
  const int64_t reps = 10000;
  for (int64_t r = 0; r < reps; ++r) {
    const GWTree t = sample_gw(p, 2, RngStream(900).child(r));
    roots.push_back(tree_bp(t, p, init, 2, RngStream(901).child(r)));
  }
  const double skew = testutil::skewness(roots);
  // skewness of a symmetric law: se ~ sqrt(6/n)
  CHECK(std::fabs(skew) < 3.0 * std::sqrt(6.0 / reps));
  double mean = 0.0;
  for (double x : roots) mean += x;
  CHECK(std::fabs(mean / reps - 0.5) < 0.01);
}

TEST_CASE("root marginal law equals the operator iterate (two-sample KS)") {
  ModelParams p{4, 3.0, 1.5};
  const int t_rounds = 3;
  const int64_t reps = 10000;

  std::vector<double> tree_roots;
  tree_roots.reserve(reps);
  for (int64_t r = 0; r < reps; ++r) {
    const GWTree t = sample_gw(p, t_rounds, RngStream(123).child(r));
    tree_roots.push_back(tree_bp(t, p, leaf_delta_half(), t_rounds, RngStream(124).child(r)));
  }

  Population pop = Population::delta(0.5, reps);
  RngStream g(125);
  for (int it = 1; it <= t_rounds; ++it) pop = apply_R(pop, p, g.child(it), reps);

  const double d = testutil::ks_statistic(tree_roots, pop.samples);
  CHECK(testutil::ks_pvalue(d, reps, reps) > 1e-3);
}
