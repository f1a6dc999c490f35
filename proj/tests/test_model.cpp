#include <doctest.h>

#include <cmath>
#include <map>

#include "ksat/exact.hpp"
#include "ksat/io.hpp"
#include "ksat/model.hpp"
#include "test_util.hpp"

using namespace ksat;

namespace {

Formula two_clause_fixture() {
  // (x0 v x1 v -x2) and (-x0 v x1 v x2) on n=3
  return Formula(3, 3, {0, 1, 2, 0, 1, 2}, {1, 1, -1, -1, 1, 1});
}

}  // namespace

TEST_CASE("gen_random basics") {
  ModelParams p{3, 1e-12, 1.0};
  RngStream g(1);
  SUBCASE("vanishing density gives an empty formula") {
    const Formula f = gen_random(p, 10, g);
    CHECK(f.m() == 0);
  }
  SUBCASE("n below k rejected") {
    CHECK_THROWS_AS(gen_random(ModelParams{3, 1.0, 1.0}, 2, g), invalid_input);
  }
}

TEST_CASE("gen_random clause count and sign frequencies") {
  ModelParams p{3, 3.0, 1.0};
  const int n = 100;
  const int64_t reps = 10000;
  int64_t clauses = 0, plus = 0, lits = 0;
  for (int64_t r = 0; r < reps; ++r) {
    const Formula f = gen_random(p, n, RngStream(999).child(r));
    clauses += f.m();
    lits += f.edges();
    for (int64_t c = 0; c < f.m(); ++c)
      for (int j = 0; j < 3; ++j) plus += f.sign(c, j) > 0;
  }
  const double mean_m = p.d * n / p.k;
  CHECK(std::fabs(testutil::mean_z(static_cast<double>(clauses) / reps, reps, mean_m,
                                   std::sqrt(mean_m))) < 3.0);
  CHECK(std::fabs(testutil::freq_z(plus, lits, 0.5)) < 3.0);
}

TEST_CASE("clause variables are distinct and cover the range uniformly") {
  ModelParams p{5, 2.0, 1.0};
  const Formula f = gen_random(p, 12, RngStream(5));
  std::vector<int64_t> var_counts(12, 0);
  for (int64_t c = 0; c < f.m(); ++c)
    for (int j = 0; j < 5; ++j) {
      for (int h = 0; h < j; ++h) CHECK(f.var(c, j) != f.var(c, h));
      ++var_counts[f.var(c, j)];
    }
  // uniform occupancy over many more draws
  std::vector<int64_t> counts(12, 0);
  int64_t total = 0;
  for (int r = 0; r < 3000; ++r) {
    const Formula ff = gen_random(p, 12, RngStream(77).child(r));
    for (int64_t c = 0; c < ff.m(); ++c)
      for (int j = 0; j < 5; ++j) {
        ++counts[ff.var(c, j)];
        ++total;
      }
  }
  const std::vector<double> expected(12, total / 12.0);
  CHECK(testutil::chi_square(counts, expected) < 31.3);  // chi2_{11, 0.999}
}

TEST_CASE("hamiltonian") {
  CHECK(hamiltonian(Formula::empty(4, 3), Assignment(4, 1)) == 0);

  // single clause falsified by the all-false assignment
  const Formula f(3, 3, {0, 1, 2}, {1, 1, 1});
  CHECK(hamiltonian(f, Assignment(3, -1)) == 1);
  CHECK(hamiltonian(f, Assignment(3, 1)) == 0);

  const Formula two = two_clause_fixture();
  for (uint32_t mask = 0; mask < 8; ++mask) {
    Assignment a(3);
    for (int i = 0; i < 3; ++i) a[i] = (mask >> i) & 1 ? 1 : -1;
    int64_t expected = 0;
    for (int64_t c = 0; c < two.m(); ++c) {
      bool sat = false;
      for (int j = 0; j < 3; ++j) sat |= a[two.var(c, j)] == two.sign(c, j);
      expected += !sat;
    }
    CHECK(hamiltonian(two, a) == expected);
  }

  CHECK_THROWS_AS(hamiltonian(f, Assignment(2, 1)), invalid_input);
}

TEST_CASE("hamiltonian is invariant under clause reordering") {
  const Formula f = two_clause_fixture();
  const Formula swapped(3, 3, {0, 1, 2, 0, 1, 2}, {-1, 1, 1, 1, 1, -1});
  RngStream g(3);
  for (int r = 0; r < 20; ++r) {
    Assignment a = random_assignment(3, g);
    CHECK(hamiltonian(f, a) == hamiltonian(swapped, a));
  }
}

TEST_CASE("overlap") {
  Assignment a{1, -1, 1, -1};
  Assignment b{1, -1, -1, 1};
  CHECK(overlap(a, a) == 1.0);
  Assignment na{-1, 1, -1, 1};
  CHECK(overlap(a, na) == 0.0);
  CHECK(overlap(a, b) == 0.5);
  CHECK_THROWS_AS(overlap(a, Assignment(3, 1)), invalid_input);
}

TEST_CASE("weighted overlap") {
  // all-positive literals
  const Formula f(3, 3, {0, 1, 2}, {1, 1, 1});
  CHECK(weighted_overlap(f, Assignment(3, 1), Assignment(3, 1)) == 1.0);
  CHECK(weighted_overlap(f, Assignment(3, -1), Assignment(3, -1)) == 0.0);
  CHECK_THROWS_AS(weighted_overlap(Formula::empty(3, 3), Assignment(3, 1), Assignment(3, 1)),
                  invalid_input);

  const Formula two = two_clause_fixture();
  RngStream g(8);
  for (int r = 0; r < 30; ++r) {
    Assignment a = random_assignment(3, g), b = random_assignment(3, g);
    // direct literal scan
    int64_t hits = 0;
    for (int64_t c = 0; c < two.m(); ++c)
      for (int j = 0; j < 3; ++j) {
        const int32_t x = two.var(c, j);
        const int8_t s = two.sign(c, j);
        hits += (a[x] == s && b[x] == s);
      }
    CHECK(weighted_overlap(two, a, b) ==
          doctest::Approx(static_cast<double>(hits) / 6.0).epsilon(1e-12));
  }
}

TEST_CASE("weighted overlap diagonal identity") {
  const Formula two = two_clause_fixture();
  const LiteralDegrees deg = two.literal_degrees();
  RngStream g(12);
  for (int r = 0; r < 20; ++r) {
    Assignment a = random_assignment(3, g);
    double direct = 0.0;
    for (int x = 0; x < 3; ++x)
      direct += a[x] == 1 ? deg.d_plus[x] : deg.d_minus[x];
    CHECK(weighted_overlap(two, a, a) == doctest::Approx(direct / 6.0).epsilon(1e-12));
  }
}

TEST_CASE("balance_check") {
  SUBCASE("empty formula with a sign-balanced assignment") {
    Assignment a{1, -1, 1, -1};
    const BalanceReport rep = balance_check(Formula::empty(4, 3), a);
    CHECK(rep.balanced);
    CHECK(rep.strongly_balanced);
  }
  SUBCASE("single positive occurrence, km odd") {
    const Formula f(2, 2, {0, 1}, {1, 1});
    // km = 2 even; use k=3 singleton clause for odd: n=3, one clause, km=3
    const Formula f3(3, 3, {0, 1, 2}, {1, -1, 1});
    Assignment a{1, 1, -1};  // sum sigma (d+ - d-) = 1 + (-1)(-1)... compute directly
    const LiteralDegrees deg = f3.literal_degrees();
    int64_t s = 0;
    for (int x = 0; x < 3; ++x) s += a[x] * (deg.d_plus[x] - deg.d_minus[x]);
    const BalanceReport rep = balance_check(f3, a);
    CHECK(rep.balanced == (s == 1));
  }
  SUBCASE("agrees with the direct sum on random instances") {
    ModelParams p{3, 2.0, 1.0};
    RngStream g(44);
    for (int r = 0; r < 50; ++r) {
      const Formula f = gen_random(p, 16, RngStream(44).child(r));
      Assignment a = random_assignment(16, g);
      const LiteralDegrees deg = f.literal_degrees();
      int64_t s = 0;
      for (int x = 0; x < 16; ++x) s += a[x] * (deg.d_plus[x] - deg.d_minus[x]);
      const bool expect = (f.k() * f.m()) % 2 == 0 ? s == 0 : s == 1;
      CHECK(balance_check(f, a).balanced == expect);
    }
  }
}

TEST_CASE("planted model violation frequency and pattern uniformity") {
  SUBCASE("large beta never violates") {
    ModelParams p{3, 3.0, 700.0};
    const PlantedInstance inst = gen_planted(p, 100, RngStream(2));
    CHECK(hamiltonian(inst.formula, inst.assignment) == 0);
  }
  SUBCASE("violation frequency at beta=1") {
    ModelParams p{3, 3.0, 1.0};
    int64_t violated = 0, total = 0;
    for (int r = 0; r < 200; ++r) {
      const PlantedInstance inst = gen_planted(p, 180, RngStream(31).child(r));
      violated += hamiltonian(inst.formula, inst.assignment);
      total += inst.formula.m();
    }
    const double pv = planted_violation_probability(3, 1.0);
    CHECK(std::fabs(testutil::freq_z(violated, total, pv)) < 3.0);
  }
  SUBCASE("satisfying sign patterns equidistributed at k=2") {
    ModelParams p{2, 2.0, 1.0};
    std::map<int, int64_t> pattern_counts;
    int64_t sat_total = 0;
    for (int r = 0; r < 4000; ++r) {
      const PlantedInstance inst = gen_planted(p, 50, RngStream(8).child(r));
      for (int64_t c = 0; c < inst.formula.m(); ++c) {
        if (!clause_satisfied(inst.formula, c, inst.assignment)) continue;
        // pattern relative to the planted values: bit j set if literal j true
        int pat = 0;
        for (int j = 0; j < 2; ++j)
          if (inst.formula.sign(c, j) == inst.assignment[inst.formula.var(c, j)]) pat |= 1 << j;
        ++pattern_counts[pat];
        ++sat_total;
      }
    }
    std::vector<int64_t> obs{pattern_counts[1], pattern_counts[2], pattern_counts[3]};
    const std::vector<double> expected(3, sat_total / 3.0);
    CHECK(testutil::chi_square(obs, expected) < 13.8);  // chi2_{2, 0.999}
  }
  SUBCASE("beta=inf rejected without the flag") {
    ModelParams p{3, 1.0, kBetaInf};
    CHECK_THROWS_AS(gen_planted(p, 10, RngStream(1)), invalid_input);
    const PlantedInstance inst = gen_planted(p, 10, RngStream(1), true);
    CHECK(hamiltonian(inst.formula, inst.assignment) == 0);
  }
}

TEST_CASE("planted formulas reweighted by e^{+beta H} match gen_random") {
  // fix k=2, n=6 and condition on single-clause outcomes; the reweighted
  // planted frequencies of the 60 possible clauses must be uniform
  ModelParams p{2, 2.0 / 6.0, 1.0};  // Po(mean) small so m=1 is common
  const int64_t reps = 100000;
  std::map<std::tuple<int, int, int, int>, double> weighted;
  std::map<std::tuple<int, int, int, int>, int64_t> plain;
  double weighted_total = 0.0;
  int64_t plain_total = 0;
  for (int64_t r = 0; r < reps; ++r) {
    const PlantedInstance inst = gen_planted(p, 6, RngStream(60).child(r));
    if (inst.formula.m() != 1) continue;
    auto key = std::make_tuple(inst.formula.var(0, 0), static_cast<int>(inst.formula.sign(0, 0)),
                               inst.formula.var(0, 1), static_cast<int>(inst.formula.sign(0, 1)));
    const double w = std::exp(1.0 * hamiltonian(inst.formula, inst.assignment));
    weighted[key] += w;
    weighted_total += w;

    const Formula f = gen_random(p, 6, RngStream(61).child(r));
    if (f.m() == 1) {
      ++plain[std::make_tuple(f.var(0, 0), static_cast<int>(f.sign(0, 0)), f.var(0, 1),
                              static_cast<int>(f.sign(0, 1)))];
      ++plain_total;
    }
  }
  // total variation between the reweighted planted law and the uniform
  // random law over ordered signed pairs
  double tv = 0.0;
  for (const auto& [key, w] : weighted) {
    const double qw = w / weighted_total;
    const double qp = plain.count(key) ? static_cast<double>(plain.at(key)) / plain_total : 0.0;
    tv += std::fabs(qw - qp);
  }
  tv *= 0.5;
  CHECK(tv < 0.05);
}

TEST_CASE("dimacs round trip") {
  const Formula f = two_clause_fixture();
  const std::string path = "test_roundtrip.cnf";
  write_dimacs(f, path);
  const Formula g = read_dimacs(path);
  CHECK(g.n() == f.n());
  CHECK(g.m() == f.m());
  for (int64_t c = 0; c < f.m(); ++c)
    for (int j = 0; j < f.k(); ++j) {
      CHECK(g.var(c, j) == f.var(c, j));
      CHECK(g.sign(c, j) == f.sign(c, j));
    }
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}
