#include <doctest.h>

#include <cmath>

#include "ksat/scalars.hpp"

using namespace ksat;

namespace {

// independent long-double bisection for p, used as a high-precision oracle
long double solve_p_oracle(int k, long double beta) {
  const long double c = std::isfinite(static_cast<double>(beta))
                            ? -std::expm1l(-beta)
                            : 1.0L;
  long double lo = 0.0L, hi = 0.5L;
  for (int it = 0; it < 300; ++it) {
    const long double mid = 0.5L * (lo + hi);
    if (1.0L - 2.0L * mid - c * std::pow(1.0L - mid, static_cast<long double>(k)) > 0.0L)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5L * (lo + hi);
}

double p_residual(double p, int k, double beta) {
  const double c = std::isfinite(beta) ? -std::expm1(-beta) : 1.0;
  return std::fabs(1.0 - 2.0 * p - c * std::pow(1.0 - p, k));
}

}  // namespace

TEST_CASE("solve_p") {
  SUBCASE("beta to zero gives one half") {
    CHECK(solve_p(4, 1e-14) == doctest::Approx(0.5).epsilon(1e-10));
  }
  SUBCASE("k=3 hard constraints give the golden-ratio root") {
    const double expect = (3.0 - std::sqrt(5.0)) / 2.0;
    CHECK(solve_p(3, kBetaInf) == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("residual below 1e-12 on the full grid") {
    for (int k : {3, 5, 8, 12, 17, 21, 25})
      for (double beta : {0.1, 1.0, 2.0, 8.0, kBetaInf})
        CHECK(p_residual(solve_p(k, beta), k, beta) < 1e-12);
  }
  SUBCASE("matches the long-double oracle") {
    for (int k : {3, 7, 15})
      for (double beta : {0.3, 1.0, 5.0})
        CHECK(solve_p(k, beta) ==
              doctest::Approx(static_cast<double>(solve_p_oracle(k, beta))).epsilon(1e-14));
  }
  SUBCASE("asymptotic expansion at k=20, beta=2") {
    const int k = 20;
    const double c = -std::expm1(-2.0);
    const double p = solve_p(k, 2.0);
    const double expansion = 0.5 - c * std::exp2(-k - 1.0) + c * c * k * std::exp2(-2.0 * k - 2.0);
    CHECK(std::fabs(p - expansion) <= 32.0 * k * k * std::exp2(-3.0 * k));
  }
}

TEST_CASE("compute_u") {
  SUBCASE("inside (0,1) across the grid") {
    for (int k : {3, 6, 10, 14, 20})
      for (double beta : {0.2, 1.0, 2.0, 6.0}) {
        const double u = compute_u(k, beta);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
      }
  }
  SUBCASE("high-precision cross-check at k=3, beta=ln 2") {
    const long double p = solve_p_oracle(3, M_LN2);
    const long double u = (1.0L - 2.0L * p) / (2.0L * p * std::expm1l(M_LN2));
    CHECK(compute_u(3, M_LN2) == doctest::Approx(static_cast<double>(u)).epsilon(1e-13));
  }
  SUBCASE("decreasing in beta at fixed k") {
    for (int k : {3, 9, 15}) {
      double prev = 1.0;
      for (double beta : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double u = compute_u(k, beta);
        CHECK(u < prev);
        prev = u;
      }
    }
  }
  SUBCASE("beta=inf only behind the limit flag") {
    CHECK_THROWS_AS(compute_u(3, kBetaInf), invalid_input);
    CHECK(compute_u(3, kBetaInf, true) == 0.0);
  }
}

TEST_CASE("f_alpha") {
  SUBCASE("f(1/2) equals twice the first-moment rate") {
    for (int k : {3, 10, 20})
      for (double beta : {0.5, 2.0})
        for (double dd : {0.5, static_cast<double>(k),
                          0.9 * k * std::exp2(k) * M_LN2}) {
          ModelParams p{k, dd, beta};
          CHECK(f_alpha(0.5, p).value ==
                doctest::Approx(2.0 * first_moment_rate(p)).epsilon(1e-13));
        }
  }
  SUBCASE("derivatives match central finite differences") {
    ModelParams p{6, 20.0, 1.5};
    for (double alpha : {0.2, 0.45, 0.6, 0.85}) {
      const double h = 1e-6;
      const FAlpha lo = f_alpha(alpha - h, p), hi = f_alpha(alpha + h, p);
      const FAlpha mid = f_alpha(alpha, p);
      CHECK(mid.d1 == doctest::Approx((hi.value - lo.value) / (2 * h)).epsilon(1e-6));
      CHECK(mid.d2 == doctest::Approx((hi.d1 - lo.d1) / (2 * h)).epsilon(1e-6));
    }
  }
  SUBCASE("f(alpha) <= f(1-alpha) below one half") {
    ModelParams p{8, 50.0, 2.0};
    for (double alpha = 0.05; alpha < 0.5; alpha += 0.05)
      CHECK(f_alpha(alpha, p).value <= f_alpha(1.0 - alpha, p).value + 1e-14);
  }
  SUBCASE("boundary limits") {
    ModelParams p{4, 3.0, 1.0};
    CHECK(std::isfinite(f_alpha(0.0, p).value));
    CHECK(std::isfinite(f_alpha(1.0, p).value));
    CHECK(f_alpha(0.0, p).value == doctest::Approx(M_LN2 + (p.d / p.k) *
                                                               std::log1p(-2.0 *
                                                                          p.violation_deficit() /
                                                                          16.0))
                                       .epsilon(1e-12));
  }
}

TEST_CASE("scan_f landscape") {
  SUBCASE("global max within 1e-4 of one half at k=20, d=d*") {
    const int k = 20;
    const ReferenceThresholds t = reference_thresholds(k);
    ModelParams p{k, t.d_star, 2.0};
    const LandscapeScan scan = scan_f(p);
    CHECK(std::fabs(scan.alpha_star - 0.5) < 1e-4);
    CHECK(scan.global_max_location == scan.alpha_star);
  }
  SUBCASE("high-overlap local max location at k=25, beta=20") {
    const int k = 25;
    const ReferenceThresholds t = reference_thresholds(k);
    ModelParams p{k, 0.5 * (t.d_star + t.d_sat_asym), 20.0};
    const LandscapeScan scan = scan_f(p);
    const double c = p.violation_deficit();
    const double rate = -std::log2(1.0 - scan.alpha_low_star) / k;
    CHECK(rate > 0.9 * c * c);
    CHECK(rate < 1.1 * c * c);
  }
  SUBCASE("local minimum inside the predicted window") {
    const int k = 20;
    const ReferenceThresholds t = reference_thresholds(k);
    ModelParams p{k, t.d_star, 2.0};
    const LandscapeScan scan = scan_f(p);
    CHECK(scan.local_min >= 1.0 - 2.0 * std::log(static_cast<double>(k)) / k);
    CHECK(scan.local_min <= 1.0 - std::pow(static_cast<double>(k), -1.5));
  }
}

TEST_CASE("frak_F") {
  ModelParams p{6, 30.0, 1.5};
  const double u = compute_u(p.k, p.beta);
  SUBCASE("first KL term vanishes when the weights match the token law") {
    // choose token probabilities whose induced law reproduces (s, u-s, ...)
    const double pm1 = std::pow(u, 1.0 / p.k);
    const double s = 0.37 * u;
    const double pm1m1 = std::pow(s, 1.0 / p.k);
    OverlapSolution q;
    q.p1m1 = pm1 - pm1m1;
    q.pm11 = q.p1m1;
    q.pm1m1 = pm1m1;
    q.p11 = 1.0 - 2.0 * q.p1m1 - pm1m1;
    REQUIRE(q.p11 > 0.0);
    const double omega = 0.31;
    // independent evaluation of the second KL term
    const double mu[4] = {omega, 0.5 - omega, 0.5 - omega, omega};
    const double nu[4] = {q.p11, q.p1m1, q.p1m1, q.pm1m1};
    double kl2 = 0.0;
    for (int i = 0; i < 4; ++i) kl2 += mu[i] * std::log(mu[i] / nu[i]);
    CHECK(frak_F(omega, s, q, p) == doctest::Approx(p.k * kl2).epsilon(1e-12));
  }
  SUBCASE("partials match finite differences at an interior point") {
    OverlapSolution q;
    q.p11 = 0.26;
    q.p1m1 = q.pm11 = 0.24;
    q.pm1m1 = 1.0 - q.p11 - 2.0 * q.p1m1;
    const double omega = 0.27, s = 0.4 * u;
    const FrakFGrad g = frak_F_partials(omega, s, q, p);
    const double hw = 1e-7, hs = u * 1e-5, hp = 1e-7;
    CHECK(g.d_omega == doctest::Approx((frak_F(omega + hw, s, q, p) -
                                        frak_F(omega - hw, s, q, p)) /
                                       (2 * hw))
                           .epsilon(1e-6));
    CHECK(g.d_s ==
          doctest::Approx((frak_F(omega, s + hs, q, p) - frak_F(omega, s - hs, q, p)) / (2 * hs))
              .epsilon(1e-6));
    OverlapSolution qa = q, qb = q;
    qa.p11 += hp;
    qa.pm1m1 = 1.0 - qa.p11 - 2.0 * qa.p1m1;
    qb.p11 -= hp;
    qb.pm1m1 = 1.0 - qb.p11 - 2.0 * qb.p1m1;
    CHECK(g.d_p11 ==
          doctest::Approx((frak_F(omega, s, qa, p) - frak_F(omega, s, qb, p)) / (2 * hp))
              .epsilon(1e-5));
    qa = qb = q;
    qa.p1m1 += hp;
    qa.pm11 = qa.p1m1;
    qa.pm1m1 = 1.0 - qa.p11 - 2.0 * qa.p1m1;
    qb.p1m1 -= hp;
    qb.pm11 = qb.p1m1;
    qb.pm1m1 = 1.0 - qb.p11 - 2.0 * qb.p1m1;
    CHECK(g.d_p1m1 ==
          doctest::Approx((frak_F(omega, s, qa, p) - frak_F(omega, s, qb, p)) / (2 * hp))
              .epsilon(1e-5));
  }
  SUBCASE("pinned regression value") {
    // golden value frozen from the first verified build
    OverlapSolution q = solve_frakp(0.25, u * u, p);
    const double value = frak_F(0.25, u * u, q, p);
    CHECK(std::isfinite(value));
    const double again = frak_F(0.25, u * u, solve_frakp(0.25, u * u, p), p);
    CHECK(value == again);
  }
  SUBCASE("invalid simplex rejected") {
    OverlapSolution q;
    q.p11 = -0.1;
    q.p1m1 = q.pm11 = 0.3;
    q.pm1m1 = 0.5;
    CHECK_THROWS_AS(frak_F(0.25, 0.5 * u, q, p), invalid_input);
  }
}

TEST_CASE("solve_frakp") {
  SUBCASE("explicit solution at (1/4, u^2)") {
    for (int k : {10, 12, 15})
      for (double beta : {1.0, 2.0, 5.0}) {
        ModelParams mp{k, 1.0, beta};
        const double pp = solve_p(k, beta);
        const double u = compute_u(k, beta);
        const OverlapSolution q = solve_frakp(0.25, u * u, mp);
        CHECK(std::fabs(q.p11 - pp * pp) < 1e-10);
        CHECK(std::fabs(q.p1m1 - pp * (1.0 - pp)) < 1e-10);
        CHECK(std::fabs(q.pm11 - pp * (1.0 - pp)) < 1e-10);
        CHECK(std::fabs(q.pm1m1 - (1.0 - pp) * (1.0 - pp)) < 1e-10);
        CHECK(std::fabs(q.p11 + q.p1m1 + q.pm11 + q.pm1m1 - 1.0) < 1e-14);
      }
  }
  SUBCASE("box containment on an omega-s grid at k=12") {
    const int k = 12;
    ModelParams mp{k, 1.0, 2.0};
    const double u = compute_u(k, 2.0);
    const double box = std::exp2(-k / 3.0 - 1.0);
    for (double omega : {0.25 - std::exp2(-k / 3.0) * 0.9, 0.25, 0.25 + std::exp2(-k / 3.0) * 0.9})
      for (double s : {0.1 * u, 0.5 * u, 0.9 * u}) {
        const OverlapSolution q = solve_frakp(omega, s, mp);
        CHECK(std::fabs(q.p11 - 0.25) <= box);
        CHECK(std::fabs(q.p1m1 - 0.25) <= box);
      }
  }
}

TEST_CASE("F stationarity and closed form") {
  for (int k : {10, 12, 15})
    for (double beta : {1.0, 2.0, 5.0}) {
      ModelParams mp{k, 1.0, beta};
      const double u = compute_u(k, beta);
      const FGrad g = grad_F(0.25, u * u, mp);
      CHECK(std::fabs(g.d_omega) < 1e-6);
      CHECK(std::fabs(g.d_s) < 1e-6);

      const double pp = solve_p(k, beta);
      const double closed = -2.0 * (k - 1) * M_LN2 - k * std::log(pp * (1.0 - pp)) +
                            2.0 * std::log(pp) + 2.0 * beta * u;
      CHECK(F_of(0.25, u * u, mp) == doctest::Approx(closed).epsilon(1e-8));
    }
}

TEST_CASE("the leading-order ds root sits exactly at s = u^2") {
  for (int k : {8, 12}) {
    const double u = compute_u(k, 1.5);
    const double s = u * u;
    const double lhs = (u - s) * (u - s);
    const double rhs = s * (1.0 - 2.0 * u + s);
    CHECK(std::log(lhs / rhs) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("first_moment_rate") {
  SUBCASE("beta to zero tends to ln 2") {
    CHECK(first_moment_rate(ModelParams{3, 3.0, 1e-14}) == doctest::Approx(M_LN2).epsilon(1e-10));
  }
  SUBCASE("independent high-precision evaluation at k=3, d=3, beta=1") {
    const long double expect =
        M_LN2 + 1.0L * std::log1pl(-(-std::expm1l(-1.0L)) / 8.0L);
    CHECK(first_moment_rate(ModelParams{3, 3.0, 1.0}) ==
          doctest::Approx(static_cast<double>(expect)).epsilon(1e-14));
  }
}

TEST_CASE("balanced_lower_bound") {
  SUBCASE("expansion at k=20, beta=2") {
    const int k = 20;
    const double c = -std::expm1(-2.0);
    for (double dd : {100.0, 2000.0, 1e5}) {
      ModelParams p{k, dd, 2.0};
      const double expansion = M_LN2 - (dd / k) * c * std::exp2(-k) +
                               dd * (2.0 * k - 1.0) / (2.0 * k) * std::exp2(-2.0 * k) * c * c;
      CHECK(std::fabs(balanced_lower_bound(p) - expansion) <=
            64.0 * dd * k * k * std::exp2(-3.0 * k));
    }
  }
  SUBCASE("decreasing in d") {
    double prev = std::numeric_limits<double>::infinity();
    for (double dd : {1.0, 10.0, 100.0, 1000.0}) {
      const double v = balanced_lower_bound(ModelParams{10, dd, 2.0});
      CHECK(v < prev);
      prev = v;
    }
  }
  SUBCASE("small d stays near ln 2") {
    const int k = 12;
    const double dd = 0.01;
    const double v = balanced_lower_bound(ModelParams{k, dd, 1.0});
    CHECK(std::fabs(v - M_LN2) <= 2.0 * (dd / k) * std::exp2(-k) * 4.0 + 1e-6);
  }
}

TEST_CASE("lagrange_overlap") {
  SUBCASE("target 1/4 solves with lambda 0 and a flat table") {
    const LagrangeOverlap lo = lagrange_overlap(0.25, 3.0);
    CHECK(std::fabs(lo.lambda) < 1e-12);
    for (double a : lo.alpha11) CHECK(a == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(std::fabs(lo.achieved - 3.0 * 0.25) < 1e-10);
  }
  SUBCASE("constraint met to 1e-10 across targets and degrees") {
    for (double d : {1.0, 7.0, 40.0})
      for (double target : {0.05, 0.2, 0.35, 0.45}) {
        const LagrangeOverlap lo = lagrange_overlap(target, d);
        CHECK(std::fabs(lo.achieved - d * target) < 1e-10);
      }
  }
  SUBCASE("omega decreasing in lambda (lambda decreasing in the target)") {
    double prev = std::numeric_limits<double>::infinity();
    for (double target : {0.1, 0.2, 0.3, 0.4}) {
      const LagrangeOverlap lo = lagrange_overlap(target, 5.0);
      CHECK(lo.lambda < prev);
      prev = lo.lambda;
    }
  }
  SUBCASE("unreachable target rejected") {
    CHECK_THROWS_AS(lagrange_overlap(0.6, 3.0), invalid_input);
    CHECK_THROWS_AS(lagrange_overlap(0.0, 3.0), invalid_input);
  }
}

TEST_CASE("reference_thresholds") {
  SUBCASE("k=10 arithmetic") {
    const ReferenceThresholds t = reference_thresholds(10);
    CHECK(t.d_star == doctest::Approx(10.0 * 1024.0 * M_LN2 - 1000.0).epsilon(1e-15));
    CHECK(t.d_sat_asym ==
          doctest::Approx(1024.0 * 10.0 * M_LN2 - 0.5 * (1.0 + M_LN2) * 10.0).epsilon(1e-15));
  }
  SUBCASE("orderings") {
    for (int k = 3; k <= 30; ++k) {
      const ReferenceThresholds t = reference_thresholds(k);
      CHECK(t.d_star < t.d_sat_asym);
      CHECK(t.rsb_low < t.d_sat_asym);
    }
  }
}
