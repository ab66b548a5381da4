#include <doctest.h>

#include <cmath>

#include "catbrw/mvpp.hpp"
#include "catbrw/rng.hpp"

using namespace catbrw;

namespace {
Site unit_site() {
  Site e1;
  e1[0] = 1;
  return e1;
}
Site far_site() {
  Site x;
  x[0] = 2;
  return x;
}
}  // namespace

TEST_CASE("kappa closed form") {
  CHECK(kappa(ModelParams{1, 0.2, 2.0}) == doctest::Approx(1.4).epsilon(1e-15));
  CHECK(kappa(ModelParams{2, 0.7, 0.7}) == doctest::Approx(0.7).epsilon(1e-15));  // eps = 0
  CHECK(kappa(ModelParams{3, 0.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("q_total: the three-case rate table") {
  ModelParams p{1, 0.2, 2.0};
  CHECK(q_total(Site::origin(), p) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(q_total(unit_site(), p) == doctest::Approx(0.95 / 1.4).epsilon(1e-12));
  CHECK(q_total(far_site(), p) == doctest::Approx(0.2 / 1.4).epsilon(1e-12));
}

TEST_CASE("mean kernel rows sum to q_total") {
  for (int d : {1, 2, 3}) {
    ModelParams p{d, 0.3, 2.5};
    for (const Site& x : {Site::origin(), unit_site(), far_site()}) {
      SparseMeasure q = mean_kernel_Q(x, p);
      CHECK(q.total_mass() == doctest::Approx(q_total(x, p)).epsilon(1e-12));
      // R rows have total (lambda_x := rate at x): (2 lambda_x/(1+lambda_x) - 1 + 1/(1+lambda_x)) ... = lambda_x/(1+lambda_x) branch surplus
      SparseMeasure r = mean_kernel_R(x, p);
      double lx = p.rate_at(is_origin(x));
      CHECK(r.total_mass() == doctest::Approx(lx / ((1.0 + lx) * kappa(p))).epsilon(1e-12));
    }
  }
}

TEST_CASE("the maximum of q_total: above the threshold it sits at the origin") {
  SUBCASE("localisation hypothesis holds") {
    ModelParams p{1, 0.2, 2.0};  // lambda0 > 2d-1+2d*lambda = 1.4
    CHECK(q_total(Site::origin(), p) == 1.0);
    CHECK(q_total(unit_site(), p) < 1.0);
    CHECK(q_total(far_site(), p) < 1.0);
  }
  SUBCASE("below the hypothesis the origin can still carry the maximum") {
    // lambda0 = 1.3 < 1.4: rho2 < rho1 fails, yet max q_total stays at 0
    ModelParams p{1, 0.2, 1.3};
    CHECK(q_total(unit_site(), p) < 1.0);
  }
  SUBCASE("for small lambda0 the maximiser moves to a unit-norm site") {
    ModelParams p{1, 0.2, 0.5};
    CHECK(q_total(unit_site(), p) > 1.0);
  }
}

TEST_CASE("sample_replacement: atoms and totals") {
  ModelParams p{1, 0.2, 2.0};
  const double k = kappa(p);
  Rng rng(17);
  int branches = 0;
  const int trials = 100000;
  SparseMeasure mean_at_origin;
  for (int i = 0; i < trials; ++i) {
    SparseMeasure m = sample_replacement(Site::origin(), p, rng);
    double total = m.total_mass();
    if (std::abs(total - 1.0 / k) < 1e-12) {
      ++branches;  // branch: +delta_x / kappa
      CHECK(m(Site::origin()) == doctest::Approx(1.0 / k));
    } else {
      CHECK(total == doctest::Approx(0.0));  // jump: mass moves, net zero
      CHECK(m(Site::origin()) == doctest::Approx(-1.0 / k));
    }
    for (const auto& [site, w] : m) mean_at_origin.add(site, w / trials);
  }
  // the empirical mean matches the closed-form mean kernel atom-by-atom
  SparseMeasure r = mean_kernel_R(Site::origin(), p);
  const double p_branch = 2.0 / 3.0;
  double se3 = 3.0 * std::sqrt(p_branch * (1.0 - p_branch) / trials) / k;
  for (const auto& [site, w] : r) CHECK(std::abs(mean_at_origin(site) - w) <= se3 + 1e-6);
  double se_b = std::sqrt(p_branch * (1 - p_branch) / trials);
  CHECK(std::abs(static_cast<double>(branches) / trials - p_branch) <= 3.0 * se_b);
}

TEST_CASE("mvpp_run: composition bookkeeping") {
  ModelParams p{1, 0.2, 2.0};
  const double k = kappa(p);
  MvppRun run = mvpp_run(p, 2000, 9, {1, 2000});
  // kappa * m has integer values; total mass = (1 + #branches)/kappa
  const MvppState& fin = run.final_state;
  double mass = 0.0;
  for (const auto& [site, w] : fin.m) {
    double count = w * k;
    CHECK(count == doctest::Approx(std::round(count)).epsilon(1e-12));
    CHECK(count >= 1.0);
    mass += w;
  }
  CHECK(mass == doctest::Approx(fin.m.total_mass()));
  // weight total = sum m(x) (1+lambda_x)
  double weight = 0.0;
  for (const auto& [site, w] : fin.m) weight += w * (1.0 + p.rate_at(is_origin(site)));
  CHECK(weight == doctest::Approx(fin.weight_total).epsilon(1e-12));
  CHECK(run.checkpoints.front().n == 1);
  CHECK(run.checkpoints.front().mass_total >= 1.0 / k);
}

TEST_CASE("mvpp_run: (A'1) running averages stay above c - 0.05") {
  ModelParams p{1, 0.2, 2.0};
  const double c = constants_audit(p).c;
  std::vector<std::uint64_t> marks;
  for (std::uint64_t n = 1000; n <= 10000; n += 1000) marks.push_back(n);
  MvppRun run = mvpp_run(p, 10000, 4242, marks);
  for (const MvppSummary& s : run.checkpoints) {
    CHECK(s.q_running_average >= c - 0.05);
    CHECK(s.weight_total_over_n >= c - 0.05);
  }
}

TEST_CASE("mvpp_run: requires lambda > 0") {
  CHECK_THROWS(mvpp_run(ModelParams{1, 0.0, 1.0}, 10, 1, {}));
}

TEST_CASE("constants_audit") {
  SUBCASE("exact values at d=1, lambda=0.2, lambda0=2") {
    ConstantsReport rep = constants_audit(ModelParams{1, 0.2, 2.0});
    CHECK(rep.kappa == doctest::Approx(1.4).epsilon(1e-15));
    CHECK(rep.c == doctest::Approx(11.0 / 21.0).epsilon(1e-14));  // 0.523810
    CHECK(rep.rho1 == doctest::Approx(1.2).epsilon(1e-14));
    CHECK(rep.rho2 == doctest::Approx(0.95).epsilon(1e-14));
    CHECK(rep.eta2_upper == rep.rho2);
    CHECK(rep.hypothesis_holds);
    CHECK(rep.checks.maxQ_at_origin);
    CHECK(rep.checks.rho2_lt_rho1);
    CHECK(rep.checks.eta2_lt_kappa_minus_lambda);
    CHECK(rep.checks.theta_lt_c);
    CHECK(rep.theta < rep.c);
    CHECK(rep.theta == doctest::Approx((0.2 + rep.eps_slack) / 1.4));
  }
  SUBCASE("below the threshold: lambda0 = 1.3 < 1.4") {
    ConstantsReport rep = constants_audit(ModelParams{1, 0.2, 1.3});
    CHECK(rep.rho1 == doctest::Approx(0.62174).epsilon(1e-4));
    CHECK(rep.rho2 == doctest::Approx(0.66341).epsilon(1e-4));
    CHECK(!rep.checks.rho2_lt_rho1);
    CHECK(!rep.hypothesis_holds);
  }
  SUBCASE("degenerate lambda = lambda0") {
    ConstantsReport rep = constants_audit(ModelParams{1, 0.7, 0.7});
    CHECK(!rep.hypothesis_holds);
    CHECK(!rep.checks.rho2_lt_rho1);
  }
  SUBCASE("threshold equivalences on a random grid") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
      int d = 1 + static_cast<int>(rng.uniform_index(3));
      double lambda = 0.05 + 0.95 * rng.u01();
      double lambda0 = lambda + 3.0 * rng.u01() + 1e-3;
      ConstantsReport rep = constants_audit(ModelParams{d, lambda, lambda0});
      bool hypothesis = lambda0 > 2.0 * d - 1.0 + 2.0 * d * lambda;
      CHECK(rep.checks.rho2_lt_rho1 == hypothesis);
      CHECK(rep.checks.eta2_lt_kappa_minus_lambda == hypothesis);
    }
  }
}
