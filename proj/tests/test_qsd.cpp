#include <doctest.h>

#include <cmath>

#include "catbrw/mvpp.hpp"
#include "catbrw/qsd.hpp"
#include "catbrw/walk_analysis.hpp"

using namespace catbrw;

namespace {
const ModelParams kParams{1, 0.2, 2.0};

Site site1d(int x) {
  Site s;
  s[0] = x;
  return s;
}
}  // namespace

TEST_CASE("killed generator: the literal rate table at d=1, lambda=0.2, lambda0=2") {
  BoxIndex box(1, 10);
  KilledGenerator gen = build_Y_generator(kParams, box);

  const std::size_t origin = static_cast<std::size_t>(box.origin_index());
  const std::size_t unit = static_cast<std::size_t>(box.encode(site1d(1)));
  const std::size_t far = static_cast<std::size_t>(box.encode(site1d(5)));

  // origin: jump rate (1+lambda)/(1+lambda0) = 0.4, no death
  CHECK(gen.total_rate[origin] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(gen.death_rate[origin] == 0.0);

  // |x|=1: death 1.8 (1 - 1/3 - 1/2.4) = 0.45; jumps 1 + extra 0.75 to 0
  CHECK(gen.death_rate[unit] == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(gen.total_rate[unit] == doctest::Approx(0.45 + 1.0 + 0.75).epsilon(1e-12));
  auto row = gen.row(static_cast<std::int64_t>(unit));
  REQUIRE(row.size() == 2);
  for (const auto& e : row) {
    if (e.target == box.origin_index())
      CHECK(e.rate == doctest::Approx(0.5 + 1.8 / 2.4).epsilon(1e-12));
    else
      CHECK(e.rate == doctest::Approx(0.5).epsilon(1e-12));
  }

  // |x|>1: death rho1 = 1.2, uniform neighbour rate 1
  CHECK(gen.death_rate[far] == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(gen.total_rate[far] == doctest::Approx(2.2).epsilon(1e-12));

  // row sums: jump + death = total
  for (std::size_t i = 0; i < gen.total_rate.size(); ++i) {
    double jumps = 0.0;
    for (const auto& e : gen.row(static_cast<std::int64_t>(i))) jumps += e.rate;
    CHECK(jumps + gen.death_rate[i] == doctest::Approx(gen.total_rate[i]).epsilon(1e-12));
  }
}

TEST_CASE("killed generator: boundary exits are reassigned to death") {
  BoxIndex box(2, 3);
  KilledGenerator gen = build_Y_generator(ModelParams{2, 0.2, 4.0}, box);
  Site corner;
  corner[0] = 3;
  corner[1] = 3;
  std::size_t idx = static_cast<std::size_t>(box.encode(corner));
  // two of four neighbours leave the box; their rate 1/4 each moves to death
  double rho1 = 3.8 * 4.0 / 5.0;
  CHECK(gen.death_rate[idx] == doctest::Approx(rho1 + 0.5).epsilon(1e-12));
  CHECK(gen.death_rate_interior[idx] == doctest::Approx(rho1).epsilon(1e-12));
}

TEST_CASE("Y equals kappa (Q - I with killing): rates against the mean kernel") {
  // off-diagonal rates of Y to y are kappa * Q_x({y}) for x != y; the death
  // rate is kappa * (1 - Q_x(Z^d)); the diagonal is -(kappa - kappa Q_x({x})).
  for (int d : {1, 2}) {
    ModelParams params{d, 0.3, 3.0 + d};
    const double k = kappa(params);
    BoxIndex box(d, 6);
    KilledGenerator gen = build_Y_generator(params, box);
    for (std::int64_t idx = 0; idx < box.size(); ++idx) {
      const Site x = box.decode(idx);
      if (norm_linf(x) >= box.radius()) continue;  // interior rows only
      SparseMeasure q = mean_kernel_Q(x, params);
      for (const auto& e : gen.row(idx)) {
        Site y = box.decode(e.target);
        CHECK(e.rate == doctest::Approx(k * q(y)).epsilon(1e-11));
      }
      CHECK(gen.death_rate[static_cast<std::size_t>(idx)] ==
            doctest::Approx(k * (1.0 - q.total_mass())).epsilon(1e-11));
    }
  }
}

TEST_CASE("qsd_power_iteration: convergence, positivity, fixed point") {
  BoxIndex box(1, 40);
  KilledGenerator gen = build_Y_generator(kParams, box);
  QsdSolution sol = qsd_power_iteration(gen);

  double sum = 0.0;
  for (double v : sol.nu) {
    CHECK(v > 0.0);  // strictly positive on the box interior
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.residual <= kQsdTolerance);

  // the analytic decay rate at these parameters: with r solving
  // r^2 + 3.6 r - 1 = 0, theta = 0.4 (1 - 2.5 r)
  const double r = -1.8 + std::sqrt(1.8 * 1.8 + 1.0);
  CHECK(sol.decay_theta == doctest::Approx(0.4 * (1.0 - 2.5 * r)).epsilon(1e-9));

  // decay rate below the far-field death rate rho2 = 0.95
  ConstantsReport rep = constants_audit(kParams);
  CHECK(sol.decay_theta <= rep.rho2);

  // geometric profile away from the origin, symmetric in x -> -x; the ratio
  // check stops where nu decays to the max-norm residual tolerance
  BoxIndex b(1, 40);
  auto at = [&](int x) { return sol.nu[static_cast<std::size_t>(b.encode(site1d(x)))]; };
  for (int x = 1; x < 30; ++x) {
    CHECK(at(x) == doctest::Approx(at(-x)).epsilon(1e-9));
    if (x >= 2 && at(x) > 1e-9) CHECK(at(x + 1) / at(x) == doctest::Approx(r).epsilon(1e-6));
  }
}

TEST_CASE("scale coupling: theta(Y) = kappa * theta(X) with both generators built") {
  BoxIndex box(1, 30);
  QsdSolution y = qsd_power_iteration(build_Y_generator(kParams, box));
  QsdSolution x = qsd_power_iteration(build_X_generator(kParams, box));
  CHECK(y.decay_theta == doctest::Approx(kappa(kParams) * x.decay_theta).epsilon(1e-10));
  // same eigenvector
  for (std::size_t i = 0; i < y.nu.size(); ++i) CHECK(y.nu[i] == doctest::Approx(x.nu[i]).epsilon(1e-8));
}

TEST_CASE("truncation stability: doubling the radius moves the local profile by < 1e-6 TV") {
  QsdSolution small = qsd_power_iteration(build_Y_generator(kParams, BoxIndex(1, 20)));
  QsdSolution large = qsd_power_iteration(build_Y_generator(kParams, BoxIndex(1, 40)));
  BoxIndex bs(1, 20), bl(1, 40);
  double l1 = 0.0;
  for (int x = -10; x <= 10; ++x) {
    double a = small.nu[static_cast<std::size_t>(bs.encode(site1d(x)))];
    double b = large.nu[static_cast<std::size_t>(bl.encode(site1d(x)))];
    l1 += std::abs(a - b);
  }
  CHECK(0.5 * l1 < 1e-6);
}

TEST_CASE("limit_measure: push-forward properties and the cross-route check") {
  BoxIndex box(1, 40);
  QsdSolution sol = qsd_power_iteration(build_Y_generator(kParams, box));
  SparseMeasure limit = limit_measure(sol, kParams);

  CHECK(limit.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(limit.min_value() >= 0.0);
  // mass symmetry under x -> -x
  for (int x = 1; x <= 20; ++x) CHECK(limit(site1d(x)) == doctest::Approx(limit(site1d(-x))).epsilon(1e-10));

  // agreement with the balance-equation route (two independent computations)
  ReturnTimePmf pmf = return_time_pmf(1, 2000);
  Nu0Result root = solve_nu0(kParams, pmf);
  REQUIRE(root.ok());
  SparseMeasure balance = nu_profile(kParams, root.u_star, box).to_measure();
  CHECK(tv_distance(limit, balance) <= 1e-3);
  CHECK(limit(Site::origin()) == doctest::Approx(0.58840).epsilon(2e-5));
}

TEST_CASE("cross-route agreement holds in d=2 and d=3") {
  struct Case {
    ModelParams params;
    int radius;
  } cases[] = {{{2, 0.1, 4.0}, 16}, {{3, 0.5, 9.0}, 10}};  // both above the proved threshold
  for (const Case& c : cases) {
    ReturnTimePmf pmf = return_time_pmf(c.params.d, 1000);
    Nu0Result root = solve_nu0(c.params, pmf);
    REQUIRE(root.ok());
    SparseMeasure balance = nu_profile(c.params, root.u_star, BoxIndex(c.params.d, c.radius)).to_measure();
    QsdSolution sol = qsd_power_iteration(build_Y_generator(c.params, BoxIndex(c.params.d, c.radius)));
    SparseMeasure limit = limit_measure(sol, c.params);
    CHECK(tv_distance(limit, balance) <= 1e-9);
    CHECK(limit(Site::origin()) == doctest::Approx(root.nu0).epsilon(1e-9));
    const double rho2 = c.params.epsilon() * (1.0 - 1.0 / (1.0 + c.params.lambda0) -
                                              1.0 / (2.0 * c.params.d * (1.0 + c.params.lambda))) +
                        (2.0 * c.params.d - 1.0) / (2.0 * c.params.d);
    CHECK(sol.decay_theta <= rho2);
  }
}

TEST_CASE("qsd in d=2: symmetry under coordinate permutation and sign flips") {
  ModelParams params{2, 0.2, 4.0};
  BoxIndex box(2, 12);
  QsdSolution sol = qsd_power_iteration(build_Y_generator(params, box), 1e-12, 4'000'000);
  auto at = [&](int a, int b) {
    Site s;
    s[0] = a;
    s[1] = b;
    return sol.nu[static_cast<std::size_t>(box.encode(s))];
  };
  for (int a = 0; a <= 5; ++a)
    for (int b = 0; b <= 5; ++b) {
      CHECK(at(a, b) == doctest::Approx(at(b, a)).epsilon(1e-9));
      CHECK(at(a, b) == doctest::Approx(at(-a, b)).epsilon(1e-9));
      CHECK(at(a, b) == doctest::Approx(at(a, -b)).epsilon(1e-9));
    }
}

TEST_CASE("killed generator preconditions") {
  CHECK_THROWS(build_Y_generator(ModelParams{1, 0.0, 1.0}, BoxIndex(1, 10)));   // lambda > 0
  CHECK_THROWS(build_Y_generator(ModelParams{1, 0.5, 0.5}, BoxIndex(1, 10)));   // lambda0 > lambda
  CHECK_THROWS(build_Y_generator(kParams, BoxIndex(1, 1)));                     // radius >= 2
}
