#pragma once

#include <cstdint>
#include <vector>

#include "catbrw/lattice.hpp"
#include "catbrw/measure.hpp"
#include "catbrw/params.hpp"

namespace catbrw {

// The killed jump process on a truncated box, and its quasi-stationary
// distribution: the second, independent route to the limiting occupation
// profile. Rates, per site class:
//   origin:      jump (1+lambda)/(1+lambda0) split uniformly over 2d
//                neighbours; no death.
//   |x|_1 = 1:   uniform-neighbour jumps at total rate 1, an extra rate
//                eps/(2d(1+lambda)) to the origin, death rate
//                eps (1 - 1/(1+lambda0) - 1/(2d(1+lambda))).
//   |x|_1 > 1:   uniform-neighbour jumps at total rate 1, death rate
//                rho1 = eps lambda0/(1+lambda0).
// Transitions leaving the box are reassigned to death (truncation policy);
// the profile concentrates near the origin, so the perturbation decays
// geometrically in the radius.
struct KilledGenerator {
  ModelParams params;
  int radius = 0;
  double time_scale = 1.0;  // 1 for Y; 1/kappa for X = Y(./kappa)
  // per box index
  std::vector<double> death_rate;   // includes reassigned out-of-box mass
  std::vector<double> total_rate;   // jumps + death
  std::vector<double> death_rate_interior;  // table value before truncation

  // in-box jump targets and rates of one row
  struct Edge {
    std::int64_t target;
    double rate;
  };
  std::vector<Edge> row(std::int64_t idx) const;

  // generator applied from the left: out = nu L restricted to the box
  void apply_left(const std::vector<double>& nu, std::vector<double>& out) const;

  double max_total_rate() const;
};

// Time scale: this is Y = X(kappa .), i.e. kappa * (Q - I with killing).
// When false, builds X itself (all rates divided by kappa); the two decay
// rates must then satisfy theta_Y = kappa * theta_X.
KilledGenerator build_Y_generator(const ModelParams& params, const BoxIndex& box);
KilledGenerator build_X_generator(const ModelParams& params, const BoxIndex& box);

struct QsdSolution {
  ModelParams params;
  int radius = 0;
  std::vector<double> nu;       // QSD on the box, sums to 1
  double decay_theta = 0.0;     // principal decay rate
  double residual = 0.0;        // max-norm of nu L + theta nu
  std::uint64_t iterations = 0;

  SparseMeasure to_measure() const;
};

inline constexpr double kQsdTolerance = 1e-12;

// Principal left eigenvector by power iteration on I + delta L with
// delta = 1/(2 max total_rate) (entrywise nonnegative), renormalising each
// step; theta read off the pre-normalisation mass loss.
QsdSolution qsd_power_iteration(const KilledGenerator& gen, double tol = kQsdTolerance,
                                std::uint64_t max_iter = 2'000'000);

// Push-forward nu R / nu R(Z^d) through the mean replacement kernel: the
// limiting occupation profile. R is signed row-wise; the mixture must come
// out nonnegative (beyond -1e-10 signals a rate bug or an over-aggressive
// truncation).
SparseMeasure limit_measure(const QsdSolution& sol, const ModelParams& params);

}  // namespace catbrw
