#pragma once

#include <cstdint>
#include <vector>

#include "catbrw/lattice.hpp"
#include "catbrw/measure.hpp"
#include "catbrw/params.hpp"
#include "catbrw/rng.hpp"

namespace catbrw {

// The event-time embedding of the particle system as a generalised Polya urn
// with colours in Z^d: m_n is the occupation measure at the n-th event,
// scaled by the constant kappa below so that the largest mean weight-mass
// increment per step equals one. The weight kernel is (1+lambda_x) delta_x;
// drawing a colour from m_n P and applying the random replacement R^(1) is
// exactly one event of the particle system.

// kappa = lambda0 - (lambda0-lambda)/(1+lambda0); always > 0.
double kappa(const ModelParams& params);

// Mean weighted replacement mass per step from colour x,
//   q_total(x) = Q_x(Z^d), with the closed form
//   kappa * q_total = lambda0 - eps/(1+lambda0)   at x = 0        (= kappa)
//                     lambda + eps/(2d(1+lambda)) at |x|_1 = 1
//                     lambda                      at |x|_1 > 1.
double q_total(const Site& x, const ModelParams& params);

// Full mean kernel row Q_x = (R P)_x as a sparse measure.
SparseMeasure mean_kernel_Q(const Site& x, const ModelParams& params);

// Mean replacement kernel row R_x = E[R^(1)_x]:
//   R_x = (1/kappa) [ ((lambda_x-1)/(1+lambda_x)) delta_x
//                     + (1+lambda_x)^{-1} E[delta_{x+Delta}] ].
// Signed row-wise (the delta_x coefficient is negative when lambda_x < 1).
SparseMeasure mean_kernel_R(const Site& x, const ModelParams& params);

// One draw of the random replacement R^(1)_x: a Bernoulli branch/jump choice
// with parameter lambda_x/(1+lambda_x) and an independent uniform step.
// Branch: +delta_x / kappa (total mass +1/kappa). Jump: (delta_{x+Delta} -
// delta_x)/kappa (total mass 0).
SparseMeasure sample_replacement(const Site& x, const ModelParams& params, Rng& rng);

// Urn composition snapshot. kappa * m is the (integer) particle count
// measure; the summary ratios below are what the audit and the equivalence
// tests consume.
struct MvppState {
  SparseMeasure m;          // m_n = Pi / kappa
  std::uint64_t n = 0;      // step count
  double weight_total = 0;  // m_n P(Z^d) = sum_x m_n(x) (1+lambda_x)
};

struct MvppSummary {
  std::uint64_t n = 0;
  double m_origin_fraction = 0.0;   // m_n(0)/m_n(Z^d)
  double mass_total = 0.0;          // m_n(Z^d)
  double weight_total = 0.0;        // m_n P(Z^d)
  double weight_total_over_n = 0.0;
  double q_running_average = 0.0;   // (1/n) sum_i q_total(xi(i))
};

struct MvppRun {
  std::vector<MvppSummary> checkpoints;
  MvppState final_state;
};

// Exact urn dynamics from m_0 = delta_origin / kappa: at each step, colour
// xi ~ m_n P / m_n P(Z^d), then an independent replacement at xi. Colour
// sampling uses the same flat particle array as the event-driven engine
// (uniform weight 1+lambda plus the origin surcharge), so a step is O(1).
MvppRun mvpp_run(const ModelParams& params, std::uint64_t n_steps, std::uint64_t seed,
                 const std::vector<std::uint64_t>& checkpoints = {});

// Numerical audit of the constants behind the localisation argument.
struct ConstantsReport {
  ModelParams params;
  double kappa = 0.0;
  double c = 0.0;       // lambda/kappa + (1-lambda/kappa)(lambda0-lambda-1)/(lambda0-lambda)
  double theta = 0.0;   // (lambda+eps_slack)/kappa with eps_slack = (c*kappa-lambda)/2
  double eps_slack = 0.0;
  double q_lyapunov = 4.0 / 3.0;  // the drift exponent choice
  double rho1 = 0.0;    // lambda0 (lambda0-lambda) / (1+lambda0)
  double rho2 = 0.0;    // (lambda0-lambda)(1 - 1/(1+lambda0) - 1/(2d(1+lambda))) + (2d-1)/(2d)
  double eta2_upper = 0.0;              // = rho2
  double kappa_minus_lambda = 0.0;
  bool hypothesis_holds = false;        // lambda0 > 2d-1+2d*lambda
  struct Checks {
    bool maxQ_at_origin = false;        // max_x q_total attained at the origin
    bool rho2_lt_rho1 = false;
    bool eta2_lt_kappa_minus_lambda = false;
    bool theta_lt_c = false;
  } checks;
  bool theta_feasible = false;          // c*kappa > lambda, so a valid slack exists
};

ConstantsReport constants_audit(const ModelParams& params);

}  // namespace catbrw
