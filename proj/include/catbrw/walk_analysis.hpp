#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "catbrw/lattice.hpp"
#include "catbrw/measure.hpp"
#include "catbrw/params.hpp"

namespace catbrw {

// Deterministic computations on the plain discrete-time simple random walk.
// The continuous-time walk with rate-1 jumps has the same embedded chain, so
// the first-return law and the never-return probability gamma_d agree
// between the two pictures; everything here is stated for the discrete walk.

// Law of the first return time tau_0 to the origin, computed exactly up to
// the horizon K:
//   p_n = P(S_n = 0) by the closed-walk convolution identities (below),
//   f_n = p_n - sum_{k<n} f_k p_{n-k}  (first-passage deconvolution).
// Both sequences vanish at odd indices (parity of Z^d).
struct ReturnTimePmf {
  int dim = 0;
  int horizon = 0;              // K
  std::vector<double> pmf;      // pmf[k] = f_k = P(tau_0 = k), k = 0..K
  std::vector<double> cumulative;  // cumulative[k] = sum_{i<=k} f_i
  std::vector<double> p;        // p[k] = P(S_k = 0), k = 0..K

  double sum() const { return cumulative[static_cast<std::size_t>(horizon)]; }
  // Upper bound on sum_{k>K} f_k: f_k <= p_k termwise and the p-tail is
  // extended by the local-CLT power law calibrated in-window.
  double tail_bound = 0.0;
};

// P(S_n = 0) for n = 0..horizon. Exact up to double rounding: the d-dim
// counts split over the number of steps spent in the first coordinate,
//   p^{(d)}_{2n} = sum_m C(2n,2m) d^{-2m} ((d-1)/d)^{2n-2m} q_{2m} p^{(d-1)}_{2n-2m},
// with q the 1-d central binomial weights; terms are all positive and are
// accumulated from log-binomials, so there is no cancellation. d = 1, 2 use
// the classical closed forms q_{2m} and q_{2m}^2.
std::vector<double> return_probabilities(int dim, int horizon);

ReturnTimePmf return_time_pmf(int dim, int horizon);

// gamma_d = P(tau_0 = infinity) = 1 - sum_k f_k.
//   d <= 2: returns 0; error_bound is the remaining pmf mass at the horizon
//           (the convergence evidence — it shrinks as K grows).
//   d >= 3: estimate = 1 - sum_{k<=K} f_k - tail_correction, where the tail
//           of f is modelled as gamma^2 * p_k with p extended by its
//           power-law asymptote; error_bound combines the in-window model
//           deviation with the asymptote drift, both measured, plus a
//           rounding budget.
struct GammaEstimate {
  int dim = 0;
  int horizon = 0;
  double estimate = 0.0;
  double error_bound = 0.0;
  double series_sum = 0.0;       // sum_{k<=K} f_k
  double tail_correction = 0.0;  // estimated sum_{k>K} f_k (0 for d<=2)
};

GammaEstimate gamma_never_return(const ReturnTimePmf& pmf);
GammaEstimate gamma_never_return(int dim, int horizon);

// Default pmf horizons: the long horizon meets the 5e-4 gamma_3 budget.
inline int default_horizon(int dim) { return dim == 3 ? 20000 : 1000; }

// f(u) = 1 + u - E[(1+u)^{-(tau_0 - 1)}], evaluated from the pmf. Strictly
// increasing on (0, inf), f(0+) = gamma_d, f(inf) = inf. The equivalent
// partial-sum form
//   f(u) = u + u sum_k (1+u)^{-k} P(tau_0 >= k+1)
// is evaluated as well and the two must agree within the combined truncation
// tails; a disagreement beyond that is an internal error.
double f_eval(double u, const ReturnTimePmf& pmf);
double f_eval_series(double u, const ReturnTimePmf& pmf);
// Combined truncation tolerance for the two-form agreement at this u.
double f_two_form_tolerance(double u, const ReturnTimePmf& pmf);

// Outcome of solving f(u) = epsilon. When epsilon <= gamma_d there is no
// stationary profile (the no-solution branch of the phase transition); the
// solver reports that as a status rather than throwing, so scans can
// classify points. value() converts the no-solution case into an exception.
class NoStationaryMeasure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Nu0Result {
  enum class Status { ok, no_stationary_measure };
  Status status = Status::no_stationary_measure;
  double u_star = 0.0;  // root of f(u) = epsilon (valid when ok)
  double nu0 = 0.0;     // u_star / epsilon
  double gamma_estimate = 0.0;
  double gamma_error = 0.0;
  // set when |epsilon - gamma| <= 1e-6: the root (or its absence) is within
  // the numerical resolution of the threshold
  bool near_critical = false;
  int iterations = 0;

  bool ok() const { return status == Status::ok; }
  double value_nu0() const {
    if (!ok()) throw NoStationaryMeasure("no probability measure solves the balance equations (epsilon <= gamma_d)");
    return nu0;
  }
};

inline constexpr double kRootTolerance = 1e-12;
inline constexpr int kRootMaxIter = 200;

Nu0Result solve_nu0(const ModelParams& params, const ReturnTimePmf& pmf);

// Full stationary profile on a truncated box: solves the boundary-value
// problem (1+u) h(x) = (2d)^{-1} sum_{y~x} h(y) for 0 < |x|_inf <= R with
// h(0) = 1 and h = 0 outside, by Gauss-Seidel sweeps (diagonally dominant,
// contraction factor 1/(1+u)), then sets nu_x = nu0 h(x).
struct StationarySolution {
  ModelParams params;
  int radius = 0;
  double u_star = 0.0;
  double nu0 = 0.0;                // solve_nu0's origin mass
  std::vector<double> nu;          // indexed by BoxIndex(d, radius)
  double residual_eq1 = 0.0;       // max over interior x != 0
  double residual_eq2 = 0.0;       // redundant origin equation
  double mass_defect = 0.0;        // 1 - sum(nu)
  double mass_budget = 0.0;        // nu0 (2R+3)^d (1+u)^{-R}
  int sweeps = 0;

  SparseMeasure to_measure() const;
  // Origin mass after renormalising the truncated profile to total mass 1.
  double nu0_renormalized() const { return nu[static_cast<std::size_t>(BoxIndex(params.d, radius).origin_index())] / (1.0 - mass_defect); }
};

inline constexpr double kProfileTolerance = 1e-12;

StationarySolution nu_profile(const ModelParams& params, double u_star, const BoxIndex& box);

// Convenience: pmf -> root -> profile with per-dimension default radii.
StationarySolution solve_stationary_profile(const ModelParams& params, int radius, int horizon = 0);

}  // namespace catbrw
