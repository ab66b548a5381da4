#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "catbrw/brw_sim.hpp"
#include "catbrw/lattice.hpp"
#include "catbrw/params.hpp"

namespace catbrw {

// The comparison process: jump rate 1 everywhere, branching only at the
// origin at rate eps, and the deterministic first-moment machinery shared
// with the full process (the expected occupation solves a linear lattice
// ODE; multiplying branch rates by a constant everywhere multiplies the
// moment field by an exponential factor).

// Same engine contract as run(), with lambda = 0 and lambda0 = eps: total
// event rate N + eps * n0.
Trajectory simulate_catalyst(const SimConfig& config);
std::vector<Trajectory> catalyst_replicas(const SimConfig& config, std::uint64_t n_replicas, int threads = 1);

inline SimConfig catalyst_config(int d, double eps) {
  SimConfig c;
  c.params = ModelParams{d, 0.0, eps};
  c.allow_zero_lambda = true;
  return c;
}

// Expected particle counts u(x,t) = E[Pi_t(x)] on a truncated box with
// Dirichlet-zero outside (absorbing truncation: a certified lower bound with
// an explicit leakage budget, computed from the rate-free heat-kernel run).
struct MomentField {
  int dim = 0;
  int radius = 0;
  double t = 0.0;
  double dt = 0.0;
  std::vector<double> values;       // indexed by BoxIndex(dim, radius)
  double total_mass = 0.0;          // sum_x u  ~ E[N_t]
  double truncation_budget = 0.0;   // e^{lambda0 t} * P(walk exits the box by t)
  double step_doubling_error = 0.0; // max-norm Richardson estimate

  double at(const Site& x) const;
};

struct MomentOdeOptions {
  double dt = 0.0;                  // 0 -> default 1e-3 * min(1, 1/lambda0)
  double error_tolerance = 1e-6;    // on the step-doubling estimate
  double budget_tolerance = 1e6;    // leakage guard, generous by default
  bool with_error_estimate = true;  // integrate at dt/2 as well
};

// Classical fixed-step RK4 on du/dt = Lap u + (lambda + eps 1{x=0}) u from
// u(.,0) = delta_origin. The step operator is entrywise nonnegative whenever
// dt * max |diagonal| <= 1 (asserted), so the field stays nonnegative.
MomentField moment_ode(const ModelParams& params, const BoxIndex& box, double t_end, const MomentOdeOptions& opts = {});

// Recommended truncation radius for a horizon (documented heuristic).
inline int moment_box_radius(double t_end) { return static_cast<int>(std::ceil(4.0 * t_end)) + 2; }

// Checks the renewal identity for the catalyst-only first moment,
//   u~(x,t) = eps * int_0^t u~(x,t-s) p_s(0,0) ds + p_t(0,x),
// by trapezoidal quadrature on a uniform grid; p is the heat kernel computed
// by the same integrator with all branch rates zero.
struct CampbellReport {
  Site x;
  double t_end = 0.0;
  double dt_grid = 0.0;
  double max_residual = 0.0;
  double quadrature_error_estimate = 0.0;  // |T_h - T_2h|/3, Richardson
  std::vector<double> times;
  std::vector<double> residuals;
  std::vector<double> u_values;      // u~(x, t) on the grid
  std::vector<double> p00_values;    // p_t(0,0) on the grid
};

CampbellReport campbell_check(const ModelParams& params, const Site& x, double t_end, double dt_grid, int radius = 0);

}  // namespace catbrw
