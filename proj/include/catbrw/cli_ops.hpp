#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "catbrw/brw_sim.hpp"
#include "catbrw/measure.hpp"
#include "catbrw/params.hpp"

namespace catbrw {

// Floating-point rendering for every CSV/JSON surface: 17 significant
// digits, which round-trips IEEE doubles exactly.
std::string format_double(double v);

// Regime classification and per-point summary of the (lambda, lambda0)
// phase diagram at fixed d. Labels are a pure function of
// (d, lambda, lambda0, gamma_d estimate); simulation only fills the
// occupancy columns.
struct PhasePoint {
  double lambda = 0.0;
  double lambda0 = 0.0;
  double epsilon = 0.0;
  std::string classification;  // "no stationary measure" | "conjectured localisation" | "localisation (proved)"
  bool weak_loc_bound_applies = false;  // lambda0 > 1 + lambda
  double weak_loc_lower_bound = 0.0;    // (lambda0-lambda-1)/(lambda0-lambda)
  bool nu0_exists = false;
  double nu0 = 0.0;
  double predicted_growth = 0.0;  // lambda + eps * nu0 where nu0 exists, else lambda
  double sim_pi0_mean = 0.0;
  double sim_pi0_se = 0.0;
  std::uint64_t replicas = 0;
};

struct PhaseScanConfig {
  int d = 1;
  std::vector<double> lambdas;
  std::vector<double> lambda0s;
  double t_max = 10.0;
  std::uint64_t replicas = 50;
  std::uint64_t particle_cap = 10'000'000;
  std::uint64_t seed = 1;
  int threads = 1;
  int horizon = 0;  // pmf horizon; 0 -> per-dimension default
};

std::string classify_regime(int d, double lambda, double lambda0, double gamma_estimate);

// Grid points fan out to a worker pool; each point's replicas run
// sequentially on streams derived from (seed, point index), and results are
// gathered in grid order.
std::vector<PhasePoint> phase_scan(const PhaseScanConfig& config);

// Cross-route comparison: the balance-equation profile, the QSD
// push-forward, and simulated occupancies, with pairwise total-variation
// distances on a reporting window plus the growth-rate check.
struct CompareConfig {
  ModelParams params;
  int radius = 40;        // deterministic solvers' truncation radius
  int report_radius = 10; // per-site table window (L-inf)
  double t_max = 10.0;
  std::uint64_t replicas = 200;
  std::uint64_t particle_cap = 10'000'000;
  std::uint64_t seed = 1;
  int threads = 1;
  int horizon = 0;
};

struct CompareReport {
  ModelParams params;
  bool balance_exists = false;
  double u_star = 0.0;
  double nu0_balance = 0.0;
  double qsd_theta = 0.0;
  double tv_qsd_vs_balance = 0.0;   // full-support TV of the two deterministic routes
  double tv_sim_vs_balance = 0.0;   // windowed TV, remainder mass lumped
  double tv_sim_vs_qsd = 0.0;
  double sim_pi0_mean = 0.0;
  double sim_pi0_se = 0.0;
  double growth_slope = 0.0;        // OLS slope of mean log N over the upper half window
  double growth_slope_se = 0.0;
  double growth_predicted = 0.0;    // lambda + eps*nu0 (when the profile exists)
  struct SiteRow {
    Site site;
    double balance_nu = 0.0;
    double qsd_limit = 0.0;
    double sim_mean = 0.0;
    double sim_se = 0.0;
  };
  std::vector<SiteRow> sites;
};

CompareReport compare_routes(const CompareConfig& config);

// Least-squares slope of y against x; se is the standard error of the slope.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};
SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace catbrw
