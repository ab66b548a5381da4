#include "catbrw/cli_ops.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "catbrw/qsd.hpp"
#include "catbrw/walk_analysis.hpp"

namespace catbrw {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string classify_regime(int d, double lambda, double lambda0, double gamma_estimate) {
  const double eps = lambda0 - lambda;
  if (eps <= gamma_estimate) return "no stationary measure";
  if (lambda0 > 2.0 * d - 1.0 + 2.0 * d * lambda) return "localisation (proved)";
  return "conjectured localisation";
}

std::vector<PhasePoint> phase_scan(const PhaseScanConfig& config) {
  if (config.lambdas.empty() || config.lambda0s.empty())
    throw std::invalid_argument("phase_scan: empty grid");
  const int horizon = config.horizon > 0 ? config.horizon : default_horizon(config.d);
  const ReturnTimePmf pmf = return_time_pmf(config.d, horizon);
  const GammaEstimate gamma = gamma_never_return(pmf);

  std::vector<PhasePoint> points(config.lambdas.size() * config.lambda0s.size());
  auto work = [&](std::size_t k) {
    const double lambda = config.lambdas[k / config.lambda0s.size()];
    const double lambda0 = config.lambda0s[k % config.lambda0s.size()];
    PhasePoint& pt = points[k];
    pt.lambda = lambda;
    pt.lambda0 = lambda0;
    pt.epsilon = lambda0 - lambda;
    if (lambda0 < lambda) {
      pt.classification = "invalid (lambda0 < lambda)";
      return;
    }
    pt.classification = classify_regime(config.d, lambda, lambda0, gamma.estimate);
    pt.weak_loc_bound_applies = lambda0 > 1.0 + lambda;
    pt.weak_loc_lower_bound = pt.weak_loc_bound_applies ? (lambda0 - lambda - 1.0) / (lambda0 - lambda) : 0.0;

    ModelParams params{config.d, lambda, lambda0};
    Nu0Result root = solve_nu0(params, pmf);
    pt.nu0_exists = root.ok();
    pt.nu0 = root.ok() ? root.nu0 : 0.0;
    pt.predicted_growth = lambda + (root.ok() ? pt.epsilon * root.nu0 : 0.0);

    if (config.replicas > 0 && lambda > 0.0) {
      SimConfig sim;
      sim.params = params;
      sim.t_max = config.t_max;
      sim.particle_cap = config.particle_cap;
      sim.seed = derive_stream_seed(config.seed, k);
      sim.observe_at = {config.t_max};
      ReplicaStats stats = replicate(sim, config.replicas, 1);
      pt.sim_pi0_mean = stats.pi_hat_origin[0].mean;
      pt.sim_pi0_se = stats.pi_hat_origin[0].std_error;
      pt.replicas = config.replicas;
    }
  };

  const std::size_t n = points.size();
  if (config.threads <= 1 || n == 1) {
    for (std::size_t k = 0; k < n; ++k) work(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(config.threads), n);
    for (std::size_t i = 0; i < nt; ++i)
      pool.emplace_back([&]() {
        for (;;) {
          std::size_t k = next.fetch_add(1);
          if (k >= n) return;
          work(k);
        }
      });
    for (auto& th : pool) th.join();
  }
  return points;
}

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("fit_slope: need >= 3 points");
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.slope_se = std::sqrt(ss_res / (n - 2.0) / sxx);
  return fit;
}

CompareReport compare_routes(const CompareConfig& config) {
  config.params.validate();
  CompareReport rep;
  rep.params = config.params;
  const int horizon = config.horizon > 0 ? config.horizon : default_horizon(config.params.d);
  const ReturnTimePmf pmf = return_time_pmf(config.params.d, horizon);

  // route 1: balance equations
  Nu0Result root = solve_nu0(config.params, pmf);
  rep.balance_exists = root.ok();
  SparseMeasure balance;
  if (root.ok()) {
    rep.u_star = root.u_star;
    rep.nu0_balance = root.nu0;
    balance = nu_profile(config.params, root.u_star, BoxIndex(config.params.d, config.radius)).to_measure();
    rep.growth_predicted = config.params.lambda + config.params.epsilon() * root.nu0;
  } else {
    rep.growth_predicted = config.params.lambda;
  }

  // route 2: QSD push-forward (defined for lambda0 > lambda > 0)
  SparseMeasure qsd_limit;
  bool have_qsd = false;
  if (config.params.lambda0 > config.params.lambda && config.params.lambda > 0.0) {
    KilledGenerator gen = build_Y_generator(config.params, BoxIndex(config.params.d, config.radius));
    QsdSolution sol = qsd_power_iteration(gen);
    rep.qsd_theta = sol.decay_theta;
    qsd_limit = limit_measure(sol, config.params);
    have_qsd = true;
  }
  if (root.ok() && have_qsd) rep.tv_qsd_vs_balance = tv_distance(qsd_limit, balance);

  // route 3: simulation
  SimConfig sim;
  sim.params = config.params;
  sim.t_max = config.t_max;
  sim.particle_cap = config.particle_cap;
  sim.seed = config.seed;
  const int grid_points = 20;
  for (int i = 1; i <= grid_points; ++i) sim.observe_at.push_back(config.t_max * i / grid_points);
  BoxIndex window(config.params.d, config.report_radius);
  for (std::int64_t idx = 0; idx < window.size(); ++idx) sim.observe_sites.push_back(window.decode(idx));

  ReplicaStats stats = replicate(sim, config.replicas, config.threads);
  const std::size_t last = sim.observe_at.size() - 1;

  // occupancy estimates pool particles across replicas (ratio of means):
  // they target the limit profile directly and avoid the slow ignition
  // transient that the per-replica mean of Pi(x)/N carries at short horizons
  const double mean_n = stats.n_total[last].mean;
  auto pooled = [&](std::size_t b) { return stats.site_count[b][last].mean / mean_n; };
  auto pooled_se = [&](std::size_t b) { return stats.site_count[b][last].std_error / mean_n; };
  const std::size_t origin_slot = static_cast<std::size_t>(window.origin_index());
  rep.sim_pi0_mean = pooled(origin_slot);
  rep.sim_pi0_se = pooled_se(origin_slot);

  // growth rate: slope of log E[N_t] over the upper half of the time grid
  std::vector<double> ts, logn;
  for (std::size_t i = 0; i < sim.observe_at.size(); ++i) {
    if (sim.observe_at[i] * 2.0 < config.t_max) continue;
    ts.push_back(sim.observe_at[i]);
    logn.push_back(std::log(stats.n_total[i].mean));
  }
  SlopeFit fit = fit_slope(ts, logn);
  rep.growth_slope = fit.slope;
  rep.growth_slope_se = fit.slope_se;

  // per-site table + windowed TV (mass outside the window lumped as one bin)
  double sim_window_mass = 0.0;
  for (std::size_t b = 0; b < sim.observe_sites.size(); ++b) sim_window_mass += pooled(b);
  auto windowed_tv = [&](const SparseMeasure& ref) {
    double l1 = 0.0;
    double ref_window = 0.0;
    for (std::size_t b = 0; b < sim.observe_sites.size(); ++b) {
      double r = ref(sim.observe_sites[b]);
      ref_window += r;
      l1 += std::abs(pooled(b) - r);
    }
    l1 += std::abs((1.0 - sim_window_mass) - (1.0 - ref_window));
    return 0.5 * l1;
  };
  if (root.ok()) rep.tv_sim_vs_balance = windowed_tv(balance);
  if (have_qsd) rep.tv_sim_vs_qsd = windowed_tv(qsd_limit);

  for (std::size_t b = 0; b < sim.observe_sites.size(); ++b) {
    CompareReport::SiteRow row;
    row.site = sim.observe_sites[b];
    row.balance_nu = balance(row.site);
    row.qsd_limit = qsd_limit(row.site);
    row.sim_mean = pooled(b);
    row.sim_se = pooled_se(b);
    rep.sites.push_back(row);
  }
  return rep;
}

}  // namespace catbrw
