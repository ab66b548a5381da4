// Command-line front end: simulation, deterministic solvers, phase scan and
// cross-route comparison, with reproducible seeded outputs. Every run writes
// a manifest (resolved config + version + seed) alongside its outputs;
// re-running with --config <manifest> reproduces the outputs bit-identically.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "catbrw/brw_sim.hpp"
#include "catbrw/catalyst_moments.hpp"
#include "catbrw/cli_ops.hpp"
#include "catbrw/mvpp.hpp"
#include "catbrw/qsd.hpp"
#include "catbrw/version.hpp"
#include "catbrw/walk_analysis.hpp"

using json = nlohmann::json;
using namespace catbrw;

namespace {

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  return out;
}

std::vector<Site> parse_site_list(const std::string& text, int dim) {
  std::vector<Site> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ';'))
    if (!tok.empty()) out.push_back(parse_site(tok, dim));
  return out;
}

std::string site_column(const Site& s, int dim) {
  std::string t = format_site(s, dim);
  for (char& c : t)
    if (c == ',') c = '_';
  return t;
}

// Flat TOML subset: `key = value` lines with numbers, booleans, quoted
// strings and one-line arrays of numbers. Section headers and nesting are
// not supported; JSON covers the structured cases.
json parse_flat_toml(std::istream& in) {
  json out = json::object();
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) continue;
    if (val.front() == '"' && val.back() == '"' && val.size() >= 2) {
      out[key] = val.substr(1, val.size() - 2);
    } else if (val == "true" || val == "false") {
      out[key] = val == "true";
    } else if (val.front() == '[') {
      std::string body = val.substr(1, val.find_last_of(']') - 1);
      out[key] = parse_double_list(body);
    } else {
      try {
        if (val.find_first_of(".eE") != std::string::npos)
          out[key] = std::stod(val);
        else
          out[key] = std::stoll(val);
      } catch (...) {
        out[key] = val;
      }
    }
  }
  return out;
}

// Config file overrides flags: flags are parsed first, then any key present
// in the file replaces the flag value. A manifest file (with a "config"
// object) is accepted directly.
json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json cfg;
  if (path.size() > 5 && path.substr(path.size() - 5) == ".toml") {
    cfg = parse_flat_toml(in);
  } else {
    in >> cfg;
  }
  if (cfg.contains("config") && cfg["config"].is_object()) cfg = cfg["config"];
  return cfg;
}

template <typename T>
void override_from(const json& cfg, const char* key, T& value) {
  if (cfg.contains(key)) value = cfg[key].get<T>();
}

struct GlobalOpts {
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 1;
  int threads = 1;
  std::string config_path;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

void write_manifest(const GlobalOpts& g, const std::string& subcommand, const json& resolved,
                    const std::vector<std::string>& outputs) {
  json m;
  m["artifact"] = "catbrw";
  m["version"] = kVersion;
  m["subcommand"] = subcommand;
  m["seed"] = g.seed;
  m["config"] = resolved;
  m["outputs"] = outputs;
  write_file(g.out + ".manifest.json", m.dump(2) + "\n");
}

json site_mass_array(const SparseMeasure& m, int dim) {
  json arr = json::array();
  for (const auto& [site, w] : m) arr.push_back(json{{"site", format_site(site, dim)}, {"mass", w}});
  return arr;
}

int cmd_gamma(const GlobalOpts& g, int d, int horizon) {
  if (horizon <= 0) horizon = default_horizon(d);
  ReturnTimePmf pmf = return_time_pmf(d, horizon);
  GammaEstimate est = gamma_never_return(pmf);
  json resolved{{"d", d}, {"horizon", horizon}, {"format", g.format}};
  if (g.format == "json") {
    json out{{"d", d},
             {"horizon", horizon},
             {"estimate", est.estimate},
             {"error_bound", est.error_bound},
             {"series_sum", est.series_sum},
             {"tail_correction", est.tail_correction},
             {"pmf_tail_bound", pmf.tail_bound}};
    write_file(g.out, out.dump(2) + "\n");
  } else {
    std::string csv = "d,horizon,estimate,error_bound,series_sum,tail_correction,pmf_tail_bound\n";
    csv += std::to_string(d) + "," + std::to_string(horizon) + "," + format_double(est.estimate) + "," +
           format_double(est.error_bound) + "," + format_double(est.series_sum) + "," +
           format_double(est.tail_correction) + "," + format_double(pmf.tail_bound) + "\n";
    write_file(g.out, csv);
  }
  write_manifest(g, "gamma", resolved, {g.out});
  std::printf("gamma_%d = %.9g +/- %.3g (K = %d)\n", d, est.estimate, est.error_bound, horizon);
  return 0;
}

int cmd_solve_nu(const GlobalOpts& g, int d, double lambda, double lambda0, int radius, int horizon) {
  if (horizon <= 0) horizon = default_horizon(d);
  ModelParams params{d, lambda, lambda0};
  ReturnTimePmf pmf = return_time_pmf(d, horizon);
  GammaEstimate gamma = gamma_never_return(pmf);
  Nu0Result root = solve_nu0(params, pmf);

  json out{{"d", d},
           {"lambda", lambda},
           {"lambda0", lambda0},
           {"epsilon", params.epsilon()},
           {"horizon", horizon},
           {"gamma_d", {{"estimate", gamma.estimate}, {"error_bound", gamma.error_bound}}},
           {"near_critical", root.near_critical}};
  if (root.ok()) {
    StationarySolution sol = nu_profile(params, root.u_star, BoxIndex(d, radius));
    out["status"] = "ok";
    out["u_star"] = root.u_star;
    out["nu0"] = root.nu0;
    out["radius"] = radius;
    out["residuals"] = {{"balance_eq1", sol.residual_eq1}, {"balance_eq2", sol.residual_eq2}};
    out["mass_defect"] = sol.mass_defect;
    out["mass_budget"] = sol.mass_budget;
    out["nu"] = site_mass_array(sol.to_measure(), d);
  } else {
    out["status"] = "no_stationary_measure";
  }
  write_file(g.out, out.dump(2) + "\n");
  json resolved{{"d", d}, {"lambda", lambda}, {"lambda0", lambda0}, {"radius", radius}, {"horizon", horizon}};
  write_manifest(g, "solve-nu", resolved, {g.out});
  std::printf("%s\n", root.ok() ? "stationary profile written" : "no stationary measure (epsilon <= gamma_d)");
  return 0;
}

std::string trajectory_csv(const SimConfig& config, const std::vector<Trajectory>& trajs) {
  std::string csv = "replica,t,N,n0";
  for (const Site& s : config.observe_sites) csv += ",pi_hat_" + site_column(s, config.params.d);
  csv += ",pi_hat_B,M,A,status\n";
  for (std::size_t r = 0; r < trajs.size(); ++r) {
    for (const ObservationRow& row : trajs[r].rows) {
      csv += std::to_string(r) + "," + format_double(row.t) + "," + std::to_string(row.n_total) + "," +
             std::to_string(row.n_origin);
      for (std::size_t b = 0; b < config.observe_sites.size(); ++b)
        csv += "," + format_double(static_cast<double>(row.site_counts[b]) / static_cast<double>(row.n_total));
      csv += "," + format_double(row.pi_hat_B) + "," + format_double(row.martingale) + "," +
             format_double(row.rho_integral) + "," + to_string(trajs[r].status) + "\n";
    }
  }
  return csv;
}

std::string summary_csv(const SimConfig& config, const ReplicaStats& stats) {
  std::string csv = "t,quantity,mean,variance,std_error,count\n";
  auto emit = [&](const std::string& name, const std::vector<ColumnStats>& col) {
    for (std::size_t i = 0; i < stats.observe_at.size(); ++i)
      csv += format_double(stats.observe_at[i]) + "," + name + "," + format_double(col[i].mean) + "," +
             format_double(col[i].variance) + "," + format_double(col[i].std_error) + "," +
             std::to_string(col[i].count) + "\n";
  };
  emit("N", stats.n_total);
  emit("pi_hat_origin", stats.pi_hat_origin);
  emit("M", stats.martingale);
  emit("M_squared", stats.martingale_sq);
  emit("A", stats.rho_integral);
  emit("log_N", stats.log_n);
  emit("pi_hat_B", stats.pi_hat_B);
  for (std::size_t b = 0; b < config.observe_sites.size(); ++b)
    emit("pi_hat_" + site_column(config.observe_sites[b], config.params.d), stats.site_pi_hat[b]);
  return csv;
}

int run_sim_command(const GlobalOpts& g, const char* name, SimConfig& config, std::uint64_t replicas) {
  config.validate();
  std::vector<Trajectory> trajs = run_replicas(config, replicas, g.threads);
  write_file(g.out, trajectory_csv(config, trajs));
  std::vector<std::string> outputs{g.out};
  if (replicas > 1) {
    ReplicaStats stats = aggregate_replicas(config, trajs);
    std::string sumpath = g.out + ".summary.csv";
    write_file(sumpath, summary_csv(config, stats));
    outputs.push_back(sumpath);
  }
  std::string sites_str;
  for (std::size_t i = 0; i < config.observe_sites.size(); ++i)
    sites_str += (i ? ";" : "") + format_site(config.observe_sites[i], config.params.d);
  std::string observe_str;
  for (std::size_t i = 0; i < config.observe_at.size(); ++i)
    observe_str += (i ? "," : "") + format_double(config.observe_at[i]);
  json resolved{{"d", config.params.d},
                {"lambda", config.params.lambda},
                {"lambda0", config.params.lambda0},
                {"tmax", config.t_max},
                {"cap", config.particle_cap},
                {"seed", config.seed},
                {"replicas", replicas},
                {"observe", observe_str},
                {"sites", sites_str},
                {"max_events", config.max_events},
                {"threads", g.threads}};
  write_manifest(g, name, resolved, outputs);
  std::printf("%llu replica(s) written\n", static_cast<unsigned long long>(replicas));
  return 0;
}

int cmd_moments(const GlobalOpts& g, int d, double lambda, double lambda0, std::vector<double> times, double dt,
                int radius, bool prop6) {
  ModelParams params{d, lambda, lambda0};
  double t_max = 0.0;
  for (double t : times) t_max = std::max(t_max, t);
  if (radius <= 0) radius = moment_box_radius(t_max);
  BoxIndex box(d, radius);
  MomentOdeOptions opts;
  opts.dt = dt;

  std::string csv = "site,t,u,truncation_budget,step_doubling_error\n";
  std::string prop6_csv = "site,t,u_full,u_catalyst_times_exp,rel_err\n";
  double worst_rel = 0.0;
  for (double t : times) {
    MomentField field = moment_ode(params, box, t, opts);
    for (std::int64_t i = 0; i < box.size(); ++i) {
      double v = field.values[static_cast<std::size_t>(i)];
      if (v < 1e-300) continue;  // keep files small: drop numerically empty sites
      csv += format_site(box.decode(i), d) + "," + format_double(t) + "," + format_double(v) + "," +
             format_double(field.truncation_budget) + "," + format_double(field.step_doubling_error) + "\n";
    }
    if (prop6) {
      ModelParams catalyst{d, 0.0, params.epsilon()};
      MomentField tilted = moment_ode(catalyst, box, t, opts);
      const double scale = std::exp(lambda * t);
      Site e1;
      e1[0] = 1;
      for (const Site& x : {Site::origin(), e1}) {
        double a = field.at(x);
        double b = tilted.at(x) * scale;
        double rel = std::abs(a - b) / std::max(std::abs(a), 1e-300);
        worst_rel = std::max(worst_rel, rel);
        prop6_csv += format_site(x, d) + "," + format_double(t) + "," + format_double(a) + "," + format_double(b) +
                     "," + format_double(rel) + "\n";
      }
    }
  }
  write_file(g.out, csv);
  std::vector<std::string> outputs{g.out};
  if (prop6) {
    std::string p = g.out + ".prop6.csv";
    write_file(p, prop6_csv);
    outputs.push_back(p);
    std::printf("moment-identity worst relative error: %.3g\n", worst_rel);
  }
  std::string times_str_out;
  for (std::size_t i = 0; i < times.size(); ++i) times_str_out += (i ? "," : "") + format_double(times[i]);
  json resolved{{"d", d},   {"lambda", lambda}, {"lambda0", lambda0}, {"times", times_str_out},
                {"dt", dt}, {"radius", radius}, {"prop6", prop6}};
  write_manifest(g, "moments", resolved, outputs);
  return 0;
}

int cmd_mvpp(const GlobalOpts& g, int d, double lambda, double lambda0, std::uint64_t steps, std::uint64_t every) {
  ModelParams params{d, lambda, lambda0};
  std::vector<std::uint64_t> marks;
  for (std::uint64_t n = every; n < steps; n += every) marks.push_back(n);
  marks.push_back(steps);
  MvppRun result = mvpp_run(params, steps, g.seed, marks);
  std::string csv = "n,m_origin_fraction,mass_total,weight_total,weight_total_over_n,q_running_average\n";
  for (const MvppSummary& s : result.checkpoints)
    csv += std::to_string(s.n) + "," + format_double(s.m_origin_fraction) + "," + format_double(s.mass_total) + "," +
           format_double(s.weight_total) + "," + format_double(s.weight_total_over_n) + "," +
           format_double(s.q_running_average) + "\n";
  write_file(g.out, csv);
  json resolved{{"d", d}, {"lambda", lambda}, {"lambda0", lambda0}, {"steps", steps}, {"every", every}, {"seed", g.seed}};
  write_manifest(g, "mvpp", resolved, {g.out});
  return 0;
}

json audit_to_json(const ConstantsReport& rep) {
  return json{{"d", rep.params.d},
              {"lambda", rep.params.lambda},
              {"lambda0", rep.params.lambda0},
              {"kappa", rep.kappa},
              {"c", rep.c},
              {"theta", rep.theta_feasible ? json(rep.theta) : json()},
              {"eps_slack", rep.eps_slack},
              {"q_lyapunov", rep.q_lyapunov},
              {"rho1", rep.rho1},
              {"rho2", rep.rho2},
              {"eta2_upper", rep.eta2_upper},
              {"kappa_minus_lambda", rep.kappa_minus_lambda},
              {"hypothesis_lambda0_gt_2dm1_p_2dlambda", rep.hypothesis_holds},
              {"checks",
               {{"maxQ_at_origin", rep.checks.maxQ_at_origin},
                {"rho2_lt_rho1", rep.checks.rho2_lt_rho1},
                {"eta2_lt_kappa_minus_lambda", rep.checks.eta2_lt_kappa_minus_lambda},
                {"theta_lt_c", rep.checks.theta_lt_c}}}};
}

int cmd_audit(const GlobalOpts& g, int d, double lambda, double lambda0) {
  ConstantsReport rep = constants_audit(ModelParams{d, lambda, lambda0});
  write_file(g.out, audit_to_json(rep).dump(2) + "\n");
  json resolved{{"d", d}, {"lambda", lambda}, {"lambda0", lambda0}};
  write_manifest(g, "audit", resolved, {g.out});
  std::printf("kappa=%.6g c=%.6g rho1=%.6g rho2=%.6g hypothesis=%s\n", rep.kappa, rep.c, rep.rho1, rep.rho2,
              rep.hypothesis_holds ? "true" : "false");
  return 0;
}

int cmd_qsd(const GlobalOpts& g, int d, double lambda, double lambda0, int radius, double tol, bool with_balance,
            int horizon) {
  ModelParams params{d, lambda, lambda0};
  KilledGenerator gen = build_Y_generator(params, BoxIndex(d, radius));
  QsdSolution sol = qsd_power_iteration(gen, tol);
  SparseMeasure limit = limit_measure(sol, params);

  json out{{"d", d},
           {"lambda", lambda},
           {"lambda0", lambda0},
           {"radius", radius},
           {"theta", sol.decay_theta},
           {"residual", sol.residual},
           {"iterations", sol.iterations},
           {"nu", site_mass_array(sol.to_measure(), d)},
           {"limit_measure", site_mass_array(limit, d)}};
  if (!(lambda0 > 2.0 * d - 1.0 + 2.0 * d * lambda))
    out["warning"] =
        "lambda0 <= 2d-1+2d*lambda: the truncated-box QSD exists, but the localisation theory is only certified "
        "above that threshold";
  if (with_balance) {
    if (horizon <= 0) horizon = default_horizon(d);
    ReturnTimePmf pmf = return_time_pmf(d, horizon);
    Nu0Result root = solve_nu0(params, pmf);
    if (root.ok()) {
      SparseMeasure balance = nu_profile(params, root.u_star, BoxIndex(d, radius)).to_measure();
      out["tv_vs_balance"] = tv_distance(limit, balance);
    } else {
      out["tv_vs_balance"] = nullptr;
    }
  }
  write_file(g.out, out.dump(2) + "\n");
  json resolved{{"d", d},     {"lambda", lambda},        {"lambda0", lambda0}, {"radius", radius},
                {"tol", tol}, {"balance", with_balance}, {"horizon", horizon}};
  write_manifest(g, "qsd", resolved, {g.out});
  std::printf("theta=%.9g residual=%.3g iters=%llu\n", sol.decay_theta, sol.residual,
              static_cast<unsigned long long>(sol.iterations));
  return 0;
}

int cmd_phase_scan(const GlobalOpts& g, PhaseScanConfig config) {
  config.seed = g.seed;
  config.threads = g.threads;
  std::vector<PhasePoint> points = phase_scan(config);
  std::string csv =
      "lambda,lambda0,epsilon,classification,weak_loc_bound_applies,weak_loc_lower_bound,nu0_exists,nu0,"
      "predicted_growth,sim_pi0_mean,sim_pi0_se,replicas\n";
  for (const PhasePoint& p : points) {
    csv += format_double(p.lambda) + "," + format_double(p.lambda0) + "," + format_double(p.epsilon) + ",\"" +
           p.classification + "\"," + (p.weak_loc_bound_applies ? "true" : "false") + "," +
           format_double(p.weak_loc_lower_bound) + "," + (p.nu0_exists ? "true" : "false") + "," +
           format_double(p.nu0) + "," + format_double(p.predicted_growth) + "," + format_double(p.sim_pi0_mean) +
           "," + format_double(p.sim_pi0_se) + "," + std::to_string(p.replicas) + "\n";
  }
  write_file(g.out, csv);
  std::string ls, l0s;
  for (std::size_t i = 0; i < config.lambdas.size(); ++i) ls += (i ? "," : "") + format_double(config.lambdas[i]);
  for (std::size_t i = 0; i < config.lambda0s.size(); ++i) l0s += (i ? "," : "") + format_double(config.lambda0s[i]);
  json resolved{{"d", config.d},        {"lambda_grid", ls},
                {"lambda0_grid", l0s},  {"tmax", config.t_max},
                {"replicas", config.replicas}, {"cap", config.particle_cap},
                {"seed", config.seed},  {"threads", config.threads},
                {"horizon", config.horizon}};
  write_manifest(g, "phase-scan", resolved, {g.out});
  std::printf("%zu grid points written\n", points.size());
  return 0;
}

int cmd_compare(const GlobalOpts& g, CompareConfig config) {
  config.seed = g.seed;
  config.threads = g.threads;
  CompareReport rep = compare_routes(config);
  json out{{"d", rep.params.d},
           {"lambda", rep.params.lambda},
           {"lambda0", rep.params.lambda0},
           {"balance_exists", rep.balance_exists},
           {"u_star", rep.u_star},
           {"nu0_balance", rep.nu0_balance},
           {"qsd_theta", rep.qsd_theta},
           {"tv_qsd_vs_balance", rep.tv_qsd_vs_balance},
           {"tv_sim_vs_balance", rep.tv_sim_vs_balance},
           {"tv_sim_vs_qsd", rep.tv_sim_vs_qsd},
           {"sim_pi0_mean", rep.sim_pi0_mean},
           {"sim_pi0_se", rep.sim_pi0_se},
           {"growth_slope", rep.growth_slope},
           {"growth_slope_se", rep.growth_slope_se},
           {"growth_predicted", rep.growth_predicted}};
  write_file(g.out, out.dump(2) + "\n");
  std::string sites_path = g.out + ".sites.csv";
  std::string csv = "site,balance_nu,qsd_limit,sim_mean,sim_se\n";
  for (const auto& row : rep.sites)
    csv += format_site(row.site, rep.params.d) + "," + format_double(row.balance_nu) + "," +
           format_double(row.qsd_limit) + "," + format_double(row.sim_mean) + "," + format_double(row.sim_se) + "\n";
  write_file(sites_path, csv);
  json resolved{{"d", config.params.d},
                {"lambda", config.params.lambda},
                {"lambda0", config.params.lambda0},
                {"radius", config.radius},
                {"report_radius", config.report_radius},
                {"tmax", config.t_max},
                {"replicas", config.replicas},
                {"cap", config.particle_cap},
                {"seed", config.seed},
                {"threads", config.threads}};
  write_manifest(g, "compare", resolved, {g.out, sites_path});
  std::printf("TV(qsd,balance)=%.3g TV(sim,balance)=%.3g slope=%.5g (predicted %.5g)\n", rep.tv_qsd_vs_balance,
              rep.tv_sim_vs_balance, rep.growth_slope, rep.growth_predicted);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"catalytic branching random walk toolkit"};
  app.require_subcommand(1);
  // global flags (--seed, --out, ...) may appear after the subcommand
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--out", g.out, "output path (default: catbrw_<subcommand>.<ext>)");
  app.add_option("--format", g.format, "csv or json, where the subcommand supports both")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", g.seed, "base RNG seed");
  app.add_option("--threads", g.threads, "worker threads for replicas / scan points");
  app.add_option("--config", g.config_path, "JSON or flat TOML file; values override flags");

  int d = 1;
  double lambda = 0.2, lambda0 = 2.0, epsilon = 0.33;
  int horizon = 0, radius = 0;
  double t_max = 10.0, dt = 0.0, tol = kQsdTolerance;
  std::uint64_t cap = 10'000'000, replicas = 1, steps = 10000, every = 1000;
  std::string observe_str, sites_str, times_str = "1,2,5", lambda_grid, lambda0_grid;
  bool prop6 = false, with_balance = false;

  auto add_model_flags = [&](CLI::App* sub) {
    sub->add_option("--d", d, "lattice dimension (1..6)");
    sub->add_option("--lambda", lambda, "branch rate off the origin");
    sub->add_option("--lambda0", lambda0, "branch rate at the origin");
  };

  CLI::App* sc_gamma = app.add_subcommand("gamma", "never-return probability gamma_d from the return-time series");
  sc_gamma->add_option("--d", d, "lattice dimension (1..6)");
  sc_gamma->add_option("--horizon", horizon, "pmf horizon K (0 = per-dimension default)");

  CLI::App* sc_solve =
      app.add_subcommand("solve-nu", "balance-equation stationary profile (root solve + boundary value problem)");
  add_model_flags(sc_solve);
  sc_solve->add_option("--radius", radius, "truncation radius of the profile box (0 = 40)");
  sc_solve->add_option("--horizon", horizon, "pmf horizon K (0 = default)");

  CLI::App* sc_sim = app.add_subcommand("simulate", "event-driven simulation of the particle system");
  add_model_flags(sc_sim);
  sc_sim->add_option("--tmax", t_max, "time horizon");
  sc_sim->add_option("--cap", cap, "particle cap (stop-and-report)");
  sc_sim->add_option("--replicas", replicas, "independent replicas");
  sc_sim->add_option("--observe", observe_str, "comma-separated observation times");
  sc_sim->add_option("--sites", sites_str, "semicolon-separated sites, e.g. \"0;1;-1\"");

  CLI::App* sc_cat = app.add_subcommand("catalyst", "catalyst-only comparison process (branching at the origin only)");
  sc_cat->add_option("--d", d, "lattice dimension (1..6)");
  sc_cat->add_option("--epsilon", epsilon, "branch rate at the origin");
  sc_cat->add_option("--tmax", t_max, "time horizon");
  sc_cat->add_option("--cap", cap, "particle cap");
  sc_cat->add_option("--replicas", replicas, "independent replicas");
  sc_cat->add_option("--observe", observe_str, "comma-separated observation times");
  sc_cat->add_option("--sites", sites_str, "semicolon-separated sites");

  CLI::App* sc_mom = app.add_subcommand("moments", "expected occupation field by deterministic integration");
  add_model_flags(sc_mom);
  sc_mom->add_option("--times", times_str, "comma-separated output times");
  sc_mom->add_option("--dt", dt, "integrator step (0 = default 1e-3*min(1,1/lambda0))");
  sc_mom->add_option("--radius", radius, "box radius (0 = 4*t+2 heuristic)");
  sc_mom->add_flag("--prop6", prop6, "also emit the full-vs-catalyst moment identity table");

  CLI::App* sc_mvpp = app.add_subcommand("mvpp", "event-time urn embedding of the particle system");
  add_model_flags(sc_mvpp);
  sc_mvpp->add_option("--steps", steps, "number of urn steps");
  sc_mvpp->add_option("--every", every, "checkpoint spacing");

  CLI::App* sc_audit =
      app.add_subcommand("audit", "constants behind the localisation argument (kappa, c, rho1, rho2, theta)");
  add_model_flags(sc_audit);

  CLI::App* sc_qsd =
      app.add_subcommand("qsd", "quasi-stationary distribution of the killed process and its push-forward");
  add_model_flags(sc_qsd);
  sc_qsd->add_option("--radius", radius, "truncation radius (0 = 40)");
  sc_qsd->add_option("--tol", tol, "residual tolerance");
  sc_qsd->add_flag("--balance", with_balance, "also solve the balance route and report the TV distance");
  sc_qsd->add_option("--horizon", horizon, "pmf horizon for the balance route");

  CLI::App* sc_scan = app.add_subcommand("phase-scan", "regime classification over a (lambda, lambda0) grid");
  sc_scan->add_option("--d", d, "lattice dimension (1..6)");
  sc_scan->add_option("--lambda-grid", lambda_grid, "comma-separated lambda values")->required();
  sc_scan->add_option("--lambda0-grid", lambda0_grid, "comma-separated lambda0 values")->required();
  sc_scan->add_option("--tmax", t_max, "simulation horizon per point");
  sc_scan->add_option("--replicas", replicas, "replicas per point (0 = classification only)");
  sc_scan->add_option("--cap", cap, "particle cap");
  sc_scan->add_option("--horizon", horizon, "pmf horizon (0 = default)");

  CLI::App* sc_cmp = app.add_subcommand("compare", "balance vs QSD vs simulation cross-route report");
  add_model_flags(sc_cmp);
  sc_cmp->add_option("--radius", radius, "deterministic truncation radius (0 = 40)");
  sc_cmp->add_option("--tmax", t_max, "simulation horizon");
  sc_cmp->add_option("--replicas", replicas, "simulation replicas");
  sc_cmp->add_option("--cap", cap, "particle cap");

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = json::object();
    if (!g.config_path.empty()) cfg = load_config_file(g.config_path);
    override_from(cfg, "d", d);
    override_from(cfg, "lambda", lambda);
    override_from(cfg, "lambda0", lambda0);
    override_from(cfg, "epsilon", epsilon);
    override_from(cfg, "horizon", horizon);
    override_from(cfg, "radius", radius);
    override_from(cfg, "tmax", t_max);
    override_from(cfg, "dt", dt);
    override_from(cfg, "tol", tol);
    override_from(cfg, "cap", cap);
    override_from(cfg, "replicas", replicas);
    override_from(cfg, "steps", steps);
    override_from(cfg, "every", every);
    override_from(cfg, "observe", observe_str);
    override_from(cfg, "sites", sites_str);
    override_from(cfg, "times", times_str);
    override_from(cfg, "lambda_grid", lambda_grid);
    override_from(cfg, "lambda0_grid", lambda0_grid);
    override_from(cfg, "prop6", prop6);
    override_from(cfg, "balance", with_balance);
    override_from(cfg, "seed", g.seed);
    override_from(cfg, "threads", g.threads);
    override_from(cfg, "format", g.format);

    auto default_out = [&](const std::string& name, const std::string& ext) {
      if (g.out.empty()) g.out = "catbrw_" + name + "." + ext;
    };

    if (*sc_gamma) {
      default_out("gamma", g.format);
      return cmd_gamma(g, d, horizon);
    }
    if (*sc_solve) {
      default_out("solve_nu", "json");
      return cmd_solve_nu(g, d, lambda, lambda0, radius > 0 ? radius : 40, horizon);
    }
    if (*sc_sim || *sc_cat) {
      SimConfig config;
      if (*sc_cat) {
        config.params = ModelParams{d, 0.0, epsilon};
        config.allow_zero_lambda = true;
      } else {
        config.params = ModelParams{d, lambda, lambda0};
      }
      config.t_max = t_max;
      config.particle_cap = cap;
      config.seed = g.seed;
      config.observe_at = observe_str.empty() ? std::vector<double>{t_max} : parse_double_list(observe_str);
      config.observe_sites = parse_site_list(sites_str, config.params.d);
      default_out(*sc_cat ? "catalyst" : "simulate", "csv");
      return run_sim_command(g, *sc_cat ? "catalyst" : "simulate", config, replicas);
    }
    if (*sc_mom) {
      default_out("moments", "csv");
      return cmd_moments(g, d, lambda, lambda0, parse_double_list(times_str), dt, radius, prop6);
    }
    if (*sc_mvpp) {
      default_out("mvpp", "csv");
      return cmd_mvpp(g, d, lambda, lambda0, steps, every);
    }
    if (*sc_audit) {
      default_out("audit", "json");
      return cmd_audit(g, d, lambda, lambda0);
    }
    if (*sc_qsd) {
      default_out("qsd", "json");
      return cmd_qsd(g, d, lambda, lambda0, radius > 0 ? radius : 40, tol, with_balance, horizon);
    }
    if (*sc_scan) {
      PhaseScanConfig config;
      config.d = d;
      config.lambdas = parse_double_list(lambda_grid);
      config.lambda0s = parse_double_list(lambda0_grid);
      config.t_max = t_max;
      config.replicas = replicas;
      config.particle_cap = cap;
      config.horizon = horizon;
      default_out("phase_scan", "csv");
      return cmd_phase_scan(g, config);
    }
    if (*sc_cmp) {
      CompareConfig config;
      config.params = ModelParams{d, lambda, lambda0};
      config.radius = radius > 0 ? radius : 40;
      config.t_max = t_max;
      config.replicas = replicas > 1 ? replicas : 200;
      config.particle_cap = cap;
      default_out("compare", "json");
      return cmd_compare(g, config);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
