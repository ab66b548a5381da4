#include "catbrw/mvpp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "catbrw/brw_sim.hpp"

namespace catbrw {

double kappa(const ModelParams& params) {
  params.validate();
  double k = params.lambda0 - params.epsilon() / (1.0 + params.lambda0);
  if (!(k > 0.0)) throw std::runtime_error("kappa: expected kappa > 0");
  return k;
}

double q_total(const Site& x, const ModelParams& params) {
  const double eps = params.epsilon();
  const double k = kappa(params);
  const int l1 = norm_l1(x);
  if (l1 == 0) return 1.0;  // kappa normalises the origin row exactly
  if (l1 == 1) return (params.lambda + eps / (2.0 * params.d * (1.0 + params.lambda))) / k;
  return params.lambda / k;
}

SparseMeasure mean_kernel_Q(const Site& x, const ModelParams& params) {
  const double k = kappa(params);
  const double lx = params.rate_at(is_origin(x));
  SparseMeasure q;
  // kappa Q_x = (lambda_x - 1) delta_x + (1+lambda_x)^{-1} E[(1+lambda_{x+D}) delta_{x+D}]
  q.add(x, (lx - 1.0) / k);
  const Neighbors ns = neighbors(x, params.d);
  const double w = 1.0 / (k * (1.0 + lx) * 2.0 * params.d);
  for (const Site& y : ns) q.add(y, w * (1.0 + params.rate_at(is_origin(y))));
  return q;
}

SparseMeasure mean_kernel_R(const Site& x, const ModelParams& params) {
  const double k = kappa(params);
  const double lx = params.rate_at(is_origin(x));
  SparseMeasure r;
  r.add(x, (lx - 1.0) / ((1.0 + lx) * k));
  const Neighbors ns = neighbors(x, params.d);
  const double w = 1.0 / (k * (1.0 + lx) * 2.0 * params.d);
  for (const Site& y : ns) r.add(y, w);
  return r;
}

SparseMeasure sample_replacement(const Site& x, const ModelParams& params, Rng& rng) {
  const double k = kappa(params);
  const double lx = params.rate_at(is_origin(x));
  const bool branch = rng.u01() < lx / (1.0 + lx);
  const int dir = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(2 * params.d)));
  SparseMeasure out;
  if (branch) {
    out.add(x, 1.0 / k);
  } else {
    out.add(step(x, dir), 1.0 / k);
    out.add(x, -1.0 / k);
  }
  return out;
}

MvppRun mvpp_run(const ModelParams& params, std::uint64_t n_steps, std::uint64_t seed,
                 const std::vector<std::uint64_t>& checkpoints) {
  params.validate_positive_lambda();  // lambda > 0 keeps m positive a.s.
  const double k = kappa(params);
  const double eps = params.epsilon();
  Rng rng(seed);

  // flat particle array + origin index set: colour sampling by weight
  // (1+lambda) uniformly with the origin surcharge is O(1)
  PopulationState state;

  std::vector<std::uint64_t> marks = checkpoints;
  if (marks.empty()) marks.push_back(n_steps);

  MvppRun out;
  double q_sum = 0.0;
  std::size_t next_mark = 0;

  auto summary_at = [&](std::uint64_t n) {
    MvppSummary s;
    s.n = n;
    const double n_tot = static_cast<double>(state.n_total());
    const double n0 = static_cast<double>(state.n_origin());
    s.m_origin_fraction = n0 / n_tot;
    s.mass_total = n_tot / k;
    s.weight_total = (n_tot * (1.0 + params.lambda) + eps * n0) / k;
    s.weight_total_over_n = n == 0 ? 0.0 : s.weight_total / static_cast<double>(n);
    s.q_running_average = n == 0 ? 0.0 : q_sum / static_cast<double>(n);
    return s;
  };

  for (std::uint64_t n = 1; n <= n_steps; ++n) {
    const std::size_t n_tot = state.n_total();
    const std::size_t n0 = state.n_origin();
    const double uniform_part = static_cast<double>(n_tot) * (1.0 + params.lambda);
    const double weight_total = uniform_part + eps * static_cast<double>(n0);

    // colour xi ~ m P / m P(Z^d)
    std::size_t chosen;
    if (rng.u01() < uniform_part / weight_total)
      chosen = static_cast<std::size_t>(rng.uniform_index(n_tot));
    else
      chosen = state.origin_member(static_cast<std::size_t>(rng.uniform_index(n0)));

    const Site xi = state.position(chosen);
    q_sum += q_total(xi, params);

    // replacement R^(1)_xi: Bernoulli(lambda_xi/(1+lambda_xi)) branch, else jump
    const double lxi = params.rate_at(is_origin(xi));
    if (rng.u01() < lxi / (1.0 + lxi)) {
      state.branch_particle(chosen);
    } else {
      const int dir = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(2 * params.d)));
      state.move_particle(chosen, step(xi, dir));
    }

    while (next_mark < marks.size() && marks[next_mark] == n) {
      out.checkpoints.push_back(summary_at(n));
      ++next_mark;
    }
  }
  while (next_mark < marks.size()) {
    out.checkpoints.push_back(summary_at(n_steps));
    ++next_mark;
  }

  // final composition as a measure; kappa * m has the integer particle counts
  std::unordered_map<Site, std::uint64_t, SiteHash> counts;
  for (const Site& p : state.particles()) ++counts[p];
  MvppState fin;
  fin.n = n_steps;
  for (const auto& [site, cnt] : counts) fin.m.set(site, static_cast<double>(cnt) / k);
  fin.weight_total =
      (static_cast<double>(state.n_total()) * (1.0 + params.lambda) + eps * static_cast<double>(state.n_origin())) / k;
  if (fin.m.min_value() < 0.0) throw std::runtime_error("mvpp_run: negativity detected (implementation bug)");
  out.final_state = std::move(fin);
  return out;
}

ConstantsReport constants_audit(const ModelParams& params) {
  params.validate_positive_lambda();
  ConstantsReport rep;
  rep.params = params;
  const double eps = params.epsilon();
  const double d2 = 2.0 * params.d;

  rep.kappa = kappa(params);
  rep.kappa_minus_lambda = rep.kappa - params.lambda;
  rep.c = eps > 0.0
              ? params.lambda / rep.kappa + (1.0 - params.lambda / rep.kappa) * (eps - 1.0) / eps
              : params.lambda / rep.kappa;
  rep.rho1 = params.lambda0 * eps / (1.0 + params.lambda0);
  rep.rho2 = eps * (1.0 - 1.0 / (1.0 + params.lambda0) - 1.0 / (d2 * (1.0 + params.lambda))) + (d2 - 1.0) / d2;
  rep.eta2_upper = rep.rho2;
  rep.hypothesis_holds = params.lambda0 > d2 - 1.0 + d2 * params.lambda;

  // theta slack: any eps' with (lambda+eps')/kappa < c works; take half the gap
  rep.theta_feasible = rep.c * rep.kappa > params.lambda;
  rep.eps_slack = rep.theta_feasible ? 0.5 * (rep.c * rep.kappa - params.lambda) : 0.0;
  rep.theta = rep.theta_feasible ? (params.lambda + rep.eps_slack) / rep.kappa : std::numeric_limits<double>::quiet_NaN();

  // where the maximum of q_total actually sits (the origin value is 1 by the
  // choice of kappa; the unit-norm row can exceed it only for tiny lambda0)
  Site e1;
  e1[0] = 1;
  Site far;
  far[0] = 2;
  const double q1 = q_total(e1, params);
  const double qfar = q_total(far, params);
  rep.checks.maxQ_at_origin = 1.0 >= q1 && 1.0 >= qfar;
  rep.checks.rho2_lt_rho1 = rep.rho2 < rep.rho1;
  rep.checks.eta2_lt_kappa_minus_lambda = rep.eta2_upper < rep.kappa_minus_lambda;
  rep.checks.theta_lt_c = rep.theta_feasible && rep.theta < rep.c;
  return rep;
}

}  // namespace catbrw
