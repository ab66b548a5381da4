#include "catbrw/catalyst_moments.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace catbrw {

Trajectory simulate_catalyst(const SimConfig& config) {
  if (config.params.lambda != 0.0)
    throw std::invalid_argument("simulate_catalyst: the comparison process has lambda = 0");
  if (config.params.epsilon() <= 0.0)
    throw std::invalid_argument("simulate_catalyst: requires a positive branch rate at the origin");
  SimConfig local = config;
  local.allow_zero_lambda = true;
  return run(local);
}

std::vector<Trajectory> catalyst_replicas(const SimConfig& config, std::uint64_t n_replicas, int threads) {
  if (config.params.lambda != 0.0)
    throw std::invalid_argument("catalyst_replicas: the comparison process has lambda = 0");
  SimConfig local = config;
  local.allow_zero_lambda = true;
  return run_replicas(local, n_replicas, threads);
}

namespace {

// Dirichlet generator on the box: (Gu)(x) = (2d)^{-1} sum_{y~x} u(y) - u(x)
// + lambda_x u(x); neighbours outside the box contribute nothing (their mass
// is absorbed, which is what makes the field a certified lower bound).
struct BoxGenerator {
  int dim;
  std::size_t size;
  std::int64_t origin;
  double lambda, lambda0;
  double inv_2d;
  std::vector<std::int32_t> nbr;  // size * 2d, -1 marks an absorbed edge

  BoxGenerator(const ModelParams& params, const BoxIndex& box)
      : dim(params.d),
        size(static_cast<std::size_t>(box.size())),
        origin(box.origin_index()),
        lambda(params.lambda),
        lambda0(params.lambda0),
        inv_2d(1.0 / (2.0 * params.d)) {
    nbr.assign(size * static_cast<std::size_t>(2 * dim), -1);
    for (std::size_t idx = 0; idx < size; ++idx) {
      const Site x = box.decode(static_cast<std::int64_t>(idx));
      const Neighbors ns = neighbors(x, dim);
      for (int k = 0; k < ns.count; ++k)
        if (box.contains(ns.sites[static_cast<std::size_t>(k)]))
          nbr[idx * static_cast<std::size_t>(2 * dim) + static_cast<std::size_t>(k)] =
              static_cast<std::int32_t>(box.encode(ns.sites[static_cast<std::size_t>(k)]));
    }
  }

  void apply(const std::vector<double>& u, std::vector<double>& out) const {
    const int twod = 2 * dim;
    for (std::size_t idx = 0; idx < size; ++idx) {
      double nb = 0.0;
      const std::int32_t* row = &nbr[idx * static_cast<std::size_t>(twod)];
      for (int k = 0; k < twod; ++k)
        if (row[k] >= 0) nb += u[static_cast<std::size_t>(row[k])];
      out[idx] = inv_2d * nb + (lambda - 1.0) * u[idx];
    }
    out[static_cast<std::size_t>(origin)] += (lambda0 - lambda) * u[static_cast<std::size_t>(origin)];
  }
};

void rk4_integrate(const BoxGenerator& gen, std::vector<double>& u, double t_end, int steps) {
  const double dt = t_end / steps;
  const std::size_t n = u.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (int s = 0; s < steps; ++s) {
    gen.apply(u, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k1[i];
    gen.apply(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k2[i];
    gen.apply(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + dt * k3[i];
    gen.apply(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

}  // namespace

double MomentField::at(const Site& x) const {
  BoxIndex box(dim, radius);
  if (!box.contains(x)) return 0.0;
  return values[static_cast<std::size_t>(box.encode(x))];
}

MomentField moment_ode(const ModelParams& params, const BoxIndex& box, double t_end, const MomentOdeOptions& opts) {
  params.validate();
  if (!(t_end > 0.0)) throw std::invalid_argument("moment_ode: t_end must be > 0");
  if (box.dim() != params.d) throw std::invalid_argument("moment_ode: box dimension mismatch");
  if (box.radius() < moment_box_radius(t_end))
    throw std::invalid_argument("moment_ode: box radius below the 4*t_end + 2 truncation heuristic");
  if (box.size() > 64'000'000) throw std::invalid_argument("moment_ode: box too large");

  double dt = opts.dt > 0.0 ? opts.dt : 1e-3 * std::min(1.0, 1.0 / std::max(params.lambda0, 1e-12));
  int steps = std::max(1, static_cast<int>(std::ceil(t_end / dt)));
  dt = t_end / steps;

  // positivity of the RK4 step operator (all polynomial coefficients of the
  // shifted expansion stay nonnegative while dt * max |diagonal| <= 1)
  const double max_diag = std::max({1.0, std::abs(params.lambda0 - 1.0), std::abs(params.lambda - 1.0)});
  if (dt * max_diag > 1.0) throw std::invalid_argument("moment_ode: dt too large for positivity (dt * max|diag| > 1)");

  const std::size_t size = static_cast<std::size_t>(box.size());
  BoxGenerator gen(params, box);

  std::vector<double> u(size, 0.0);
  u[static_cast<std::size_t>(box.origin_index())] = 1.0;
  rk4_integrate(gen, u, t_end, steps);

  MomentField field;
  field.dim = params.d;
  field.radius = box.radius();
  field.t = t_end;
  field.dt = dt;

  if (opts.with_error_estimate) {
    std::vector<double> fine(size, 0.0);
    fine[static_cast<std::size_t>(box.origin_index())] = 1.0;
    rk4_integrate(gen, fine, t_end, 2 * steps);
    double diff = 0.0;
    for (std::size_t i = 0; i < size; ++i) diff = std::max(diff, std::abs(u[i] - fine[i]));
    field.step_doubling_error = diff / 15.0;
    u.swap(fine);  // keep the fine solution
    if (field.step_doubling_error > opts.error_tolerance)
      throw std::runtime_error("moment_ode: step-doubling error estimate above tolerance");
  }

  double mass = 0.0;
  for (double v : u) mass += v;
  field.total_mass = mass;

  // leakage budget from the rate-free heat-kernel run on the same box
  ModelParams free_walk = params;
  free_walk.lambda = 0.0;
  free_walk.lambda0 = 0.0;
  BoxGenerator heat(free_walk, box);
  std::vector<double> p(size, 0.0);
  p[static_cast<std::size_t>(box.origin_index())] = 1.0;
  rk4_integrate(heat, p, t_end, steps);
  double pmass = 0.0;
  for (double v : p) pmass += v;
  field.truncation_budget = std::exp(params.lambda0 * t_end) * std::max(0.0, 1.0 - pmass);
  if (field.truncation_budget > opts.budget_tolerance)
    throw std::runtime_error("moment_ode: truncation budget above tolerance");

  field.values = std::move(u);
  return field;
}

CampbellReport campbell_check(const ModelParams& params, const Site& x, double t_end, double dt_grid, int radius) {
  params.validate();
  if (params.lambda != 0.0) throw std::invalid_argument("campbell_check: stated for the catalyst-only process (lambda = 0)");
  if (!(dt_grid > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("campbell_check: need positive t_end and dt_grid");
  const double eps = params.epsilon();

  if (radius <= 0) radius = moment_box_radius(t_end);
  BoxIndex box(params.d, radius);
  if (!box.contains(x)) throw std::invalid_argument("campbell_check: x outside the box");
  const std::size_t xi = static_cast<std::size_t>(box.encode(x));
  const std::size_t oi = static_cast<std::size_t>(box.origin_index());
  const std::size_t size = static_cast<std::size_t>(box.size());

  int n_grid = static_cast<int>(std::llround(t_end / dt_grid));
  if (n_grid < 4) throw std::invalid_argument("campbell_check: grid too coarse");
  const double h = t_end / n_grid;

  // one RK4 step per grid interval, recording the tracked values as we go
  BoxGenerator gen(params, box);
  ModelParams free_walk = params;
  free_walk.lambda0 = 0.0;
  BoxGenerator heat(free_walk, box);

  std::vector<double> u(size, 0.0), p(size, 0.0);
  u[oi] = 1.0;
  p[oi] = 1.0;
  std::vector<double> u_x(static_cast<std::size_t>(n_grid) + 1), p_00(static_cast<std::size_t>(n_grid) + 1),
      p_0x(static_cast<std::size_t>(n_grid) + 1);
  u_x[0] = u[xi];
  p_00[0] = 1.0;
  p_0x[0] = p[xi];
  for (int k = 1; k <= n_grid; ++k) {
    rk4_integrate(gen, u, h, 1);
    rk4_integrate(heat, p, h, 1);
    u_x[static_cast<std::size_t>(k)] = u[xi];
    p_00[static_cast<std::size_t>(k)] = p[oi];
    p_0x[static_cast<std::size_t>(k)] = p[xi];
  }

  auto convolution = [&](int k, int stride) {
    // trapezoid over s in [0, t_k] of u(x, t_k - s) p_s(0,0), spacing stride*h
    if (k == 0) return 0.0;
    double acc = 0.0;
    for (int j = 0; j <= k; j += stride) {
      double w = (j == 0 || j == k) ? 0.5 : 1.0;
      acc += w * u_x[static_cast<std::size_t>(k - j)] * p_00[static_cast<std::size_t>(j)];
    }
    return acc * h * stride;
  };

  CampbellReport rep;
  rep.x = x;
  rep.t_end = t_end;
  rep.dt_grid = h;
  rep.times.resize(static_cast<std::size_t>(n_grid) + 1);
  rep.residuals.resize(static_cast<std::size_t>(n_grid) + 1);
  rep.u_values = u_x;
  rep.p00_values = p_00;
  for (int k = 0; k <= n_grid; ++k) {
    rep.times[static_cast<std::size_t>(k)] = k * h;
    double conv = convolution(k, 1);
    rep.residuals[static_cast<std::size_t>(k)] =
        std::abs(u_x[static_cast<std::size_t>(k)] - eps * conv - p_0x[static_cast<std::size_t>(k)]);
    rep.max_residual = std::max(rep.max_residual, rep.residuals[static_cast<std::size_t>(k)]);
    if (k % 2 == 0 && k >= 4) {
      double coarse = convolution(k, 2);
      rep.quadrature_error_estimate =
          std::max(rep.quadrature_error_estimate, eps * std::abs(conv - coarse) / 3.0);
    }
  }
  return rep;
}

}  // namespace catbrw
