#include "catbrw/qsd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "catbrw/mvpp.hpp"

namespace catbrw {

namespace {

struct RateTable {
  // per site class: uniform per-neighbour rate, extra rate to the origin
  // (unit-norm sites only), death rate
  double origin_per_neighbor;
  double unit_per_neighbor;
  double unit_to_origin_extra;
  double unit_death;
  double far_per_neighbor;
  double far_death;
};

RateTable y_rates(const ModelParams& params) {
  const double eps = params.epsilon();
  const double d2 = 2.0 * params.d;
  RateTable t;
  t.origin_per_neighbor = (1.0 + params.lambda) / (1.0 + params.lambda0) / d2;
  t.unit_per_neighbor = 1.0 / d2;
  t.unit_to_origin_extra = eps / (d2 * (1.0 + params.lambda));
  t.unit_death = eps * (1.0 - 1.0 / (1.0 + params.lambda0) - 1.0 / (d2 * (1.0 + params.lambda)));
  t.far_per_neighbor = 1.0 / d2;
  t.far_death = eps * params.lambda0 / (1.0 + params.lambda0);  // rho1
  return t;
}

KilledGenerator build_generator(const ModelParams& params, const BoxIndex& box, double time_scale) {
  params.validate();
  if (!(params.lambda0 > params.lambda) || !(params.lambda > 0.0))
    throw std::invalid_argument("killed generator: requires lambda0 > lambda > 0");
  if (box.dim() != params.d) throw std::invalid_argument("killed generator: box dimension mismatch");
  if (box.radius() < 2) throw std::invalid_argument("killed generator: box radius must be >= 2");
  if (box.size() > 16'000'000) throw std::invalid_argument("killed generator: box too large");

  RateTable t = y_rates(params);
  KilledGenerator gen;
  gen.params = params;
  gen.radius = box.radius();
  gen.time_scale = time_scale;
  const std::size_t size = static_cast<std::size_t>(box.size());
  gen.death_rate.assign(size, 0.0);
  gen.total_rate.assign(size, 0.0);
  gen.death_rate_interior.assign(size, 0.0);

  for (std::size_t idx = 0; idx < size; ++idx) {
    const Site x = box.decode(static_cast<std::int64_t>(idx));
    const int l1 = norm_l1(x);
    double per_nb = l1 == 0 ? t.origin_per_neighbor : (l1 == 1 ? t.unit_per_neighbor : t.far_per_neighbor);
    double death = l1 == 0 ? 0.0 : (l1 == 1 ? t.unit_death : t.far_death);
    double jumps = 0.0;
    for (const Site& y : neighbors(x, params.d)) {
      double r = per_nb;
      if (l1 == 1 && is_origin(y)) r += t.unit_to_origin_extra;
      if (box.contains(y))
        jumps += r;
      else
        death += r;  // exit = death
    }
    gen.death_rate_interior[idx] = (l1 == 0 ? 0.0 : (l1 == 1 ? t.unit_death : t.far_death)) * time_scale;
    gen.death_rate[idx] = death * time_scale;
    gen.total_rate[idx] = (jumps + death) * time_scale;
  }
  return gen;
}

}  // namespace

std::vector<KilledGenerator::Edge> KilledGenerator::row(std::int64_t idx) const {
  BoxIndex box(params.d, radius);
  RateTable t = y_rates(params);
  const Site x = box.decode(idx);
  const int l1 = norm_l1(x);
  double per_nb = l1 == 0 ? t.origin_per_neighbor : (l1 == 1 ? t.unit_per_neighbor : t.far_per_neighbor);
  std::vector<Edge> edges;
  for (const Site& y : neighbors(x, params.d)) {
    if (!box.contains(y)) continue;
    double r = per_nb;
    if (l1 == 1 && is_origin(y)) r += t.unit_to_origin_extra;
    edges.push_back(Edge{box.encode(y), r * time_scale});
  }
  return edges;
}

void KilledGenerator::apply_left(const std::vector<double>& nu, std::vector<double>& out) const {
  BoxIndex box(params.d, radius);
  const std::size_t size = nu.size();
  out.assign(size, 0.0);
  RateTable t = y_rates(params);
  for (std::size_t idx = 0; idx < size; ++idx) {
    const double mass = nu[idx];
    out[idx] -= mass * total_rate[idx];
    if (mass == 0.0) continue;
    const Site x = box.decode(static_cast<std::int64_t>(idx));
    const int l1 = norm_l1(x);
    double per_nb = l1 == 0 ? t.origin_per_neighbor : (l1 == 1 ? t.unit_per_neighbor : t.far_per_neighbor);
    for (const Site& y : neighbors(x, params.d)) {
      if (!box.contains(y)) continue;
      double r = per_nb;
      if (l1 == 1 && is_origin(y)) r += t.unit_to_origin_extra;
      out[static_cast<std::size_t>(box.encode(y))] += mass * r * time_scale;
    }
  }
}

double KilledGenerator::max_total_rate() const {
  double m = 0.0;
  for (double r : total_rate) m = std::max(m, r);
  return m;
}

KilledGenerator build_Y_generator(const ModelParams& params, const BoxIndex& box) {
  return build_generator(params, box, 1.0);
}

KilledGenerator build_X_generator(const ModelParams& params, const BoxIndex& box) {
  return build_generator(params, box, 1.0 / kappa(params));
}

QsdSolution qsd_power_iteration(const KilledGenerator& gen, double tol, std::uint64_t max_iter) {
  const std::size_t size = gen.total_rate.size();
  const double delta = 1.0 / (2.0 * gen.max_total_rate());

  std::vector<double> nu(size, 1.0 / static_cast<double>(size));
  std::vector<double> lnu(size);
  double theta = 0.0;
  std::uint64_t it = 0;
  double residual = std::numeric_limits<double>::infinity();

  for (; it < max_iter; ++it) {
    gen.apply_left(nu, lnu);
    // nu (I + delta L); mass loss per step gives the decay rate
    double mass = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
      lnu[i] = nu[i] + delta * lnu[i];
      mass += lnu[i];
    }
    theta = (1.0 - mass) / delta;
    for (std::size_t i = 0; i < size; ++i) lnu[i] /= mass;
    nu.swap(lnu);

    if ((it & 63) == 0 || it + 1 == max_iter) {
      gen.apply_left(nu, lnu);
      residual = 0.0;
      for (std::size_t i = 0; i < size; ++i) residual = std::max(residual, std::abs(lnu[i] + theta * nu[i]));
      if (residual <= tol) {
        ++it;
        break;
      }
    }
  }
  if (residual > tol)
    throw std::runtime_error("qsd_power_iteration: residual " + std::to_string(residual) +
                             " did not reach tolerance within the iteration cap");

  QsdSolution sol;
  sol.params = gen.params;
  sol.radius = gen.radius;
  sol.nu = std::move(nu);
  sol.decay_theta = theta;
  sol.residual = residual;
  sol.iterations = it;
  return sol;
}

SparseMeasure QsdSolution::to_measure() const {
  BoxIndex box(params.d, radius);
  SparseMeasure m;
  for (std::int64_t idx = 0; idx < box.size(); ++idx) {
    double w = nu[static_cast<std::size_t>(idx)];
    if (w != 0.0) m.set(box.decode(idx), w);
  }
  return m;
}

SparseMeasure limit_measure(const QsdSolution& sol, const ModelParams& params) {
  // nu R accumulated row by row; R rows are signed, the mixture must be
  // nonnegative for a valid probability limit
  BoxIndex box(params.d, sol.radius);
  SparseMeasure pushed;
  for (std::int64_t idx = 0; idx < box.size(); ++idx) {
    const double mass = sol.nu[static_cast<std::size_t>(idx)];
    if (mass == 0.0) continue;
    const Site x = box.decode(idx);
    for (const auto& [site, w] : mean_kernel_R(x, params)) pushed.add(site, mass * w);
  }
  const double most_negative = pushed.min_value();
  if (most_negative < -1e-10)
    throw std::runtime_error("limit_measure: nu R has negative mass beyond tolerance (rate bug or truncation too aggressive)");
  SparseMeasure clipped;
  for (const auto& [site, w] : pushed)
    if (w > 0.0) clipped.set(site, w);
  return clipped.normalized();
}

}  // namespace catbrw
