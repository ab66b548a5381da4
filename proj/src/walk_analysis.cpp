#include "catbrw/walk_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace catbrw {

namespace {

// log k! for k = 0..n
std::vector<double> log_factorials(int n) {
  std::vector<double> lf(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 2; k <= n; ++k) lf[static_cast<std::size_t>(k)] = lf[static_cast<std::size_t>(k - 1)] + std::log(static_cast<double>(k));
  return lf;
}

// sum_{m=M+1}^{inf} m^{-s} by direct summation plus a midpoint integral
// remainder; good to ~1e-12 relative for s >= 1.5.
double power_tail_sum(double s, std::int64_t M) {
  double sum = 0.0;
  const std::int64_t direct = 200000;
  for (std::int64_t m = M + direct; m > M; --m) sum += std::pow(static_cast<double>(m), -s);
  const double a = static_cast<double>(M + direct) + 0.5;
  sum += std::pow(a, 1.0 - s) / (s - 1.0);
  return sum;
}

}  // namespace

std::vector<double> return_probabilities(int dim, int horizon) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("return_probabilities: dim out of range [1,6]");
  if (horizon < 2) throw std::invalid_argument("return_probabilities: horizon must be >= 2");
  if (horizon > (1 << 21)) throw std::invalid_argument("return_probabilities: horizon too large (memory/time estimate exceeded)");

  const std::size_t n = static_cast<std::size_t>(horizon);
  const auto lf = log_factorials(horizon);
  auto lchoose = [&lf](int a, int b) {
    return lf[static_cast<std::size_t>(a)] - lf[static_cast<std::size_t>(b)] - lf[static_cast<std::size_t>(a - b)];
  };

  // 1-d central binomial log-weights: lq[2m] = log P(1d walk at 0 after 2m steps)
  std::vector<double> lq(n + 1, -std::numeric_limits<double>::infinity());
  const double ln2 = std::log(2.0);
  for (int m = 0; 2 * m <= horizon; ++m) lq[static_cast<std::size_t>(2 * m)] = lchoose(2 * m, m) - 2.0 * m * ln2;

  std::vector<double> p(n + 1, 0.0);
  if (dim == 1) {
    for (int k = 0; k <= horizon; k += 2) p[static_cast<std::size_t>(k)] = std::exp(lq[static_cast<std::size_t>(k)]);
    return p;
  }
  if (dim == 2) {
    // closed walks in Z^2 factorise over the diagonal axes
    for (int k = 0; k <= horizon; k += 2) {
      double q = std::exp(lq[static_cast<std::size_t>(k)]);
      p[static_cast<std::size_t>(k)] = q * q;
    }
    return p;
  }

  // d >= 3: split over the number of steps taken in the first coordinate
  std::vector<double> lower = return_probabilities(dim - 1, horizon);
  std::vector<double> llower(n + 1, -std::numeric_limits<double>::infinity());
  for (int k = 0; k <= horizon; k += 2) llower[static_cast<std::size_t>(k)] = std::log(lower[static_cast<std::size_t>(k)]);

  const double linv = std::log(1.0 / dim);
  const double lrest = std::log((dim - 1.0) / dim);
  p[0] = 1.0;
  for (int k = 2; k <= horizon; k += 2) {
    double acc = 0.0;
    for (int a = 0; a <= k; a += 2) {
      double lterm = lchoose(k, a) + a * linv + (k - a) * lrest + lq[static_cast<std::size_t>(a)] +
                     llower[static_cast<std::size_t>(k - a)];
      acc += std::exp(lterm);
    }
    p[static_cast<std::size_t>(k)] = acc;
  }
  return p;
}

ReturnTimePmf return_time_pmf(int dim, int horizon) {
  ReturnTimePmf out;
  out.dim = dim;
  out.horizon = horizon;
  out.p = return_probabilities(dim, horizon);

  const std::size_t n = static_cast<std::size_t>(horizon);
  out.pmf.assign(n + 1, 0.0);
  // first-passage deconvolution on even indices
  for (int k = 2; k <= horizon; k += 2) {
    double v = out.p[static_cast<std::size_t>(k)];
    for (int i = 2; i < k; i += 2) v -= out.pmf[static_cast<std::size_t>(i)] * out.p[static_cast<std::size_t>(k - i)];
    out.pmf[static_cast<std::size_t>(k)] = v;
  }

  out.cumulative.assign(n + 1, 0.0);
  double acc = 0.0;
  for (int k = 0; k <= horizon; ++k) {
    acc += out.pmf[static_cast<std::size_t>(k)];
    out.cumulative[static_cast<std::size_t>(k)] = acc;
  }

  if (dim <= 2) {
    // recurrent: the full remaining mass is the tail
    out.tail_bound = std::max(0.0, 1.0 - out.sum());
  } else {
    // f_k <= p_k termwise; extend p by its power law p_{2m} ~ A m^{-d/2}
    // calibrated at the end of the window, with the calibration drift
    // (difference against mid-window) folded into the bound.
    const int k_end = horizon - (horizon % 2);
    const int k_mid = (horizon / 2) - (horizon / 2) % 2;
    const double s = dim / 2.0;
    const double a_end = out.p[static_cast<std::size_t>(k_end)] * std::pow(k_end / 2.0, s);
    const double a_mid = out.p[static_cast<std::size_t>(k_mid)] * std::pow(k_mid / 2.0, s);
    const double drift = std::abs(a_end - a_mid) / a_end;
    const double p_tail = a_end * power_tail_sum(s, k_end / 2);
    out.tail_bound = p_tail * (1.0 + 2.0 * drift) + 1e-13;
  }
  return out;
}

GammaEstimate gamma_never_return(const ReturnTimePmf& pmf) {
  GammaEstimate g;
  g.dim = pmf.dim;
  g.horizon = pmf.horizon;
  g.series_sum = pmf.sum();

  if (pmf.dim <= 2) {
    g.estimate = 0.0;
    g.tail_correction = 0.0;
    g.error_bound = std::max(0.0, 1.0 - g.series_sum);
    return g;
  }

  const int K = pmf.horizon - (pmf.horizon % 2);
  const double s = pmf.dim / 2.0;
  const double a_end = pmf.p[static_cast<std::size_t>(K)] * std::pow(K / 2.0, s);
  const int k_mid = (pmf.horizon / 2) - (pmf.horizon / 2) % 2;
  const double a_mid = pmf.p[static_cast<std::size_t>(k_mid)] * std::pow(k_mid / 2.0, s);
  const double drift = std::abs(a_end - a_mid) / a_end;

  // p-tail beyond the horizon from the calibrated power law
  const double p_tail = a_end * power_tail_sum(s, K / 2);

  // Renewal transfer: f_k ~ gamma^2 p_k in the tail. Self-consistent fixed
  // point for gamma (the correction is ~1e-3, two passes are plenty).
  double gamma = 1.0 - g.series_sum;
  double tail = 0.0;
  for (int it = 0; it < 4; ++it) {
    tail = gamma * gamma * p_tail;
    gamma = 1.0 - g.series_sum - tail;
  }

  // In-window deviation of the tail model, measured where it is about to be
  // extrapolated (the last half of the window).
  const double g2 = gamma * gamma;
  double r_dev = 0.0;
  for (int k = std::max(2, K / 2 - (K / 2) % 2); k <= K; k += 2) {
    double model = g2 * pmf.p[static_cast<std::size_t>(k)];
    double dev = std::abs(pmf.pmf[static_cast<std::size_t>(k)] - model) / model;
    r_dev = std::max(r_dev, dev);
  }

  g.estimate = gamma;
  g.tail_correction = tail;
  g.error_bound = tail * (2.0 * r_dev + 2.0 * drift) + 1e-11;
  return g;
}

GammaEstimate gamma_never_return(int dim, int horizon) { return gamma_never_return(return_time_pmf(dim, horizon)); }

double f_eval(double u, const ReturnTimePmf& pmf) {
  if (!(u > 0.0)) throw std::invalid_argument("f_eval: u must be > 0");
  const double w = 1.0 / (1.0 + u);
  // E[(1+u)^{-(tau_0-1)}] truncated at the horizon
  double ev = 0.0;
  double wk = w;  // w^{k-1} at k = 2
  for (int k = 2; k <= pmf.horizon; k += 2) {
    ev += pmf.pmf[static_cast<std::size_t>(k)] * wk;
    wk *= w * w;
  }
  const double primary = 1.0 + u - ev;

  const double series = f_eval_series(u, pmf);
  const double tol = f_two_form_tolerance(u, pmf);
  if (std::abs(primary - series) > tol)
    throw std::runtime_error("f_eval: the two expressions for f disagree beyond their truncation tails");
  return primary;
}

double f_eval_series(double u, const ReturnTimePmf& pmf) {
  if (!(u > 0.0)) throw std::invalid_argument("f_eval_series: u must be > 0");
  const double w = 1.0 / (1.0 + u);
  double acc = 0.0;
  double wk = 1.0;
  // sum_k w^k P(tau_0 >= k+1), P(tau_0 >= k+1) = 1 - F(k)
  for (int k = 1; k <= pmf.horizon; ++k) {
    wk *= w;
    acc += wk * (1.0 - pmf.cumulative[static_cast<std::size_t>(k)]);
  }
  return u + u * acc;
}

double f_two_form_tolerance(double u, const ReturnTimePmf& pmf) {
  const double w = 1.0 / (1.0 + u);
  const double wK = std::pow(w, pmf.horizon);
  const double open_mass = 1.0 - pmf.sum();  // gamma + pmf tail
  return pmf.tail_bound * wK / w + open_mass * wK + 1e-12 * (1.0 + u);
}

Nu0Result solve_nu0(const ModelParams& params, const ReturnTimePmf& pmf) {
  params.validate();
  if (params.d != pmf.dim) throw std::invalid_argument("solve_nu0: params.d does not match pmf.dim");

  Nu0Result res;
  const GammaEstimate g = gamma_never_return(pmf);
  res.gamma_estimate = g.estimate;
  res.gamma_error = g.error_bound;

  const double eps = params.epsilon();
  res.near_critical = std::abs(eps - g.estimate) <= 1e-6;
  if (eps <= g.estimate) {
    res.status = Nu0Result::Status::no_stationary_measure;
    return res;
  }

  // f is strictly increasing with f(0+) = gamma_d and f(u) > u, so
  // [lo, eps] brackets the root once f(lo) < eps.
  double hi = eps;
  double lo = eps / 2.0;
  while (f_eval(lo, pmf) >= eps) {
    lo /= 2.0;
    if (lo < 1e-14) {
      // epsilon sits inside the horizon's resolution band above gamma_d
      res.status = Nu0Result::Status::no_stationary_measure;
      res.near_critical = true;
      return res;
    }
  }

  int it = 0;
  while (hi - lo > kRootTolerance && it < kRootMaxIter) {
    double mid = 0.5 * (lo + hi);
    if (f_eval(mid, pmf) < eps)
      lo = mid;
    else
      hi = mid;
    ++it;
  }
  res.status = Nu0Result::Status::ok;
  res.u_star = 0.5 * (lo + hi);
  res.nu0 = res.u_star / eps;
  res.iterations = it;
  return res;
}

StationarySolution nu_profile(const ModelParams& params, double u_star, const BoxIndex& box) {
  params.validate();
  if (params.epsilon() <= 0.0) throw std::invalid_argument("nu_profile: requires lambda0 > lambda");
  if (!(u_star > 0.0)) throw std::invalid_argument("nu_profile: u_star must be > 0");
  if (box.dim() != params.d) throw std::invalid_argument("nu_profile: box dimension mismatch");
  if (box.radius() < 2) throw std::invalid_argument("nu_profile: box radius must be >= 2");
  if (box.size() > 64'000'000) throw std::invalid_argument("nu_profile: box too large");

  const int d = params.d;
  const double u = u_star;
  const double nu0 = u_star / params.epsilon();
  const std::size_t size = static_cast<std::size_t>(box.size());
  const std::int64_t origin = box.origin_index();

  // Gauss-Seidel on h(x) = (2d(1+u))^{-1} sum_{y~x} h(y), h(0) = 1,
  // h = 0 outside the box. Diagonally dominant; contraction <= 1/(1+u).
  std::vector<double> h(size, 0.0);
  h[static_cast<std::size_t>(origin)] = 1.0;

  const double scale = 1.0 / (2.0 * d * (1.0 + u));
  const int max_sweeps = 100000;
  int sweep = 0;
  double residual = 0.0;
  for (; sweep < max_sweeps; ++sweep) {
    residual = 0.0;
    for (std::size_t idx = 0; idx < size; ++idx) {
      if (static_cast<std::int64_t>(idx) == origin) continue;
      const Site x = box.decode(static_cast<std::int64_t>(idx));
      double nb = 0.0;
      for (const Site& y : neighbors(x, d))
        if (box.contains(y)) nb += h[static_cast<std::size_t>(box.encode(y))];
      const double next = nb * scale;
      residual = std::max(residual, std::abs(next - h[idx]));
      h[idx] = next;
    }
    if (residual <= kProfileTolerance) break;
  }
  if (residual > kProfileTolerance) throw std::runtime_error("nu_profile: Gauss-Seidel did not reach tolerance");

  StationarySolution sol;
  sol.params = params;
  sol.radius = box.radius();
  sol.u_star = u_star;
  sol.nu0 = nu0;
  sol.nu.assign(size, 0.0);
  for (std::size_t idx = 0; idx < size; ++idx) sol.nu[idx] = nu0 * h[idx];
  sol.sweeps = sweep + 1;

  // Equation (1) residual at interior sites (all neighbours in the box).
  const double one_plus = 1.0 + u;
  double r1 = 0.0;
  for (std::size_t idx = 0; idx < size; ++idx) {
    if (static_cast<std::int64_t>(idx) == origin) continue;
    const Site x = box.decode(static_cast<std::int64_t>(idx));
    if (norm_linf(x) >= box.radius()) continue;
    double nb = 0.0;
    for (const Site& y : neighbors(x, d)) nb += sol.nu[static_cast<std::size_t>(box.encode(y))];
    r1 = std::max(r1, std::abs(one_plus * sol.nu[idx] - nb / (2.0 * d)));
  }
  sol.residual_eq1 = r1;

  // Redundant origin equation (follows from (1) plus total mass 1).
  double nb0 = 0.0;
  for (const Site& y : neighbors(Site::origin(), d)) nb0 += sol.nu[static_cast<std::size_t>(box.encode(y))];
  const double eps = params.epsilon();
  sol.residual_eq2 = std::abs((1.0 - eps * (1.0 - nu0)) * nu0 - nb0 / (2.0 * d));

  // Truncation accounting: the profile decays like (1+u)^{-|x|_inf}.
  double mass = 0.0, comp = 0.0;
  for (std::size_t idx = 0; idx < size; ++idx) {
    double y = sol.nu[idx] - comp;
    double t = mass + y;
    comp = (t - mass) - y;
    mass = t;
  }
  sol.mass_defect = 1.0 - mass;
  sol.mass_budget = nu0 * std::pow(2.0 * box.radius() + 3.0, d) * std::pow(one_plus, -box.radius());
  // the geometric budget covers truncation only; the root tolerance on u and
  // summation rounding leave a small floor under the defect
  const double defect_floor = 100.0 * kRootTolerance;
  if (sol.mass_defect > sol.mass_budget + defect_floor)
    throw std::runtime_error("nu_profile: mass defect exceeds the geometric budget (radius too small)");
  return sol;
}

SparseMeasure StationarySolution::to_measure() const {
  BoxIndex box(params.d, radius);
  SparseMeasure m;
  for (std::int64_t idx = 0; idx < box.size(); ++idx) {
    double w = nu[static_cast<std::size_t>(idx)];
    if (w != 0.0) m.set(box.decode(idx), w);
  }
  return m;
}

StationarySolution solve_stationary_profile(const ModelParams& params, int radius, int horizon) {
  if (horizon <= 0) horizon = default_horizon(params.d);
  ReturnTimePmf pmf = return_time_pmf(params.d, horizon);
  Nu0Result root = solve_nu0(params, pmf);
  if (!root.ok()) throw NoStationaryMeasure("no probability measure solves the balance equations (epsilon <= gamma_d)");
  return nu_profile(params, root.u_star, BoxIndex(params.d, radius));
}

}  // namespace catbrw
