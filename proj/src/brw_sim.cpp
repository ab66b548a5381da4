#include "catbrw/brw_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace catbrw {

PopulationState::PopulationState() {
  particles_.push_back(Site::origin());
  origin_members_.push_back(0);
  origin_slot_.push_back(0);
}

std::size_t PopulationState::count_at(const Site& x) const {
  if (is_origin(x)) return origin_members_.size();
  std::size_t c = 0;
  for (const Site& p : particles_)
    if (p == x) ++c;
  return c;
}

void PopulationState::move_particle(std::size_t i, const Site& to) {
  const bool was_origin = origin_slot_[i] >= 0;
  const bool now_origin = is_origin(to);
  particles_[i] = to;
  if (was_origin && !now_origin) {
    // swap-remove from the origin set, fixing the moved member's back-index
    std::uint32_t slot = static_cast<std::uint32_t>(origin_slot_[i]);
    std::uint32_t last = origin_members_.back();
    origin_members_[slot] = last;
    origin_slot_[last] = static_cast<std::int32_t>(slot);
    origin_members_.pop_back();
    origin_slot_[i] = -1;
  } else if (!was_origin && now_origin) {
    origin_slot_[i] = static_cast<std::int32_t>(origin_members_.size());
    origin_members_.push_back(static_cast<std::uint32_t>(i));
  }
}

void PopulationState::branch_particle(std::size_t i) {
  const Site x = particles_[i];
  const std::size_t j = particles_.size();
  particles_.push_back(x);
  if (is_origin(x)) {
    origin_slot_.push_back(static_cast<std::int32_t>(origin_members_.size()));
    origin_members_.push_back(static_cast<std::uint32_t>(j));
  } else {
    origin_slot_.push_back(-1);
  }
}

bool PopulationState::caches_consistent() const {
  std::size_t n0 = 0;
  for (std::size_t i = 0; i < particles_.size(); ++i) {
    bool at0 = is_origin(particles_[i]);
    if (at0) ++n0;
    if (at0 != (origin_slot_[i] >= 0)) return false;
    if (at0 && origin_members_[static_cast<std::size_t>(origin_slot_[i])] != i) return false;
  }
  return n0 == origin_members_.size() && origin_slot_.size() == particles_.size();
}

void SimConfig::validate() const {
  if (allow_zero_lambda)
    params.validate();
  else
    params.validate_positive_lambda();
  if (!(t_max >= 0.0)) throw std::invalid_argument("SimConfig: t_max must be >= 0");
  if (particle_cap < 1) throw std::invalid_argument("SimConfig: particle_cap must be >= 1");
  if (!std::is_sorted(observe_at.begin(), observe_at.end()))
    throw std::invalid_argument("SimConfig: observe_at must be sorted");
  for (double s : observe_at)
    if (s < 0.0 || s > t_max) throw std::invalid_argument("SimConfig: observation times must lie in [0, t_max]");
}

EventRecord gillespie_step(PopulationState& state, const ModelParams& params, Rng& rng) {
  const std::size_t n = state.n_total();
  assert(n >= 1 && "gillespie_step: empty population");
  const std::size_t n0 = state.n_origin();
  const double eps = params.epsilon();
  const double uniform_part = static_cast<double>(n) * (1.0 + params.lambda);
  const double total_rate = uniform_part + eps * static_cast<double>(n0);
  const double rho = params.lambda + eps * static_cast<double>(n0) / static_cast<double>(n);

  EventRecord ev;
  ev.total_rate = total_rate;
  ev.waiting_time = rng.exponential(total_rate);
  state.advance_time(ev.waiting_time, rho);

  if (rng.u01() < uniform_part / total_rate) {
    // pooled jump+branch clock of a uniform particle
    ev.particle = static_cast<std::size_t>(rng.uniform_index(n));
    ev.from = state.position(ev.particle);
    if (rng.u01() < 1.0 / (1.0 + params.lambda)) {
      ev.kind = EventRecord::Kind::jump;
      int dir = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(2 * params.d)));
      ev.to = step(ev.from, dir);
      state.move_particle(ev.particle, ev.to);
    } else {
      ev.kind = EventRecord::Kind::branch;
      ev.to = ev.from;
      state.branch_particle(ev.particle);
    }
  } else {
    // branch-rate surplus at the origin: a uniform origin particle branches
    ev.kind = EventRecord::Kind::branch;
    std::size_t slot = static_cast<std::size_t>(rng.uniform_index(n0));
    ev.particle = state.origin_member(slot);
    ev.from = Site::origin();
    ev.to = ev.from;
    state.branch_particle(ev.particle);
  }
  return ev;
}

namespace {

ObservationRow observe(const PopulationState& state, const SimConfig& config, double s, double rho) {
  ObservationRow row;
  row.t = s;
  row.n_total = state.n_total();
  row.n_origin = state.n_origin();
  row.rho_integral = state.rho_integral_at(s, rho);
  row.martingale = static_cast<double>(row.n_total) * std::exp(-row.rho_integral);
  row.site_counts.assign(config.observe_sites.size(), 0);
  if (!config.observe_sites.empty()) {
    for (const Site& p : state.particles()) {
      for (std::size_t b = 0; b < config.observe_sites.size(); ++b) {
        if (p == config.observe_sites[b]) {
          ++row.site_counts[b];
          break;
        }
      }
    }
    std::uint64_t in_b = 0;
    for (std::uint64_t c : row.site_counts) in_b += c;
    row.pi_hat_B = static_cast<double>(in_b) / static_cast<double>(row.n_total);
  }
  return row;
}

Trajectory run_impl(const SimConfig& config) {
  config.validate();
  const ModelParams& params = config.params;
  Rng rng(config.seed);

  PopulationState state;
  Trajectory traj;
  traj.rows.reserve(config.observe_at.size());
  std::size_t next_obs = 0;

  const double eps = params.epsilon();
  const double inv_one_plus_lambda = 1.0 / (1.0 + params.lambda);
  for (;;) {
    const std::size_t n = state.n_total();
    const std::size_t n0 = state.n_origin();
    const double uniform_part = static_cast<double>(n) * (1.0 + params.lambda);
    const double total_rate = uniform_part + eps * static_cast<double>(n0);
    const double rho = params.lambda + eps * static_cast<double>(n0) / static_cast<double>(n);

    const double wait = rng.exponential(total_rate);
    const double t_next = state.t() + wait;

    // all observations before the next event see the current (frozen) state;
    // an observation exactly at an event time takes the left limit
    while (next_obs < config.observe_at.size() && config.observe_at[next_obs] <= t_next &&
           config.observe_at[next_obs] <= config.t_max) {
      traj.rows.push_back(observe(state, config, config.observe_at[next_obs], rho));
      ++next_obs;
    }
    if (t_next > config.t_max) {
      state.advance_time(config.t_max - state.t(), rho);
      traj.status = RunStatus::horizon_reached;
      break;
    }

    state.advance_time(wait, rho);

    if (rng.u01() < uniform_part / total_rate) {
      std::size_t i = static_cast<std::size_t>(rng.uniform_index(n));
      if (rng.u01() < inv_one_plus_lambda) {
        int dir = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(2 * params.d)));
        state.move_particle(i, step(state.position(i), dir));
      } else {
        state.branch_particle(i);
      }
    } else {
      std::size_t slot = static_cast<std::size_t>(rng.uniform_index(n0));
      state.branch_particle(state.origin_member(slot));
    }
    ++traj.events;

    if (state.n_total() >= config.particle_cap) {
      traj.status = RunStatus::cap_reached;
      break;
    }
    if (config.max_events != 0 && traj.events >= config.max_events) {
      traj.status = RunStatus::horizon_reached;
      break;
    }
  }

  traj.t_end = state.t();
  traj.n_end = state.n_total();
  traj.n_origin_end = state.n_origin();
  return traj;
}

}  // namespace

const char* to_string(RunStatus s) { return s == RunStatus::horizon_reached ? "horizon_reached" : "cap_reached"; }

Trajectory run(const SimConfig& config) { return run_impl(config); }

std::vector<Trajectory> run_replicas(const SimConfig& config, std::uint64_t n_replicas, int threads) {
  config.validate();
  if (n_replicas < 1) throw std::invalid_argument("run_replicas: n_replicas must be >= 1");
  std::vector<Trajectory> out(n_replicas);
  auto work = [&](std::uint64_t r) {
    SimConfig local = config;
    local.seed = derive_stream_seed(config.seed, r);
    out[r] = run_impl(local);
  };
  if (threads <= 1 || n_replicas == 1) {
    for (std::uint64_t r = 0; r < n_replicas; ++r) work(r);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    std::uint64_t nt = std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), n_replicas);
    for (std::uint64_t i = 0; i < nt; ++i)
      pool.emplace_back([&]() {
        for (;;) {
          std::uint64_t r = next.fetch_add(1);
          if (r >= n_replicas) return;
          work(r);
        }
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

namespace {

void accumulate(std::vector<ColumnStats>& cols, std::size_t idx, double value) {
  ColumnStats& c = cols[idx];
  c.count += 1;
  double delta = value - c.mean;
  c.mean += delta / static_cast<double>(c.count);
  c.variance += delta * (value - c.mean);  // holds M2 until finalised
}

void finalize(std::vector<ColumnStats>& cols) {
  for (ColumnStats& c : cols) {
    if (c.count >= 2) {
      c.variance /= static_cast<double>(c.count - 1);
      c.std_error = std::sqrt(c.variance / static_cast<double>(c.count));
    } else {
      c.variance = 0.0;
      c.std_error = 0.0;
    }
  }
}

}  // namespace

ReplicaStats replicate(const SimConfig& config, std::uint64_t n_replicas, int threads) {
  std::vector<Trajectory> trajectories = run_replicas(config, n_replicas, threads);
  return aggregate_replicas(config, trajectories);
}

ReplicaStats aggregate_replicas(const SimConfig& config, const std::vector<Trajectory>& trajectories) {
  ReplicaStats stats;
  stats.observe_at = config.observe_at;
  stats.replicas = trajectories.size();
  const std::size_t n_obs = config.observe_at.size();
  const std::size_t n_sites = config.observe_sites.size();
  stats.n_total.resize(n_obs);
  stats.pi_hat_origin.resize(n_obs);
  stats.martingale.resize(n_obs);
  stats.martingale_sq.resize(n_obs);
  stats.rho_integral.resize(n_obs);
  stats.log_n.resize(n_obs);
  stats.pi_hat_B.resize(n_obs);
  stats.site_pi_hat.assign(n_sites, std::vector<ColumnStats>(n_obs));
  stats.site_count.assign(n_sites, std::vector<ColumnStats>(n_obs));

  for (const Trajectory& traj : trajectories) {
    if (traj.status == RunStatus::cap_reached) ++stats.cap_reached_count;
    // rows follow the observe_at prefix that the run reached before any cap
    for (std::size_t i = 0; i < traj.rows.size(); ++i) {
      const ObservationRow& row = traj.rows[i];
      double n = static_cast<double>(row.n_total);
      accumulate(stats.n_total, i, n);
      accumulate(stats.pi_hat_origin, i, static_cast<double>(row.n_origin) / n);
      accumulate(stats.martingale, i, row.martingale);
      accumulate(stats.martingale_sq, i, row.martingale * row.martingale);
      accumulate(stats.rho_integral, i, row.rho_integral);
      accumulate(stats.log_n, i, std::log(n));
      accumulate(stats.pi_hat_B, i, row.pi_hat_B);
      for (std::size_t b = 0; b < n_sites; ++b) {
        accumulate(stats.site_pi_hat[b], i, static_cast<double>(row.site_counts[b]) / n);
        accumulate(stats.site_count[b], i, static_cast<double>(row.site_counts[b]));
      }
    }
  }
  finalize(stats.n_total);
  finalize(stats.pi_hat_origin);
  finalize(stats.martingale);
  finalize(stats.martingale_sq);
  finalize(stats.rho_integral);
  finalize(stats.log_n);
  finalize(stats.pi_hat_B);
  for (auto& col : stats.site_pi_hat) finalize(col);
  for (auto& col : stats.site_count) finalize(col);
  return stats;
}

}  // namespace catbrw
