#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "catbrw/lattice.hpp"
#include "catbrw/params.hpp"
#include "catbrw/rng.hpp"

namespace catbrw {

// Live particle configuration. Flat particle array plus an index set of the
// particles currently at the origin: uniform selection, origin selection and
// single-particle updates are all O(1). The only non-uniform event weight in
// the model lives at the origin, so nothing heavier is needed.
class PopulationState {
 public:
  PopulationState();

  std::size_t n_total() const { return particles_.size(); }
  std::size_t n_origin() const { return origin_members_.size(); }
  const Site& position(std::size_t i) const { return particles_[i]; }
  const std::vector<Site>& particles() const { return particles_; }
  std::size_t origin_member(std::size_t slot) const { return origin_members_[slot]; }

  double t() const { return t_; }
  // A_t = int_0^t rho_s ds, rho_s = lambda + (lambda0-lambda) * n0/N.
  // rho is piecewise constant between events; the integral is accumulated
  // exactly per interval, compensated because M_t = N exp(-A) is
  // exponentially sensitive to A.
  double rho_integral() const { return rho_sum_; }

  void advance_time(double dt, double rho) {
    t_ += dt;
    kahan_add(dt * rho);
  }
  // rho_integral at an intermediate time s in [t, t + next waiting time)
  double rho_integral_at(double s, double rho) const { return rho_sum_ + (s - t_) * rho; }

  std::size_t count_at(const Site& x) const;

  void move_particle(std::size_t i, const Site& to);
  void branch_particle(std::size_t i);

  // Full recount of the cached origin bookkeeping; used by tests and debug
  // runs to check rate bookkeeping against the caches.
  bool caches_consistent() const;

 private:
  void kahan_add(double v) {
    double y = v - rho_comp_;
    double t = rho_sum_ + y;
    rho_comp_ = (t - rho_sum_) - y;
    rho_sum_ = t;
  }

  std::vector<Site> particles_;
  std::vector<std::uint32_t> origin_members_;  // particle slots at the origin
  std::vector<std::int32_t> origin_slot_;      // per particle: slot in origin_members_, or -1
  double t_ = 0.0;
  double rho_sum_ = 0.0;
  double rho_comp_ = 0.0;
};

struct SimConfig {
  ModelParams params;
  double t_max = 10.0;
  std::uint64_t particle_cap = 10'000'000;  // stop-and-report, never subsample
  std::uint64_t seed = 1;
  std::vector<double> observe_at;   // sorted observation times in [0, t_max]
  std::vector<Site> observe_sites;  // finite set B
  // Optional stop after this many events (0 = unlimited). Used to look at
  // the embedded chain at a fixed event count.
  std::uint64_t max_events = 0;
  // The standing assumption for the full process is lambda > 0; only the
  // catalyst-only comparison process sets this.
  bool allow_zero_lambda = false;

  void validate() const;
};

struct EventRecord {
  enum class Kind { jump, branch };
  Kind kind = Kind::jump;
  double waiting_time = 0.0;
  double total_rate = 0.0;
  std::size_t particle = 0;
  Site from;
  Site to;  // == from for a branch
};

// One exact event of the pooled process. Total rate N(1+lambda) + eps*n0;
// with probability N(1+lambda)/Lambda a uniform particle either jumps
// (prob 1/(1+lambda)) or branches, and with probability eps*n0/Lambda a
// uniform origin particle branches. Advances time and the rho integral
// before applying the event. Draw order (waiting time, selector, particle,
// action, direction) is fixed for reproducibility.
EventRecord gillespie_step(PopulationState& state, const ModelParams& params, Rng& rng);

enum class RunStatus { horizon_reached, cap_reached };

const char* to_string(RunStatus s);

struct ObservationRow {
  double t = 0.0;
  std::uint64_t n_total = 0;
  std::uint64_t n_origin = 0;
  std::vector<std::uint64_t> site_counts;  // aligned with config.observe_sites
  double pi_hat_B = 0.0;                   // normalised mass of the whole observed set
  double martingale = 0.0;                 // M_t = N exp(-A)
  double rho_integral = 0.0;               // A
};

struct Trajectory {
  std::vector<ObservationRow> rows;
  RunStatus status = RunStatus::horizon_reached;
  double t_end = 0.0;
  std::uint64_t n_end = 0;
  std::uint64_t n_origin_end = 0;
  std::uint64_t events = 0;
};

// Starts from a single particle at the origin and runs to t_max (or the
// particle cap / event cap). Observations use the state in force at the
// requested time (left limit at event instants) with A integrated exactly.
Trajectory run(const SimConfig& config);

// Replica aggregation: replica r runs on derive_stream(seed, r). Results are
// gathered per replica and reduced in replica order, so the aggregate is
// independent of thread scheduling.
struct ColumnStats {
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
  double std_error = 0.0;
  std::uint64_t count = 0;
};

struct ReplicaStats {
  std::vector<double> observe_at;
  // per observation index: stats of N, n0/N, M, M^2, A, log N, and each
  // observed site's normalised occupation
  std::vector<ColumnStats> n_total;
  std::vector<ColumnStats> pi_hat_origin;
  std::vector<ColumnStats> martingale;
  std::vector<ColumnStats> martingale_sq;
  std::vector<ColumnStats> rho_integral;
  std::vector<ColumnStats> log_n;
  std::vector<std::vector<ColumnStats>> site_pi_hat;  // [site][obs], Pi(x)/N
  std::vector<std::vector<ColumnStats>> site_count;   // [site][obs], raw Pi(x)
  std::vector<ColumnStats> pi_hat_B;
  std::uint64_t replicas = 0;
  std::uint64_t cap_reached_count = 0;
};

ReplicaStats replicate(const SimConfig& config, std::uint64_t n_replicas, int threads = 1);

// Per-replica trajectories (same stream derivation as replicate); the CSV
// surface of the `simulate` subcommand.
std::vector<Trajectory> run_replicas(const SimConfig& config, std::uint64_t n_replicas, int threads = 1);

ReplicaStats aggregate_replicas(const SimConfig& config, const std::vector<Trajectory>& trajectories);

}  // namespace catbrw
