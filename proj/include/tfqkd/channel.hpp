#pragma once

#include <cstdint>
#include <vector>

#include "tfqkd/rng.hpp"

namespace tfqkd::channel {

struct FiberSpec {
  double length_km = 0.0;
  double alpha_db_per_km = 0.2;
};

/// Channel transmittance eta = 10^(-alpha * l / 10), in (0, 1].
double transmittance(const FiberSpec& f);

/// A deliberate phase offset injected over a time interval, modelling a fast
/// external disturbance that the common-path loop does not cancel.
struct Disturbance {
  double start_s = 0.0;
  double end_s = 0.0;
  double phase_rad = 0.0;
};

/// Wiener phase-drift path sampled on a fixed time grid, plus a deterministic
/// disturbance schedule. The path is a pure function of (seed, grid) and is
/// extended lazily; pre_sample() fills it up front so that concurrent readers
/// never mutate shared state.
class PhaseDriftProcess {
 public:
  PhaseDriftProcess(double drift_std_rad_per_sqrt_s, std::uint64_t seed,
                    double grid_dt_s = 1e-6);

  void set_schedule(std::vector<Disturbance> schedule);
  const std::vector<Disturbance>& schedule() const { return schedule_; }

  /// Extend the sampled path to cover [0, t_max]. Call before sharing the
  /// process across simulation workers.
  void pre_sample(double t_max_s);

  /// Drift path value at time t (disturbances not included). phi(t <= 0) = 0.
  double drift_phase_at(double t_s) const;

  /// Scheduled disturbance offset active at time t.
  double disturbance_at(double t_s) const;

  double drift_std() const { return drift_std_; }
  double grid_dt() const { return grid_dt_; }

 private:
  void extend_to(std::size_t index) const;

  double drift_std_;
  double grid_dt_;
  std::uint64_t seed_;
  std::vector<Disturbance> schedule_;
  mutable std::vector<double> path_;  // cumulative phase at grid points
  mutable Rng rng_;
};

/// Residual phase at the interferometer: the drift accumulated over one loop
/// traversal, phi(t) - phi(t - loop_delay), plus any disturbance active at t.
/// Disturbances are applied one-sided: they model perturbations faster than
/// the loop's self-compensation bandwidth.
double sagnac_residual_phase(const PhaseDriftProcess& p, double loop_delay_s,
                             double t_s);

struct BackscatterParams {
  double repetition_rate_hz = 31.25e6;  ///< N
  double mean_photons_out = 40.0;       ///< mu-bar, per outbound classical pulse
  double beta = 1e-4;                   ///< backscattering coefficient
  double gate_on_s = 3e-9;              ///< t_ON
  double eta_det = 0.1;

  bool valid() const;
};

/// Detection probability per gate from Rayleigh backscattering of the
/// outbound classical pulses: P_B = 2 * (1 - eta) * N * mu_bar * beta * t_ON
/// * eta_det, clamped to [0, 1]. The factor 2 covers both loop directions.
/// Sets *clamped (if non-null) when the unclamped value exceeded 1.
double backscatter_click_probability(const BackscatterParams& bp,
                                     const FiberSpec& f,
                                     bool* clamped = nullptr);

}  // namespace tfqkd::channel
