#pragma once

#include "tfqkd/sim.hpp"

namespace tfqkd::sim {

/// Closed-form (quadrature) predictions for the protocol observables, using
/// exactly the same per-frame click model as the Monte Carlo driver. The
/// residual phase is integrated over its stationary N(0, D^2 tau)
/// distribution, encoding bits over their uniform distribution, and the
/// key-bin occupancy over all emitter outcome combinations.
struct AnalyticResult {
  double e_b = 0.0;
  double r_sift = 0.0;       ///< sifted bits per frame
  double secure_rate = 0.0;  ///< bits per frame, clamped at zero
  double inconclusive_fraction = 0.0;
  double no_key_fraction = 0.0;  ///< frames with no accepted key-bin click
};

AnalyticResult analytic_skr(const SimConfig& cfg);

/// Expected two-port visibility of the count-mode probe:
/// contrast * exp(-sigma^2 / 2) * eta mu / (eta mu + noise_per_bin),
/// with sigma^2 = drift_std^2 * loop_delay.
double expected_two_port_visibility(const SimConfig& cfg);

/// Interference contrast that makes the probe visibility hit `target` under
/// the given configuration (noise and drift included).
double calibrate_contrast(const SimConfig& cfg, double target);

/// Drift coefficient (rad per sqrt-second) that degrades the probe visibility
/// to `target` under the given configuration. Throws if the target is not
/// reachable (already below the drift-free visibility).
double calibrate_drift_std(const SimConfig& cfg, double target);

}  // namespace tfqkd::sim
