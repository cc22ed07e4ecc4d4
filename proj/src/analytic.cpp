#include "tfqkd/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tfqkd/timing.hpp"

namespace tfqkd::sim {

namespace {

/// Conditional observables for one residual phase value.
struct PointResult {
  double sift = 0.0;
  double err = 0.0;
  double incl = 0.0;
  double nokey = 0.0;
};

PointResult evaluate_at_delta(const SimConfig& cfg, double delta) {
  const double w = cfg.grid.bin_width_s;
  const double g = cfg.guard.guard_s;
  const double mu_arm = cfg.mu_per_bin_at_bs();
  const double eta = cfg.eta_det;
  const double c = std::cos(delta);
  const double p_plus = 1.0 - std::exp(-eta * mu_arm * (1.0 + cfg.contrast * c));
  const double p_minus = 1.0 - std::exp(-eta * mu_arm * (1.0 - cfg.contrast * c));
  const double noise_acc = cfg.noise_per_gate() / 3.0 * (w - 2.0 * g) / w;

  // L[src][key]: probability that a click from source bin src (0-based) is
  // assigned to key bin key (1 = middle, 2 = last).
  double L[3][2];
  for (int src = 0; src < 3; ++src) {
    for (int key = 1; key <= 2; ++key) {
      const double lo = (key - src) * w + g;
      const double hi = (key - src + 1) * w - g;
      L[src][key - 1] = timing::landing_probability(
          lo, hi, cfg.grid, cfg.jitter_std_s, cfg.envelope,
          cfg.envelope_sigma_s);
    }
  }

  PointResult out;
  for (int r2 = 0; r2 < 2; ++r2) {
    for (int r3 = 0; r3 < 2; ++r3) {
      const int rel[3] = {0, r2, r3};

      // Occupancy distribution over the four key positions
      // (key bin - 1) * 2 + port, built one independent emitter at a time.
      double dist[16] = {};
      dist[0] = 1.0;
      auto push3 = [&dist](double q_mid, double q_last, int port) {
        const int bit_mid = 1 << port;
        const int bit_last = 1 << (2 + port);
        double next[16] = {};
        const double stay = 1.0 - q_mid - q_last;
        for (int m = 0; m < 16; ++m) {
          if (dist[m] == 0.0) continue;
          next[m] += dist[m] * stay;
          next[m | bit_mid] += dist[m] * q_mid;
          next[m | bit_last] += dist[m] * q_last;
        }
        std::copy(next, next + 16, dist);
      };

      for (int src = 0; src < 3; ++src) {
        for (int port = 0; port < 2; ++port) {
          const bool plus = (rel[src] == 0) == (port == 0);
          const double p_sig = plus ? p_plus : p_minus;
          push3(p_sig * L[src][0], p_sig * L[src][1], port);
        }
      }
      for (int key = 0; key < 2; ++key) {
        for (int port = 0; port < 2; ++port) {
          const int bit = 1 << (key * 2 + port);
          double next[16] = {};
          for (int m = 0; m < 16; ++m) {
            if (dist[m] == 0.0) continue;
            next[m] += dist[m] * (1.0 - noise_acc);
            next[m | bit] += dist[m] * noise_acc;
          }
          std::copy(next, next + 16, dist);
        }
      }

      const double quarter = 0.25;  // uniform encoding bits
      out.nokey += quarter * dist[0];
      for (int m = 1; m < 16; ++m) {
        const int pc = __builtin_popcount(static_cast<unsigned>(m));
        if (pc >= 2) {
          out.incl += quarter * dist[m];
          continue;
        }
        const int pos = __builtin_ctz(static_cast<unsigned>(m));
        const int key_bin = pos / 2 + 1;  // 1 or 2, 0-based bin index
        const int port = pos % 2;
        out.sift += quarter * dist[m];
        const bool announced_equal = port == 0;
        if (announced_equal != (rel[key_bin] == 0)) {
          out.err += quarter * dist[m];
        }
      }
    }
  }
  return out;
}

}  // namespace

AnalyticResult analytic_skr(const SimConfig& cfg) {
  cfg.validate();
  const double sigma =
      cfg.drift_std_rad_per_sqrt_s * std::sqrt(cfg.loop_delay_s());

  PointResult acc;
  if (sigma == 0.0) {
    acc = evaluate_at_delta(cfg, 0.0);
  } else {
    // Composite Simpson over +-8 sigma against the normal density.
    const int n = 400;  // intervals, even
    const double a = -8.0 * sigma, b = 8.0 * sigma;
    const double h = (b - a) / n;
    double wsum = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = a + h * i;
      double wgt = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      wgt *= std::exp(-0.5 * x * x / (sigma * sigma));
      const PointResult p = evaluate_at_delta(cfg, x);
      acc.sift += wgt * p.sift;
      acc.err += wgt * p.err;
      acc.incl += wgt * p.incl;
      acc.nokey += wgt * p.nokey;
      wsum += wgt;
    }
    acc.sift /= wsum;
    acc.err /= wsum;
    acc.incl /= wsum;
    acc.nokey /= wsum;
  }

  AnalyticResult out;
  out.r_sift = acc.sift;
  out.e_b = acc.sift > 0.0 ? acc.err / acc.sift : 0.0;
  out.inconclusive_fraction = acc.incl;
  out.no_key_fraction = acc.nokey;
  out.secure_rate = analysis::secure_key_rate(
      out.r_sift, out.e_b, cfg.keyrate.phase_error_rate(out.e_b));
  return out;
}

double expected_two_port_visibility(const SimConfig& cfg) {
  const double sigma2 =
      cfg.drift_std_rad_per_sqrt_s * cfg.drift_std_rad_per_sqrt_s *
      cfg.loop_delay_s();
  const double signal =
      cfg.eta_det * cfg.visibility_probe_mu * cfg.loop_transmittance();
  const double noise = cfg.noise_per_gate() / 3.0;
  return cfg.contrast * std::exp(-0.5 * sigma2) * signal / (signal + noise);
}

double calibrate_contrast(const SimConfig& cfg, double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw std::invalid_argument("visibility target must be in (0, 1)");
  }
  SimConfig probe = cfg;
  probe.contrast = 1.0;
  const double max_vis = expected_two_port_visibility(probe);
  if (target > max_vis) {
    throw std::invalid_argument(
        "visibility target exceeds the noise-limited maximum");
  }
  return target / max_vis;
}

double calibrate_drift_std(const SimConfig& cfg, double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw std::invalid_argument("visibility target must be in (0, 1)");
  }
  SimConfig frozen = cfg;
  frozen.drift_std_rad_per_sqrt_s = 0.0;
  const double v0 = expected_two_port_visibility(frozen);
  if (target >= v0) {
    throw std::invalid_argument(
        "visibility target is not below the drift-free visibility");
  }
  const double sigma2 = 2.0 * std::log(v0 / target);
  return std::sqrt(sigma2 / cfg.loop_delay_s());
}

}  // namespace tfqkd::sim
