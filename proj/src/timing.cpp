#include "tfqkd/timing.hpp"

#include <cmath>
#include <stdexcept>

#include "tfqkd/rng.hpp"

namespace tfqkd::timing {

bool TimeBinGrid::valid() const {
  return frame_period_s > 0.0 && pulse_on_s > 0.0 && bin_width_s > 0.0 &&
         pulse_on_s <= frame_period_s &&
         std::abs(pulse_on_s - 3.0 * bin_width_s) <= 1e-15;
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

namespace {

// Antiderivative helper: integral of the standard normal CDF,
// G(z) = z * Phi(z) + phi(z).
double cdf_integral(double z) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return z * normal_cdf(z) + inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

double overlap(double a0, double a1, double b0, double b1) {
  const double lo = a0 > b0 ? a0 : b0;
  const double hi = a1 < b1 ? a1 : b1;
  return hi > lo ? hi - lo : 0.0;
}

}  // namespace

std::optional<BinAssignment> assign_bin(double timestamp_s,
                                        const TimeBinGrid& grid,
                                        const GuardBand& g) {
  if (timestamp_s < 0.0) return std::nullopt;
  const double frame = std::floor(timestamp_s / grid.frame_period_s);
  const double offset = timestamp_s - frame * grid.frame_period_s;
  if (offset >= grid.pulse_on_s) return std::nullopt;
  int bin = static_cast<int>(offset / grid.bin_width_s);
  if (bin > 2) bin = 2;
  const double pos = offset - bin * grid.bin_width_s;
  if (pos < g.guard_s || pos > grid.bin_width_s - g.guard_s) {
    return std::nullopt;
  }
  return BinAssignment{static_cast<std::uint64_t>(frame), bin + 1};
}

double jittered_timestamp(double true_bin_center_s, double jitter_std_s,
                          Rng& rng) {
  if (jitter_std_s < 0.0) {
    throw std::invalid_argument("jitter_std_s must be >= 0");
  }
  if (jitter_std_s == 0.0) return true_bin_center_s;
  return true_bin_center_s + jitter_std_s * rng.normal();
}

double landing_probability(double window_lo_s, double window_hi_s,
                           const TimeBinGrid& grid, double jitter_std_s,
                           Envelope envelope, double envelope_sigma_s) {
  if (window_hi_s <= window_lo_s) return 0.0;
  const double w = grid.bin_width_s;
  if (envelope == Envelope::kGaussian) {
    const double sigma = std::hypot(envelope_sigma_s, jitter_std_s);
    const double m = 0.5 * w;
    if (sigma == 0.0) {
      return (m >= window_lo_s && m <= window_hi_s) ? 1.0 : 0.0;
    }
    return normal_cdf((window_hi_s - m) / sigma) -
           normal_cdf((window_lo_s - m) / sigma);
  }
  // Uniform emission over [0, w], then Gaussian jitter.
  const double sigma = jitter_std_s;
  if (sigma == 0.0) {
    return overlap(0.0, w, window_lo_s, window_hi_s) / w;
  }
  const double hi = window_hi_s;
  const double lo = window_lo_s;
  const double p = (sigma / w) * (cdf_integral(hi / sigma) -
                                  cdf_integral((hi - w) / sigma) -
                                  cdf_integral(lo / sigma) +
                                  cdf_integral((lo - w) / sigma));
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

double acceptance_fraction(const GuardBand& g, const TimeBinGrid& grid,
                           double jitter_std_s, Envelope envelope,
                           double envelope_sigma_s) {
  return landing_probability(g.guard_s, grid.bin_width_s - g.guard_s, grid,
                             jitter_std_s, envelope, envelope_sigma_s);
}

}  // namespace tfqkd::timing
