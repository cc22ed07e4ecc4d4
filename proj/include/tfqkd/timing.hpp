#pragma once

#include <cstdint>
#include <optional>

namespace tfqkd {
class Rng;
}

namespace tfqkd::timing {

/// Frame timing: a 32 ns repetition period holding a 3 ns optical pulse split
/// into three 1 ns phase-modulation bins.
struct TimeBinGrid {
  double frame_period_s = 32e-9;
  double pulse_on_s = 3e-9;
  double bin_width_s = 1e-9;

  bool valid() const;
};

/// Symmetric dead zone at each bin edge. Clicks inside the guard regions are
/// rejected; the acceptance window of a bin is [start + guard, end - guard].
struct GuardBand {
  double guard_s = 0.0;
};

/// Temporal distribution of signal photon detections within a bin, before
/// detector jitter is added.
enum class Envelope : std::uint8_t {
  kUniform,   ///< uniform over the full bin (square drive)
  kGaussian,  ///< Gaussian centred in the bin with width envelope_sigma_s
};

struct BinAssignment {
  std::uint64_t frame_index = 0;
  int bin = 0;  ///< 1-based, in {1, 2, 3}
};

/// Map a detection timestamp onto (frame, bin), honouring guard bands.
/// Returns nullopt for timestamps in a guard region or outside the three-bin
/// pulse window.
std::optional<BinAssignment> assign_bin(double timestamp_s,
                                        const TimeBinGrid& grid,
                                        const GuardBand& g);

/// Gaussian-perturbed timestamp. jitter_std_s = 0 returns the input unchanged.
double jittered_timestamp(double true_bin_center_s, double jitter_std_s,
                          Rng& rng);

/// Probability that a signal click generated in a bin lands inside that same
/// bin's acceptance window, for the given envelope convolved with Gaussian
/// detector jitter.
double acceptance_fraction(const GuardBand& g, const TimeBinGrid& grid,
                           double jitter_std_s,
                           Envelope envelope = Envelope::kUniform,
                           double envelope_sigma_s = 0.0);

/// Probability that a click generated in the bin starting at source_offset_s
/// (relative to its own bin start) lands in the absolute window
/// [window_lo_s, window_hi_s], both measured from the source bin's start.
/// Used for bin-misassignment bookkeeping in the analytic model.
double landing_probability(double window_lo_s, double window_hi_s,
                           const TimeBinGrid& grid, double jitter_std_s,
                           Envelope envelope, double envelope_sigma_s);

/// Standard normal CDF.
double normal_cdf(double z);

}  // namespace tfqkd::timing
