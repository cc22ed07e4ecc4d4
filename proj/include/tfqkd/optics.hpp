#pragma once

#include <array>
#include <cstdint>

namespace tfqkd::optics {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Wrap an angle into the canonical range [0, 2*pi).
double wrap_phase(double phase_rad);

/// One time bin of a weak coherent pulse: mean photon number and optical phase.
struct CoherentBin {
  double mean_photons = 0.0;  ///< photons per bin, >= 0
  double phase = 0.0;         ///< radians, canonical [0, 2*pi)

  CoherentBin() = default;
  CoherentBin(double mu, double phase_rad);
};

/// Mean photon numbers at the two output ports of the measurement beam splitter.
struct PortIntensities {
  double constructive = 0.0;
  double destructive = 0.0;
};

/// Three consecutive 1 ns bins forming one protocol signal. Bin 0 is the
/// unmodulated phase reference.
struct ThreeBinFrame {
  std::array<CoherentBin, 3> bins{};
  std::uint64_t frame_index = 0;
};

/// Interfere two coherent bins on a 50:50 beam splitter.
///
/// constructive = (mu_a + mu_b + 2*sqrt(mu_a*mu_b)*cos(dphi)) / 2,
/// destructive  = (mu_a + mu_b - 2*sqrt(mu_a*mu_b)*cos(dphi)) / 2,
/// with dphi = a.phase - b.phase. Total output energy equals mu_a + mu_b.
PortIntensities interfere_at_bs(const CoherentBin& a, const CoherentBin& b);

/// Same beam splitter with a finite interference contrast in [0, 1].
/// contrast = 1 reduces to the ideal interfere_at_bs; contrast < 1 models
/// mode mismatch at the splitter.
PortIntensities interfere_at_bs(const CoherentBin& a, const CoherentBin& b,
                                double contrast);

/// Threshold (non-photon-number-resolving) detector click probability for a
/// coherent state of mean photon number `mu_at_detector`:
///   1 - (1 - p_dark) * exp(-eta_det * mu_at_detector).
/// Throws std::invalid_argument for negative mu or probabilities outside [0,1].
double click_probability(double mu_at_detector, double eta_det, double p_dark);

/// Apply interfere_at_bs bin-wise to a pair of frames.
std::array<PortIntensities, 3> predict_pattern(const ThreeBinFrame& frame_a,
                                               const ThreeBinFrame& frame_b);

}  // namespace tfqkd::optics
