#include "tfqkd/optics.hpp"

#include <cmath>
#include <stdexcept>

namespace tfqkd::optics {

double wrap_phase(double phase_rad) {
  if (!std::isfinite(phase_rad)) {
    throw std::invalid_argument("phase must be finite");
  }
  double w = std::fmod(phase_rad, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  // fmod of a value just below 2*pi can round back up to 2*pi.
  if (w >= kTwoPi) w = 0.0;
  return w;
}

CoherentBin::CoherentBin(double mu, double phase_rad)
    : mean_photons(mu), phase(wrap_phase(phase_rad)) {
  if (!(mu >= 0.0)) {
    throw std::invalid_argument("mean_photons must be >= 0");
  }
}

PortIntensities interfere_at_bs(const CoherentBin& a, const CoherentBin& b) {
  return interfere_at_bs(a, b, 1.0);
}

PortIntensities interfere_at_bs(const CoherentBin& a, const CoherentBin& b,
                                double contrast) {
  if (!(contrast >= 0.0 && contrast <= 1.0)) {
    throw std::invalid_argument("contrast must be in [0, 1]");
  }
  const double sum = a.mean_photons + b.mean_photons;
  const double cross =
      2.0 * contrast * std::sqrt(a.mean_photons * b.mean_photons) *
      std::cos(a.phase - b.phase);
  PortIntensities out;
  out.constructive = 0.5 * (sum + cross);
  out.destructive = 0.5 * (sum - cross);
  // Guard against tiny negative values from cancellation.
  if (out.constructive < 0.0) out.constructive = 0.0;
  if (out.destructive < 0.0) out.destructive = 0.0;
  return out;
}

double click_probability(double mu_at_detector, double eta_det, double p_dark) {
  if (!(mu_at_detector >= 0.0)) {
    throw std::invalid_argument("mu_at_detector must be >= 0");
  }
  if (!(eta_det >= 0.0 && eta_det <= 1.0)) {
    throw std::invalid_argument("eta_det must be in [0, 1]");
  }
  if (!(p_dark >= 0.0 && p_dark <= 1.0)) {
    throw std::invalid_argument("p_dark must be in [0, 1]");
  }
  const double p = 1.0 - (1.0 - p_dark) * std::exp(-eta_det * mu_at_detector);
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

std::array<PortIntensities, 3> predict_pattern(const ThreeBinFrame& frame_a,
                                               const ThreeBinFrame& frame_b) {
  std::array<PortIntensities, 3> out;
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = interfere_at_bs(frame_a.bins[i], frame_b.bins[i]);
  }
  return out;
}

}  // namespace tfqkd::optics
