#include "tfqkd/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace tfqkd::analysis {

RunStats& RunStats::operator+=(const RunStats& other) {
  for (int b = 0; b < 3; ++b) {
    for (int p = 0; p < 2; ++p) counts[b][p] += other.counts[b][p];
  }
  sifted_bits += other.sifted_bits;
  errors += other.errors;
  frames_simulated += other.frames_simulated;
  inconclusive += other.inconclusive;
  no_click_frames += other.no_click_frames;
  return *this;
}

double RunStats::qber() const {
  return sifted_bits == 0
             ? 0.0
             : static_cast<double>(errors) / static_cast<double>(sifted_bits);
}

double RunStats::sifted_rate() const {
  return frames_simulated == 0 ? 0.0
                               : static_cast<double>(sifted_bits) /
                                     static_cast<double>(frames_simulated);
}

double KeyRateParams::phase_error_rate(double e_b) const {
  double e_p = e_b;
  switch (e_p_policy) {
    case Policy::kEqualToEb:
      break;
    case Policy::kScaled:
      e_p = scale_factor * e_b;
      break;
    case Policy::kFixed:
      e_p = fixed_value;
      break;
  }
  if (e_p < 0.0) e_p = 0.0;
  if (e_p > 0.5) e_p = 0.5;
  return e_p;
}

std::optional<double> visibility(std::uint64_t correct_counts,
                                 std::uint64_t error_counts) {
  const std::uint64_t total = correct_counts + error_counts;
  if (total == 0) return std::nullopt;
  return (static_cast<double>(correct_counts) -
          static_cast<double>(error_counts)) /
         static_cast<double>(total);
}

std::optional<double> pattern_visibility(double n1, double n2, double n3) {
  const double total = n1 + n2 + n3;
  if (!(total > 0.0)) return std::nullopt;
  return ((n1 + n2) - n3) / total;
}

double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument("binary_entropy argument must be in [0, 1]");
  }
  double h = 0.0;
  if (x > 0.0) h -= x * std::log2(x);
  if (x < 1.0) h -= (1.0 - x) * std::log2(1.0 - x);
  return h;
}

double secure_key_rate(double r_sift, double e_b, double e_p) {
  const double bracket = 1.0 - binary_entropy(e_b) - binary_entropy(e_p);
  const double r = r_sift * bracket;
  return r > 0.0 ? r : 0.0;
}

double secure_key_rate(const RunStats& stats, const KeyRateParams& params) {
  if (stats.sifted_bits == 0) return 0.0;
  const double e_b = stats.qber();
  return secure_key_rate(stats.sifted_rate(), e_b,
                         params.phase_error_rate(e_b));
}

}  // namespace tfqkd::analysis
