#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace tfqkd::analysis {

/// Aggregate counters for one simulation run. Merging is associative and
/// commutative, so partial stats from parallel blocks can be reduced in any
/// grouping (the driver still merges in block order for determinism).
struct RunStats {
  /// Accepted clicks per (bin 1..3, port C/D); index [bin-1][port].
  std::array<std::array<std::uint64_t, 2>, 3> counts{};
  std::uint64_t sifted_bits = 0;
  std::uint64_t errors = 0;
  std::uint64_t frames_simulated = 0;
  std::uint64_t inconclusive = 0;  ///< frames with >= 2 distinct key clicks
  std::uint64_t no_click_frames = 0;

  RunStats& operator+=(const RunStats& other);

  double qber() const;            ///< errors / sifted_bits (0 when empty)
  double sifted_rate() const;     ///< sifted_bits / frames_simulated
};

/// Phase-error-rate policy for the key-rate formula. The exact bound is
/// external to this toolkit; by default e_p is set equal to the observed QBER.
struct KeyRateParams {
  enum class Policy : std::uint8_t { kEqualToEb, kScaled, kFixed };
  Policy e_p_policy = Policy::kEqualToEb;
  double scale_factor = 1.0;   ///< used by kScaled
  double fixed_value = 0.0;    ///< used by kFixed
  double sift_factor = 4.0;    ///< R_sift = sift_factor * r

  double phase_error_rate(double e_b) const;
};

/// Interference visibility (P_c - P_e) / (P_c + P_e).
/// Zero total -> nullopt (no data).
std::optional<double> visibility(std::uint64_t correct_counts,
                                 std::uint64_t error_counts);

/// Visibility of the 0-0-pi test pattern from constructive-port counts in the
/// three bins: ((n1 + n2) - n3) / (n1 + n2 + n3).
std::optional<double> pattern_visibility(double n1, double n2, double n3);

/// Shannon binary entropy, -x log2 x - (1-x) log2 (1-x), with 0 log 0 = 0.
double binary_entropy(double x);

/// Secure key rate in bits per pulse: R = R_sift * (1 - h(e_b) - h(e_p)),
/// clamped at zero. R_sift is measured directly as sifted_bits / frames.
double secure_key_rate(const RunStats& stats, const KeyRateParams& params);

/// Same formula on already-reduced quantities.
double secure_key_rate(double r_sift, double e_b, double e_p);

}  // namespace tfqkd::analysis
