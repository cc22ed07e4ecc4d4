#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfqkd/analysis.hpp"
#include "tfqkd/channel.hpp"
#include "tfqkd/protocol.hpp"
#include "tfqkd/timing.hpp"

namespace tfqkd::sim {

/// Speed of light (m/s) and fiber group index used for the loop delay.
inline constexpr double kSpeedOfLight = 2.99792458e8;
inline constexpr double kGroupIndex = 1.468;

struct FlipCorrectionConfig {
  bool enabled = false;
  std::uint64_t window_frames = 1000;
  double threshold = 0.0;
  /// When set, the flip decision uses raw constructive counts instead of the
  /// reference visibility: flip when c1_constructive < raw_min_constructive.
  bool use_raw_counts = false;
  std::uint64_t raw_min_constructive = 0;
};

/// Full configuration of one Monte Carlo run.
struct SimConfig {
  std::uint64_t frames = 1'000'000;
  std::uint64_t seed = 1;
  int workers = 1;  ///< worker threads; frames are block-partitioned so the
                    ///< result is identical for any worker count

  double mu_per_bin = 0.1;  ///< mean photons per bin at each party's output
  channel::FiberSpec fiber_alice{50.0, 0.2};
  channel::FiberSpec fiber_bob{0.0001, 0.2};

  double contrast = 1.0;  ///< interference contrast at the beam splitter
  double drift_std_rad_per_sqrt_s = 0.0;
  double drift_grid_s = 1e-6;
  std::vector<channel::Disturbance> disturbances;

  double eta_det = 0.1;
  double p_dark_per_gate = 1e-5;  ///< per detector, per 3 ns gate
  double jitter_std_s = 60e-12;
  timing::Envelope envelope = timing::Envelope::kUniform;
  double envelope_sigma_s = 0.0;

  timing::TimeBinGrid grid{};
  timing::GuardBand guard{0.0};

  double backscatter_repetition_hz = 31.25e6;
  double backscatter_mean_photons = 40.0;
  double backscatter_beta = 1e-4;

  FlipCorrectionConfig flip;
  analysis::KeyRateParams keyrate;

  /// Mean photons per bin used by the count-mode visibility probe (the
  /// classical-level interference measurement).
  double visibility_probe_mu = 20.0;

  // Derived quantities.
  double loop_transmittance() const;
  double mu_per_bin_at_bs() const;  ///< per arm, after the full loop
  double loop_delay_s() const;
  channel::BackscatterParams backscatter_params() const;
  /// Backscatter + dark click probability per detector per gate.
  double noise_per_gate() const;

  /// Throws std::invalid_argument listing every violated constraint.
  void validate() const;
};

struct RunResult {
  analysis::RunStats stats;  ///< after flip correction, when enabled
  std::vector<protocol::RawSiftedEvent> raw_events;
  std::vector<protocol::SiftedRecord> records;
  std::vector<protocol::ReferenceWindow> windows;

  /// QBER of the given records restricted to a frame range [begin, end).
  static double qber_in_range(const std::vector<protocol::SiftedRecord>& recs,
                              std::uint64_t begin, std::uint64_t end);
};

/// Seeded Monte Carlo over `config.frames` protocol rounds.
RunResult run(const SimConfig& config);

/// Photon-counting (non-thresholding) interference measurement for a fixed
/// encoding pattern; Alice sends all-zero phases, Bob sends
/// (0, bob_bit1 * pi, bob_bit2 * pi) at visibility_probe_mu photons per bin.
struct VisibilityProbeResult {
  double counts[3][2] = {{0, 0}, {0, 0}, {0, 0}};  ///< [bin][port] photocounts

  double two_port_visibility(int bob_bit1, int bob_bit2) const;
  double pattern_visibility() const;  ///< Eq-style, constructive port only
};

VisibilityProbeResult run_visibility_probe(const SimConfig& config,
                                           int bob_bit1, int bob_bit2);

enum class SweepVariable : std::uint8_t {
  kGuardBand,   ///< values in seconds
  kDistance,    ///< Alice-side fibre length, km
  kBeta,        ///< backscattering coefficient
  kDisturbance  ///< injected phase, rad, over the middle 20% of frames
};

struct SweepSpec {
  SweepVariable variable = SweepVariable::kDistance;
  std::vector<double> values;
  std::uint64_t frames_per_point = 0;  ///< 0 = use base config frames
};

struct SweepRow {
  double value = 0.0;
  std::uint64_t frames = 0;
  double visibility = 0.0;  ///< count-mode two-port visibility for distance
                            ///< sweeps, sifted-stream visibility otherwise
  double e_b = 0.0;
  double r_sift = 0.0;
  double secure_rate = 0.0;
  double inconclusive_fraction = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
};

std::vector<SweepRow> sweep(const SweepSpec& spec, const SimConfig& base);

struct DisturbanceReport {
  std::uint64_t segment_begin = 0;
  std::uint64_t segment_end = 0;
  double qber_segment_uncorrected = 0.0;
  double qber_segment_corrected = 0.0;
  double qber_baseline_uncorrected = 0.0;
  double qber_baseline_corrected = 0.0;
  double qber_overall_uncorrected = 0.0;
  double qber_overall_corrected = 0.0;
};

/// Inject `phase_rad` over the frame range [segment_begin, segment_end) and
/// report segment/baseline QBER with flip correction off and on.
DisturbanceReport disturbance_experiment(const SimConfig& base,
                                         std::uint64_t segment_begin,
                                         std::uint64_t segment_end,
                                         double phase_rad = optics::kPi);

}  // namespace tfqkd::sim
