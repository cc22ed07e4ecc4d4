#include "tfqkd/sim.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <thread>

#include "tfqkd/optics.hpp"
#include "tfqkd/rng.hpp"

namespace tfqkd::sim {

namespace {
constexpr std::uint64_t kBlockFrames = 1u << 16;
}

double SimConfig::loop_transmittance() const {
  return channel::transmittance(fiber_alice) * channel::transmittance(fiber_bob);
}

double SimConfig::mu_per_bin_at_bs() const {
  // Both counter-propagating signals traverse the full Alice + Bob loop.
  return mu_per_bin * loop_transmittance();
}

double SimConfig::loop_delay_s() const {
  return (fiber_alice.length_km + fiber_bob.length_km) * 1e3 * kGroupIndex /
         kSpeedOfLight;
}

channel::BackscatterParams SimConfig::backscatter_params() const {
  channel::BackscatterParams bp;
  bp.repetition_rate_hz = backscatter_repetition_hz;
  bp.mean_photons_out = backscatter_mean_photons;
  bp.beta = backscatter_beta;
  bp.gate_on_s = grid.pulse_on_s;
  bp.eta_det = eta_det;
  return bp;
}

double SimConfig::noise_per_gate() const {
  // Total fibre between the parties, as seen by the outbound classical light.
  channel::FiberSpec loop{fiber_alice.length_km + fiber_bob.length_km,
                          fiber_alice.alpha_db_per_km};
  return p_dark_per_gate +
         channel::backscatter_click_probability(backscatter_params(), loop);
}

void SimConfig::validate() const {
  std::string errors;
  auto fail = [&errors](const char* msg) {
    if (!errors.empty()) errors += "; ";
    errors += msg;
  };
  if (frames < 1) fail("frames must be >= 1");
  if (!(mu_per_bin >= 0.0)) fail("mu_per_bin must be >= 0");
  if (!(visibility_probe_mu >= 0.0)) fail("visibility_probe_mu must be >= 0");
  if (!(contrast >= 0.0 && contrast <= 1.0)) fail("contrast must be in [0, 1]");
  if (!(eta_det >= 0.0 && eta_det <= 1.0)) fail("eta_det must be in [0, 1]");
  if (!(p_dark_per_gate >= 0.0 && p_dark_per_gate <= 1.0)) {
    fail("p_dark_per_gate must be in [0, 1]");
  }
  if (!(jitter_std_s >= 0.0)) fail("jitter_std_s must be >= 0");
  if (!(envelope_sigma_s >= 0.0)) fail("envelope_sigma_s must be >= 0");
  if (!(drift_std_rad_per_sqrt_s >= 0.0)) fail("drift_std must be >= 0");
  if (!(drift_grid_s > 0.0)) fail("drift_grid_s must be > 0");
  if (!grid.valid()) fail("time-bin grid invalid (need pulse_on = 3*bin_width <= period)");
  if (!(guard.guard_s >= 0.0)) fail("guard must be >= 0");
  if (2.0 * guard.guard_s >= grid.bin_width_s) {
    fail("guard too wide: 2*guard must be < bin width");
  }
  if (!(fiber_alice.length_km >= 0.0) || !(fiber_alice.alpha_db_per_km >= 0.0) ||
      !(fiber_bob.length_km >= 0.0) || !(fiber_bob.alpha_db_per_km >= 0.0)) {
    fail("fiber lengths and attenuation must be >= 0");
  }
  if (!backscatter_params().valid()) fail("invalid backscatter parameters");
  if (flip.window_frames < 1) fail("flip window_frames must be >= 1");
  if (!(flip.threshold > -1.0 && flip.threshold < 1.0)) {
    fail("flip threshold must be in (-1, 1)");
  }
  for (std::size_t i = 0; i < disturbances.size(); ++i) {
    if (disturbances[i].end_s < disturbances[i].start_s) {
      fail("disturbance interval reversed");
      break;
    }
    if (i > 0 && disturbances[i].start_s < disturbances[i - 1].end_s) {
      fail("disturbance schedule overlapping or unordered");
      break;
    }
  }
  if (!errors.empty()) throw std::invalid_argument(errors);
}

namespace {

/// Everything the per-frame hot loop needs, precomputed once per run.
struct FrameModel {
  double period;
  double bin_w;
  double pulse_on;
  double guard;
  double mu_arm;       // per-arm mean photons per bin at the beam splitter
  double contrast;
  double eta;
  double noise_per_bin;  // per detector, per bin
  double jitter;
  double env_sigma;      // envelope sigma (gaussian envelope only)
  bool gaussian_envelope;
  double sigma_total;    // envelope + jitter combined (gaussian case)
  double loop_delay;
  bool has_drift;
  const channel::PhaseDriftProcess* drift;  // pre-sampled, read-only

  explicit FrameModel(const SimConfig& cfg,
                      const channel::PhaseDriftProcess* drift_process)
      : period(cfg.grid.frame_period_s),
        bin_w(cfg.grid.bin_width_s),
        pulse_on(cfg.grid.pulse_on_s),
        guard(cfg.guard.guard_s),
        mu_arm(cfg.mu_per_bin_at_bs()),
        contrast(cfg.contrast),
        eta(cfg.eta_det),
        noise_per_bin(cfg.noise_per_gate() / 3.0),
        jitter(cfg.jitter_std_s),
        env_sigma(cfg.envelope_sigma_s),
        gaussian_envelope(cfg.envelope == timing::Envelope::kGaussian),
        sigma_total(std::hypot(cfg.envelope_sigma_s, cfg.jitter_std_s)),
        loop_delay(cfg.loop_delay_s()),
        has_drift(cfg.drift_std_rad_per_sqrt_s > 0.0),
        drift(drift_process) {}

  double residual_phase(double t) const {
    return channel::sagnac_residual_phase(*drift, loop_delay, t);
  }
};

struct BlockResult {
  analysis::RunStats stats;
  std::vector<protocol::RawSiftedEvent> events;
  std::uint64_t first_window = 0;
  std::vector<protocol::ReferenceWindow> windows;
};

/// Assign a frame-relative timestamp to a bin; -1 = rejected.
inline int assign_relative(double rel, const FrameModel& m) {
  if (rel < 0.0 || rel >= m.pulse_on) return -1;
  int bin = static_cast<int>(rel / m.bin_w);
  if (bin > 2) bin = 2;
  const double pos = rel - bin * m.bin_w;
  if (pos < m.guard || pos > m.bin_w - m.guard) return -1;
  return bin;  // 0-based
}

void simulate_block(const FrameModel& m, std::uint64_t block_index,
                    std::uint64_t frame_begin, std::uint64_t frame_end,
                    std::uint64_t window_frames, std::uint64_t seed,
                    BlockResult& out) {
  Rng rng(derive_seed(seed, block_index));
  out.first_window = frame_begin / window_frames;
  const std::uint64_t last_window = (frame_end - 1) / window_frames;
  out.windows.assign(last_window - out.first_window + 1, {});

  const double mu_sum_half = m.mu_arm;  // (mu_a + mu_b) / 2 for equal arms
  const double cross_max = m.contrast * m.mu_arm;

  double last_delta = std::nan("");
  double p_plus = 0.0, p_minus = 0.0;

  for (std::uint64_t f = frame_begin; f < frame_end; ++f) {
    const double t = static_cast<double>(f) * m.period;
    const double delta = m.residual_phase(t);
    if (delta != last_delta) {
      const double c = std::cos(delta);
      p_plus = 1.0 - std::exp(-m.eta * (mu_sum_half + cross_max * c));
      p_minus = 1.0 - std::exp(-m.eta * (mu_sum_half - cross_max * c));
      last_delta = delta;
    }

    const std::uint64_t word = rng.next_u64();
    const int a1 = static_cast<int>(word & 1u);
    const int a2 = static_cast<int>((word >> 1) & 1u);
    const int b1 = static_cast<int>((word >> 2) & 1u);
    const int b2 = static_cast<int>((word >> 3) & 1u);
    const int relation[3] = {0, a1 ^ b1, a2 ^ b2};

    unsigned key_mask = 0;  // bit (bin-2)*2 + port for bins 2,3
    int key_clicks = 0;
    int key_bin = 0;
    int key_port = 0;
    bool any_key = false;

    for (int b = 0; b < 3; ++b) {
      const double base = b * m.bin_w;
      for (int port = 0; port < 2; ++port) {
        // Constructive port is lit when the relative phase is 0 (+cos term).
        const bool plus = (relation[b] == 0) == (port == 0);
        const double p_sig = plus ? p_plus : p_minus;

        if (rng.uniform() < p_sig) {
          double rel;
          if (m.gaussian_envelope) {
            rel = base + 0.5 * m.bin_w + m.sigma_total * rng.normal();
          } else {
            rel = base + rng.uniform() * m.bin_w;
            if (m.jitter > 0.0) rel += m.jitter * rng.normal();
          }
          const int abin = assign_relative(rel, m);
          if (abin >= 0) {
            out.stats.counts[abin][port]++;
            if (abin == 0) {
              auto& w = out.windows[f / window_frames - out.first_window];
              (port == 0 ? w.c1_constructive : w.c1_destructive)++;
            } else {
              const unsigned bit = 1u << ((abin - 1) * 2 + port);
              if (!(key_mask & bit)) {
                key_mask |= bit;
                ++key_clicks;
                key_bin = abin + 1;
                key_port = port;
              }
              any_key = true;
            }
          }
        }

        if (rng.uniform() < m.noise_per_bin) {
          const double pos = rng.uniform() * m.bin_w;
          if (pos >= m.guard && pos <= m.bin_w - m.guard) {
            out.stats.counts[b][port]++;
            if (b == 0) {
              auto& w = out.windows[f / window_frames - out.first_window];
              (port == 0 ? w.c1_constructive : w.c1_destructive)++;
            } else {
              const unsigned bit = 1u << ((b - 1) * 2 + port);
              if (!(key_mask & bit)) {
                key_mask |= bit;
                ++key_clicks;
                key_bin = b + 1;
                key_port = port;
              }
              any_key = true;
            }
          }
        }
      }
    }

    if (!any_key) {
      out.stats.no_click_frames++;
    } else if (key_clicks == 1) {
      protocol::RawSiftedEvent ev;
      ev.frame_index = f;
      ev.bin = key_bin;
      ev.port = static_cast<protocol::Port>(key_port);
      ev.alice = {static_cast<std::uint8_t>(a1), static_cast<std::uint8_t>(a2)};
      ev.bob = {static_cast<std::uint8_t>(b1), static_cast<std::uint8_t>(b2)};
      out.events.push_back(ev);
    } else {
      out.stats.inconclusive++;
    }
  }
  out.stats.frames_simulated = frame_end - frame_begin;
}

}  // namespace

double RunResult::qber_in_range(const std::vector<protocol::SiftedRecord>& recs,
                                std::uint64_t begin, std::uint64_t end) {
  std::uint64_t total = 0, errs = 0;
  for (const auto& r : recs) {
    const auto f = r.announcement.frame_index;
    if (f >= begin && f < end) {
      ++total;
      if (r.alice_bit != r.bob_bit) ++errs;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(errs) / static_cast<double>(total);
}

RunResult run(const SimConfig& config) {
  config.validate();

  channel::PhaseDriftProcess drift(config.drift_std_rad_per_sqrt_s,
                                   derive_seed(config.seed, 0xd21f7u),
                                   config.drift_grid_s);
  drift.set_schedule(config.disturbances);
  const double t_max =
      static_cast<double>(config.frames) * config.grid.frame_period_s;
  // Fill the path up front; the process is then read-only and safe to share.
  if (config.drift_std_rad_per_sqrt_s > 0.0) drift.pre_sample(t_max);

  FrameModel model(config, &drift);

  const std::uint64_t n_blocks =
      (config.frames + kBlockFrames - 1) / kBlockFrames;
  std::vector<BlockResult> blocks(n_blocks);

  auto process = [&](std::uint64_t bi) {
    const std::uint64_t begin = bi * kBlockFrames;
    const std::uint64_t end =
        std::min(begin + kBlockFrames, config.frames);
    simulate_block(model, bi, begin, end, config.flip.window_frames,
                   config.seed, blocks[bi]);
  };

  const int workers = config.workers > 0 ? config.workers : 1;
  if (workers <= 1 || n_blocks <= 1) {
    for (std::uint64_t bi = 0; bi < n_blocks; ++bi) process(bi);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int wi = 0; wi < workers; ++wi) {
      pool.emplace_back([&] {
        for (;;) {
          const std::uint64_t bi = next.fetch_add(1);
          if (bi >= n_blocks) return;
          process(bi);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  RunResult result;
  const std::uint64_t n_windows =
      (config.frames + config.flip.window_frames - 1) /
      config.flip.window_frames;
  result.windows.assign(n_windows, {});
  for (std::uint64_t bi = 0; bi < n_blocks; ++bi) {
    auto& blk = blocks[bi];
    result.stats += blk.stats;
    for (std::size_t wi = 0; wi < blk.windows.size(); ++wi) {
      result.windows[blk.first_window + wi].c1_constructive +=
          blk.windows[wi].c1_constructive;
      result.windows[blk.first_window + wi].c1_destructive +=
          blk.windows[wi].c1_destructive;
    }
    result.raw_events.insert(result.raw_events.end(), blk.events.begin(),
                             blk.events.end());
  }

  if (config.flip.enabled && config.flip.use_raw_counts) {
    result.records = protocol::flip_correction_raw(
        result.raw_events, result.windows, config.flip.window_frames,
        config.flip.raw_min_constructive);
  } else if (config.flip.enabled) {
    result.records =
        protocol::flip_correction(result.raw_events, result.windows,
                                  config.flip.window_frames,
                                  config.flip.threshold);
  } else {
    result.records = protocol::derive_records(result.raw_events);
  }
  result.stats.sifted_bits = result.records.size();
  std::uint64_t errs = 0;
  for (const auto& r : result.records) {
    if (r.alice_bit != r.bob_bit) ++errs;
  }
  result.stats.errors = errs;
  return result;
}

double VisibilityProbeResult::two_port_visibility(int bob_bit1,
                                                  int bob_bit2) const {
  // Correct port per bin: constructive when the relative phase is 0.
  const int rel[3] = {0, bob_bit1, bob_bit2};
  double correct = 0.0, error = 0.0;
  for (int b = 0; b < 3; ++b) {
    correct += counts[b][rel[b] == 0 ? 0 : 1];
    error += counts[b][rel[b] == 0 ? 1 : 0];
  }
  const double total = correct + error;
  return total > 0.0 ? (correct - error) / total : 0.0;
}

double VisibilityProbeResult::pattern_visibility() const {
  const double n1 = counts[0][0], n2 = counts[1][0], n3 = counts[2][0];
  const double total = n1 + n2 + n3;
  return total > 0.0 ? ((n1 + n2) - n3) / total : 0.0;
}

VisibilityProbeResult run_visibility_probe(const SimConfig& config,
                                           int bob_bit1, int bob_bit2) {
  config.validate();

  channel::PhaseDriftProcess drift(config.drift_std_rad_per_sqrt_s,
                                   derive_seed(config.seed, 0xd21f7u),
                                   config.drift_grid_s);
  drift.set_schedule(config.disturbances);

  const double mu_arm = config.visibility_probe_mu * config.loop_transmittance();
  const double noise_per_bin = config.noise_per_gate() / 3.0;
  const double loop_delay = config.loop_delay_s();
  const int rel[3] = {0, bob_bit1, bob_bit2};

  Rng rng(derive_seed(config.seed, 0x715cUL));
  VisibilityProbeResult out;

  double last_delta = std::nan("");
  double lambda[3][2] = {};
  double expl[3][2] = {};

  for (std::uint64_t f = 0; f < config.frames; ++f) {
    const double t = static_cast<double>(f) * config.grid.frame_period_s;
    const double delta = channel::sagnac_residual_phase(drift, loop_delay, t);
    if (delta != last_delta) {
      const double c = std::cos(delta);
      for (int b = 0; b < 3; ++b) {
        const double x = rel[b] == 0 ? c : -c;
        lambda[b][0] = config.eta_det * mu_arm * (1.0 + config.contrast * x) +
                       noise_per_bin;
        lambda[b][1] = config.eta_det * mu_arm * (1.0 - config.contrast * x) +
                       noise_per_bin;
        expl[b][0] = std::exp(-lambda[b][0]);
        expl[b][1] = std::exp(-lambda[b][1]);
      }
      last_delta = delta;
    }
    for (int b = 0; b < 3; ++b) {
      for (int p = 0; p < 2; ++p) {
        // Knuth Poisson sampler; lambda is O(1) here.
        int k = 0;
        double prod = rng.uniform();
        while (prod > expl[b][p]) {
          ++k;
          prod *= rng.uniform();
        }
        out.counts[b][p] += k;
      }
    }
  }
  return out;
}

std::vector<SweepRow> sweep(const SweepSpec& spec, const SimConfig& base) {
  if (spec.values.empty()) {
    throw std::invalid_argument("sweep grid must be nonempty");
  }
  std::vector<SweepRow> rows;
  rows.reserve(spec.values.size());
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    SweepRow row;
    row.value = spec.values[i];
    row.seed = derive_seed(base.seed, 0xa11ceULL + i);
    try {
      SimConfig cfg = base;
      cfg.seed = row.seed;
      if (spec.frames_per_point > 0) cfg.frames = spec.frames_per_point;
      row.frames = cfg.frames;

      switch (spec.variable) {
        case SweepVariable::kGuardBand:
          cfg.guard.guard_s = spec.values[i];
          break;
        case SweepVariable::kDistance:
          cfg.fiber_alice.length_km = spec.values[i];
          break;
        case SweepVariable::kBeta:
          cfg.backscatter_beta = spec.values[i];
          break;
        case SweepVariable::kDisturbance: {
          const std::uint64_t b = cfg.frames * 2 / 5;
          const std::uint64_t e = cfg.frames * 3 / 5;
          const auto rep = disturbance_experiment(cfg, b, e, spec.values[i]);
          row.e_b = rep.qber_overall_corrected;
          row.visibility = 1.0 - 2.0 * row.e_b;
          rows.push_back(row);
          continue;
        }
      }

      const auto result = run(cfg);
      row.e_b = result.stats.qber();
      row.r_sift = result.stats.sifted_rate();
      row.secure_rate = analysis::secure_key_rate(result.stats, cfg.keyrate);
      row.inconclusive_fraction =
          static_cast<double>(result.stats.inconclusive) /
          static_cast<double>(result.stats.frames_simulated);
      if (spec.variable == SweepVariable::kDistance) {
        row.visibility =
            run_visibility_probe(cfg, 0, 1).two_port_visibility(0, 1);
      } else {
        row.visibility = 1.0 - 2.0 * row.e_b;
      }
    } catch (const std::exception& ex) {
      row.failed = true;
      row.error = ex.what();
    }
    rows.push_back(row);
  }
  return rows;
}

DisturbanceReport disturbance_experiment(const SimConfig& base,
                                         std::uint64_t segment_begin,
                                         std::uint64_t segment_end,
                                         double phase_rad) {
  if (segment_end > base.frames || segment_begin > segment_end) {
    throw std::invalid_argument("disturbance segment outside run");
  }
  SimConfig cfg = base;
  if (segment_end > segment_begin) {
    cfg.disturbances.push_back(
        {static_cast<double>(segment_begin) * cfg.grid.frame_period_s,
         static_cast<double>(segment_end) * cfg.grid.frame_period_s,
         phase_rad});
  }
  cfg.flip.enabled = true;
  const auto result = run(cfg);

  const auto uncorrected = protocol::derive_records(result.raw_events);
  const auto& corrected = result.records;

  DisturbanceReport rep;
  rep.segment_begin = segment_begin;
  rep.segment_end = segment_end;
  rep.qber_segment_uncorrected =
      RunResult::qber_in_range(uncorrected, segment_begin, segment_end);
  rep.qber_segment_corrected =
      RunResult::qber_in_range(corrected, segment_begin, segment_end);
  // Baseline: everything outside the segment.
  auto outside = [&](const std::vector<protocol::SiftedRecord>& recs) {
    std::uint64_t total = 0, errs = 0;
    for (const auto& r : recs) {
      const auto f = r.announcement.frame_index;
      if (f < segment_begin || f >= segment_end) {
        ++total;
        if (r.alice_bit != r.bob_bit) ++errs;
      }
    }
    return total == 0 ? 0.0
                      : static_cast<double>(errs) / static_cast<double>(total);
  };
  rep.qber_baseline_uncorrected = outside(uncorrected);
  rep.qber_baseline_corrected = outside(corrected);
  rep.qber_overall_uncorrected =
      RunResult::qber_in_range(uncorrected, 0, base.frames);
  rep.qber_overall_corrected =
      RunResult::qber_in_range(corrected, 0, base.frames);
  return rep;
}

}  // namespace tfqkd::sim
