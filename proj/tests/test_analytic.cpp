#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tfqkd/analytic.hpp"
#include "tfqkd/config.hpp"

using namespace tfqkd;
using namespace tfqkd::sim;

namespace {

SimConfig clean_config() {
  SimConfig cfg;
  cfg.fiber_alice = {0.0001, 0.2};
  cfg.fiber_bob = {0.0001, 0.2};
  cfg.mu_per_bin = 0.05;
  cfg.contrast = 1.0;
  cfg.p_dark_per_gate = 0.0;
  cfg.backscatter_beta = 0.0;
  cfg.jitter_std_s = 0.0;
  cfg.drift_std_rad_per_sqrt_s = 0.0;
  cfg.guard.guard_s = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("noiseless limit has a closed form") {
  const auto cfg = clean_config();
  const auto r = analytic_skr(cfg);
  // Ideal interference lights exactly one port per key bin with intensity
  // 2 * mu_arm; the two key positions click independently.
  const double p = 1.0 - std::exp(-cfg.eta_det * 2.0 * cfg.mu_per_bin_at_bs());
  CHECK(r.e_b == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.r_sift == doctest::Approx(2.0 * p * (1.0 - p)).epsilon(1e-10));
  CHECK(r.inconclusive_fraction == doctest::Approx(p * p).epsilon(1e-10));
  CHECK(r.no_key_fraction ==
        doctest::Approx((1.0 - p) * (1.0 - p)).epsilon(1e-10));
  CHECK(r.secure_rate == doctest::Approx(r.r_sift).epsilon(1e-10));
}

TEST_CASE("frame fractions always sum to one") {
  auto cfg = clean_config();
  cfg.p_dark_per_gate = 1e-3;
  cfg.contrast = 0.95;
  cfg.jitter_std_s = 60e-12;
  cfg.guard.guard_s = 100e-12;
  const auto r = analytic_skr(cfg);
  CHECK(r.r_sift + r.inconclusive_fraction + r.no_key_fraction ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("dark counts floor the error rate") {
  auto cfg = clean_config();
  cfg.mu_per_bin = 0.0;  // only noise clicks remain
  cfg.p_dark_per_gate = 1e-3;
  const auto r = analytic_skr(cfg);
  // Noise clicks pick a random port: half of them are errors.
  CHECK(r.e_b == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.secure_rate == 0.0);
}

TEST_CASE("secure rate decreases with backscatter") {
  auto cfg = config::preset("paper-table4");
  for (double km : {0.0001, 20.0, 50.0}) {
    auto c = cfg;
    c.fiber_alice.length_km = km;
    auto lo = c;
    lo.backscatter_beta = 0.0;
    auto hi = c;
    hi.backscatter_beta = 1e-4;
    CHECK(analytic_skr(hi).secure_rate < analytic_skr(lo).secure_rate);
  }
}

TEST_CASE("drift degrades the error rate monotonically") {
  auto cfg = clean_config();
  cfg.fiber_alice = {50.0, 0.2};
  cfg.contrast = 0.9;
  double prev = -1.0;
  for (double d : {0.0, 5.0, 10.0, 15.0, 20.0}) {
    auto c = cfg;
    c.drift_std_rad_per_sqrt_s = d;
    const double e = analytic_skr(c).e_b;
    CHECK(e >= prev);
    prev = e;
  }
}

TEST_CASE("guard bands trade sifted rate against errors") {
  // With a centred Gaussian envelope the guard rejects uniform noise much
  // harder than signal, so the error rate drops while the sifted rate loses
  // only its noise-driven part.
  auto cfg = clean_config();
  cfg.p_dark_per_gate = 1e-3;
  cfg.contrast = 0.98;
  cfg.envelope = timing::Envelope::kGaussian;
  cfg.envelope_sigma_s = 25e-12;
  cfg.jitter_std_s = 10e-12;
  const auto open = analytic_skr(cfg);
  auto guarded = cfg;
  guarded.guard.guard_s = 300e-12;
  const auto g = analytic_skr(guarded);
  CHECK(g.r_sift < open.r_sift);  // uniform envelope loses acceptance
  CHECK(g.e_b < open.e_b);        // but rejects noise
}

TEST_CASE("expected probe visibility and calibration round trips") {
  auto cfg = clean_config();
  cfg.fiber_alice = {50.0, 0.2};
  cfg.contrast = 0.93;
  cfg.p_dark_per_gate = 1e-5;
  cfg.backscatter_beta = 1e-4;
  cfg.drift_std_rad_per_sqrt_s = 12.0;

  const double v = expected_two_port_visibility(cfg);
  CHECK(v > 0.0);
  CHECK(v < 0.93);

  // calibrate_contrast inverts the visibility prediction.
  const double c = calibrate_contrast(cfg, v);
  CHECK(c == doctest::Approx(cfg.contrast).epsilon(1e-10));

  // calibrate_drift_std inverts it in the drift direction.
  const double d = calibrate_drift_std(cfg, v);
  CHECK(d == doctest::Approx(cfg.drift_std_rad_per_sqrt_s).epsilon(1e-10));

  CHECK_THROWS_AS(calibrate_contrast(cfg, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_drift_std(cfg, 0.999), std::invalid_argument);
}

TEST_CASE("analytic model matches Monte Carlo at the calibrated point") {
  auto cfg = config::preset("paper-table4");
  cfg.frames = 4'000'000;
  cfg.seed = 20240817;
  const auto mc = run(cfg);
  const auto an = analytic_skr(cfg);

  const double n = static_cast<double>(cfg.frames);
  const double se_sift = std::sqrt(an.r_sift / n);
  CHECK(std::abs(mc.stats.sifted_rate() - an.r_sift) < 4.0 * se_sift);

  const double sifted = static_cast<double>(mc.stats.sifted_bits);
  REQUIRE(sifted > 0);
  const double se_e = std::sqrt(an.e_b * (1.0 - an.e_b) / sifted);
  CHECK(std::abs(mc.stats.qber() - an.e_b) < 4.0 * se_e);
}
