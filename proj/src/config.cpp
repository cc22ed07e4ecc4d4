#include "tfqkd/config.hpp"

#include <fstream>

#include "tfqkd/analytic.hpp"

namespace tfqkd::config {

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string msg = "configuration invalid:";
  for (const auto& e : errors) {
    msg += "\n  - ";
    msg += e;
  }
  return msg;
}

/// Table III anchors used to calibrate the preset.
constexpr double kVisibilityAt0km = 0.90;
constexpr double kVisibilityAt50km = 0.878;

/// Mean photons per bin at each party's output for the preset. Not a
/// published figure; chosen so the calibrated 50 km run lands at the
/// reference key-rate magnitude (about 1.5e-5 bits per pulse).
constexpr double kPresetMuPerBin = 3.5e-3;

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

sim::SimConfig preset(const std::string& name) {
  if (name != "paper-table4") {
    throw ConfigError({"unknown preset: " + name});
  }
  sim::SimConfig cfg;
  cfg.frames = 100'000'000;
  cfg.mu_per_bin = kPresetMuPerBin;
  cfg.fiber_alice = {50.0, 0.2};
  cfg.fiber_bob = {0.0001, 0.2};
  cfg.eta_det = 0.1;
  cfg.p_dark_per_gate = 1e-5;
  cfg.backscatter_repetition_hz = 31.25e6;
  cfg.backscatter_mean_photons = 40.0;
  cfg.backscatter_beta = 1e-4;
  cfg.grid = {32e-9, 3e-9, 1e-9};
  cfg.guard.guard_s = 450e-12;
  cfg.envelope = timing::Envelope::kGaussian;
  cfg.envelope_sigma_s = 20e-12;
  cfg.jitter_std_s = 10e-12;
  // Reference (bin 1) clicks are too sparse at key-generation photon numbers
  // for reliable per-window flip decisions; the preset reports uncorrected
  // rates. The disturbance experiment enables correction on brighter configs.
  cfg.flip.enabled = false;

  // Calibrate contrast at the 0 km anchor, then drift at the 50 km anchor.
  sim::SimConfig short_link = cfg;
  short_link.fiber_alice.length_km = 0.0001;
  cfg.contrast = sim::calibrate_contrast(short_link, kVisibilityAt0km);
  cfg.drift_std_rad_per_sqrt_s =
      sim::calibrate_drift_std(cfg, kVisibilityAt50km);
  return cfg;
}

namespace {

class Parser {
 public:
  explicit Parser(const nlohmann::json& doc) : doc_(doc) {}

  sim::SimConfig parse() {
    if (!doc_.is_object()) {
      throw ConfigError({"configuration document must be a JSON object"});
    }
    sim::SimConfig cfg;
    if (doc_.contains("preset")) {
      if (!doc_["preset"].is_string()) {
        errors_.push_back("preset: expected a string");
      } else {
        try {
          cfg = preset(doc_["preset"].get<std::string>());
        } catch (const ConfigError& ex) {
          errors_.insert(errors_.end(), ex.errors().begin(),
                         ex.errors().end());
        }
      }
      seen_.push_back("preset");
    }

    take_u64("frames", cfg.frames);
    take_u64("seed", cfg.seed);
    take_int("workers", cfg.workers);
    take_num("mu_per_bin", cfg.mu_per_bin, 1.0);
    take_num("visibility_probe_mu", cfg.visibility_probe_mu, 1.0);
    take_num("fiber_alice_km", cfg.fiber_alice.length_km, 1.0);
    take_num("fiber_bob_km", cfg.fiber_bob.length_km, 1.0);
    double alpha = cfg.fiber_alice.alpha_db_per_km;
    if (take_num("alpha_db_per_km", alpha, 1.0)) {
      cfg.fiber_alice.alpha_db_per_km = alpha;
      cfg.fiber_bob.alpha_db_per_km = alpha;
    }
    take_num("contrast", cfg.contrast, 1.0);
    take_num("drift_rad_per_sqrt_s", cfg.drift_std_rad_per_sqrt_s, 1.0);
    take_num("drift_grid_us", cfg.drift_grid_s, 1e-6);
    take_num("eta_det", cfg.eta_det, 1.0);
    take_num("p_dark_per_gate", cfg.p_dark_per_gate, 1.0);
    take_num("jitter_ps", cfg.jitter_std_s, 1e-12);
    take_envelope(cfg);
    take_num("envelope_sigma_ps", cfg.envelope_sigma_s, 1e-12);
    take_num("frame_period_ns", cfg.grid.frame_period_s, 1e-9);
    double bin_ps = cfg.grid.bin_width_s / 1e-12;
    if (take_num("bin_ps", bin_ps, 1.0)) {
      cfg.grid.bin_width_s = bin_ps * 1e-12;
      cfg.grid.pulse_on_s = 3.0 * cfg.grid.bin_width_s;
    }
    take_num("guard_ps", cfg.guard.guard_s, 1e-12);
    take_num("backscatter_repetition_mhz", cfg.backscatter_repetition_hz, 1e6);
    take_num("backscatter_mu_bar", cfg.backscatter_mean_photons, 1.0);
    take_num("backscatter_beta", cfg.backscatter_beta, 1.0);
    take_bool("flip_enabled", cfg.flip.enabled);
    take_u64("flip_window_frames", cfg.flip.window_frames);
    take_num("flip_threshold", cfg.flip.threshold, 1.0);
    take_bool("flip_use_raw_counts", cfg.flip.use_raw_counts);
    take_u64("flip_raw_min_constructive", cfg.flip.raw_min_constructive);
    take_policy(cfg);
    take_num("e_p_scale_factor", cfg.keyrate.scale_factor, 1.0);
    take_num("e_p_fixed_value", cfg.keyrate.fixed_value, 1.0);
    take_disturbances(cfg);

    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      bool known = false;
      for (const auto& k : seen_) {
        if (k == it.key()) {
          known = true;
          break;
        }
      }
      if (!known) errors_.push_back("unknown key: " + it.key());
    }

    if (errors_.empty()) {
      try {
        cfg.validate();
      } catch (const std::invalid_argument& ex) {
        errors_.push_back(ex.what());
      }
    }
    if (!errors_.empty()) throw ConfigError(errors_);
    return cfg;
  }

 private:
  bool take_num(const char* key, double& out, double unit) {
    if (!doc_.contains(key)) return false;
    seen_.push_back(key);
    const auto& v = doc_[key];
    if (!v.is_number()) {
      errors_.push_back(std::string(key) + ": expected a number");
      return false;
    }
    out = v.get<double>() * unit;
    return true;
  }

  void take_u64(const char* key, std::uint64_t& out) {
    if (!doc_.contains(key)) return;
    seen_.push_back(key);
    const auto& v = doc_[key];
    if (!v.is_number_unsigned() && !(v.is_number_integer() &&
                                     v.get<std::int64_t>() >= 0)) {
      errors_.push_back(std::string(key) +
                        ": expected a nonnegative integer");
      return;
    }
    out = v.get<std::uint64_t>();
  }

  void take_int(const char* key, int& out) {
    if (!doc_.contains(key)) return;
    seen_.push_back(key);
    const auto& v = doc_[key];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1 ||
        v.get<std::int64_t>() > 256) {
      errors_.push_back(std::string(key) + ": expected an integer in [1, 256]");
      return;
    }
    out = static_cast<int>(v.get<std::int64_t>());
  }

  void take_bool(const char* key, bool& out) {
    if (!doc_.contains(key)) return;
    seen_.push_back(key);
    const auto& v = doc_[key];
    if (!v.is_boolean()) {
      errors_.push_back(std::string(key) + ": expected a boolean");
      return;
    }
    out = v.get<bool>();
  }

  void take_envelope(sim::SimConfig& cfg) {
    if (!doc_.contains("envelope")) return;
    seen_.push_back("envelope");
    const auto& v = doc_["envelope"];
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "uniform") {
      cfg.envelope = timing::Envelope::kUniform;
    } else if (s == "gaussian") {
      cfg.envelope = timing::Envelope::kGaussian;
    } else {
      errors_.push_back("envelope: expected \"uniform\" or \"gaussian\"");
    }
  }

  void take_policy(sim::SimConfig& cfg) {
    if (!doc_.contains("e_p_policy")) return;
    seen_.push_back("e_p_policy");
    const auto& v = doc_["e_p_policy"];
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    using Policy = analysis::KeyRateParams::Policy;
    if (s == "equal_to_eb") {
      cfg.keyrate.e_p_policy = Policy::kEqualToEb;
    } else if (s == "scaled") {
      cfg.keyrate.e_p_policy = Policy::kScaled;
    } else if (s == "fixed") {
      cfg.keyrate.e_p_policy = Policy::kFixed;
    } else {
      errors_.push_back(
          "e_p_policy: expected \"equal_to_eb\", \"scaled\" or \"fixed\"");
    }
  }

  void take_disturbances(sim::SimConfig& cfg) {
    if (!doc_.contains("disturbances")) return;
    seen_.push_back("disturbances");
    const auto& arr = doc_["disturbances"];
    if (!arr.is_array()) {
      errors_.push_back("disturbances: expected an array of objects");
      return;
    }
    cfg.disturbances.clear();
    for (const auto& item : arr) {
      if (!item.is_object() || !item.contains("start_ms") ||
          !item.contains("end_ms") || !item.contains("phase_rad") ||
          item.size() != 3 || !item["start_ms"].is_number() ||
          !item["end_ms"].is_number() || !item["phase_rad"].is_number()) {
        errors_.push_back(
            "disturbances: each entry needs numeric start_ms, end_ms, "
            "phase_rad");
        return;
      }
      cfg.disturbances.push_back({item["start_ms"].get<double>() * 1e-3,
                                  item["end_ms"].get<double>() * 1e-3,
                                  item["phase_rad"].get<double>()});
    }
  }

  const nlohmann::json& doc_;
  std::vector<std::string> errors_;
  std::vector<std::string> seen_;
};

}  // namespace

sim::SimConfig parse_config(const nlohmann::json& doc) {
  return Parser(doc).parse();
}

sim::SimConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError({"cannot open config file: " + path});
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError({std::string("config file is not valid JSON: ") +
                       ex.what()});
  }
  return parse_config(doc);
}

nlohmann::json to_json(const sim::SimConfig& cfg) {
  nlohmann::json j;
  j["frames"] = cfg.frames;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["mu_per_bin"] = cfg.mu_per_bin;
  j["visibility_probe_mu"] = cfg.visibility_probe_mu;
  j["fiber_alice_km"] = cfg.fiber_alice.length_km;
  j["fiber_bob_km"] = cfg.fiber_bob.length_km;
  j["alpha_db_per_km"] = cfg.fiber_alice.alpha_db_per_km;
  j["contrast"] = cfg.contrast;
  j["drift_rad_per_sqrt_s"] = cfg.drift_std_rad_per_sqrt_s;
  j["drift_grid_us"] = cfg.drift_grid_s / 1e-6;
  j["eta_det"] = cfg.eta_det;
  j["p_dark_per_gate"] = cfg.p_dark_per_gate;
  j["jitter_ps"] = cfg.jitter_std_s / 1e-12;
  j["envelope"] =
      cfg.envelope == timing::Envelope::kGaussian ? "gaussian" : "uniform";
  j["envelope_sigma_ps"] = cfg.envelope_sigma_s / 1e-12;
  j["frame_period_ns"] = cfg.grid.frame_period_s / 1e-9;
  j["bin_ps"] = cfg.grid.bin_width_s / 1e-12;
  j["guard_ps"] = cfg.guard.guard_s / 1e-12;
  j["backscatter_repetition_mhz"] = cfg.backscatter_repetition_hz / 1e6;
  j["backscatter_mu_bar"] = cfg.backscatter_mean_photons;
  j["backscatter_beta"] = cfg.backscatter_beta;
  j["flip_enabled"] = cfg.flip.enabled;
  j["flip_window_frames"] = cfg.flip.window_frames;
  j["flip_threshold"] = cfg.flip.threshold;
  j["flip_use_raw_counts"] = cfg.flip.use_raw_counts;
  j["flip_raw_min_constructive"] = cfg.flip.raw_min_constructive;
  using Policy = analysis::KeyRateParams::Policy;
  j["e_p_policy"] = cfg.keyrate.e_p_policy == Policy::kEqualToEb
                        ? "equal_to_eb"
                        : (cfg.keyrate.e_p_policy == Policy::kScaled
                               ? "scaled"
                               : "fixed");
  j["e_p_scale_factor"] = cfg.keyrate.scale_factor;
  j["e_p_fixed_value"] = cfg.keyrate.fixed_value;
  auto arr = nlohmann::json::array();
  for (const auto& d : cfg.disturbances) {
    arr.push_back({{"start_ms", d.start_s * 1e3},
                   {"end_ms", d.end_s * 1e3},
                   {"phase_rad", d.phase_rad}});
  }
  j["disturbances"] = arr;
  return j;
}

}  // namespace tfqkd::config
