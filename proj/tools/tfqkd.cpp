#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tfqkd/analytic.hpp"
#include "tfqkd/config.hpp"
#include "tfqkd/protocol.hpp"
#include "tfqkd/sim.hpp"

namespace {

using tfqkd::sim::SimConfig;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitInvariantError = 3;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> frames;
  std::string out_path;
  std::string format = "csv";
  bool print_config = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Configuration file (JSON)");
  cmd->add_option("--seed", o.seed, "Override the RNG seed");
  cmd->add_option("--frames", o.frames, "Override the frame count");
  cmd->add_option("--out", o.out_path,
                  "Result file path (stdout when omitted)");
  cmd->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--print-config", o.print_config,
                "Print the effective configuration and continue");
}

SimConfig load_config(const CommonOpts& o) {
  SimConfig cfg;
  if (!o.config_path.empty()) {
    cfg = tfqkd::config::parse_config_file(o.config_path);
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.frames) {
    cfg.frames = *o.frames;
    cfg.validate();
  }
  if (o.print_config) {
    std::cout << tfqkd::config::to_json(cfg).dump(2) << "\n";
  }
  return cfg;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// One result table: fixed column set plus the embedded manifest.
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv(const nlohmann::json& manifest) const {
    std::ostringstream os;
    os << "# schema_version=" << tfqkd::config::kSchemaVersion << "\n";
    os << "# tool_version=" << tfqkd::config::kToolVersion << "\n";
    os << "# config=" << manifest["config"].dump() << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
      os << (i ? "," : "") << columns[i];
    }
    os << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        os << (i ? "," : "") << row[i];
      }
      os << "\n";
    }
    return os.str();
  }

  std::string to_json(const nlohmann::json& manifest) const {
    nlohmann::json j = manifest;
    auto arr = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json obj;
      for (std::size_t i = 0; i < columns.size(); ++i) {
        obj[columns[i]] = row[i];
      }
      arr.push_back(obj);
    }
    j["rows"] = arr;
    return j.dump(2) + "\n";
  }
};

nlohmann::json make_manifest(const SimConfig& cfg) {
  nlohmann::json m;
  m["schema_version"] = tfqkd::config::kSchemaVersion;
  m["tool_version"] = tfqkd::config::kToolVersion;
  m["seed"] = cfg.seed;
  m["config"] = tfqkd::config::to_json(cfg);
  return m;
}

void emit(const ResultTable& table, const SimConfig& cfg,
          const CommonOpts& o) {
  const auto manifest = make_manifest(cfg);
  const std::string text =
      o.format == "json" ? table.to_json(manifest) : table.to_csv(manifest);
  if (o.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(o.out_path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write output file: " + o.out_path);
  }
  out << text;
}

const std::vector<std::string> kSweepColumns = {
    "value",       "frames", "visibility",
    "e_b",         "r_sift", "secure_rate",
    "inconclusive_fraction", "seed"};

std::vector<std::string> sweep_row(const tfqkd::sim::SweepRow& r) {
  return {fmt(r.value),
          std::to_string(r.frames),
          fmt(r.visibility),
          fmt(r.e_b),
          fmt(r.r_sift),
          fmt(r.secure_rate),
          fmt(r.inconclusive_fraction),
          std::to_string(r.seed)};
}

int cmd_run(const CommonOpts& o, const std::string& records_path) {
  const SimConfig cfg = load_config(o);
  const auto result = tfqkd::sim::run(cfg);

  ResultTable table;
  table.columns = kSweepColumns;
  tfqkd::sim::SweepRow row;
  row.value = cfg.fiber_alice.length_km;
  row.frames = cfg.frames;
  row.e_b = result.stats.qber();
  row.visibility = 1.0 - 2.0 * row.e_b;
  row.r_sift = result.stats.sifted_rate();
  row.secure_rate = tfqkd::analysis::secure_key_rate(result.stats, cfg.keyrate);
  row.inconclusive_fraction =
      static_cast<double>(result.stats.inconclusive) /
      static_cast<double>(result.stats.frames_simulated);
  row.seed = cfg.seed;
  table.rows.push_back(sweep_row(row));
  emit(table, cfg, o);

  if (!records_path.empty()) {
    std::ofstream rec(records_path, std::ios::binary);
    if (!rec) {
      throw std::runtime_error("cannot write records file: " + records_path);
    }
    rec << tfqkd::protocol::record_header() << "\n";
    for (const auto& r : result.records) {
      rec << tfqkd::protocol::to_line(r) << "\n";
    }
  }
  return kExitOk;
}

int cmd_sweep(const CommonOpts& o, tfqkd::sim::SweepVariable var,
              std::vector<double> values, std::uint64_t frames_per_point,
              double unit) {
  const SimConfig cfg = load_config(o);
  tfqkd::sim::SweepSpec spec;
  spec.variable = var;
  for (double v : values) spec.values.push_back(v * unit);
  spec.frames_per_point = frames_per_point;

  const auto rows = tfqkd::sim::sweep(spec, cfg);
  ResultTable table;
  table.columns = kSweepColumns;
  bool any_failed = false;
  for (const auto& r : rows) {
    if (r.failed) {
      any_failed = true;
      std::cerr << "sweep point " << r.value << " failed: " << r.error
                << "\n";
      continue;
    }
    auto out = r;
    out.value = r.value / unit;  // report in the flag's unit
    table.rows.push_back(sweep_row(out));
  }
  emit(table, cfg, o);
  return any_failed ? kExitInvariantError : kExitOk;
}

int cmd_disturbance(const CommonOpts& o, double phase_rad,
                    double segment_fraction) {
  const SimConfig cfg = load_config(o);
  if (!(segment_fraction > 0.0 && segment_fraction < 1.0)) {
    throw tfqkd::config::ConfigError(
        {"segment fraction must be in (0, 1)"});
  }
  const std::uint64_t len =
      static_cast<std::uint64_t>(segment_fraction * cfg.frames);
  const std::uint64_t begin = (cfg.frames - len) / 2;
  const auto rep =
      tfqkd::sim::disturbance_experiment(cfg, begin, begin + len, phase_rad);

  ResultTable table;
  table.columns = {"segment_begin",
                   "segment_end",
                   "qber_segment_uncorrected",
                   "qber_segment_corrected",
                   "qber_baseline_uncorrected",
                   "qber_baseline_corrected",
                   "qber_overall_uncorrected",
                   "qber_overall_corrected"};
  table.rows.push_back({std::to_string(rep.segment_begin),
                        std::to_string(rep.segment_end),
                        fmt(rep.qber_segment_uncorrected),
                        fmt(rep.qber_segment_corrected),
                        fmt(rep.qber_baseline_uncorrected),
                        fmt(rep.qber_baseline_corrected),
                        fmt(rep.qber_overall_uncorrected),
                        fmt(rep.qber_overall_corrected)});
  emit(table, cfg, o);
  return kExitOk;
}

int cmd_selftest() {
  using namespace tfqkd;
  int failures = 0;
  auto check = [&failures](bool ok, const char* what) {
    std::cout << (ok ? "PASS" : "FAIL") << " " << what << "\n";
    if (!ok) ++failures;
  };

  // Brute-force sifting oracle: every bit combination, ideal optics.
  bool sift_ok = true;
  for (int bits = 0; bits < 16; ++bits) {
    const protocol::EncodingBits alice{
        static_cast<std::uint8_t>(bits & 1),
        static_cast<std::uint8_t>((bits >> 1) & 1)};
    const protocol::EncodingBits bob{
        static_cast<std::uint8_t>((bits >> 2) & 1),
        static_cast<std::uint8_t>((bits >> 3) & 1)};
    for (int bin = 2; bin <= 3; ++bin) {
      const int rel = bin == 2 ? (alice.bit1 ^ bob.bit1)
                               : (alice.bit2 ^ bob.bit2);
      const auto port = rel == 0 ? protocol::Port::kConstructive
                                 : protocol::Port::kDestructive;
      const auto outcome = protocol::conclusive_outcome(
          {{bin, port}}, 0);
      if (!outcome || outcome->bin != bin || outcome->port != port) {
        sift_ok = false;
        continue;
      }
      const auto a =
          protocol::derive_key_bit(*outcome, alice, protocol::Role::kAlice);
      const auto b =
          protocol::derive_key_bit(*outcome, bob, protocol::Role::kBob);
      if (a != b) sift_ok = false;
    }
  }
  check(sift_ok, "sifting oracle (16 bit combinations)");

  check(std::abs(analysis::binary_entropy(0.5) - 1.0) < 1e-15 &&
            analysis::binary_entropy(0.0) == 0.0 &&
            analysis::binary_entropy(1.0) == 0.0,
        "binary entropy identities");

  const auto vis = analysis::visibility(939, 61);
  check(vis && std::abs(*vis - 0.878) < 1e-12, "visibility identity");

  check(std::abs(optics::click_probability(0.0, 0.1, 0.01) - 0.01) < 1e-15,
        "click probability dark-count limit");

  return failures == 0 ? kExitOk : kExitInvariantError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-time-bin twin-field QKD simulator and analysis toolkit"};
  app.require_subcommand(1);

  CommonOpts run_o, guard_o, dist_o, beta_o, disturb_o;
  std::string records_path;
  auto* run_cmd = app.add_subcommand("run", "Single Monte Carlo run");
  add_common(run_cmd, run_o);
  run_cmd->add_option("--records", records_path,
                      "Also write the sifted record stream to this path");

  std::vector<double> guard_values;
  std::uint64_t guard_fpp = 0;
  auto* guard_cmd =
      app.add_subcommand("sweep-guard", "Guard-band sweep (values in ps)");
  add_common(guard_cmd, guard_o);
  guard_cmd->add_option("--values", guard_values, "Guard bands in ps")
      ->delimiter(',');
  guard_cmd->add_option("--frames-per-point", guard_fpp,
                        "Frames per sweep point (0 = config frames)");

  std::vector<double> dist_values;
  std::uint64_t dist_fpp = 0;
  auto* dist_cmd =
      app.add_subcommand("sweep-distance", "Distance sweep (values in km)");
  add_common(dist_cmd, dist_o);
  dist_cmd->add_option("--values", dist_values, "Distances in km")
      ->delimiter(',');
  dist_cmd->add_option("--frames-per-point", dist_fpp,
                       "Frames per sweep point (0 = config frames)");

  std::vector<double> beta_values;
  std::uint64_t beta_fpp = 0;
  auto* beta_cmd = app.add_subcommand(
      "sweep-beta", "Backscattering-coefficient sweep (dimensionless)");
  add_common(beta_cmd, beta_o);
  beta_cmd->add_option("--values", beta_values, "Beta values")
      ->delimiter(',');
  beta_cmd->add_option("--frames-per-point", beta_fpp,
                       "Frames per sweep point (0 = config frames)");

  double disturb_phase = tfqkd::optics::kPi;
  double disturb_fraction = 0.2;
  auto* disturb_cmd = app.add_subcommand(
      "disturbance", "Scheduled phase disturbance with flip correction");
  add_common(disturb_cmd, disturb_o);
  disturb_cmd->add_option("--phase-rad", disturb_phase,
                          "Injected phase in radians");
  disturb_cmd->add_option("--fraction", disturb_fraction,
                          "Fraction of frames covered by the disturbance");

  auto* selftest_cmd =
      app.add_subcommand("selftest", "Built-in oracle and identity checks");
  (void)selftest_cmd;

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_o, records_path);
    if (guard_cmd->parsed()) {
      if (guard_values.empty()) {
        for (int g = 0; g <= 450; g += 50) guard_values.push_back(g);
      }
      return cmd_sweep(guard_o, tfqkd::sim::SweepVariable::kGuardBand,
                       guard_values, guard_fpp, 1e-12);
    }
    if (dist_cmd->parsed()) {
      if (dist_values.empty()) dist_values = {0.0001, 10, 20, 50};
      return cmd_sweep(dist_o, tfqkd::sim::SweepVariable::kDistance,
                       dist_values, dist_fpp, 1.0);
    }
    if (beta_cmd->parsed()) {
      if (beta_values.empty()) beta_values = {0.0, 1e-4};
      return cmd_sweep(beta_o, tfqkd::sim::SweepVariable::kBeta, beta_values,
                       beta_fpp, 1.0);
    }
    if (disturb_cmd->parsed()) {
      return cmd_disturbance(disturb_o, disturb_phase, disturb_fraction);
    }
    return cmd_selftest();
  } catch (const tfqkd::config::ConfigError& ex) {
    std::cerr << ex.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "configuration invalid: " << ex.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitInvariantError;
  }
}
