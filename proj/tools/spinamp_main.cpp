// spinamp: command-line driver for the spin amplification toolkit.
//
// Exit codes: 0 success, 2 configuration or argument error, 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinamp/commands.hpp"
#include "spinamp/config.hpp"
#include "spinamp/error.hpp"

namespace fs = std::filesystem;
using namespace spinamp;

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericalExit = 3;

void emit(const std::vector<cli::OutputFile>& files, const std::string& out_dir) {
  if (out_dir.empty()) {
    for (const auto& f : files) {
      if (files.size() > 1) std::cout << "# " << f.name << '\n';
      std::cout << f.content;
    }
    return;
  }
  fs::create_directories(out_dir);
  for (const auto& f : files) write_file_atomic(fs::path(out_dir) / f.name, f.content);
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg = RunConfig::load(path);
  for (const auto& o : overrides) cfg.set_assignment(o);
  return cfg;
}

int config_precision(const RunConfig& cfg, std::optional<int> flag) {
  if (flag) return *flag;
  return static_cast<int>(cfg.get_int("output", "precision", kDefaultPrecision));
}

void add_pulse_options(CLI::App* app, cli::PulseArgs& p, std::string& family, std::optional<double>& duration_us) {
  app->add_option("--family", family, "Pulse family: hermite or constant")
      ->check(CLI::IsMember({"hermite", "constant"}));
  app->add_option("--peak-khz", p.peak_khz, "Peak rf amplitude (kHz)");
  app->add_option("--duration-us", duration_us, "Pulse length (us); calibrated for inversion when omitted");
  app->add_option("--samples", p.samples, "Number of piecewise-constant samples");
  app->add_option("--beta", p.hermite.beta, "Hermite envelope coefficient");
  app->add_option("--tau-max", p.hermite.tau_max, "Hermite window half-width");
  app->add_option("--carrier-offset-khz", p.carrier_offset_khz, "Carrier offset (kHz)");
}

void finish_pulse(cli::PulseArgs& p, const std::string& family, const std::optional<double>& duration_us) {
  p.family = family == "constant" ? PulseFamily::Constant : PulseFamily::Hermite;
  if (p.family == PulseFamily::Constant && p.samples == 256) p.samples = 1;
  p.duration_us = duration_us;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin amplification by heteronuclear spin diffusion: models and simulators"};
  app.require_subcommand(1);

  std::string out_dir;
  unsigned jobs = 1;
  std::optional<int> precision;
  app.add_option("--out", out_dir, "Directory for output files (default: stdout)");
  app.add_option("--jobs", jobs, "Concurrent jobs for sweeps and profiles")->check(CLI::PositiveNumber);
  app.add_option("--precision", precision, "Significant digits in outputs")->check(CLI::Range(1, 17));

  // gain
  cli::GainArgs gain;
  std::string gain_mode = "closed";
  auto* gain_cmd = app.add_subcommand("gain", "Gain curve versus number of steps");
  gain_cmd->add_option("--m", gain.m, "Number of I spins")->required();
  gain_cmd->add_option("--n-max", gain.n_max, "Last step count")->required();
  gain_cmd->add_option("--mode", gain_mode, "closed (N,G) or iterate (N,delta_P,relative_gain)")
      ->check(CLI::IsMember({"closed", "iterate"}));
  gain_cmd->add_option("--eta", gain.eta, "Per-cycle survival (iterate mode)");
  gain_cmd->add_option("--eps0", gain.eps0, "Initial polarization (iterate mode)");

  // spectrum
  cli::SpectrumArgs spectrum;
  std::string spectrum_family = "hermite";
  std::optional<double> spectrum_duration;
  std::string spectrum_offsets = "-500:500:5";
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Spin-amplified frequency response spectrum");
  add_pulse_options(spectrum_cmd, spectrum.pulse, spectrum_family, spectrum_duration);
  spectrum_cmd->add_option("--offsets", spectrum_offsets, "Offset grid in kHz: start:stop:step or a,b,c");
  spectrum_cmd->add_option("--m", spectrum.m, "Number of I spins");
  spectrum_cmd->add_option("--n", spectrum.n, "Number of steps");
  spectrum_cmd->add_option("--eps0", spectrum.eps0, "Initial polarization");
  spectrum_cmd->add_option("--eta", spectrum.eta, "Per-cycle survival");

  // pulse-profile
  cli::PulseArgs profile_pulse;
  std::string profile_family = "hermite";
  std::optional<double> profile_duration;
  std::string profile_offsets = "-1000:1000:5";
  auto* profile_cmd = app.add_subcommand("pulse-profile", "Excitation profile and envelope of a shaped pulse");
  add_pulse_options(profile_cmd, profile_pulse, profile_family, profile_duration);
  profile_cmd->add_option("--offsets", profile_offsets, "Offset grid in kHz: start:stop:step or a,b,c");

  // eta
  cli::EtaArgs eta;
  double t1_low_min = 34.0;
  double t1_high_min = 212.0;
  bool log_linear = false;
  auto* eta_cmd = app.add_subcommand("eta", "Per-cycle polarization survival from a field-cycling timeline");
  eta_cmd->add_option("--shuttle-up", eta.shuttle_up_s, "Shuttle to low field (s)");
  eta_cmd->add_option("--dwell", eta.dwell_s, "Low-field dwell (s)");
  eta_cmd->add_option("--shuttle-down", eta.shuttle_down_s, "Shuttle back to high field (s)");
  eta_cmd->add_option("--high-dwell", eta.high_dwell_s, "High-field residence per cycle (s)");
  eta_cmd->add_option("--low-field", eta.low_field_g, "Low field (G)");
  eta_cmd->add_option("--high-field", eta.high_field_g, "High field (G)");
  eta_cmd->add_option("--t1-low-min", t1_low_min, "T1 at the low field (minutes)");
  eta_cmd->add_option("--t1-high-min", t1_high_min, "T1 at the high field (minutes)");
  eta_cmd->add_flag("--log-linear", log_linear, "Interpolate log T1 between fields instead of nearest lookup");

  // exact / protocol / sweep
  std::string exact_config, protocol_config, sweep_config;
  std::vector<std::string> exact_set, protocol_set, sweep_set, sweep_specs;
  auto* exact_cmd = app.add_subcommand("exact", "Exact density-matrix trajectory of a small cluster");
  exact_cmd->add_option("config", exact_config, "Run configuration")->required()->check(CLI::ExistingFile);
  exact_cmd->add_option("--set", exact_set, "Override a config key: section.key=value");
  auto* protocol_cmd = app.add_subcommand("protocol", "Amplification protocol over N field cycles");
  protocol_cmd->add_option("config", protocol_config, "Run configuration")->required()->check(CLI::ExistingFile);
  protocol_cmd->add_option("--set", protocol_set, "Override a config key: section.key=value");
  auto* sweep_cmd = app.add_subcommand("sweep", "Protocol runs over a parameter grid");
  sweep_cmd->add_option("config", sweep_config, "Run configuration")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--sweep", sweep_specs, "section.key=start:stop:step or section.key=a,b,c (up to two)")
      ->required();
  sweep_cmd->add_option("--set", sweep_set, "Override a config key: section.key=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    const int digits = precision.value_or(kDefaultPrecision);
    if (*gain_cmd) {
      gain.iterate = gain_mode == "iterate";
      emit(cli::cmd_gain(gain, digits), out_dir);
    } else if (*spectrum_cmd) {
      finish_pulse(spectrum.pulse, spectrum_family, spectrum_duration);
      spectrum.offsets_khz = parse_grid(spectrum_offsets);
      emit(cli::cmd_spectrum(spectrum, jobs, digits), out_dir);
    } else if (*profile_cmd) {
      finish_pulse(profile_pulse, profile_family, profile_duration);
      emit(cli::cmd_pulse_profile(profile_pulse, parse_grid(profile_offsets), jobs, digits), out_dir);
    } else if (*eta_cmd) {
      eta.t1 = {{eta.low_field_g, t1_low_min * 60.0}, {eta.high_field_g, t1_high_min * 60.0}};
      eta.lookup = log_linear ? T1Lookup::LogLinear : T1Lookup::Nearest;
      emit(cli::cmd_eta(eta, digits), out_dir);
    } else if (*exact_cmd) {
      const auto cfg = load_config(exact_config, exact_set);
      emit(cli::cmd_exact(cfg, config_precision(cfg, precision)), out_dir);
    } else if (*protocol_cmd) {
      const auto cfg = load_config(protocol_config, protocol_set);
      emit(cli::cmd_protocol(cfg, config_precision(cfg, precision)), out_dir);
    } else if (*sweep_cmd) {
      const auto cfg = load_config(sweep_config, sweep_set);
      std::vector<SweepSpec> specs;
      for (const auto& s : sweep_specs) specs.push_back(parse_sweep(s));
      const auto paths = cli::cmd_sweep(cfg, specs, out_dir.empty() ? fs::path(".") : fs::path(out_dir), jobs,
                                        config_precision(cfg, precision));
      for (const auto& p : paths) std::cout << p.string() << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfigExit;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
