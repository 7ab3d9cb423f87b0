#pragma once

// Subcommand implementations behind the spinamp CLI. Every command is a pure
// function from its arguments to a set of named output files, so the same
// inputs always give byte-identical outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spinamp/config.hpp"
#include "spinamp/exact_dynamics.hpp"
#include "spinamp/field_cycle.hpp"
#include "spinamp/output.hpp"
#include "spinamp/pulse.hpp"

namespace spinamp::cli {

struct OutputFile {
  std::string name;
  std::string content;
};

struct GainArgs {
  std::int64_t m = 0;
  std::int64_t n_max = 0;
  bool iterate = false;
  double eta = 1.0;
  double eps0 = 1.0;
};

std::vector<OutputFile> cmd_gain(const GainArgs& args, int precision = kDefaultPrecision);

struct PulseArgs {
  PulseFamily family = PulseFamily::Hermite;
  double peak_khz = 140.0;
  std::optional<double> duration_us;  // calibrated when unset
  std::size_t samples = 256;
  HermiteOptions hermite{};
  double carrier_offset_khz = 0.0;
};

ShapedPulse build_pulse(const PulseArgs& args);

struct SpectrumArgs {
  PulseArgs pulse{};
  std::vector<double> offsets_khz;
  std::int64_t m = 799;
  std::int64_t n = 200;
  double eps0 = 0.12;
  double eta = 0.9991;
};

std::vector<OutputFile> cmd_spectrum(const SpectrumArgs& args, unsigned jobs = 1,
                                     int precision = kDefaultPrecision);

/// profile.csv (offset_khz,residual_mz) and pulse.csv (t_s,amp_khz,phase_rad).
std::vector<OutputFile> cmd_pulse_profile(const PulseArgs& pulse, const std::vector<double>& offsets_khz,
                                          unsigned jobs = 1, int precision = kDefaultPrecision);

struct EtaArgs {
  double shuttle_up_s = 0.67;
  double dwell_s = 0.01;
  double shuttle_down_s = 0.67;
  double high_dwell_s = 3.0;
  double low_field_g = 100.0;
  double high_field_g = 4000.0;
  std::vector<T1Entry> t1{{100.0, 34.0 * 60.0}, {4000.0, 212.0 * 60.0}};
  T1Lookup lookup = T1Lookup::Nearest;
};

std::vector<OutputFile> cmd_eta(const EtaArgs& args, int precision = kDefaultPrecision);

/// Trajectory of the configured cluster under the [timeline] segments.
std::vector<OutputFile> cmd_exact(const RunConfig& config, int precision = kDefaultPrecision);
/// <prefix>.csv with per-step records and <prefix>.json with the summary.
std::vector<OutputFile> cmd_protocol(const RunConfig& config, int precision = kDefaultPrecision);

/// Runs cmd_protocol for every grid point (outer x inner) with up to `jobs`
/// points in flight, writing each point's files atomically into `out_dir`.
/// Returns the written paths in grid order.
std::vector<std::filesystem::path> cmd_sweep(const RunConfig& config, const std::vector<SweepSpec>& sweeps,
                                             const std::filesystem::path& out_dir, unsigned jobs = 1,
                                             int precision = kDefaultPrecision);

// Config-to-model builders, exposed for tests.
SpinSystem system_from_config(const RunConfig& config);
ProtocolConfig protocol_from_config(const RunConfig& config);
EvolutionSchedule schedule_from_config(const RunConfig& config, const SpinSystem& system);
std::string trajectory_csv(const std::vector<TrajectorySample>& samples, std::size_t m, int precision);
std::string protocol_csv(const ProtocolResult& result, int precision);
std::string protocol_summary_json(const ProtocolResult& result, int precision);

}  // namespace spinamp::cli
