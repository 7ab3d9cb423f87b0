#include "spinamp/commands.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "spinamp/error.hpp"
#include "spinamp/mixing_model.hpp"
#include "text.hpp"

namespace spinamp::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::map<std::string, std::set<std::string>> kSchema{
    {"system", {"file", "species", "site", "coupling", "field_axis", "m", "eps0", "eps_s0"}},
    {"pulse",
     {"family", "peak_khz", "duration_us", "samples", "beta", "tau_max", "carrier_offset_khz", "offset_khz", "f"}},
    {"timeline",
     {"shuttle_up_s", "dwell_s", "shuttle_down_s", "high_dwell_s", "low_field_g", "high_field_g", "t1", "t1_lookup",
      "eta", "segment"}},
    {"protocol",
     {"backend", "n", "n_over_m", "q", "frame_mhz", "threshold_ratio", "max_spins", "sample_interval_s"}},
    {"output", {"prefix", "precision"}},
};

// JSON numbers go through the same significant-digit rounding as the CSVs.
ordered_json json_number(double v, int precision) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(format_number(v, precision));
}

PulseFamily parse_family(const std::string& s, std::size_t line) {
  if (s == "hermite") return PulseFamily::Hermite;
  if (s == "constant") return PulseFamily::Constant;
  throw ConfigError("unknown pulse family '" + s + "' (expected hermite or constant)", line);
}

PulseArgs pulse_args_from_config(const RunConfig& cfg) {
  PulseArgs a;
  const auto fam = cfg.get("pulse", "family");
  if (!fam) throw ConfigError("missing key 'family' in [pulse]");
  a.family = parse_family(fam->value, fam->line);
  a.peak_khz = cfg.require_double("pulse", "peak_khz");
  if (auto d = cfg.find_double("pulse", "duration_us")) a.duration_us = *d;
  a.samples = static_cast<std::size_t>(cfg.get_int("pulse", "samples", a.family == PulseFamily::Constant ? 1 : 256));
  a.hermite.beta = cfg.get_double("pulse", "beta", a.hermite.beta);
  a.hermite.tau_max = cfg.get_double("pulse", "tau_max", a.hermite.tau_max);
  a.carrier_offset_khz = cfg.get_double("pulse", "carrier_offset_khz", 0.0);
  return a;
}

HamiltonianSettings settings_from_config(const RunConfig& cfg) {
  HamiltonianSettings s;
  if (auto f = cfg.find_double("protocol", "frame_mhz")) s.frame_mhz = *f;
  s.threshold_ratio = cfg.get_double("protocol", "threshold_ratio", 1.0);
  return s;
}

std::size_t max_spins_from_config(const RunConfig& cfg) {
  const auto v = cfg.get_int("protocol", "max_spins", static_cast<long long>(kDefaultMaxSpins));
  if (v < 1) throw ConfigError("max_spins must be >= 1");
  return static_cast<std::size_t>(v);
}

T1Lookup lookup_from_config(const RunConfig& cfg) {
  const auto s = cfg.get_string("timeline", "t1_lookup", "nearest");
  if (s == "nearest") return T1Lookup::Nearest;
  if (s == "log-linear") return T1Lookup::LogLinear;
  throw ConfigError("t1_lookup must be nearest or log-linear, got '" + s + "'", cfg.get("timeline", "t1_lookup")->line);
}

std::optional<T1Map> t1_from_config(const RunConfig& cfg) {
  const auto entries = cfg.get_all("timeline", "t1");
  if (entries.empty()) return std::nullopt;
  std::vector<T1Entry> t1;
  for (const auto& e : entries) {
    const auto w = text::split_ws(e.value);
    if (w.size() != 2) throw ConfigError("t1 expects '<field_g> <t1_s>'", e.line);
    t1.push_back({text::to_double(w[0], e.line, "t1 field"), text::to_double(w[1], e.line, "t1 value")});
  }
  try {
    return T1Map(std::move(t1), lookup_from_config(cfg));
  } catch (const InvalidArgument& ex) {
    throw ConfigError(ex.what(), entries.front().line);
  }
}

FlipFlopMode parse_mode(std::string_view s, std::size_t line) {
  if (s == "auto") return FlipFlopMode::Auto;
  if (s == "on") return FlipFlopMode::ForceOn;
  if (s == "off") return FlipFlopMode::ForceOff;
  throw ConfigError("flip-flop mode must be auto, on or off, got '" + std::string(s) + "'", line);
}

// Free `segment` lines as a field-cycling timeline (pulse lines are not allowed here).
std::optional<Timeline> segment_timeline(const RunConfig& cfg) {
  const auto entries = cfg.get_all("timeline", "segment");
  if (entries.empty()) return std::nullopt;
  std::vector<TimelineSegment> segs;
  for (const auto& e : entries) {
    const auto w = text::split_ws(e.value);
    if (w.size() < 2 || w[0] == "pulse") throw ConfigError("protocol segments must be '<duration_s> <field_g>'", e.line);
    const double d = text::to_double(w[0], e.line, "segment duration");
    const double b = text::to_double(w[1], e.line, "segment field");
    if (d < 0.0 || b < 0.0) throw ConfigError("segment duration and field must be >= 0", e.line);
    segs.push_back({d, b, "segment"});
  }
  return Timeline(std::move(segs));
}

Timeline shuttle_timeline(const RunConfig& cfg) {
  const EtaArgs d;
  try {
    return build_timeline(cfg.get_double("timeline", "shuttle_up_s", d.shuttle_up_s),
                          cfg.get_double("timeline", "dwell_s", d.dwell_s),
                          cfg.get_double("timeline", "shuttle_down_s", d.shuttle_down_s),
                          cfg.get_double("timeline", "high_dwell_s", d.high_dwell_s),
                          cfg.get_double("timeline", "low_field_g", d.low_field_g),
                          cfg.get_double("timeline", "high_field_g", d.high_field_g));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

std::string json_text(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string precision_name(double v) { return format_number(v, 12); }

}  // namespace

// --- builders ---------------------------------------------------------------------

SpinSystem system_from_config(const RunConfig& cfg) {
  const bool inline_lines = cfg.has("system", "species") || cfg.has("system", "site") || cfg.has("system", "coupling");
  if (auto file = cfg.get("system", "file")) {
    if (inline_lines) throw ConfigError("[system] takes either 'file' or inline species/site lines, not both", file->line);
    return load_system((cfg.base_dir() / file->value).string());
  }
  if (!cfg.has("system", "species")) throw ConfigError("missing key 'species' in [system]");
  SystemBuilder builder;
  for (const auto& e : cfg.get_all("system", "species")) builder.add_species(e.value, e.line);
  for (const auto& e : cfg.get_all("system", "site")) builder.add_site(e.value, e.line);
  for (const auto& e : cfg.get_all("system", "coupling")) builder.add_coupling(e.value, e.line);
  if (auto axis = cfg.get("system", "field_axis")) builder.set_field_axis(axis->value, axis->line);
  return builder.build();
}

EvolutionSchedule schedule_from_config(const RunConfig& cfg, const SpinSystem& system) {
  const auto entries = cfg.get_all("timeline", "segment");
  if (entries.empty()) throw ConfigError("missing key 'segment' in [timeline]");
  const HamiltonianSettings base = settings_from_config(cfg);
  EvolutionSchedule schedule;
  for (const auto& e : entries) {
    const auto w = text::split_ws(e.value);
    if (!w.empty() && w[0] == "pulse") {
      if (w.size() != 3) throw ConfigError("pulse segment expects 'pulse <species> <field_g>'", e.line);
      if (!system.has_species(w[1])) throw ConfigError("pulse targets unknown species '" + std::string(w[1]) + "'", e.line);
      if (!cfg.has("pulse", "family")) throw ConfigError("missing key 'family' in [pulse] for a pulse segment", e.line);
      HamiltonianSettings s = base;
      s.field = FieldPoint(text::to_double(w[2], e.line, "segment field"));
      schedule.push_back(PulseSegment{build_pulse(pulse_args_from_config(cfg)), std::string(w[1]), s});
      continue;
    }
    if (w.size() != 2 && w.size() != 3)
      throw ConfigError("segment expects '<duration_s> <field_g> [auto|on|off]'", e.line);
    const double d = text::to_double(w[0], e.line, "segment duration");
    const double b = text::to_double(w[1], e.line, "segment field");
    if (d < 0.0 || b < 0.0) throw ConfigError("segment duration and field must be >= 0", e.line);
    HamiltonianSettings s = base;
    s.field = FieldPoint(b);
    if (w.size() == 3) s.flip_flop = parse_mode(w[2], e.line);
    schedule.push_back(FreeSegment{d, s});
  }
  return schedule;
}

ShapedPulse build_pulse(const PulseArgs& a) {
  CalibrationOptions opts;
  opts.n_samples = a.samples;
  opts.hermite = a.hermite;
  const double duration = a.duration_us ? *a.duration_us * 1e-6 : calibrate_duration(a.family, a.peak_khz, opts);
  const ShapedPulse base = a.family == PulseFamily::Constant ? constant_shape(a.peak_khz, duration, a.samples)
                                                             : hermite_shape(a.peak_khz, duration, a.samples, a.hermite);
  return base.with_carrier_offset(a.carrier_offset_khz);
}

ProtocolConfig protocol_from_config(const RunConfig& cfg) {
  cfg.validate(kSchema);
  ProtocolConfig pc;
  const auto backend = cfg.get_string("protocol", "backend", "mixing");
  if (backend == "mixing") {
    pc.backend = Backend::Mixing;
  } else if (backend == "exact") {
    pc.backend = Backend::Exact;
  } else {
    throw ConfigError("backend must be mixing or exact, got '" + backend + "'", cfg.get("protocol", "backend")->line);
  }

  std::int64_t m = 0;
  if (pc.backend == Backend::Mixing) {
    MixingSetup setup;
    setup.m = cfg.require_int("system", "m");
    if (setup.m < 1) throw ConfigError("m must be >= 1", cfg.get("system", "m")->line);
    setup.eps0 = cfg.require_double("system", "eps0");
    if (auto e = cfg.find_double("system", "eps_s0")) setup.eps_s0 = *e;
    m = setup.m;
    pc.setup = setup;
  } else {
    ExactSetup setup{.system = system_from_config(cfg)};
    setup.eps0 = cfg.require_double("system", "eps0");
    if (auto e = cfg.find_double("system", "eps_s0")) setup.eps_s0 = *e;
    if (auto f = cfg.find_double("protocol", "frame_mhz")) setup.frame_mhz = *f;
    setup.threshold_ratio = cfg.get_double("protocol", "threshold_ratio", 1.0);
    setup.max_spins = max_spins_from_config(cfg);
    setup.dwell_sample_interval = cfg.get_double("protocol", "sample_interval_s", 0.0);
    m = static_cast<std::int64_t>(setup.system.m());
    pc.setup = std::move(setup);
    pc.timeline = segment_timeline(cfg);
    if (!pc.timeline) pc.timeline = shuttle_timeline(cfg);
  }

  if (cfg.has("protocol", "n") && cfg.has("protocol", "n_over_m"))
    throw ConfigError("[protocol] takes either 'n' or 'n_over_m', not both");
  if (cfg.has("protocol", "n_over_m")) {
    pc.n = std::llround(cfg.require_double("protocol", "n_over_m") * static_cast<double>(m));
  } else {
    pc.n = cfg.require_int("protocol", "n");
  }
  if (pc.n < 0) throw ConfigError("n must be >= 0");
  pc.q = cfg.get_double("protocol", "q", 1.0);

  if (auto f = cfg.find_double("pulse", "f")) {
    if (cfg.has("pulse", "family")) throw ConfigError("[pulse] takes either 'f' or a pulse 'family', not both");
    pc.response = *f;
  } else if (cfg.has("pulse", "family")) {
    pc.response = PulseAtOffset{build_pulse(pulse_args_from_config(cfg)), cfg.get_double("pulse", "offset_khz", 0.0)};
  } else {
    throw ConfigError("missing key 'f' or 'family' in [pulse]");
  }

  if (auto eta = cfg.find_double("timeline", "eta")) {
    pc.survival = *eta;
  } else if (auto t1 = t1_from_config(cfg)) {
    pc.survival = TimelineBudget{pc.timeline ? *pc.timeline : shuttle_timeline(cfg), *t1};
  } else {
    throw ConfigError("missing key 'eta' or 't1' in [timeline]");
  }
  return pc;
}

// --- formatting ----------------------------------------------------------------------

std::string trajectory_csv(const std::vector<TrajectorySample>& samples, std::size_t m, int precision) {
  std::vector<std::string> header{"t_s", "S_z"};
  for (std::size_t i = 1; i <= m; ++i) header.push_back("I" + std::to_string(i) + "_z");
  header.push_back("total_Iz");
  CsvTable table(std::move(header), precision);
  for (const auto& s : samples) {
    std::vector<double> row{s.t_s, s.s_z};
    row.insert(row.end(), s.i_z.begin(), s.i_z.end());
    row.push_back(s.total_iz);
    table.row(row);
  }
  return table.str();
}

std::string protocol_csv(const ProtocolResult& result, int precision) {
  CsvTable table({"step", "eps_S", "eps_I", "f_applied", "eta_applied"}, precision);
  for (const auto& r : result.steps) table.row(r.step, {r.eps_s, r.eps_i, r.f_applied, r.eta_applied});
  return table.str();
}

std::string protocol_summary_json(const ProtocolResult& result, int precision) {
  const auto& s = result.summary;
  ordered_json j;
  j["n"] = s.n;
  j["initial_eps_S"] = json_number(result.initial_eps_s, precision);
  j["initial_eps_I"] = json_number(result.initial_eps_i, precision);
  j["final_eps_I"] = json_number(s.final_eps_i, precision);
  j["baseline_eps_I"] = json_number(s.baseline_eps_i, precision);
  j["delta_P"] = json_number(s.delta_p, precision);
  j["delta_P_first"] = json_number(s.delta_p_first, precision);
  j["relative_gain"] = json_number(s.relative_gain, precision);
  j["gain"] = json_number(s.gain, precision);
  return json_text(j);
}

// --- commands -------------------------------------------------------------------------

std::vector<OutputFile> cmd_gain(const GainArgs& a, int precision) {
  if (a.m < 1) throw InvalidArgument("invalid m: must be >= 1");
  if (a.n_max < 0) throw InvalidArgument("n-max must be >= 0");
  if (!a.iterate) {
    CsvTable table({"N", "G"}, precision);
    for (const auto& p : gain_curve(a.m, a.n_max)) table.row(p.n, {p.gain});
    return {{"gain.csv", table.str()}};
  }
  if (!(a.eps0 > 0.0 && a.eps0 <= 1.0)) throw InvalidArgument("eps0 must lie in (0, 1]");
  if (!(a.eta > 0.0 && a.eta <= 1.0)) throw InvalidArgument("eta must lie in (0, 1]");
  CsvTable table({"N", "delta_P", "relative_gain"}, precision);
  PoolState with{a.eps0, a.eps0, a.m, 0};
  PoolState without = with;
  double first = 0.0;
  table.row(0LL, {0.0, 0.0});
  for (std::int64_t n = 1; n <= a.n_max; ++n) {
    with = step(with, {-1.0, a.eta, 1.0});
    without = step(without, {1.0, a.eta, 1.0});
    const double dp = without.eps_i - with.eps_i;
    if (n == 1) first = dp;
    table.row(n, {dp, dp / first});
  }
  return {{"gain.csv", table.str()}};
}

std::vector<OutputFile> cmd_spectrum(const SpectrumArgs& a, unsigned jobs, int precision) {
  const ShapedPulse pulse = build_pulse(a.pulse);
  const auto profile = excitation_profile(pulse, a.offsets_khz, jobs);
  std::vector<ResponseRow> rows;
  rows.reserve(profile.size());
  for (const auto& p : profile) rows.push_back({p.offset_khz, std::clamp(p.residual_mz, -1.0, 1.0)});
  CsvTable table({"offset_hz", "pool_polarization"}, precision);
  for (const auto& r : response_spectrum(rows, a.m, a.n, a.eps0, a.eta)) table.row({r.offset * 1e3, r.pool_polarization});
  return {{"spectrum.csv", table.str()}};
}

std::vector<OutputFile> cmd_pulse_profile(const PulseArgs& args, const std::vector<double>& offsets_khz, unsigned jobs,
                                          int precision) {
  const ShapedPulse pulse = build_pulse(args);
  CsvTable profile({"offset_khz", "residual_mz"}, precision);
  for (const auto& p : excitation_profile(pulse, offsets_khz, jobs)) profile.row({p.offset_khz, p.residual_mz});
  CsvTable shape({"t_s", "amp_khz", "phase_rad"}, precision);
  for (std::size_t k = 0; k < pulse.samples().size(); ++k) {
    const auto& s = pulse.samples()[k];
    shape.row({static_cast<double>(k) * pulse.sample_duration(), s.amplitude_khz, s.phase_rad});
  }
  return {{"profile.csv", profile.str()}, {"pulse.csv", shape.str()}};
}

std::vector<OutputFile> cmd_eta(const EtaArgs& a, int precision) {
  const Timeline timeline =
      build_timeline(a.shuttle_up_s, a.dwell_s, a.shuttle_down_s, a.high_dwell_s, a.low_field_g, a.high_field_g);
  const T1Map t1(a.t1, a.lookup);
  ordered_json j;
  j["eta"] = json_number(cycle_survival(timeline, t1), precision);
  j["cycle_duration_s"] = json_number(timeline.total_duration(), precision);
  auto& segs = j["segments"] = ordered_json::array();
  for (const auto& s : timeline.segments()) {
    segs.push_back({{"label", s.label},
                    {"duration_s", json_number(s.duration_s, precision)},
                    {"field_g", json_number(s.field_gauss, precision)},
                    {"t1_s", json_number(t1.t1_at(s.field_gauss), precision)}});
  }
  return {{"eta.json", json_text(j)}};
}

std::vector<OutputFile> cmd_exact(const RunConfig& cfg, int precision) {
  cfg.validate(kSchema);
  const SpinSystem system = system_from_config(cfg);
  const double eps0 = cfg.require_double("system", "eps0");
  const double eps_s0 = cfg.get_double("system", "eps_s0", eps0);
  std::vector<double> pol(system.size(), eps0);
  pol[system.s_index()] = eps_s0;
  const EvolutionSchedule schedule = schedule_from_config(cfg, system);
  TrajectoryOptions opts;
  opts.max_spins = max_spins_from_config(cfg);
  const auto traj = run_trajectory(system, DensityMatrix::product_state(pol), schedule,
                                   cfg.require_double("protocol", "sample_interval_s"), opts);
  const auto prefix = cfg.get_string("output", "prefix", "trajectory");
  return {{prefix + ".csv", trajectory_csv(traj.samples, system.m(), precision)}};
}

std::vector<OutputFile> cmd_protocol(const RunConfig& cfg, int precision) {
  const ProtocolConfig pc = protocol_from_config(cfg);
  const ProtocolResult result = run_protocol(pc);
  const auto prefix = cfg.get_string("output", "prefix", "protocol");
  std::vector<OutputFile> out{{prefix + ".csv", protocol_csv(result, precision)},
                              {prefix + ".json", protocol_summary_json(result, precision)}};
  if (!result.dwell_trajectory.empty()) {
    const auto m = std::get<ExactSetup>(pc.setup).system.m();
    out.push_back({prefix + "_dwell.csv", trajectory_csv(result.dwell_trajectory, m, precision)});
  }
  return out;
}

std::vector<std::filesystem::path> cmd_sweep(const RunConfig& cfg, const std::vector<SweepSpec>& sweeps,
                                             const std::filesystem::path& out_dir, unsigned jobs, int precision) {
  if (sweeps.empty()) throw ConfigError("empty sweep: no parameter given");
  if (sweeps.size() > 2) throw ConfigError("sweeps nest to depth 2 at most");
  if (sweeps.size() == 2 && sweeps[0].key == sweeps[1].key)
    throw ConfigError("swept keys must be distinct");
  for (const auto& s : sweeps) {
    if (s.values.empty()) throw ConfigError("empty sweep");
    if (!kSchema.count(s.section) || !kSchema.at(s.section).count(s.key))
      throw ConfigError("cannot sweep unknown key '" + s.key + "' in [" + s.section + "]");
  }

  struct Point {
    RunConfig config;
    std::string stem;
  };
  std::vector<Point> points;
  const auto prefix = cfg.get_string("output", "prefix", "protocol");
  const auto& outer = sweeps[0];
  for (double a : outer.values) {
    const std::size_t inner_count = sweeps.size() == 2 ? sweeps[1].values.size() : 1;
    for (std::size_t k = 0; k < inner_count; ++k) {
      Point p{cfg, prefix + "_" + outer.key + "=" + precision_name(a)};
      p.config.set(outer.section, outer.key, format_number(a, 17));
      if (sweeps.size() == 2) {
        const double b = sweeps[1].values[k];
        p.config.set(sweeps[1].section, sweeps[1].key, format_number(b, 17));
        p.stem += "_" + sweeps[1].key + "=" + precision_name(b);
      }
      p.config.set("output", "prefix", p.stem);
      points.push_back(std::move(p));
    }
  }

  std::filesystem::create_directories(out_dir);
  std::vector<std::vector<std::filesystem::path>> written(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= points.size()) return;
      try {
        for (const auto& f : cmd_protocol(points[k].config, precision)) {
          const auto path = out_dir / f.name;
          write_file_atomic(path, f.content);
          written[k].push_back(path);
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  {
    const std::size_t n_workers = std::clamp<std::size_t>(jobs, 1, points.size());
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);
  std::vector<std::filesystem::path> all;
  for (auto& w : written) all.insert(all.end(), w.begin(), w.end());
  return all;
}

}  // namespace spinamp::cli
