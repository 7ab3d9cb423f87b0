#include "spinamp/field_cycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spinamp/error.hpp"

namespace spinamp {

Timeline::Timeline(std::vector<TimelineSegment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw InvalidArgument("a timeline needs at least one segment");
  for (const auto& s : segments_) {
    if (!(s.duration_s >= 0.0) || !std::isfinite(s.duration_s))
      throw InvalidArgument("timeline durations must be finite and >= 0");
    if (!(s.field_gauss >= 0.0)) throw InvalidArgument("timeline fields must be >= 0");
  }
}

double Timeline::total_duration() const {
  double t = 0.0;
  for (const auto& s : segments_) t += s.duration_s;
  return t;
}

double Timeline::max_field() const {
  double b = 0.0;
  for (const auto& s : segments_) b = std::max(b, s.field_gauss);
  return b;
}

Timeline Timeline::concatenated(const Timeline& other) const {
  auto all = segments_;
  all.insert(all.end(), other.segments_.begin(), other.segments_.end());
  return Timeline(std::move(all));
}

T1Map::T1Map(std::vector<T1Entry> entries, T1Lookup lookup) : entries_(std::move(entries)), lookup_(lookup) {
  if (entries_.empty()) throw InvalidArgument("a T1 map needs at least one entry");
  std::sort(entries_.begin(), entries_.end(), [](const T1Entry& a, const T1Entry& b) { return a.field_gauss < b.field_gauss; });
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (!(entries_[k].t1_s > 0.0)) throw InvalidArgument("T1 values must be > 0");
    if (k > 0 && entries_[k].field_gauss == entries_[k - 1].field_gauss)
      throw InvalidArgument("T1 map fields must be distinct");
  }
}

double T1Map::t1_at(double field) const {
  if (field <= entries_.front().field_gauss) return entries_.front().t1_s;
  if (field >= entries_.back().field_gauss) return entries_.back().t1_s;
  const auto hi = std::upper_bound(entries_.begin(), entries_.end(), field,
                                   [](double f, const T1Entry& e) { return f < e.field_gauss; });
  const auto lo = hi - 1;
  if (lookup_ == T1Lookup::Nearest) return (field - lo->field_gauss) <= (hi->field_gauss - field) ? lo->t1_s : hi->t1_s;
  const double w = (field - lo->field_gauss) / (hi->field_gauss - lo->field_gauss);
  return std::exp((1.0 - w) * std::log(lo->t1_s) + w * std::log(hi->t1_s));
}

double cycle_survival(const Timeline& timeline, const T1Map& t1) {
  double rate = 0.0;
  for (const auto& s : timeline.segments()) rate += s.duration_s / t1.t1_at(s.field_gauss);
  return std::exp(-rate);
}

Timeline build_timeline(double shuttle_up_s, double dwell_s, double shuttle_down_s, double high_dwell_s,
                        double low_field_gauss, double high_field_gauss) {
  return Timeline({{shuttle_up_s, low_field_gauss, "shuttle_up"},
                   {dwell_s, low_field_gauss, "low_dwell"},
                   {shuttle_down_s, low_field_gauss, "shuttle_down"},
                   {high_dwell_s, high_field_gauss, "high_dwell"}});
}

double survival_of(const SurvivalSource& source) {
  if (const auto* eta = std::get_if<double>(&source)) {
    if (!(*eta > 0.0 && *eta <= 1.0)) throw InvalidArgument("eta must lie in (0, 1]");
    return *eta;
  }
  const auto& budget = std::get<TimelineBudget>(source);
  return cycle_survival(budget.timeline, budget.t1);
}

double response_of(const PulseResponse& response) {
  if (const auto* f = std::get_if<double>(&response)) {
    if (!(std::abs(*f) <= 1.0)) throw InvalidArgument("response factor must lie in [-1, 1]");
    return *f;
  }
  const auto& p = std::get<PulseAtOffset>(response);
  return std::clamp(bloch_response(p.pulse, p.offset_khz)[2], -1.0, 1.0);
}

namespace {

void finish_summary(ProtocolResult& result, const std::vector<double>& baseline, std::int64_t m, double eps_s0) {
  auto& s = result.summary;
  s.n = static_cast<std::int64_t>(result.steps.size());
  s.final_eps_i = result.steps.empty() ? result.initial_eps_i : result.steps.back().eps_i;
  s.baseline_eps_i = baseline.empty() ? result.initial_eps_i : baseline.back();
  s.delta_p = s.baseline_eps_i - s.final_eps_i;
  s.delta_p_first = result.steps.empty() ? 0.0 : baseline.front() - result.steps.front().eps_i;
  s.relative_gain = s.delta_p_first != 0.0 ? s.delta_p / s.delta_p_first : std::numeric_limits<double>::quiet_NaN();
  s.gain = eps_s0 != 0.0 ? static_cast<double>(m) * s.delta_p / (2.0 * eps_s0) : std::numeric_limits<double>::quiet_NaN();
}

ProtocolResult run_mixing(const ProtocolConfig& config) {
  const auto* setup = std::get_if<MixingSetup>(&config.setup);
  if (!setup) throw InvalidArgument("mixing backend needs m and eps0");
  if (setup->m < 1) throw InvalidArgument("m must be >= 1");
  const double f = response_of(config.response);
  const double eta = survival_of(config.survival);
  const double eps_s0 = setup->eps_s0.value_or(setup->eps0);

  ProtocolResult result{eps_s0, setup->eps0, {}, {}, {}};
  PoolState with{eps_s0, setup->eps0, setup->m, 0};
  PoolState without = with;
  std::vector<double> baseline;
  for (std::int64_t k = 0; k < config.n; ++k) {
    with = step(with, {f, eta, config.q});
    without = step(without, {1.0, eta, config.q});
    result.steps.push_back({with.step, with.eps_s, with.eps_i, f, eta});
    baseline.push_back(without.eps_i);
  }
  finish_summary(result, baseline, setup->m, eps_s0);
  return result;
}

struct ExactRun {
  std::vector<StepRecord> steps;
  std::vector<TrajectorySample> dwell;
};

ExactRun run_exact_cycles(const ProtocolConfig& config, const ExactSetup& setup, const Timeline& timeline,
                          double eta, bool with_pulse) {
  const auto& system = setup.system;
  const std::string s_species = system.species_of(system.s_index()).label;
  const double eps_s0 = setup.eps_s0.value_or(setup.eps0);

  std::vector<double> pol(system.size(), setup.eps0);
  pol[system.s_index()] = eps_s0;
  DensityMatrix rho = DensityMatrix::product_state(pol);
  const auto dim = static_cast<Eigen::Index>(rho.dimension());
  const OperatorMatrix identity_part = OperatorMatrix::Identity(dim, dim) / static_cast<double>(dim);
  const OperatorMatrix sz = spin_operator(system, system.s_index(), Axis::Z);

  HamiltonianSettings high;
  high.field = FieldPoint(timeline.max_field());
  high.frame_mhz = setup.frame_mhz;
  high.threshold_ratio = setup.threshold_ratio;

  EvolutionSchedule schedule;
  for (const auto& seg : timeline.segments()) {
    HamiltonianSettings s = high;
    s.field = FieldPoint(seg.field_gauss);
    schedule.push_back(FreeSegment{seg.duration_s, s});
  }
  const bool sample_dwell = with_pulse && setup.dwell_sample_interval > 0.0;
  const double interval = sample_dwell ? setup.dwell_sample_interval
                                       : std::max(1.0, 2.0 * timeline.total_duration());
  TrajectoryOptions topts;
  topts.max_spins = setup.max_spins;

  ExactRun run;
  double clock = 0.0;
  for (std::int64_t k = 1; k <= config.n; ++k) {
    double f = 1.0;
    if (with_pulse) {
      const double before = expectation(rho, sz);
      if (const auto* fixed = std::get_if<double>(&config.response)) {
        rho = apply_hard_rotation(rho, system, s_species, std::acos(std::clamp(*fixed, -1.0, 1.0)));
      } else {
        const auto& p = std::get<PulseAtOffset>(config.response);
        const auto shifted = p.pulse.with_carrier_offset(p.pulse.carrier_offset_khz() - p.offset_khz);
        rho = apply_pulse(rho, system, s_species, shifted, high, setup.max_spins);
        clock += shifted.duration();
      }
      const double after = expectation(rho, sz);
      f = std::abs(before) > 1e-300 ? after / before : std::numeric_limits<double>::quiet_NaN();
    }
    auto traj = run_trajectory(system, rho, schedule, interval, topts);
    if (sample_dwell) {
      for (auto& sample : traj.samples) {
        sample.t_s += clock;
        run.dwell.push_back(std::move(sample));
      }
    }
    clock += timeline.total_duration();
    rho = DensityMatrix(identity_part + eta * (traj.final_state.matrix() - identity_part));

    const auto& last = traj.samples.back();
    const double s_pol = 2.0 * expectation(rho, sz);
    const double i_pol = 2.0 * eta * last.total_iz / static_cast<double>(system.m());
    run.steps.push_back({k, s_pol, i_pol, f, eta});
  }
  return run;
}

ProtocolResult run_exact(const ProtocolConfig& config) {
  const auto* setup = std::get_if<ExactSetup>(&config.setup);
  if (!setup) throw InvalidArgument("exact backend needs a spin system");
  if (setup->system.size() > setup->max_spins)
    throw InvalidArgument("system too large for exact engine: " + std::to_string(setup->system.size()) +
                          " spins, limit " + std::to_string(setup->max_spins));
  std::optional<Timeline> timeline = config.timeline;
  if (!timeline) {
    if (const auto* budget = std::get_if<TimelineBudget>(&config.survival)) timeline = budget->timeline;
  }
  if (!timeline) throw InvalidArgument("exact backend needs a timeline");
  const double eta = survival_of(config.survival);
  const double eps_s0 = setup->eps_s0.value_or(setup->eps0);

  ExactRun with = run_exact_cycles(config, *setup, *timeline, eta, true);
  ExactRun without = run_exact_cycles(config, *setup, *timeline, eta, false);
  std::vector<double> baseline;
  for (const auto& r : without.steps) baseline.push_back(r.eps_i);

  ProtocolResult result{eps_s0, setup->eps0, std::move(with.steps), {}, std::move(with.dwell)};
  finish_summary(result, baseline, static_cast<std::int64_t>(setup->system.m()), eps_s0);
  return result;
}

}  // namespace

ProtocolResult run_protocol(const ProtocolConfig& config) {
  if (config.n < 0) throw InvalidArgument("N must be >= 0");
  if (!(config.q >= 0.0 && config.q <= 1.0)) throw InvalidArgument("q must lie in [0, 1]");
  return config.backend == Backend::Mixing ? run_mixing(config) : run_exact(config);
}

}  // namespace spinamp
