#pragma once

// Field-cycling timelines, T1 relaxation budget and amplification protocols.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spinamp/exact_dynamics.hpp"
#include "spinamp/mixing_model.hpp"
#include "spinamp/pulse.hpp"
#include "spinamp/spin_system.hpp"

namespace spinamp {

struct TimelineSegment {
  double duration_s = 0.0;
  double field_gauss = 0.0;
  std::string label;
};

class Timeline {
 public:
  explicit Timeline(std::vector<TimelineSegment> segments);

  const std::vector<TimelineSegment>& segments() const { return segments_; }
  double total_duration() const;
  double max_field() const;
  Timeline concatenated(const Timeline& other) const;

 private:
  std::vector<TimelineSegment> segments_;
};

enum class T1Lookup { Nearest, LogLinear };

struct T1Entry {
  double field_gauss;
  double t1_s;
};

class T1Map {
 public:
  explicit T1Map(std::vector<T1Entry> entries, T1Lookup lookup = T1Lookup::Nearest);

  /// Nearest entry by field; ties go to the lower field. LogLinear
  /// interpolates log T1 linearly in field between neighbours and clamps
  /// outside the tabulated range.
  double t1_at(double field_gauss) const;
  const std::vector<T1Entry>& entries() const { return entries_; }
  T1Lookup lookup() const { return lookup_; }

 private:
  std::vector<T1Entry> entries_;  // sorted by field
  T1Lookup lookup_;
};

/// eta = exp(-sum_k duration_k / T1(field_k))
double cycle_survival(const Timeline& timeline, const T1Map& t1);

/// Shuttle up, low-field dwell, shuttle down, high-field dwell. Both shuttle
/// legs are charged at the low field.
Timeline build_timeline(double shuttle_up_s, double dwell_s, double shuttle_down_s, double high_dwell_s,
                        double low_field_gauss, double high_field_gauss);

enum class Backend { Mixing, Exact };

struct MixingSetup {
  std::int64_t m = 1;
  double eps0 = 0.0;
  std::optional<double> eps_s0;  // defaults to eps0
};

struct ExactSetup {
  SpinSystem system;
  double eps0 = 0.0;
  std::optional<double> eps_s0{};
  std::optional<double> frame_mhz{};
  double threshold_ratio = 1.0;
  std::size_t max_spins = kDefaultMaxSpins;
  /// When > 0, low-field dwells are sampled at this interval into
  /// ProtocolResult::dwell_trajectory.
  double dwell_sample_interval = 0.0;
};

/// Effect of U on S: either a fixed response factor or a shaped pulse seen
/// by an isochromat at `offset_khz`.
struct PulseAtOffset {
  ShapedPulse pulse;
  double offset_khz = 0.0;
};
using PulseResponse = std::variant<double, PulseAtOffset>;

struct TimelineBudget {
  Timeline timeline;
  T1Map t1;
};
using SurvivalSource = std::variant<double, TimelineBudget>;

struct ProtocolConfig {
  Backend backend = Backend::Mixing;
  std::int64_t n = 0;
  std::variant<MixingSetup, ExactSetup> setup = MixingSetup{};
  PulseResponse response = -1.0;
  SurvivalSource survival = 1.0;
  /// Exact backend only: timeline whose segments are propagated each cycle.
  std::optional<Timeline> timeline;
  double q = 1.0;
};

struct StepRecord {
  std::int64_t step;
  double eps_s;
  double eps_i;
  double f_applied;
  double eta_applied;
};

struct ProtocolSummary {
  std::int64_t n;
  double final_eps_i;
  double baseline_eps_i;  // same protocol without the pulse
  double delta_p;         // baseline - final
  double delta_p_first;   // difference after the first step
  double relative_gain;   // delta_p / delta_p_first, NaN when undefined
  double gain;            // m * delta_p / (2 * eps_s0)
};

struct ProtocolResult {
  double initial_eps_s;
  double initial_eps_i;
  std::vector<StepRecord> steps;
  ProtocolSummary summary;
  std::vector<TrajectorySample> dwell_trajectory;
};

ProtocolResult run_protocol(const ProtocolConfig& config);

/// eta of a config: the explicit value or the timeline budget.
double survival_of(const SurvivalSource& source);

/// f of a config: the explicit value or residual Mz of the pulse at its offset.
double response_of(const PulseResponse& response);

}  // namespace spinamp
