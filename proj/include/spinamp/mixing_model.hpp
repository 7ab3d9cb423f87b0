#pragma once

// Pool model of spin amplification: after each pulse the S polarization is
// mixed uniformly into the pool of m I spins, then the whole cycle decays by
// the survival factor eta.

#include <cstdint>
#include <vector>

namespace spinamp {

struct PoolState {
  double eps_s = 0.0;
  double eps_i = 0.0;
  std::int64_t m = 1;
  std::int64_t step = 0;
};

struct StepParams {
  double f = -1.0;   // response factor: eps_S -> f * eps_S
  double eta = 1.0;  // per-cycle survival
  double q = 1.0;    // mixing completeness
};

/// One pulse + mixing + decay cycle. With q < 1 the S spin and the pool each
/// move a fraction q of the way to the uniform value; total z is preserved
/// before eta is applied.
PoolState step(const PoolState& state, const StepParams& params);

/// G = m/2 [1 - ((m-1)/(m+1))^N]
double gain_closed_form(std::int64_t m, std::int64_t n);

struct GainPoint {
  std::int64_t n;
  double gain;
};
using GainCurve = std::vector<GainPoint>;

GainCurve gain_curve(std::int64_t m, std::int64_t n_max);

struct AmplifiedDifference {
  double delta_p;        // pool polarization without the pulse minus with it
  double relative_gain;  // delta_p(N) / delta_p(1)
};

AmplifiedDifference amplified_difference(std::int64_t m, std::int64_t n, double eps0, double eta);

struct SpectrumRow {
  double offset;  // same unit as the profile it came from
  double pool_polarization;
};

struct ResponseRow {
  double offset;
  double f;
};

/// eps0 [eta (m + f)/(m + 1)]^N for each profile row.
std::vector<SpectrumRow> response_spectrum(const std::vector<ResponseRow>& profile, std::int64_t m, std::int64_t n,
                                           double eps0, double eta);

/// Dip depth below the flat baseline and the half-depth half-width of a
/// spectrum, taken around its deepest row.
struct SpectrumShape {
  double baseline;
  double depth;
  double center;
  double half_width;  // linear interpolation of the half-depth crossings, mean of both sides
};
SpectrumShape analyze_spectrum(const std::vector<SpectrumRow>& spectrum, double baseline);

/// Inductive signal of the pool difference relative to a directly detected
/// S difference between +ref and -ref, taking signal as
/// spin count x polarization x gamma^2:
///   m * delta_p * gamma_i^2 / (2 * ref * gamma_s^2)
double signal_ratio(double delta_p_pool, std::int64_t m, double gamma_i, double gamma_s, double reference_polarization);

}  // namespace spinamp
