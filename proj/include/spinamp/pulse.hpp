#pragma once

// Shaped rf pulses and single-isochromat Bloch simulation.
//
// Amplitudes and offsets are in kHz (cycles). A pulse is piecewise constant:
// sample k applies nutation frequency amplitude_khz with phase phase_rad for
// sample_duration seconds. The rotating-frame Hamiltonian for one
// isochromat during a sample is
//   H = dw * Z + w1 * (cos(phase) X + sin(phase) Y)       (Hz)
// with dw = offset - carrier_offset.

#include <array>
#include <cstddef>
#include <vector>

namespace spinamp {

struct PulseSample {
  double amplitude_khz = 0.0;
  double phase_rad = 0.0;
};

class ShapedPulse {
 public:
  ShapedPulse(std::vector<PulseSample> samples, double sample_duration_s, double carrier_offset_khz = 0.0);

  const std::vector<PulseSample>& samples() const { return samples_; }
  double sample_duration() const { return sample_duration_; }
  double carrier_offset_khz() const { return carrier_offset_khz_; }
  double duration() const { return sample_duration_ * static_cast<double>(samples_.size()); }

  ShapedPulse with_carrier_offset(double khz) const;
  /// Same envelope stretched or compressed to a new total duration.
  ShapedPulse with_duration(double seconds) const;
  /// Amplitudes multiplied by `factor`.
  ShapedPulse scaled(double factor) const;

 private:
  std::vector<PulseSample> samples_;
  double sample_duration_;
  double carrier_offset_khz_;
};

enum class PulseFamily { Constant, Hermite };

struct HermiteOptions {
  double beta = 0.956;
  double tau_max = 2.5;  // envelope sampled on [-tau_max, tau_max]
};

/// Hermite envelope A (1 - beta tau^2) exp(-tau^2), sampled at the midpoints
/// of n_samples uniform bins of the tau window and normalized so the largest
/// sample magnitude equals peak_khz. Negative lobes are carried as phase pi.
ShapedPulse hermite_shape(double peak_khz, double duration_s, std::size_t n_samples = 256,
                          HermiteOptions options = {});

ShapedPulse constant_shape(double amplitude_khz, double duration_s, std::size_t n_samples = 1);

using Magnetization = std::array<double, 3>;

/// Final magnetization of an isochromat at `offset_khz` starting from +z.
Magnetization bloch_response(const ShapedPulse& pulse, double offset_khz);

struct ProfilePoint {
  double offset_khz;
  double residual_mz;
};
using ExcitationProfile = std::vector<ProfilePoint>;

/// Residual Mz per offset, in grid order. Offsets are evaluated
/// concurrently when `jobs` > 1; the result does not depend on `jobs`.
ExcitationProfile excitation_profile(const ShapedPulse& pulse, const std::vector<double>& offsets_khz,
                                     unsigned jobs = 1);

struct CalibrationOptions {
  std::size_t n_samples = 256;  // ignored for Constant, which uses a single sample
  HermiteOptions hermite{};
  double required_inversion = -0.999;
};

ShapedPulse make_pulse(PulseFamily family, double peak_khz, double duration_s, const CalibrationOptions& options);

/// Pulse duration (s) that minimizes the on-resonance residual Mz, i.e. the
/// first inversion. Throws NumericalError when the minimum found does not
/// reach `required_inversion`.
double calibrate_duration(PulseFamily family, double peak_khz, const CalibrationOptions& options = {});

}  // namespace spinamp
