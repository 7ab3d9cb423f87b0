#include "spinamp/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include <boost/math/tools/minima.hpp>

#include "spinamp/error.hpp"

namespace spinamp {

ShapedPulse::ShapedPulse(std::vector<PulseSample> samples, double sample_duration_s, double carrier_offset_khz)
    : samples_(std::move(samples)), sample_duration_(sample_duration_s), carrier_offset_khz_(carrier_offset_khz) {
  if (samples_.empty()) throw InvalidArgument("a shaped pulse needs at least one sample");
  if (!(sample_duration_ > 0.0) || !std::isfinite(sample_duration_))
    throw InvalidArgument("sample duration must be finite and > 0");
  if (!std::isfinite(carrier_offset_khz_)) throw InvalidArgument("carrier offset must be finite");
  for (const auto& s : samples_)
    if (!std::isfinite(s.amplitude_khz) || !std::isfinite(s.phase_rad))
      throw InvalidArgument("pulse samples must be finite");
}

ShapedPulse ShapedPulse::with_carrier_offset(double khz) const { return ShapedPulse(samples_, sample_duration_, khz); }

ShapedPulse ShapedPulse::with_duration(double seconds) const {
  return ShapedPulse(samples_, seconds / static_cast<double>(samples_.size()), carrier_offset_khz_);
}

ShapedPulse ShapedPulse::scaled(double factor) const {
  auto s = samples_;
  for (auto& x : s) x.amplitude_khz *= factor;
  return ShapedPulse(std::move(s), sample_duration_, carrier_offset_khz_);
}

ShapedPulse hermite_shape(double peak_khz, double duration_s, std::size_t n_samples, HermiteOptions options) {
  if (!(peak_khz > 0.0)) throw InvalidArgument("peak amplitude must be > 0");
  if (n_samples < 16) throw InvalidArgument("a Hermite pulse needs at least 16 samples");
  if (!(duration_s > 0.0)) throw InvalidArgument("pulse duration must be > 0");
  if (!(options.tau_max > 0.0)) throw InvalidArgument("tau window must be > 0");

  const auto n = static_cast<double>(n_samples);
  std::vector<double> env(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    // Mirror the upper half so the envelope is symmetric bit-for-bit.
    const std::size_t j = std::min(k, n_samples - 1 - k);
    const double tau = -options.tau_max + 2.0 * options.tau_max * (static_cast<double>(j) + 0.5) / n;
    env[k] = (1.0 - options.beta * tau * tau) * std::exp(-tau * tau);
  }
  double peak = 0.0;
  for (double e : env) peak = std::max(peak, std::abs(e));

  std::vector<PulseSample> samples(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double a = env[k] / peak;
    samples[k] = {std::abs(a) * peak_khz, a < 0.0 ? std::numbers::pi : 0.0};
  }
  return ShapedPulse(std::move(samples), duration_s / n);
}

ShapedPulse constant_shape(double amplitude_khz, double duration_s, std::size_t n_samples) {
  if (n_samples < 1) throw InvalidArgument("a pulse needs at least one sample");
  if (!(duration_s > 0.0)) throw InvalidArgument("pulse duration must be > 0");
  return ShapedPulse(std::vector<PulseSample>(n_samples, {amplitude_khz, 0.0}),
                     duration_s / static_cast<double>(n_samples));
}

Magnetization bloch_response(const ShapedPulse& pulse, double offset_khz) {
  Magnetization m{0.0, 0.0, 1.0};
  const double dw = (offset_khz - pulse.carrier_offset_khz()) * 1e3;
  const double dt = pulse.sample_duration();
  for (const auto& s : pulse.samples()) {
    const double w1 = s.amplitude_khz * 1e3;
    const double wx = w1 * std::cos(s.phase_rad);
    const double wy = w1 * std::sin(s.phase_rad);
    const double weff = std::sqrt(wx * wx + wy * wy + dw * dw);
    if (weff == 0.0) continue;
    const double theta = 2.0 * std::numbers::pi * weff * dt;
    const double kx = wx / weff, ky = wy / weff, kz = dw / weff;
    const double c = std::cos(theta), sn = std::sin(theta);
    const double kdotm = kx * m[0] + ky * m[1] + kz * m[2];
    const Magnetization cross{ky * m[2] - kz * m[1], kz * m[0] - kx * m[2], kx * m[1] - ky * m[0]};
    m = {m[0] * c + cross[0] * sn + kx * kdotm * (1.0 - c), m[1] * c + cross[1] * sn + ky * kdotm * (1.0 - c),
         m[2] * c + cross[2] * sn + kz * kdotm * (1.0 - c)};
  }
  return m;
}

ExcitationProfile excitation_profile(const ShapedPulse& pulse, const std::vector<double>& offsets_khz,
                                     unsigned jobs) {
  if (offsets_khz.empty()) throw InvalidArgument("offset grid must not be empty");
  ExcitationProfile out(offsets_khz.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t k = begin; k < offsets_khz.size(); k += stride)
      out[k] = {offsets_khz[k], bloch_response(pulse, offsets_khz[k])[2]};
  };
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, offsets_khz.size());
  if (workers == 1) {
    work(0, 1);
    return out;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  return out;
}

ShapedPulse make_pulse(PulseFamily family, double peak_khz, double duration_s, const CalibrationOptions& options) {
  switch (family) {
    case PulseFamily::Constant:
      return constant_shape(peak_khz, duration_s, 1);
    case PulseFamily::Hermite:
      return hermite_shape(peak_khz, duration_s, options.n_samples, options.hermite);
  }
  throw InvalidArgument("unsupported pulse family");
}

double calibrate_duration(PulseFamily family, double peak_khz, const CalibrationOptions& options) {
  if (!(peak_khz > 0.0)) throw InvalidArgument("peak amplitude must be > 0");
  auto mz = [&](double t) { return bloch_response(make_pulse(family, peak_khz, t, options), 0.0)[2]; };

  // Coarse scan up to a total nutation of ten cycles at peak amplitude, then
  // refine the first local minimum.
  constexpr int kScan = 400;
  const double t_max = 10.0 / (peak_khz * 1e3);
  const double h = t_max / kScan;
  double prev = 1.0;
  double cur = mz(h);
  for (int k = 1; k < kScan; ++k) {
    const double next = mz(h * (k + 1));
    if (cur <= prev && cur < next && cur < 0.0) {
      const double lo = h * (k - 1) > 0.0 ? h * (k - 1) : 0.5 * h;
      const auto [t, value] =
          boost::math::tools::brent_find_minima(mz, lo, h * (k + 1), std::numeric_limits<double>::digits / 2);
      if (value > options.required_inversion)
        throw NumericalError("no inversion achievable: best residual Mz " + std::to_string(value));
      return t;
    }
    prev = cur;
    cur = next;
  }
  throw NumericalError("no inversion achievable within the duration bracket");
}

}  // namespace spinamp
