#include "spinamp/mixing_model.hpp"

#include <algorithm>
#include <cmath>

#include "spinamp/error.hpp"

namespace spinamp {

namespace {

// 1 - ((m-1)/(m+1))^N
double one_minus_ratio_pow(std::int64_t m, std::int64_t n) {
  if (n == 0) return 0.0;
  if (m == 1) return 1.0;
  return -std::expm1(static_cast<double>(n) * std::log1p(-2.0 / static_cast<double>(m + 1)));
}

void require_counts(std::int64_t m, std::int64_t n) {
  if (m < 1) throw InvalidArgument("m must be >= 1");
  if (n < 0) throw InvalidArgument("N must be >= 0");
}

}  // namespace

PoolState step(const PoolState& state, const StepParams& p) {
  if (state.m < 1) throw InvalidArgument("m must be >= 1");
  if (!(std::abs(p.f) <= 1.0)) throw InvalidArgument("response factor must lie in [-1, 1]");
  if (!(p.eta > 0.0 && p.eta <= 1.0)) throw InvalidArgument("eta must lie in (0, 1]");
  if (!(p.q >= 0.0 && p.q <= 1.0)) throw InvalidArgument("q must lie in [0, 1]");

  const auto m = static_cast<double>(state.m);
  const double s = p.f * state.eps_s;
  const double uniform = (m * state.eps_i + s) / (m + 1.0);
  PoolState next = state;
  if (p.q == 1.0) {
    next.eps_s = uniform;
    next.eps_i = uniform;
  } else {
    next.eps_s = s + p.q * (uniform - s);
    next.eps_i = state.eps_i + p.q * (uniform - state.eps_i);
  }
  next.eps_s *= p.eta;
  next.eps_i *= p.eta;
  ++next.step;
  return next;
}

double gain_closed_form(std::int64_t m, std::int64_t n) {
  require_counts(m, n);
  return 0.5 * static_cast<double>(m) * one_minus_ratio_pow(m, n);
}

GainCurve gain_curve(std::int64_t m, std::int64_t n_max) {
  require_counts(m, n_max);
  GainCurve curve;
  curve.reserve(static_cast<std::size_t>(n_max + 1));
  for (std::int64_t n = 0; n <= n_max; ++n) curve.push_back({n, gain_closed_form(m, n)});
  return curve;
}

AmplifiedDifference amplified_difference(std::int64_t m, std::int64_t n, double eps0, double eta) {
  require_counts(m, n);
  if (!(eps0 > 0.0 && eps0 <= 1.0)) throw InvalidArgument("eps0 must lie in (0, 1]");
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("eta must lie in (0, 1]");
  if (n == 0) return {0.0, 0.0};
  const double diff = one_minus_ratio_pow(m, n);
  const double nd = static_cast<double>(n);
  const double delta_p = eps0 * std::pow(eta, nd) * diff;
  const double one_minus_r = 2.0 / static_cast<double>(m + 1);
  return {delta_p, std::pow(eta, nd - 1.0) * diff / one_minus_r};
}

std::vector<SpectrumRow> response_spectrum(const std::vector<ResponseRow>& profile, std::int64_t m, std::int64_t n,
                                           double eps0, double eta) {
  require_counts(m, n);
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("eta must lie in (0, 1]");
  std::vector<SpectrumRow> out;
  out.reserve(profile.size());
  const auto md = static_cast<double>(m);
  for (const auto& row : profile) {
    if (!(std::abs(row.f) <= 1.0)) throw InvalidArgument("response factors must lie in [-1, 1]");
    const double per_step = eta * (md + row.f) / (md + 1.0);
    out.push_back({row.offset, eps0 * std::pow(per_step, static_cast<double>(n))});
  }
  return out;
}

SpectrumShape analyze_spectrum(const std::vector<SpectrumRow>& spectrum, double baseline) {
  if (spectrum.empty()) throw InvalidArgument("empty spectrum");
  const auto deepest = std::min_element(spectrum.begin(), spectrum.end(), [](const auto& a, const auto& b) {
    return a.pool_polarization < b.pool_polarization;
  });
  SpectrumShape shape{baseline, baseline - deepest->pool_polarization, deepest->offset, 0.0};
  if (shape.depth <= 0.0) return shape;

  const double half = baseline - 0.5 * shape.depth;
  const auto k0 = static_cast<std::size_t>(deepest - spectrum.begin());
  auto crossing = [&](int dir) {
    std::size_t k = k0;
    while (true) {
      const bool at_edge = dir < 0 ? k == 0 : k + 1 == spectrum.size();
      if (at_edge) return spectrum[k].offset;
      const std::size_t next = dir < 0 ? k - 1 : k + 1;
      const auto& a = spectrum[k];
      const auto& b = spectrum[next];
      if (b.pool_polarization >= half) {
        const double w = (half - a.pool_polarization) / (b.pool_polarization - a.pool_polarization);
        return a.offset + w * (b.offset - a.offset);
      }
      k = next;
    }
  };
  shape.half_width = 0.5 * (std::abs(crossing(+1) - shape.center) + std::abs(shape.center - crossing(-1)));
  return shape;
}

double signal_ratio(double delta_p_pool, std::int64_t m, double gamma_i, double gamma_s, double reference_polarization) {
  if (!(delta_p_pool > 0.0) || m < 1 || !(gamma_i > 0.0) || !(gamma_s > 0.0) || !(reference_polarization > 0.0))
    throw InvalidArgument("signal_ratio expects positive inputs");
  return static_cast<double>(m) * delta_p_pool * gamma_i * gamma_i /
         (2.0 * reference_polarization * gamma_s * gamma_s);
}

}  // namespace spinamp
