#include <cmath>
#include <numbers>

#include <doctest.h>

#include "oracle.hpp"
#include "spinamp/error.hpp"
#include "spinamp/exact_dynamics.hpp"
#include "spinamp/pulse.hpp"

using namespace spinamp;

namespace {

double norm(const Magnetization& m) { return std::sqrt(m[0] * m[0] + m[1] * m[1] + m[2] * m[2]); }

const double kT140 = calibrate_duration(PulseFamily::Hermite, 140.0);

}  // namespace

TEST_CASE("Hermite envelope is symmetric and peaks at the requested amplitude") {
  for (std::size_t n : {16, 17, 64, 255, 256}) {
    const auto p = hermite_shape(140.0, 20e-6, n);
    REQUIRE(p.samples().size() == n);
    double peak = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& a = p.samples()[k];
      const auto& b = p.samples()[n - 1 - k];
      CHECK(std::abs(a.amplitude_khz - b.amplitude_khz) <= 1e-12);
      CHECK(a.phase_rad == b.phase_rad);
      peak = std::max(peak, a.amplitude_khz);
    }
    CHECK(peak == 140.0);
    CHECK(p.duration() == doctest::Approx(20e-6).epsilon(1e-14));
  }
  CHECK_THROWS_AS(hermite_shape(140.0, 20e-6, 15), InvalidArgument);
  CHECK_THROWS_AS(hermite_shape(0.0, 20e-6), InvalidArgument);
}

TEST_CASE("Hermite envelope follows (1 - beta tau^2) exp(-tau^2)") {
  const HermiteOptions opt{0.956, 2.5};
  const std::size_t n = 40;
  const auto p = hermite_shape(1.0, 1e-5, n, opt);
  // Midpoint of bin k and the envelope maximum, at tau = 0 for beta < 1/2... here
  // the largest magnitude is the central sample, which is the normalization.
  auto env = [&](std::size_t k) {
    const double tau = -2.5 + 5.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    return (1.0 - 0.956 * tau * tau) * std::exp(-tau * tau);
  };
  double peak = 0.0;
  for (std::size_t k = 0; k < n; ++k) peak = std::max(peak, std::abs(env(k)));
  for (std::size_t k = 0; k < n; ++k) {
    const double signed_amp = p.samples()[k].amplitude_khz * std::cos(p.samples()[k].phase_rad);
    CHECK(signed_amp == doctest::Approx(env(k) / peak).epsilon(1e-12));
  }
}

TEST_CASE("Bloch response basics") {
  SUBCASE("zero amplitude leaves +z") {
    for (double off : {-300.0, 0.0, 17.0}) {
      const auto m = bloch_response(constant_shape(0.0, 1e-5, 4), off);
      CHECK(m[2] == 1.0);
    }
  }
  SUBCASE("on-resonance pi pulse") {
    const auto m = bloch_response(constant_shape(100.0, 5e-6), 0.0);
    CHECK(std::abs(m[2] + 1.0) < 1e-9);
  }
  SUBCASE("offset equal to the nutation frequency") {
    const auto m = bloch_response(constant_shape(100.0, 5e-6), 100.0);
    CHECK(std::abs(m[2] - oracle::rabi_mz(1e5, 1e5, 5e-6)) < 1e-12);
    CHECK(std::abs(m[2] - 0.367) < 1e-3);
  }
  SUBCASE("Rabi formula across offsets and angles") {
    for (double off = -250.0; off <= 250.0; off += 12.5)
      for (double tp : {1e-6, 3.7e-6, 1.1e-5}) {
        const auto m = bloch_response(constant_shape(60.0, tp, 7), off);
        CHECK(std::abs(m[2] - oracle::rabi_mz(6e4, off * 1e3, tp)) < 1e-10);
      }
  }
  SUBCASE("norm is preserved") {
    const auto p = hermite_shape(140.0, kT140);
    for (double off = -600.0; off <= 600.0; off += 37.0) CHECK(std::abs(norm(bloch_response(p, off)) - 1.0) < 1e-10);
  }
}

TEST_CASE("constant pulse calibration") {
  const double t = calibrate_duration(PulseFamily::Constant, 100.0);
  CHECK(t == doctest::Approx(5e-6).epsilon(1e-6));
}

TEST_CASE("calibrated Hermite pulse at 140 kHz") {
  const auto p = hermite_shape(140.0, kT140);
  CHECK(bloch_response(p, 0.0)[2] <= -0.999);
  // Checked again at ten times the sample density.
  CHECK(bloch_response(hermite_shape(140.0, kT140, 2560), 0.0)[2] <= -0.999);
  CHECK(calibrate_duration(PulseFamily::Hermite, 140.0) == kT140);

  std::vector<double> far;
  for (double off = 300.0; off <= 1500.0; off += 2.5) {
    far.push_back(off);
    far.push_back(-off);
  }
  double worst = 0.0;
  for (const auto& row : excitation_profile(p, far, 2)) worst = std::max(worst, 1.0 - row.residual_mz);
  CHECK(worst < 1e-3);
}

TEST_CASE("45 kHz pulse is about three times as long") {
  const double t45 = calibrate_duration(PulseFamily::Hermite, 45.0);
  CHECK(t45 / kT140 == doctest::Approx(3.0).epsilon(0.15));
  // Stretching by the amplitude ratio reproduces the on-resonance inversion.
  const double inv140 = bloch_response(hermite_shape(140.0, kT140), 0.0)[2];
  const double inv45 = bloch_response(hermite_shape(45.0, kT140 * 140.0 / 45.0), 0.0)[2];
  CHECK(std::abs(inv45 - inv140) < 1e-3);
}

TEST_CASE("on-resonance response is invariant under amplitude-duration scaling") {
  const auto p = hermite_shape(140.0, kT140);
  for (double c : {0.25, 0.5, 2.0, 3.3}) {
    const auto q = p.scaled(c).with_duration(p.duration() / c);
    CHECK(std::abs(bloch_response(q, 0.0)[2] - bloch_response(p, 0.0)[2]) < 1e-9);
  }
  const auto q = p.scaled(2.0).with_duration(p.duration() / 2.0);
  CHECK(std::abs(bloch_response(q, 200.0)[2] - bloch_response(p, 200.0)[2]) > 1e-3);
}

TEST_CASE("excitation profile is even for zero-phase pulses and independent of jobs") {
  const auto p = hermite_shape(45.0, 3.0 * kT140);
  std::vector<double> grid;
  for (double off = -400.0; off <= 400.0; off += 10.0) grid.push_back(off);
  const auto one = excitation_profile(p, grid, 1);
  const auto four = excitation_profile(p, grid, 4);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(one[k].residual_mz == four[k].residual_mz);
    CHECK(one[k].offset_khz == grid[k]);
    CHECK(std::abs(one[k].residual_mz - one[grid.size() - 1 - k].residual_mz) < 1e-10);
  }
  CHECK_THROWS_AS(excitation_profile(p, {}), InvalidArgument);
}

TEST_CASE("carrier offset shifts the profile") {
  const auto p = hermite_shape(140.0, kT140);
  const auto shifted = p.with_carrier_offset(50.0);
  for (double off : {-100.0, 0.0, 75.0}) CHECK(bloch_response(shifted, off + 50.0)[2] == bloch_response(p, off)[2]);
}

TEST_CASE("Bloch simulator agrees with the exact engine on an isolated spin") {
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  const SpinSystem sys({{"F", 40.05}, {"H", 42.577}}, {{"F", Role::S, {}}, {"H", Role::I, {}}}, CouplingMatrix(zero));
  const auto rho0 = DensityMatrix::product_state({1.0, 0.0});
  const auto sz = spin_operator(sys, 0, Axis::Z);
  HamiltonianSettings s;
  s.field = FieldPoint(4000);
  const auto p = hermite_shape(140.0, kT140, 64);
  double worst = 0.0;
  for (int k = -20; k <= 20; ++k) {
    const double off = 15.0 * k;
    const double bloch = bloch_response(p, off)[2];
    const auto rho = apply_pulse(rho0, sys, "F", p.with_carrier_offset(-off), s);
    worst = std::max(worst, std::abs(2.0 * expectation(rho, sz) - bloch));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("calibration failure") {
  CalibrationOptions opts;
  opts.required_inversion = -1.5;
  CHECK_THROWS_AS(calibrate_duration(PulseFamily::Hermite, 140.0, opts), NumericalError);
  CHECK_THROWS_AS(calibrate_duration(PulseFamily::Hermite, -1.0), InvalidArgument);
}

TEST_CASE("pulse validation") {
  CHECK_THROWS_AS(ShapedPulse({}, 1e-6), InvalidArgument);
  CHECK_THROWS_AS(ShapedPulse({{1.0, 0.0}}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(ShapedPulse({{std::nan(""), 0.0}}, 1e-6), InvalidArgument);
  const auto p = constant_shape(10.0, 1e-5, 5);
  CHECK(p.sample_duration() == doctest::Approx(2e-6));
  CHECK(p.with_duration(2e-5).duration() == doctest::Approx(2e-5));
  CHECK(p.scaled(3.0).samples()[0].amplitude_khz == 30.0);
  (void)std::numbers::pi;
}
