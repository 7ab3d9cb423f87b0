#pragma once

// Exact density-matrix dynamics for small S-I^m clusters.
//
// Basis: computational product basis, site 0 is the most significant bit,
// bit value 0 is spin up (Z = +1/2). Hamiltonians are in Hz and propagators
// are U = exp(-2 pi i H t).
//
// The rotating frame rotates every spin at the same reference frequency.
// A uniform frame commutes with all dipolar terms, so the heteronuclear
// flip-flop suppression at high field comes from the remaining Zeeman
// offset difference rather than from truncation.

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "spinamp/pulse.hpp"
#include "spinamp/spin_system.hpp"

namespace spinamp {

using Complex = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;

inline constexpr std::size_t kDefaultMaxSpins = 10;

enum class Axis { X, Y, Z };
enum class FlipFlopMode { Auto, ForceOn, ForceOff };

struct HamiltonianSettings {
  FieldPoint field{};
  /// Rotating-frame reference in MHz. Unset: Larmor frequency of the
  /// I species at `field`.
  std::optional<double> frame_mhz;
  FlipFlopMode flip_flop = FlipFlopMode::Auto;
  double threshold_ratio = 1.0;
};

class DensityMatrix {
 public:
  explicit DensityMatrix(OperatorMatrix rho);

  /// rho = (x)_i (1/2 + p_i Z_i), one polarization per site.
  static DensityMatrix product_state(const std::vector<double>& polarizations);
  /// Pure computational basis state; `bits[i]` true means spin i down.
  static DensityMatrix basis_state(const std::vector<bool>& bits);

  const OperatorMatrix& matrix() const { return rho_; }
  std::size_t dimension() const { return static_cast<std::size_t>(rho_.rows()); }

  struct Diagnostics {
    double trace_error;        // |Tr rho - 1|
    double hermiticity_error;  // max |rho - rho^dagger|
    double min_eigenvalue;
  };
  Diagnostics diagnose() const;
  /// Throws NumericalError when trace, Hermiticity or positivity is violated.
  void check_physical(double tol = 1e-10) const;

 private:
  OperatorMatrix rho_;
};

/// Single spin-1/2 operator at `site`, identity elsewhere.
OperatorMatrix spin_operator(const SpinSystem& system, std::size_t site, Axis axis);
/// Sum of one spin component over every site of `species`.
OperatorMatrix species_operator(const SpinSystem& system, const std::string& species, Axis axis);

OperatorMatrix assemble_hamiltonian(const SpinSystem& system, const HamiltonianSettings& settings,
                                    std::size_t max_spins = kDefaultMaxSpins);

/// Frame reference (Hz) actually used for `settings`.
double frame_frequency_hz(const SpinSystem& system, const HamiltonianSettings& settings);

/// Eigendecomposition H = V diag(E) V^dagger of a Hermitian matrix.
class Spectrum {
 public:
  explicit Spectrum(const OperatorMatrix& hamiltonian);

  const Eigen::VectorXd& energies() const { return energies_; }
  const OperatorMatrix& vectors() const { return vectors_; }
  OperatorMatrix propagator(double t) const;

 private:
  Eigen::VectorXd energies_;
  OperatorMatrix vectors_;
};

/// max |element| of U^dagger U - 1.
double unitarity_error(const OperatorMatrix& u);
double hermiticity_error(const OperatorMatrix& a);

DensityMatrix propagate(const DensityMatrix& rho, const OperatorMatrix& hamiltonian, double t);

/// Piecewise-constant rf on every site of `target_species`. The pulse is
/// computed in a frame at the target Larmor frequency plus the carrier
/// offset; the returned state is expressed back in the settings frame with
/// both frames aligned at pulse start.
DensityMatrix apply_pulse(const DensityMatrix& rho, const SpinSystem& system, const std::string& target_species,
                          const ShapedPulse& pulse, const HamiltonianSettings& settings = {},
                          std::size_t max_spins = kDefaultMaxSpins);

/// Instantaneous rotation by `angle_rad` about x on every site of a species.
DensityMatrix apply_hard_rotation(const DensityMatrix& rho, const SpinSystem& system,
                                  const std::string& target_species, double angle_rad);

double expectation(const DensityMatrix& rho, const OperatorMatrix& observable);

struct FreeSegment {
  double duration_s = 0.0;
  HamiltonianSettings settings{};
};

struct PulseSegment {
  ShapedPulse pulse;
  std::string target_species;
  HamiltonianSettings settings{};
};

using ScheduleSegment = std::variant<FreeSegment, PulseSegment>;
using EvolutionSchedule = std::vector<ScheduleSegment>;

struct TrajectorySample {
  double t_s;
  double s_z;
  std::vector<double> i_z;
  double total_iz;
};

struct TrajectoryOptions {
  std::size_t max_spins = kDefaultMaxSpins;
  /// Rebuild rho at every sample and verify trace, Hermiticity and
  /// positivity. Costs one dense eigensolve per sample.
  bool check_invariants = false;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  DensityMatrix final_state;
};

/// Samples at t = 0, at every multiple of `sample_interval` inside free
/// segments, and at the end of every segment of non-zero length.
Trajectory run_trajectory(const SpinSystem& system, const DensityMatrix& rho0, const EvolutionSchedule& schedule,
                          double sample_interval, const TrajectoryOptions& options = {});

}  // namespace spinamp
