#include "spinamp/exact_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "spinamp/error.hpp"

namespace spinamp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t spins_for_dimension(Eigen::Index dim) {
  std::size_t n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim) throw InvalidArgument("operator dimension must be a power of two");
  return n;
}

// Z eigenvalue (+1/2 or -1/2) of `site` in basis state `b`.
double z_value(std::size_t b, std::size_t site, std::size_t n) { return ((b >> (n - 1 - site)) & 1U) ? -0.5 : 0.5; }

void require_size(const SpinSystem& system, std::size_t max_spins) {
  if (system.size() > max_spins)
    throw InvalidArgument("system too large for exact engine: " + std::to_string(system.size()) +
                          " spins, limit " + std::to_string(max_spins));
}

// Diagonal of the total Z operator over all spins.
Eigen::VectorXd total_z(std::size_t n) {
  const std::size_t dim = std::size_t{1} << n;
  Eigen::VectorXd m(static_cast<Eigen::Index>(dim));
  for (std::size_t b = 0; b < dim; ++b) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += z_value(b, i, n);
    m(static_cast<Eigen::Index>(b)) = v;
  }
  return m;
}

Eigen::VectorXd site_z(std::size_t site, std::size_t n) {
  const std::size_t dim = std::size_t{1} << n;
  Eigen::VectorXd z(static_cast<Eigen::Index>(dim));
  for (std::size_t b = 0; b < dim; ++b) z(static_cast<Eigen::Index>(b)) = z_value(b, site, n);
  return z;
}

double max_abs(const OperatorMatrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

void require_hermitian(const OperatorMatrix& h) {
  if (h.rows() != h.cols()) throw InvalidArgument("Hamiltonian must be square");
  if (hermiticity_error(h) > 1e-12 * std::max(1.0, max_abs(h)))
    throw NumericalError("Hamiltonian is not Hermitian");
}

}  // namespace

// --- DensityMatrix -----------------------------------------------------------

DensityMatrix::DensityMatrix(OperatorMatrix rho) : rho_(std::move(rho)) {
  if (rho_.rows() != rho_.cols()) throw InvalidArgument("density matrix must be square");
  spins_for_dimension(rho_.rows());
}

DensityMatrix DensityMatrix::product_state(const std::vector<double>& polarizations) {
  const std::size_t n = polarizations.size();
  if (n == 0) throw InvalidArgument("product state needs at least one spin");
  for (double p : polarizations)
    if (!(std::abs(p) <= 1.0)) throw InvalidArgument("polarizations must lie in [-1, 1]");
  const std::size_t dim = std::size_t{1} << n;
  OperatorMatrix rho = OperatorMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t b = 0; b < dim; ++b) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) w *= 0.5 + polarizations[i] * z_value(b, i, n);
    rho(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b)) = w;
  }
  return DensityMatrix(std::move(rho));
}

DensityMatrix DensityMatrix::basis_state(const std::vector<bool>& bits) {
  const std::size_t n = bits.size();
  if (n == 0) throw InvalidArgument("basis state needs at least one spin");
  const std::size_t dim = std::size_t{1} << n;
  std::size_t index = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (bits[i]) index |= std::size_t{1} << (n - 1 - i);
  OperatorMatrix rho = OperatorMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  rho(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
  return DensityMatrix(std::move(rho));
}

DensityMatrix::Diagnostics DensityMatrix::diagnose() const {
  Diagnostics d{};
  d.trace_error = std::abs(rho_.trace() - Complex(1.0, 0.0));
  d.hermiticity_error = hermiticity_error(rho_);
  const OperatorMatrix sym = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> es(sym, Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  return d;
}

void DensityMatrix::check_physical(double tol) const {
  const auto d = diagnose();
  if (d.trace_error > tol) throw NumericalError("density matrix trace deviates from 1");
  if (d.hermiticity_error > tol) throw NumericalError("density matrix is not Hermitian");
  if (d.min_eigenvalue < -tol) throw NumericalError("density matrix has a negative eigenvalue");
}

// --- operators ---------------------------------------------------------------

OperatorMatrix spin_operator(const SpinSystem& system, std::size_t site, Axis axis) {
  const std::size_t n = system.size();
  if (site >= n) throw InvalidArgument("site index out of range");
  const std::size_t dim = std::size_t{1} << n;
  const std::size_t mask = std::size_t{1} << (n - 1 - site);
  OperatorMatrix op = OperatorMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t b = 0; b < dim; ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    const auto flipped = static_cast<Eigen::Index>(b ^ mask);
    const bool down = (b & mask) != 0;
    switch (axis) {
      case Axis::Z:
        op(col, col) = down ? -0.5 : 0.5;
        break;
      case Axis::X:
        op(flipped, col) = 0.5;
        break;
      case Axis::Y:
        op(flipped, col) = down ? Complex(0.0, -0.5) : Complex(0.0, 0.5);
        break;
    }
  }
  return op;
}

OperatorMatrix species_operator(const SpinSystem& system, const std::string& species, Axis axis) {
  if (!system.has_species(species)) throw InvalidArgument("unknown species label '" + species + "'");
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << system.size());
  OperatorMatrix sum = OperatorMatrix::Zero(dim, dim);
  for (std::size_t k = 0; k < system.size(); ++k)
    if (system.species_of(k).label == species) sum += spin_operator(system, k, axis);
  return sum;
}

double frame_frequency_hz(const SpinSystem& system, const HamiltonianSettings& settings) {
  if (settings.frame_mhz) return *settings.frame_mhz * 1e6;
  return larmor_hz(system.gamma(system.i_indices().front()), settings.field);
}

OperatorMatrix assemble_hamiltonian(const SpinSystem& system, const HamiltonianSettings& settings,
                                    std::size_t max_spins) {
  require_size(system, max_spins);
  const std::size_t n = system.size();
  const std::size_t dim = std::size_t{1} << n;
  const double frame = frame_frequency_hz(system, settings);

  std::vector<double> offset(n);
  for (std::size_t i = 0; i < n; ++i) offset[i] = larmor_hz(system.gamma(i), settings.field) - frame;

  const RegimeMap regime = settings.flip_flop == FlipFlopMode::Auto
                               ? classify_regime(system, settings.field, settings.threshold_ratio)
                               : RegimeMap(n);
  auto flip_flop_on = [&](std::size_t i, std::size_t j) {
    if (system.homonuclear(i, j)) return true;
    switch (settings.flip_flop) {
      case FlipFlopMode::ForceOn:
        return true;
      case FlipFlopMode::ForceOff:
        return false;
      case FlipFlopMode::Auto:
        return regime.active(i, j);
    }
    return false;
  };

  const auto& d = system.couplings();
  OperatorMatrix h = OperatorMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t b = 0; b < dim; ++b) {
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag += offset[i] * z_value(b, i, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) diag += d(i, j) * z_value(b, i, n) * z_value(b, j, n);
    h(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b)) = diag;
  }
  // -d/2 (XX + YY) = -d/4 (S+ I- + S- I+): couples antiparallel pairs.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d(i, j) == 0.0 || !flip_flop_on(i, j)) continue;
      const std::size_t mi = std::size_t{1} << (n - 1 - i);
      const std::size_t mj = std::size_t{1} << (n - 1 - j);
      for (std::size_t b = 0; b < dim; ++b) {
        if (((b & mi) != 0) == ((b & mj) != 0)) continue;
        h(static_cast<Eigen::Index>(b ^ (mi | mj)), static_cast<Eigen::Index>(b)) += -0.25 * d(i, j);
      }
    }
  }
  return h;
}

// --- propagation ---------------------------------------------------------------

Spectrum::Spectrum(const OperatorMatrix& hamiltonian) {
  require_hermitian(hamiltonian);
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> es(hamiltonian);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  energies_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
}

OperatorMatrix Spectrum::propagator(double t) const {
  Eigen::VectorXcd phase(energies_.size());
  for (Eigen::Index k = 0; k < energies_.size(); ++k) phase(k) = std::polar(1.0, -kTwoPi * energies_(k) * t);
  return vectors_ * phase.asDiagonal() * vectors_.adjoint();
}

double unitarity_error(const OperatorMatrix& u) {
  const OperatorMatrix e = u.adjoint() * u - OperatorMatrix::Identity(u.rows(), u.cols());
  return max_abs(e);
}

double hermiticity_error(const OperatorMatrix& a) { return max_abs(a - a.adjoint()); }

DensityMatrix propagate(const DensityMatrix& rho, const OperatorMatrix& hamiltonian, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("evolution time must be >= 0");
  if (hamiltonian.rows() != rho.matrix().rows()) throw InvalidArgument("dimension mismatch");
  require_hermitian(hamiltonian);
  if (t == 0.0) return rho;
  const OperatorMatrix u = Spectrum(hamiltonian).propagator(t);
  return DensityMatrix(u * rho.matrix() * u.adjoint());
}

DensityMatrix apply_pulse(const DensityMatrix& rho, const SpinSystem& system, const std::string& target_species,
                          const ShapedPulse& pulse, const HamiltonianSettings& settings, std::size_t max_spins) {
  if (!system.has_species(target_species)) throw InvalidArgument("unknown species label '" + target_species + "'");
  require_size(system, max_spins);
  if (rho.dimension() != (std::size_t{1} << system.size())) throw InvalidArgument("dimension mismatch");

  double target_gamma = 0.0;
  for (const auto& s : system.species())
    if (s.label == target_species) target_gamma = s.gamma_mhz_per_t;
  const double settings_frame = frame_frequency_hz(system, settings);
  const double pulse_frame = larmor_hz(target_gamma, settings.field) + pulse.carrier_offset_khz() * 1e3;

  HamiltonianSettings in_pulse_frame = settings;
  in_pulse_frame.frame_mhz = pulse_frame * 1e-6;
  const OperatorMatrix h_int = assemble_hamiltonian(system, in_pulse_frame, max_spins);
  const OperatorMatrix sx = species_operator(system, target_species, Axis::X);
  const OperatorMatrix sy = species_operator(system, target_species, Axis::Y);

  OperatorMatrix state = rho.matrix();
  OperatorMatrix u;
  std::optional<PulseSample> cached;
  for (const auto& s : pulse.samples()) {
    if (!cached || cached->amplitude_khz != s.amplitude_khz || cached->phase_rad != s.phase_rad) {
      const double w1 = s.amplitude_khz * 1e3;
      const OperatorMatrix h = h_int + w1 * std::cos(s.phase_rad) * sx + w1 * std::sin(s.phase_rad) * sy;
      u = Spectrum(h).propagator(pulse.sample_duration());
      cached = s;
    }
    state = u * state * u.adjoint();
  }

  const double df = pulse_frame - settings_frame;
  if (df != 0.0) {
    const Eigen::VectorXd mz = total_z(system.size());
    Eigen::VectorXcd w(mz.size());
    for (Eigen::Index a = 0; a < mz.size(); ++a) w(a) = std::polar(1.0, -kTwoPi * df * pulse.duration() * mz(a));
    state = (state.array() * (w * w.adjoint()).array()).matrix();
  }
  return DensityMatrix(std::move(state));
}

DensityMatrix apply_hard_rotation(const DensityMatrix& rho, const SpinSystem& system,
                                  const std::string& target_species, double angle_rad) {
  if (rho.dimension() != (std::size_t{1} << system.size())) throw InvalidArgument("dimension mismatch");
  const OperatorMatrix u = Spectrum(species_operator(system, target_species, Axis::X)).propagator(angle_rad / kTwoPi);
  return DensityMatrix(u * rho.matrix() * u.adjoint());
}

double expectation(const DensityMatrix& rho, const OperatorMatrix& observable) {
  if (observable.rows() != rho.matrix().rows() || observable.cols() != rho.matrix().cols())
    throw InvalidArgument("dimension mismatch between state and observable");
  const Complex v = rho.matrix().cwiseProduct(observable.transpose()).sum();
  if (std::abs(v.imag()) > 1e-10) throw NumericalError("non-physical observable: imaginary expectation value");
  return v.real();
}

// --- trajectories ----------------------------------------------------------------

namespace {

class Recorder {
 public:
  Recorder(const SpinSystem& system, std::vector<TrajectorySample>& out) : system_(system), out_(out) {
    const std::size_t n = system.size();
    diagonals_.push_back(site_z(system.s_index(), n));
    for (std::size_t i : system.i_indices()) diagonals_.push_back(site_z(i, n));
  }

  const std::vector<Eigen::VectorXd>& diagonals() const { return diagonals_; }

  void record(double t, const std::vector<double>& values) {
    TrajectorySample s{t, values[0], {values.begin() + 1, values.end()}, 0.0};
    for (double v : s.i_z) s.total_iz += v;
    out_.push_back(std::move(s));
  }

  void record_state(double t, const OperatorMatrix& rho) {
    std::vector<double> values;
    for (const auto& z : diagonals_) values.push_back((rho.diagonal().real().array() * z.array()).sum());
    record(t, values);
  }

 private:
  const SpinSystem& system_;
  std::vector<TrajectorySample>& out_;
  std::vector<Eigen::VectorXd> diagonals_;
};

}  // namespace

Trajectory run_trajectory(const SpinSystem& system, const DensityMatrix& rho0, const EvolutionSchedule& schedule,
                          double sample_interval, const TrajectoryOptions& options) {
  require_size(system, options.max_spins);
  if (!(sample_interval > 0.0)) throw InvalidArgument("sample interval must be > 0");
  if (rho0.dimension() != (std::size_t{1} << system.size())) throw InvalidArgument("dimension mismatch");

  std::vector<TrajectorySample> samples;
  Recorder recorder(system, samples);
  OperatorMatrix rho = rho0.matrix();
  if (options.check_invariants) DensityMatrix(rho).check_physical();
  recorder.record_state(0.0, rho);

  const double eps = 1e-9 * sample_interval;
  double t = 0.0;
  double last_sample = 0.0;
  for (const auto& segment : schedule) {
    if (const auto* free = std::get_if<FreeSegment>(&segment)) {
      if (!(free->duration_s >= 0.0)) throw InvalidArgument("segment durations must be >= 0");
      if (free->duration_s == 0.0) continue;
      const Spectrum spectrum(assemble_hamiltonian(system, free->settings, options.max_spins));
      const OperatorMatrix& v = spectrum.vectors();
      const OperatorMatrix rho_eig = v.adjoint() * rho * v;
      std::vector<OperatorMatrix> obs_t;  // transposed observables in the eigenbasis
      for (const auto& z : recorder.diagonals())
        obs_t.push_back((v.adjoint() * (z.asDiagonal() * v)).transpose());

      auto evolved = [&](double tau) {
        Eigen::VectorXcd p(spectrum.energies().size());
        for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = std::polar(1.0, -kTwoPi * spectrum.energies()(k) * tau);
        return OperatorMatrix((rho_eig.array() * (p * p.adjoint()).array()).matrix());
      };
      auto sample_at = [&](double t_abs, const OperatorMatrix& r) {
        std::vector<double> values;
        for (const auto& o : obs_t) {
          const Complex c = r.cwiseProduct(o).sum();
          if (std::abs(c.imag()) > 1e-10) throw NumericalError("non-physical observable: imaginary expectation value");
          values.push_back(c.real());
        }
        if (options.check_invariants) DensityMatrix(v * r * v.adjoint()).check_physical();
        recorder.record(t_abs, values);
        last_sample = t_abs;
      };

      const double t_end = t + free->duration_s;
      for (auto k = static_cast<long long>(std::floor((t + eps) / sample_interval)) + 1;
           static_cast<double>(k) * sample_interval < t_end - eps; ++k) {
        const double t_abs = static_cast<double>(k) * sample_interval;
        sample_at(t_abs, evolved(t_abs - t));
      }
      const OperatorMatrix end = evolved(free->duration_s);
      rho = v * end * v.adjoint();
      t = t_end;
      if (t > last_sample + eps) sample_at(t, end);
    } else {
      const auto& pulse = std::get<PulseSegment>(segment);
      rho = apply_pulse(DensityMatrix(rho), system, pulse.target_species, pulse.pulse, pulse.settings,
                        options.max_spins)
                .matrix();
      t += pulse.pulse.duration();
      if (options.check_invariants) DensityMatrix(rho).check_physical();
      recorder.record_state(t, rho);
      last_sample = t;
    }
  }
  return {std::move(samples), DensityMatrix(std::move(rho))};
}

}  // namespace spinamp
