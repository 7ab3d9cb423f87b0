#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spinamp/error.hpp"
#include "spinamp/exact_dynamics.hpp"
#include "spinamp/field_cycle.hpp"
#include "spinamp/mixing_model.hpp"
#include "spinamp/pulse.hpp"
#include "spinamp/spin_system.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace spinamp;

namespace {

SpinSystem system_from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_system(in);
}

FlipFlopMode mode_from_string(const std::string& s) {
  if (s == "auto") return FlipFlopMode::Auto;
  if (s == "on") return FlipFlopMode::ForceOn;
  if (s == "off") return FlipFlopMode::ForceOff;
  throw InvalidArgument("flip-flop mode must be auto, on or off");
}

// Rows: t_s, S_z, I1_z..Im_z, total_Iz.
py::array_t<double> trajectory_array(const SpinSystem& system, const std::vector<double>& polarizations,
                                     const std::vector<std::tuple<double, double, std::string>>& segments,
                                     double sample_interval, std::optional<double> frame_mhz) {
  EvolutionSchedule schedule;
  for (const auto& [duration, field, mode] : segments) {
    HamiltonianSettings s;
    s.field = FieldPoint(field);
    s.frame_mhz = frame_mhz;
    s.flip_flop = mode_from_string(mode);
    schedule.push_back(FreeSegment{duration, s});
  }
  const auto traj = run_trajectory(system, DensityMatrix::product_state(polarizations), schedule, sample_interval);
  const auto cols = static_cast<py::ssize_t>(system.m() + 3);
  py::array_t<double> out({static_cast<py::ssize_t>(traj.samples.size()), cols});
  auto v = out.mutable_unchecked<2>();
  for (py::ssize_t r = 0; r < static_cast<py::ssize_t>(traj.samples.size()); ++r) {
    const auto& s = traj.samples[static_cast<std::size_t>(r)];
    v(r, 0) = s.t_s;
    v(r, 1) = s.s_z;
    for (std::size_t i = 0; i < s.i_z.size(); ++i) v(r, static_cast<py::ssize_t>(i) + 2) = s.i_z[i];
    v(r, cols - 1) = s.total_iz;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spin amplification by heteronuclear spin diffusion: native core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  // spin system
  py::class_<SpinSystem>(m, "SpinSystem")
      .def_static("from_text", &system_from_text, "text"_a, "Parse the line-oriented system description")
      .def_property_readonly("m", &SpinSystem::m)
      .def_property_readonly("size", &SpinSystem::size)
      .def_property_readonly("s_index", &SpinSystem::s_index)
      .def_property_readonly("couplings", [](const SpinSystem& s) { return Eigen::MatrixXd(s.couplings().matrix()); });
  m.def("dipolar_coupling", &dipolar_coupling, "pos_i"_a, "pos_j"_a, "gamma_i"_a, "gamma_j"_a,
        "field_axis"_a = Vec3{0.0, 0.0, 1.0}, "Secular dipolar coupling d in Hz");
  m.def(
      "classify_regime",
      [](const SpinSystem& s, double gauss, double threshold) {
        const auto map = classify_regime(s, FieldPoint(gauss), threshold);
        std::vector<std::vector<bool>> out(map.size(), std::vector<bool>(map.size()));
        for (std::size_t i = 0; i < map.size(); ++i)
          for (std::size_t j = 0; j < map.size(); ++j) out[i][j] = map.active(i, j);
        return out;
      },
      "system"_a, "field_gauss"_a, "threshold_ratio"_a = 1.0, "Flip-flop active flags per site pair");

  // exact dynamics
  m.def("exact_trajectory", &trajectory_array, "system"_a, "polarizations"_a, "segments"_a, "sample_interval"_a,
        "frame_mhz"_a = py::none(),
        "Exact trajectory; segments are (duration_s, field_g, mode) with mode in auto/on/off");

  // mixing model
  py::class_<PoolState>(m, "PoolState")
      .def(py::init([](double eps_s, double eps_i, std::int64_t m_, std::int64_t step_) {
             return PoolState{eps_s, eps_i, m_, step_};
           }),
           "eps_s"_a, "eps_i"_a, "m"_a, "step"_a = 0)
      .def_readonly("eps_s", &PoolState::eps_s)
      .def_readonly("eps_i", &PoolState::eps_i)
      .def_readonly("m", &PoolState::m)
      .def_readonly("step", &PoolState::step);
  m.def(
      "step", [](const PoolState& s, double f, double eta, double q) { return step(s, {f, eta, q}); }, "state"_a,
      "f"_a = -1.0, "eta"_a = 1.0, "q"_a = 1.0);
  m.def("gain_closed_form", &gain_closed_form, "m"_a, "n"_a);
  m.def(
      "amplified_difference",
      [](std::int64_t m_, std::int64_t n, double eps0, double eta) {
        const auto r = amplified_difference(m_, n, eps0, eta);
        return py::dict("delta_p"_a = r.delta_p, "relative_gain"_a = r.relative_gain);
      },
      "m"_a, "n"_a, "eps0"_a, "eta"_a);
  m.def(
      "response_spectrum",
      [](const std::vector<double>& offsets, const std::vector<double>& f, std::int64_t m_, std::int64_t n, double eps0,
         double eta) {
        if (offsets.size() != f.size()) throw InvalidArgument("offsets and f must have the same length");
        std::vector<ResponseRow> rows;
        for (std::size_t k = 0; k < f.size(); ++k) rows.push_back({offsets[k], f[k]});
        std::vector<double> out;
        for (const auto& r : response_spectrum(rows, m_, n, eps0, eta)) out.push_back(r.pool_polarization);
        return out;
      },
      "offsets"_a, "f"_a, "m"_a, "n"_a, "eps0"_a, "eta"_a);
  m.def("signal_ratio", &signal_ratio, "delta_p_pool"_a, "m"_a, "gamma_i"_a, "gamma_s"_a, "reference_polarization"_a);

  // pulses
  py::class_<ShapedPulse>(m, "ShapedPulse")
      .def_property_readonly("duration", &ShapedPulse::duration)
      .def_property_readonly("sample_duration", &ShapedPulse::sample_duration)
      .def_property_readonly("carrier_offset_khz", &ShapedPulse::carrier_offset_khz)
      .def_property_readonly("amplitudes_khz",
                             [](const ShapedPulse& p) {
                               std::vector<double> a;
                               for (const auto& s : p.samples()) a.push_back(s.amplitude_khz);
                               return a;
                             })
      .def_property_readonly("phases_rad", [](const ShapedPulse& p) {
        std::vector<double> a;
        for (const auto& s : p.samples()) a.push_back(s.phase_rad);
        return a;
      });
  m.def(
      "hermite_shape",
      [](double peak, double duration, std::size_t n, double beta, double tau_max) {
        return hermite_shape(peak, duration, n, {beta, tau_max});
      },
      "peak_khz"_a, "duration_s"_a, "n_samples"_a = 256, "beta"_a = 0.956, "tau_max"_a = 2.5);
  m.def("constant_shape", &constant_shape, "amplitude_khz"_a, "duration_s"_a, "n_samples"_a = 1);
  m.def("bloch_response", &bloch_response, "pulse"_a, "offset_khz"_a);
  m.def(
      "excitation_profile",
      [](const ShapedPulse& p, const std::vector<double>& offsets) {
        std::vector<double> mz;
        for (const auto& row : excitation_profile(p, offsets)) mz.push_back(row.residual_mz);
        return mz;
      },
      "pulse"_a, "offsets_khz"_a);
  m.def(
      "calibrate_duration",
      [](const std::string& family, double peak, std::size_t n_samples) {
        CalibrationOptions opts;
        opts.n_samples = n_samples;
        if (family != "hermite" && family != "constant") throw InvalidArgument("family must be hermite or constant");
        return calibrate_duration(family == "hermite" ? PulseFamily::Hermite : PulseFamily::Constant, peak, opts);
      },
      "family"_a, "peak_khz"_a, "n_samples"_a = 256);

  // field cycling
  m.def(
      "cycle_survival",
      [](const std::vector<std::tuple<double, double>>& segments, const std::vector<std::tuple<double, double>>& t1) {
        std::vector<TimelineSegment> segs;
        for (const auto& [d, b] : segments) segs.push_back({d, b, ""});
        std::vector<T1Entry> entries;
        for (const auto& [b, t] : t1) entries.push_back({b, t});
        return cycle_survival(Timeline(std::move(segs)), T1Map(std::move(entries)));
      },
      "segments"_a, "t1"_a, "segments: (duration_s, field_g); t1: (field_g, t1_s)");
  m.def(
      "mixing_protocol",
      [](std::int64_t m_, double eps0, std::int64_t n, double f, double eta, double q) {
        ProtocolConfig pc;
        pc.backend = Backend::Mixing;
        pc.n = n;
        pc.setup = MixingSetup{m_, eps0, std::nullopt};
        pc.response = f;
        pc.survival = eta;
        pc.q = q;
        const auto r = run_protocol(pc);
        py::list steps;
        for (const auto& s : r.steps) steps.append(py::make_tuple(s.step, s.eps_s, s.eps_i, s.f_applied, s.eta_applied));
        return py::dict("steps"_a = steps, "delta_p"_a = r.summary.delta_p, "relative_gain"_a = r.summary.relative_gain,
                        "gain"_a = r.summary.gain);
      },
      "m"_a, "eps0"_a, "n"_a, "f"_a = -1.0, "eta"_a = 1.0, "q"_a = 1.0);
}
