#include <cmath>
#include <random>

#include <doctest.h>

#include "spinamp/error.hpp"
#include "spinamp/field_cycle.hpp"

using namespace spinamp;

namespace {

const T1Map kShuttleT1({{100.0, 34.0 * 60.0}, {4000.0, 212.0 * 60.0}});

Timeline shuttle_timeline() { return build_timeline(0.67, 0.01, 0.67, 3.0, 100.0, 4000.0); }

SpinSystem s_i2() {
  Eigen::MatrixXd d(3, 3);
  d << 0, 9000, 6000, 9000, 0, 14000, 6000, 14000, 0;
  return SpinSystem({{"H", 42.577}, {"F", 40.05}}, {{"F", Role::S, {}}, {"H", Role::I, {}}, {"H", Role::I, {}}},
                    CouplingMatrix(d));
}

ProtocolConfig mixing_config(std::int64_t m, double eps0, std::int64_t n, double f, double eta) {
  ProtocolConfig pc;
  pc.backend = Backend::Mixing;
  pc.n = n;
  pc.setup = MixingSetup{m, eps0, std::nullopt};
  pc.response = f;
  pc.survival = eta;
  return pc;
}

}  // namespace

TEST_CASE("survival of trivial timelines") {
  CHECK(cycle_survival(build_timeline(0, 0, 0, 0, 100, 4000), kShuttleT1) == 1.0);
  const T1Map single({{100.0, 7.5}});
  CHECK(std::abs(cycle_survival(Timeline({{7.5, 100.0, "x"}}), single) - std::exp(-1.0)) < 1e-12);
}

TEST_CASE("shuttle timeline survival") {
  const double eta = cycle_survival(shuttle_timeline(), kShuttleT1);
  const double expected = std::exp(-(0.67 + 0.01 + 0.67) / 2040.0 - 3.0 / 12720.0);
  CHECK(eta == doctest::Approx(expected).epsilon(1e-15));
  CHECK(std::abs(eta - 0.99910) <= 5e-5);
}

TEST_CASE("timeline construction") {
  const auto t = shuttle_timeline();
  REQUIRE(t.segments().size() == 4);
  const std::vector<std::string> labels{"shuttle_up", "low_dwell", "shuttle_down", "high_dwell"};
  const std::vector<double> durations{0.67, 0.01, 0.67, 3.0};
  const std::vector<double> fields{100, 100, 100, 4000};
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(t.segments()[k].label == labels[k]);
    CHECK(t.segments()[k].duration_s == durations[k]);
    CHECK(t.segments()[k].field_gauss == fields[k]);
  }
  CHECK(t.total_duration() == doctest::Approx(4.35));
  CHECK(t.max_field() == 4000.0);
  CHECK_THROWS_AS(Timeline({}), InvalidArgument);
  CHECK_THROWS_AS(build_timeline(-1, 0, 0, 0, 100, 4000), InvalidArgument);
}

TEST_CASE("survival is multiplicative, bounded and decreasing") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> dur(0.0, 50.0);
  std::uniform_real_distribution<double> field(0.0, 5000.0);
  const T1Map t1({{10.0, 30.0}, {100.0, 2040.0}, {1000.0, 5000.0}, {4000.0, 12720.0}}, T1Lookup::LogLinear);
  for (int k = 0; k < 50; ++k) {
    std::vector<TimelineSegment> a, b;
    for (int j = 0; j < 3; ++j) a.push_back({dur(rng), field(rng), "a"});
    for (int j = 0; j < 2; ++j) b.push_back({dur(rng), field(rng), "b"});
    const Timeline ta(a), tb(b);
    const double ea = cycle_survival(ta, t1);
    const double eb = cycle_survival(tb, t1);
    CHECK(cycle_survival(ta.concatenated(tb), t1) == doctest::Approx(ea * eb).epsilon(1e-14));
    CHECK(ea > 0.0);
    CHECK(ea <= 1.0);
    auto longer = a;
    longer[1].duration_s += 0.5;
    CHECK(cycle_survival(Timeline(longer), t1) < ea);
  }
  const double e = cycle_survival(shuttle_timeline(), kShuttleT1);
  const double e2 = cycle_survival(build_timeline(1.34, 0.02, 1.34, 6.0, 100, 4000), kShuttleT1);
  CHECK(e2 == doctest::Approx(e * e).epsilon(1e-14));
}

TEST_CASE("T1 lookup") {
  CHECK(kShuttleT1.t1_at(0.0) == 2040.0);
  CHECK(kShuttleT1.t1_at(2000.0) == 2040.0);
  CHECK(kShuttleT1.t1_at(2050.1) == 12720.0);
  CHECK(kShuttleT1.t1_at(2050.0) == 2040.0);  // tie goes to the lower field
  CHECK(kShuttleT1.t1_at(9000.0) == 12720.0);
  const T1Map log_lin({{100.0, 100.0}, {300.0, 10000.0}}, T1Lookup::LogLinear);
  CHECK(log_lin.t1_at(200.0) == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(log_lin.t1_at(50.0) == 100.0);
  CHECK(log_lin.t1_at(400.0) == 10000.0);
  CHECK_THROWS_AS(T1Map({}), InvalidArgument);
  CHECK_THROWS_AS(T1Map({{100.0, 0.0}}), InvalidArgument);
  CHECK_THROWS_AS(T1Map({{100.0, 1.0}, {100.0, 2.0}}), InvalidArgument);
}

TEST_CASE("mixing protocol") {
  SUBCASE("N = 0 returns the initial state") {
    const auto r = run_protocol(mixing_config(799, 0.12, 0, -1.0, 0.9991));
    CHECK(r.steps.empty());
    CHECK(r.summary.final_eps_i == 0.12);
    CHECK(r.summary.delta_p == 0.0);
  }
  SUBCASE("reference parameters") {
    const auto r = run_protocol(mixing_config(799, 0.12, 200, -1.0, 0.9991));
    REQUIRE(r.steps.size() == 200);
    for (std::size_t k = 0; k < r.steps.size(); ++k) CHECK(r.steps[k].step == static_cast<std::int64_t>(k + 1));
    CHECK(r.summary.relative_gain == doctest::Approx(131.7).epsilon(0.05 / 131.7));
    CHECK(std::abs(r.summary.relative_gain - 136.0) / 136.0 < 0.04);
    CHECK(r.summary.delta_p == doctest::Approx(amplified_difference(799, 200, 0.12, 0.9991).delta_p).epsilon(1e-10));
  }
  SUBCASE("f = +1 is the pure decay line") {
    const auto r = run_protocol(mixing_config(99, 0.12, 300, 1.0, 0.995));
    for (const auto& s : r.steps)
      CHECK(std::abs(s.eps_i - 0.12 * std::pow(0.995, static_cast<double>(s.step))) < 1e-12);
  }
  SUBCASE("eta from a timeline budget") {
    auto pc = mixing_config(799, 0.12, 40, -1.0, 1.0);
    pc.survival = TimelineBudget{shuttle_timeline(), kShuttleT1};
    const auto r = run_protocol(pc);
    CHECK(r.steps.front().eta_applied == cycle_survival(shuttle_timeline(), kShuttleT1));
  }
  SUBCASE("pulse response at an offset") {
    auto pc = mixing_config(799, 0.12, 10, -1.0, 1.0);
    pc.response = PulseAtOffset{constant_shape(100.0, 5e-6), 100.0};
    const auto r = run_protocol(pc);
    CHECK(r.steps.front().f_applied == doctest::Approx(0.367).epsilon(0.003));
  }
  CHECK_THROWS_AS(run_protocol(mixing_config(0, 0.12, 5, -1.0, 1.0)), InvalidArgument);
  auto wrong = mixing_config(5, 0.1, 5, -1.0, 1.0);
  wrong.setup = ExactSetup{.system = s_i2()};
  CHECK_THROWS_AS(run_protocol(wrong), InvalidArgument);
}

TEST_CASE("exact protocol conserves total z during zero-offset dwells") {
  ProtocolConfig pc;
  pc.backend = Backend::Exact;
  pc.n = 4;
  ExactSetup setup{.system = s_i2()};
  setup.eps0 = 0.12;
  setup.dwell_sample_interval = 5e-6;
  pc.setup = setup;
  pc.response = -1.0;
  pc.survival = 1.0;
  pc.timeline = Timeline({{2e-4, 0.0, "dwell"}, {1e-4, 4000.0, "high"}});
  const auto r = run_protocol(pc);
  REQUIRE(r.steps.size() == 4);
  CHECK(r.steps.front().f_applied == doctest::Approx(-1.0).epsilon(1e-12));
  REQUIRE(!r.dwell_trajectory.empty());

  // Samples of one cycle share the same total; S moves toward the pool.
  const std::size_t per_cycle = r.dwell_trajectory.size() / 4;
  for (std::size_t c = 0; c < 4; ++c) {
    const auto& first = r.dwell_trajectory[c * per_cycle];
    double s_move = 0.0;
    for (std::size_t k = 0; k < per_cycle; ++k) {
      const auto& s = r.dwell_trajectory[c * per_cycle + k];
      CHECK(std::abs(s.s_z + s.total_iz - first.s_z - first.total_iz) < 1e-8);
      s_move = std::max(s_move, std::abs(s.s_z - first.s_z));
    }
    CHECK(s_move > 1e-3);
  }
  // After the first NOT the S spin is at -eps0 and gains from the pool.
  const auto& start = r.dwell_trajectory.front();
  CHECK(start.s_z == doctest::Approx(-0.06).epsilon(1e-10));
  CHECK(r.dwell_trajectory[per_cycle / 2].s_z > start.s_z);
  CHECK(r.summary.delta_p > 0.0);
}

TEST_CASE("exact protocol without pulses leaves the state untouched at eta = 1") {
  ProtocolConfig pc;
  pc.backend = Backend::Exact;
  pc.n = 3;
  ExactSetup setup{.system = s_i2()};
  setup.eps0 = 0.12;
  pc.setup = setup;
  pc.response = 1.0;
  pc.survival = 0.9;
  pc.timeline = Timeline({{2e-4, 0.0, "dwell"}});
  const auto r = run_protocol(pc);
  for (const auto& s : r.steps) {
    CHECK(s.eps_s == doctest::Approx(0.12 * std::pow(0.9, static_cast<double>(s.step))).epsilon(1e-10));
    CHECK(s.eps_i == doctest::Approx(0.12 * std::pow(0.9, static_cast<double>(s.step))).epsilon(1e-10));
  }
  CHECK(std::abs(r.summary.delta_p) < 1e-12);

  ExactSetup tiny{.system = s_i2()};
  tiny.max_spins = 2;
  pc.setup = tiny;
  CHECK_THROWS_WITH_AS(run_protocol(pc), doctest::Contains("system too large"), InvalidArgument);
  pc.setup = setup;
  pc.timeline.reset();
  CHECK_THROWS_AS(run_protocol(pc), InvalidArgument);
}
