#include "helpers.hpp"

#include "spiro/data.hpp"
#include "spiro/error.hpp"
#include "spiro/phase.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace spiro;
using spiro::test::vec;

namespace {

VolumeFlowCurve sampled(double (*f)(double), double lo, double hi, int n) {
  VolumeFlowCurve c;
  c.volume = Eigen::VectorXd::LinSpaced(n, lo, hi);
  c.flow = c.volume.unaryExpr(f);
  return c;
}

}  // namespace

TEST_SUITE("phase") {

TEST_CASE("landmarks on a uniform grid") {
  VolumeFlowCurve c{Eigen::VectorXd::LinSpaced(5, 0, 4), vec({2, 5, 4, 3, 1})};
  const Landmarks lm = locate_landmarks(c);
  CHECK(lm.fvc == 4.0);
  CHECK(lm.pef_volume == 1.0);
  CHECK(lm.fef25_volume == 1.0);
  CHECK(lm.fef50_volume == 2.0);
  CHECK(lm.fef75_volume == 3.0);
}

TEST_CASE("first maximum is the peak") {
  VolumeFlowCurve c{vec({0, 1, 2, 3}), vec({1, 6, 6, 2})};
  CHECK(locate_landmarks(c).pef_volume == 1.0);
}

TEST_CASE("landmarks match an exhaustive scan on triangular profiles") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> apex(1, 98);
  for (int trial = 0; trial < 25; ++trial) {
    const int a = apex(rng);
    VolumeFlowCurve c;
    c.volume = Eigen::VectorXd::LinSpaced(100, 0.0, 3.3);
    c.flow.resize(100);
    for (int i = 0; i < 100; ++i) c.flow(i) = i <= a ? double(i) / a : double(99 - i) / (99 - a);
    int best = 0;
    for (int i = 1; i < 100; ++i) {
      if (c.flow(i) > c.flow(best)) best = i;
    }
    const Landmarks lm = locate_landmarks(c);
    CHECK(lm.pef_volume == c.volume(best));
    CHECK(lm.fvc == c.volume(99));
    CHECK(lm.fef50_volume == doctest::Approx(0.5 * c.volume(99)));
  }
}

TEST_CASE("degenerate curves") {
  CHECK_THROWS_AS(locate_landmarks({vec({0, 1, 2}), vec({0, 0, 0})}), DegenerateCurve);
  CHECK_THROWS_AS(locate_landmarks({vec({0, 0}), vec({1, 1})}), DegenerateCurve);
}

TEST_CASE("phases tile the curve") {
  const Landmarks lm{4.0, 0.4, 1.0, 2.0, 3.0};
  const auto p = split_phases(lm);
  CHECK(p[0].begin == 0.4);
  CHECK(p[0].end == p[1].begin);
  CHECK(p[1].end == p[2].begin);
  CHECK(p[2].end == p[3].begin);
  CHECK(p[3].end == 4.0);
  const auto late = split_phases({4.0, 1.5, 1.0, 2.0, 3.0});
  CHECK(late[0].begin == late[0].end);
}

TEST_CASE("baseline through the phase end points") {
  SUBCASE("equal end flows give a flat line") {
    VolumeFlowCurve c{vec({0, 1, 2}), vec({3, 1, 3})};
    const BaselineLine l = baseline_line(c, {PhaseLabel::Fef25Fef50, 0, 2});
    CHECK(l.slope == 0.0);
    CHECK(l.intercept == 3.0);
  }
  SUBCASE("hand arithmetic") {
    VolumeFlowCurve c{vec({0, 1, 3, 4}), vec({5, 4, 0, 0})};
    const BaselineLine l = baseline_line(c, {PhaseLabel::Fef25Fef50, 1, 3});
    CHECK(l.slope == doctest::Approx(-2.0));
    CHECK(l.intercept == doctest::Approx(6.0));
  }
  SUBCASE("random polylines") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      const VolumeFlowCurve c = test::random_polyline(rng, 8);
      double b = 4.0 * u(rng), g = 4.0 * u(rng);
      if (b > g) std::swap(b, g);
      if (g - b < 1e-3) continue;
      const BaselineLine l = baseline_line(c, {PhaseLabel::Fef50Fef75, b, g});
      CHECK(std::abs(l(b) - c.flow_at(b)) < 1e-12);
      CHECK(std::abs(l(g) - c.flow_at(g)) < 1e-12);
    }
  }
  SUBCASE("empty phase") {
    VolumeFlowCurve c{vec({0, 1}), vec({1, 1})};
    CHECK_THROWS_AS(baseline_line(c, {PhaseLabel::PefFef25, 0.5, 0.5}), EmptyPhase);
  }
}

TEST_CASE("concavity of a segment on its chord is zero") {
  VolumeFlowCurve c{vec({0, 1, 2, 3}), vec({6, 4, 2, 0})};
  CHECK(std::abs(concavity_measure(c, {PhaseLabel::Fef25Fef50, 0.5, 2.5})) < 1e-12);
}

TEST_CASE("a bulge above the chord is negative") {
  const VolumeFlowCurve c = sampled([](double v) { return 1.0 - (v - 1.0) * (v - 1.0); }, 0.0, 2.0, 201);
  CHECK(concavity_measure(c, {PhaseLabel::PefFef25, 0.0, 2.0}) < 0.0);
}

TEST_CASE("v squared against its chord") {
  const VolumeFlowCurve c = sampled([](double v) { return v * v; }, 0.0, 1.0, 2001);
  CHECK(std::abs(concavity_measure(c, {PhaseLabel::Fef25Fef50, 0.0, 1.0}, 1000) - 1.0 / 6.0) < 1e-3);
}

TEST_CASE("sign flip and baseline-zero properties") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const VolumeFlowCurve c = test::random_polyline(rng, 10);
    const Phase phase{PhaseLabel::Fef50Fef75, 0.7, 3.1};
    const BaselineLine l = baseline_line(c, phase);
    VolumeFlowCurve reflected = c;
    VolumeFlowCurve on_line = c;
    for (Eigen::Index i = 0; i < c.volume.size(); ++i) {
      reflected.flow(i) = 2.0 * l(c.volume(i)) - c.flow(i);
      on_line.flow(i) = l(c.volume(i));
    }
    const double a = concavity_measure(c, phase);
    CHECK(concavity_measure(reflected, phase) == doctest::Approx(-a).epsilon(1e-9));
    CHECK(std::abs(concavity_measure(on_line, phase)) < 1e-12);
  }
}

TEST_CASE("grid convergence on a smooth curve") {
  const VolumeFlowCurve c = sampled([](double v) { return 8.0 * std::exp(-v) + std::sin(3 * v); }, 0.0, 4.0, 4001);
  const Phase phase{PhaseLabel::Fef25Fef50, 1.0, 2.0};
  const double scale = 1.0 * c.flow.cwiseAbs().maxCoeff();
  CHECK(std::abs(concavity_measure(c, phase, 2000) - concavity_measure(c, phase, 1000)) <= 1e-3 * scale);
}

TEST_CASE("trend arithmetic") {
  CHECK(concavity_trend({}) == 0.0);
  CHECK(concavity_trend({1, 1, -1, -1, 0}) == 4.0);
  CHECK(concavity_trend({0.3, -0.2, 0.7, 0.1, 0}) == doctest::Approx(0.3 - 0.2 - 0.7 - 0.1));
}

TEST_CASE("straight decay has no concavity anywhere") {
  VolumeFlowCurve c;
  c.volume = Eigen::VectorXd::LinSpaced(400, 0.0, 4.0);
  c.flow = 8.0 - 2.0 * c.volume.array();
  c.flow(0) = 8.0;
  const ConcavityProfile p = concavity_features(c);
  for (double x : p.by_phase()) CHECK(std::abs(x) < 1e-12);
  CHECK(p.trend == concavity_trend(p));
}

TEST_CASE("template shapes") {
  const CohortSpec spec = CohortSpec::standard(1, 0.0, 0);
  auto profile = [&](CohortClass c) {
    const TimeVolumeCurve raw = simulate_exhalation(spec.templates[static_cast<int>(c)], {});
    return concavity_features(build_volume_flow(raw));
  };
  const ConcavityProfile healthy = profile(CohortClass::NonCopd);
  const ConcavityProfile copd = profile(CohortClass::Copd);
  CHECK(healthy.fef75_plus > 0.0);
  CHECK(healthy.trend < copd.trend);
  CHECK(copd.pef_fef25 > 0.0);
  CHECK(healthy.trend == concavity_trend(healthy));
}

}  // TEST_SUITE
