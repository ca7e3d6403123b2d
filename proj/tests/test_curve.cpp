#include "helpers.hpp"

#include "spiro/curve.hpp"
#include "spiro/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace spiro;
using spiro::test::vec;

TEST_SUITE("curve") {

TEST_CASE("gaussian smoothing preserves constants") {
  TimeVolumeCurve c{vec({2, 2, 2, 2})};
  for (int k : {0, 1, 3, 5}) {
    const TimeVolumeCurve s = gaussian_smooth(c, {k, 1.5});
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(s.volume(i) == doctest::Approx(2.0).epsilon(1e-15));
  }
}

TEST_CASE("gaussian smoothing keeps the interior of a ramp") {
  const TimeVolumeCurve s = gaussian_smooth({vec({0, 1, 2, 3, 4})}, {1, 1.0});
  for (Eigen::Index i = 1; i < 4; ++i) CHECK(s.volume(i) == doctest::Approx(double(i)).epsilon(1e-14));
}

TEST_CASE("impulse response matches the normalised kernel") {
  const TimeVolumeCurve s = gaussian_smooth({vec({0, 0, 1, 0, 0})}, {1, 1.0});
  CHECK(s.volume(2) == doctest::Approx(0.45186276187760605).epsilon(1e-14));
  CHECK(s.volume(0) == 0.0);
}

TEST_CASE("zero half-width is the identity") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  Eigen::VectorXd v(30);
  for (auto& x : v) x = std::abs(z(rng));
  const TimeVolumeCurve s = gaussian_smooth({v}, {0, 2.0});
  CHECK((s.volume - v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("smoothing stays inside the input range") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd v(40);
    for (auto& x : v) x = u(rng);
    const TimeVolumeCurve s = gaussian_smooth({v}, {5, 2.0});
    CHECK(s.volume.minCoeff() >= v.minCoeff() - 1e-12);
    CHECK(s.volume.maxCoeff() <= v.maxCoeff() + 1e-12);
  }
}

TEST_CASE("invalid smoother settings are rejected") {
  CHECK_THROWS_AS(gaussian_smooth({vec({0, 1})}, {-1, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(gaussian_smooth({vec({0, 1})}, {2, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(gaussian_smooth({vec({0})}), InvalidCurve);
  CHECK_THROWS_AS(gaussian_smooth({vec({0, -1})}), InvalidCurve);
}

TEST_CASE("constant-rate volume gives constant flow") {
  Eigen::VectorXd v(20);
  for (Eigen::Index i = 0; i < 20; ++i) v(i) = 0.03 * double(i);
  const TimeFlowCurve f = differentiate_flow({v, 0.010});
  REQUIRE(f.flow.size() == 20);
  for (double q : f.flow) CHECK(q == doctest::Approx(3.0).epsilon(1e-12));
  const TimeFlowCurve flat = differentiate_flow({Eigen::VectorXd::Constant(5, 1.2), 0.010});
  CHECK(flat.flow.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("quadratic volume differentiates to 2t within dt") {
  const double dt = 0.010;
  Eigen::VectorXd v(200);
  for (Eigen::Index i = 0; i < 200; ++i) v(i) = std::pow(double(i) * dt, 2);
  const TimeFlowCurve f = differentiate_flow({v, dt});
  for (Eigen::Index i = 0; i < 199; ++i) CHECK(std::abs(f.flow(i) - 2.0 * double(i) * dt) <= dt + 1e-12);
  CHECK(f.flow(199) == f.flow(198));
}

TEST_CASE("volume-flow pairing") {
  SUBCASE("strictly increasing volume is paired sample by sample") {
    TimeVolumeCurve v{vec({0, 0.5, 1.5, 2.0})};
    TimeFlowCurve q{vec({50, 100, 50, 50})};
    const VolumeFlowCurve c = volume_flow_curve(v, q);
    CHECK(c.volume == v.volume);
    CHECK(c.flow == q.flow);
  }
  SUBCASE("plateaus keep the first sample") {
    const VolumeFlowCurve c = volume_flow_curve({vec({0, 1, 1, 2})}, {vec({1, 0, 0, 1})});
    CHECK(c.volume == vec({0, 1, 2}));
    CHECK(c.flow == vec({1, 0, 1}));
  }
  SUBCASE("two points stay two points") {
    const VolumeFlowCurve c = volume_flow_curve({vec({0, 1})}, {vec({100, 100})});
    CHECK(c.size() == 2);
  }
  SUBCASE("decreasing volume throws") {
    CHECK_THROWS_AS(volume_flow_curve({vec({0, 1, 0.5})}, {vec({1, 1, 1})}), NonMonotonicVolume);
  }
  SUBCASE("tiny decreases are absorbed") {
    const VolumeFlowCurve c = volume_flow_curve({vec({0, 1, 1 - 1e-12, 2})}, {vec({1, 2, 3, 4})});
    CHECK(c.size() == 3);
  }
  SUBCASE("length mismatch throws") {
    CHECK_THROWS_AS(volume_flow_curve({vec({0, 1, 2})}, {vec({1, 1})}), InvalidCurve);
  }
}

TEST_CASE("volume-flow output volumes never decrease") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> step(0.0, 0.05);
  std::bernoulli_distribution hold(0.3);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd v(80);
    v(0) = 0.0;
    for (Eigen::Index i = 1; i < 80; ++i) v(i) = v(i - 1) + (hold(rng) ? 0.0 : step(rng));
    const VolumeFlowCurve c = build_volume_flow({v});
    for (Eigen::Index i = 1; i < c.volume.size(); ++i) CHECK(c.volume(i) >= c.volume(i - 1));
  }
}

TEST_CASE("resampling") {
  SUBCASE("onto the curve's own uniform grid is the identity") {
    VolumeFlowCurve c{vec({0, 1, 2, 3}), vec({4, 7, 1, 0})};
    const VolumeFlowCurve r = resample_on_volume_grid(c, 4);
    CHECK((r.volume - c.volume).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((r.flow - c.flow).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("a linear segment stays on the segment") {
    VolumeFlowCurve c{vec({0, 4}), vec({8, 0})};
    for (int n : {2, 7, 101}) {
      const VolumeFlowCurve r = resample_on_volume_grid(c, n);
      for (Eigen::Index i = 0; i < n; ++i) CHECK(r.flow(i) == doctest::Approx(8.0 - 2.0 * r.volume(i)).epsilon(1e-12));
    }
  }
  SUBCASE("midpoints average their neighbours") {
    VolumeFlowCurve c{vec({0, 1, 2}), vec({2, 6, 0})};
    const VolumeFlowCurve r = resample_on_volume_grid(c, 5);
    CHECK(r.flow(1) == doctest::Approx(4.0));
    CHECK(r.flow(3) == doctest::Approx(3.0));
  }
  SUBCASE("fewer than two points is rejected") {
    CHECK_THROWS_AS(resample_on_volume_grid({vec({0, 1}), vec({1, 1})}, 1), InvalidArgument);
  }
}

TEST_CASE("smoothing reduces flow total variation on noisy ramps") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> noise(0.0, 0.002);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd v(300);
    for (Eigen::Index i = 0; i < 300; ++i) v(i) = 0.1 + 0.02 * double(i) + noise(rng);
    const TimeVolumeCurve raw{v};
    const double before = total_variation(differentiate_flow(raw).flow);
    const double after = total_variation(differentiate_flow(gaussian_smooth(raw)).flow);
    CHECK(after < before);
  }
}

}  // TEST_SUITE
