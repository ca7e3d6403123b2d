#include "helpers.hpp"

#include "spiro/error.hpp"
#include "spiro/metrics.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>

using namespace spiro;

TEST_SUITE("metrics") {

TEST_CASE("auroc basics") {
  const std::vector<int> y{0, 0, 1, 1};
  CHECK(auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y) == 1.0);
  CHECK(auroc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y) == 0.5);
  CHECK_THROWS_AS(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), UndefinedMetric);
  CHECK_THROWS_AS(auroc(std::vector<double>{0.1}, y), ShapeError);
}

TEST_CASE("auroc on a mixed six-sample case") {
  const std::vector<double> s{0.9, 0.4, 0.4, 0.7, 0.2, 0.6};
  const std::vector<int> y{1, 0, 1, 0, 0, 1};
  CHECK(auroc(s, y) == doctest::Approx(test::all_pairs_auroc(s, y)).epsilon(1e-12));
  CHECK(auroc(s, y) == doctest::Approx(6.5 / 9.0).epsilon(1e-12));
}

TEST_CASE("auprc basics") {
  const std::vector<int> y{0, 1, 0, 1, 1};
  CHECK(auprc(std::vector<double>{0.1, 0.9, 0.2, 0.8, 0.7}, y) == 1.0);
  CHECK(auprc(std::vector<double>{0.3, 0.3, 0.3, 0.3, 0.3}, y) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK_THROWS_AS(auprc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0}), UndefinedMetric);
}

TEST_CASE("auprc on a six-sample case") {
  const std::vector<double> s{0.9, 0.4, 0.4, 0.7, 0.2, 0.6};
  const std::vector<int> y{1, 0, 1, 0, 0, 1};
  CHECK(auprc(s, y) == doctest::Approx(test::enumerated_auprc(s, y)).epsilon(1e-12));
}

TEST_CASE("f1 conventions") {
  const std::vector<int> y{1, 0, 1, 0};
  CHECK(f1_score(y, y) == 1.0);
  CHECK(f1_score(std::vector<int>{0, 0, 0, 0}, y) == 0.0);
  const std::vector<int> pred{1, 1, 1, 0, 0};
  const std::vector<int> truth{1, 1, 0, 1, 0};
  const ConfusionCounts c = confusion(pred, truth);
  CHECK(c.tp == 2);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
  CHECK(c.tn == 1);
  CHECK(f1_score(pred, truth) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("oracle agreement on random small sets") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> size(2, 12), level(0, 5);
  std::bernoulli_distribution coin(0.5);
  int checked = 0;
  while (checked < 200) {
    const int n = size(rng);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = level(rng) / 5.0;
      y[i] = coin(rng);
    }
    const int pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || pos == n) continue;
    CHECK(std::abs(auroc(s, y) - test::all_pairs_auroc(s, y)) <= 1e-12);
    CHECK(std::abs(auprc(s, y) - test::enumerated_auprc(s, y)) <= 1e-12);
    ++checked;
  }
}

TEST_CASE("auroc invariances") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> s(25), t(25), neg(25);
    std::vector<int> y(25);
    for (int i = 0; i < 25; ++i) {
      y[i] = i % 3 == 0;
      s[i] = z(rng) + y[i];
      t[i] = std::exp(3.0 * s[i]) + 1.0;
      neg[i] = -s[i];
    }
    CHECK(auroc(t, y) == doctest::Approx(auroc(s, y)).epsilon(1e-15));
    CHECK(auroc(s, y) + auroc(neg, y) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("auprc is at least the prevalence for rankings no worse than random") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> s(30);
    std::vector<int> y(30);
    for (int i = 0; i < 30; ++i) {
      y[i] = i % 4 == 0;
      s[i] = z(rng) + 1.5 * y[i];
    }
    if (auroc(s, y) < 0.5) continue;
    CHECK(auprc(s, y) >= 7.5 / 30.0 - 1e-12);
  }
}

TEST_CASE("stored fixture reproduces its reference triple") {
  std::ifstream in(std::string(SPIRO_FIXTURE_DIR) + "/metrics_fixture.json");
  REQUIRE(in.good());
  const nlohmann::json j = nlohmann::json::parse(in);
  const auto s = j["scores"].get<std::vector<double>>();
  const auto y = j["labels"].get<std::vector<int>>();
  const double threshold = j["threshold"].get<double>();
  std::vector<int> pred;
  for (double x : s) pred.push_back(x > threshold ? 1 : 0);
  CHECK(auroc(s, y) == doctest::Approx(j["auroc"].get<double>()).epsilon(1e-12));
  CHECK(auprc(s, y) == doctest::Approx(j["auprc"].get<double>()).epsilon(1e-12));
  CHECK(f1_score(pred, y) == doctest::Approx(j["f1"].get<double>()).epsilon(1e-12));
  const MetricSummary m = summarize(s, y, threshold);
  CHECK(m.n == s.size());
  CHECK(*m.auroc == doctest::Approx(j["auroc"].get<double>()).epsilon(1e-12));
}

TEST_CASE("medoids") {
  using V = Eigen::VectorXd;
  SUBCASE("single member") {
    const std::vector<V> c{test::vec({1, 2, 3})};
    CHECK(group_medoid(c, std::vector<int>{0}, 1) == std::vector<std::size_t>{0});
  }
  SUBCASE("two members tie to the lower index") {
    const std::vector<V> c{test::vec({0, 0}), test::vec({1, 1}), test::vec({5, 5})};
    CHECK(group_medoid(c, std::vector<int>{1, 0, 0}, 2) == std::vector<std::size_t>{1, 0});
  }
  SUBCASE("exhaustive search") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<V> c(5, V(6));
      for (auto& v : c)
        for (auto& x : v) x = z(rng);
      std::size_t best = 0;
      double best_cost = 1e300;
      for (std::size_t a = 0; a < 5; ++a) {
        double cost = 0.0;
        for (std::size_t b = 0; b < 5; ++b) cost += (c[a] - c[b]).cwiseAbs().sum();
        if (cost < best_cost) best_cost = cost, best = a;
      }
      CHECK(group_medoid(c, std::vector<int>(5, 0), 1)[0] == best);
    }
  }
  SUBCASE("empty group") {
    const std::vector<V> c{test::vec({1})};
    CHECK_THROWS_AS(group_medoid(c, std::vector<int>{0}, 2), EmptyGroup);
  }
}

TEST_CASE("subgroups") {
  CHECK(age_band(18) == "youth");
  CHECK(age_band(44.9) == "youth");
  CHECK(age_band(45) == "middle");
  CHECK(age_band(54) == "middle");
  CHECK(age_band(55) == "elderly");
  CHECK(parse_subgroup_axis("smoke") == SubgroupAxis::Smoke);
  CHECK_THROWS_AS(parse_subgroup_axis("height"), InvalidArgument);

  const std::vector<double> s{0.9, 0.2, 0.8, 0.3, 0.7, 0.1};
  const std::vector<int> y{1, 0, 1, 0, 0, 0};
  const std::vector<DemographicRecord> d{
      {Sex::Male, 50, Smoking::Current, 0.6}, {Sex::Male, 60, Smoking::Never, 0.8},
      {Sex::Female, 40, Smoking::Former, 0.6}, {Sex::Female, 70, Smoking::Never, 0.8},
      {Sex::Male, 65, Smoking::Never, 0.7},   {Sex::Female, 30, Smoking::Never, 0.9}};
  const auto by_sex = subgroup_metrics(s, y, d, SubgroupAxis::Sex, 0.5);
  REQUIRE(by_sex.size() == 2);
  CHECK(by_sex.at("male").n == 3);
  CHECK(*by_sex.at("male").auroc == doctest::Approx(1.0));
  const auto by_smoke = subgroup_metrics(s, y, d, SubgroupAxis::Smoke, 0.5);
  CHECK(!by_smoke.at("current").auroc.has_value());
}

}  // TEST_SUITE
