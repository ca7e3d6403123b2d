#include "spiro/data.hpp"
#include "spiro/error.hpp"
#include "spiro/phase.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace spiro;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(SPIRO_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Nearest-rank percentile band computed independently by sorting.
std::vector<std::size_t> sorted_band_oracle(const std::vector<SpiroSummary>& s) {
  const std::size_t n = s.size();
  auto band = [&](auto get) {
    std::vector<double> v;
    for (const auto& r : s) v.push_back(get(r));
    std::sort(v.begin(), v.end());
    const auto rank = [&](double p) {
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(p * double(n) - 1e-9)));
    };
    return std::pair{v[rank(0.005) - 1], v[rank(0.995) - 1]};
  };
  const auto fvc = band([](const SpiroSummary& r) { return r.fvc; });
  const auto fev1 = band([](const SpiroSummary& r) { return r.fev1; });
  const auto pef = band([](const SpiroSummary& r) { return r.pef; });
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    const auto in = [](double x, std::pair<double, double> b) { return x >= b.first && x <= b.second; };
    if (in(s[i].fvc, fvc) && in(s[i].fev1, fev1) && in(s[i].pef, pef)) keep.push_back(i);
  }
  return keep;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("noise-free records reproduce their template") {
  const CohortSpec spec = CohortSpec::standard(3, 0.0, 5);
  const auto records = generate_synthetic_cohort(spec);
  REQUIRE(records.size() == 21);
  for (const CohortRecord& r : records) {
    const TimeVolumeCurve t = simulate_exhalation(spec.templates[static_cast<int>(r.cohort_class)], {});
    CHECK(r.curve.volume == t.volume);
  }
}

TEST_CASE("generation is deterministic and seed dependent") {
  const auto a = generate_synthetic_cohort(CohortSpec::standard(4, 0.1, 9));
  const auto b = generate_synthetic_cohort(CohortSpec::standard(4, 0.1, 9));
  const auto c = generate_synthetic_cohort(CohortSpec::standard(4, 0.1, 10));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].curve.volume == b[i].curve.volume);
    CHECK(a[i].demographics.age == b[i].demographics.age);
  }
  CHECK(a[0].curve.volume != c[0].curve.volume);
}

TEST_CASE("seeded cohort files are byte identical") {
  const CohortSpec spec = CohortSpec::balanced(30, 0.1, 4);
  const auto records = generate_synthetic_cohort(spec);
  const fs::path a = scratch("cohort_a"), b = scratch("cohort_b");
  write_cohort(a, spec, records);
  write_cohort(b, spec, generate_synthetic_cohort(spec));
  for (const char* f : {"curves.csv", "demographics.csv", "codes.csv", "manifest.json"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("synthetic curves are valid for every seed in the matrix") {
  for (std::uint64_t seed : {0ull, 1ull, 2ull, 77ull, 12345ull}) {
    for (double noise : {0.0, 0.1, 0.3}) {
      for (const CohortRecord& r : generate_synthetic_cohort(CohortSpec::standard(3, noise, seed))) {
        CHECK_NOTHROW(r.curve.validate());
        for (Eigen::Index i = 1; i < r.curve.volume.size(); ++i) CHECK(r.curve.volume(i) >= r.curve.volume(i - 1));
        CHECK_NOTHROW(r.demographics.validate());
      }
    }
  }
}

TEST_CASE("mean trend falls along the ladder at noise 0.1") {
  const auto records = generate_synthetic_cohort(CohortSpec::standard(30, 0.1, 3));
  std::array<double, kCohortClassCount> mean{};
  for (const CohortRecord& r : records) {
    mean[static_cast<int>(r.cohort_class)] += concavity_features(build_volume_flow(r.curve)).trend / 30.0;
  }
  for (int c = 2; c < kCohortClassCount; ++c) CHECK(mean[c] < mean[c - 1]);
}

TEST_CASE("balanced split") {
  const CohortSpec s = CohortSpec::balanced(400, 0.1, 0);
  CHECK(s.total() == 400);
  CHECK(s.counts[0] == 200);
  CHECK(s.counts[1] == 34);
  CHECK(s.counts[6] == 33);
}

TEST_CASE("spec validation") {
  CohortSpec s = CohortSpec::standard(2, 0.1, 0);
  s.noise = -1;
  CHECK_THROWS_AS(s.validate(), InvalidSpec);
  s = CohortSpec::standard(0, 0.1, 0);
  CHECK_THROWS_AS(s.validate(), InvalidSpec);
  s = CohortSpec::standard(2, 0.1, 0);
  s.templates[3].collapse_depth = 1.5;
  CHECK_THROWS_AS(generate_synthetic_cohort(s), InvalidSpec);
}

TEST_CASE("curve csv parsing") {
  const fs::path dir = scratch("csv");
  SUBCASE("milliliters become liters") {
    write(dir / "c.csv", "p1, 0,300,600\n");
    const auto r = load_time_volume_csv(dir / "c.csv");
    REQUIRE(r.size() == 1);
    CHECK(r[0].id == "p1");
    CHECK(r[0].curve.volume.size() == 3);
    CHECK(r[0].curve.volume(1) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(r[0].curve.volume(2) == doctest::Approx(0.6).epsilon(1e-15));
  }
  SUBCASE("empty file") {
    write(dir / "e.csv", "");
    CHECK(load_time_volume_csv(dir / "e.csv").empty());
  }
  SUBCASE("errors carry the row") {
    write(dir / "bad.csv", "p1,0,10,20\np2,0,abc,30\n");
    try {
      load_time_volume_csv(dir / "bad.csv");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 2);
    }
    write(dir / "neg.csv", "p1,0,-10,20\n");
    CHECK_THROWS_AS(load_time_volume_csv(dir / "neg.csv"), ValidationError);
    write(dir / "short.csv", "p1,0\n");
    CHECK_THROWS_AS(load_time_volume_csv(dir / "short.csv"), ParseError);
  }
  SUBCASE("round trip") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> step(0.0, 0.05);
    std::vector<CurveRecord> records;
    for (int i = 0; i < 10; ++i) {
      CurveRecord r;
      r.id = "r" + std::to_string(i);
      r.validity = i % 3 == 0 ? 32 : 0;
      r.curve.volume.resize(50);
      r.curve.volume(0) = 0.0;
      for (Eigen::Index t = 1; t < 50; ++t) r.curve.volume(t) = r.curve.volume(t - 1) + step(rng);
      records.push_back(r);
    }
    write_time_volume_csv(dir / "rt.csv", records, true);
    const auto back = load_time_volume_csv(dir / "rt.csv");
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].id == records[i].id);
      CHECK(back[i].validity == records[i].validity);
      CHECK((back[i].curve.volume - records[i].curve.volume).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("first valid blow per participant") {
  auto rec = [](std::string id, std::optional<int> v, double last) {
    CurveRecord r;
    r.id = std::move(id);
    r.validity = v;
    r.curve.volume = Eigen::Vector2d(0.0, last);
    return r;
  };
  const std::vector<CurveRecord> in{rec("a", 5, 1.0), rec("a", 32, 2.0), rec("a", 0, 3.0),
                                    rec("b", 0, 4.0), rec("c", std::nullopt, 5.0), rec("d", 7, 6.0)};
  const auto out = select_first_valid_blows(in);
  REQUIRE(out.size() == 3);
  CHECK(out[0].curve.volume(1) == 2.0);
  CHECK(out[1].id == "b");
  CHECK(out[2].id == "c");
}

TEST_CASE("quality control") {
  SUBCASE("an extreme FEV1 among 1000 is dropped") {
    std::vector<SpiroSummary> s;
    for (int i = 0; i < 1000; ++i) s.push_back({4.0 + 0.001 * (i % 7), 3.0 + 0.001 * i, 8.0});
    const auto keep = qc_filter(s);
    CHECK(std::find(keep.begin(), keep.end(), std::size_t{999}) == keep.end());
  }
  SUBCASE("identical summaries are all kept") {
    const std::vector<SpiroSummary> s(50, SpiroSummary{4, 3, 8});
    CHECK(qc_filter(s).size() == 50);
  }
  SUBCASE("agrees with a sort-based oracle and stays under three percent") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n : {1, 7, 150, 999, 1000, 2345}) {
      std::vector<SpiroSummary> s;
      for (int i = 0; i < n; ++i) s.push_back({u(rng), u(rng), u(rng)});
      const auto keep = qc_filter(s);
      CHECK(keep == sorted_band_oracle(s));
      CHECK(double(n - keep.size()) <= 0.03 * n + 1e-9);
    }
  }
  SUBCASE("summary of a simple curve") {
    TimeVolumeCurve c;
    c.volume = Eigen::VectorXd::LinSpaced(301, 0.0, 3.0);
    const SpiroSummary s = summarize_curve(c);
    CHECK(s.fvc == 3.0);
    CHECK(s.fev1 == doctest::Approx(1.0));
    CHECK(s.pef == doctest::Approx(1.0));
  }
}

TEST_CASE("labels from code records") {
  const LabelCodeTable table = LabelCodeTable::copd_default();
  SUBCASE("self-report") {
    const std::vector<CodeRecord> r{{"p", 20002, "1112"}};
    const LabelResult l = derive_copd_label(r, table);
    CHECK(l.label == 1);
    CHECK(l.self_report);
    CHECK_FALSE(l.hospitalization);
  }
  SUBCASE("nothing matches") {
    const std::vector<CodeRecord> r{{"p", 20002, "1065"}, {"p", 41270, "I10"}};
    CHECK(derive_copd_label(r, table).label == 0);
  }
  SUBCASE("prefix wildcard") {
    const std::vector<CodeRecord> r{{"p", 41271, "4961"}};
    const LabelResult l = derive_copd_label(r, table);
    CHECK(l.label == 1);
    CHECK(l.hospitalization);
    CHECK(derive_copd_label(std::vector<CodeRecord>{{"p", 41271, "4971"}}, table).label == 0);
  }
  SUBCASE("primary care and unknown fields") {
    const std::vector<CodeRecord> r{{"p", 42040, "J440"}, {"p", 99999, "J440"}};
    const LabelResult l = derive_copd_label(r, table);
    CHECK(l.primary_care);
    CHECK(l.unknown_fields == 1);
  }
  SUBCASE("adding records never clears a positive label") {
    std::mt19937_64 rng(8);
    const std::vector<CodeRecord> pool{{"p", 20002, "1113"}, {"p", 20002, "1065"}, {"p", 41270, "J449"},
                                       {"p", 41271, "4929"}, {"p", 42040, "J10"},  {"p", 41270, "K21"}};
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<CodeRecord> r;
      int prev = 0;
      for (int step = 0; step < 6; ++step) {
        r.push_back(pool[pick(rng)]);
        const int now = derive_copd_label(r, table).label;
        CHECK(now >= prev);
        prev = now;
      }
    }
  }
}

TEST_CASE("cohort directory round trip") {
  const CohortSpec spec = CohortSpec::balanced(28, 0.1, 12);
  const auto records = generate_synthetic_cohort(spec);
  const fs::path dir = scratch("cohort_rt");
  write_cohort(dir, spec, records);
  const auto loaded = read_cohort(dir);
  REQUIRE(loaded.size() == records.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == records[i].id);
    CHECK(loaded[i].label.label == records[i].copd);
    CHECK(loaded[i].horizon == records[i].horizon);
    CHECK(loaded[i].demographics.age == records[i].demographics.age);
    CHECK(loaded[i].demographics.fev1_fvc == records[i].demographics.fev1_fvc);
    CHECK((loaded[i].curve.volume - records[i].curve.volume).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const nlohmann::json m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["seed"] == 12);
  CHECK(m["counts"]["COPD"] == 14);
}

}  // TEST_SUITE
