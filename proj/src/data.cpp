#include "spiro/data.hpp"

#include "spiro/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace spiro {
namespace {

constexpr double kPefFraction = 0.10;   // PEF at 10% of FVC
constexpr double kTailStart = 0.85;     // terminal tail starts at 85% of FVC
constexpr double kTailFlowRatio = 0.20; // flow at the tail start, relative to PEF
constexpr double kStopFlow = 0.05;      // L/s
constexpr int kMaxSamples = 1500;
constexpr std::array<double, 5> kPhaseEdges = {kPefFraction, 0.25, 0.50, 0.75, 1.0};

double bump(double x, double lo, double hi) {
  if (x < lo || x > hi) return 0.0;
  const double s = std::sin(std::numbers::pi * (x - lo) / (hi - lo));
  return s * s;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::size_t row, std::string_view what) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError(row, "bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(CohortClass c) {
  switch (c) {
    case CohortClass::Copd: return "COPD";
    case CohortClass::Within1Y: return "WITHIN_1Y";
    case CohortClass::Within2Y: return "WITHIN_2Y";
    case CohortClass::Within3Y: return "WITHIN_3Y";
    case CohortClass::Within4Y: return "WITHIN_4Y";
    case CohortClass::Year5Plus: return "YEAR_5_PLUS";
    case CohortClass::NonCopd: return "NON_COPD";
  }
  return "?";
}

std::optional<HorizonLabel> horizon_of(CohortClass c) {
  if (c == CohortClass::Copd) return std::nullopt;
  return kHorizons[static_cast<int>(c) - 1];
}

CohortSpec CohortSpec::standard(int n_per_class, double noise, std::uint64_t seed) {
  CohortSpec spec;
  spec.counts.fill(n_per_class);
  spec.noise = noise;
  spec.seed = seed;
  spec.templates = {{
      {4.0, 5.5, 0.75, 0.90, 0.00},  // COPD
      {4.0, 8.0, 1.00, 0.60, 0.00},  // within 1 year
      {4.0, 8.0, 1.25, 0.60, 0.00},
      {4.0, 8.0, 1.50, 0.60, 0.00},
      {4.0, 8.0, 1.75, 0.60, 0.00},
      {4.0, 8.0, 2.00, 0.40, 0.05},  // 5 years and beyond
      {4.0, 8.0, 3.00, 0.80, 0.30},  // non-COPD
  }};
  spec.demographics = {{
      {0.60, 0.45, 0.30, 50.0, 75.0},
      {0.58, 0.40, 0.30, 48.0, 72.0},
      {0.56, 0.35, 0.30, 46.0, 72.0},
      {0.54, 0.30, 0.30, 45.0, 70.0},
      {0.52, 0.25, 0.30, 44.0, 70.0},
      {0.50, 0.20, 0.30, 42.0, 68.0},
      {0.45, 0.10, 0.25, 40.0, 70.0},
  }};
  return spec;
}

CohortSpec CohortSpec::balanced(int n_total, double noise, std::uint64_t seed) {
  if (n_total < 1) throw InvalidSpec("cohort must contain at least one record");
  CohortSpec spec = standard(0, noise, seed);
  spec.counts[0] = n_total / 2;
  const int rest = n_total - spec.counts[0];
  for (int c = 1; c < kCohortClassCount; ++c) {
    spec.counts[c] = rest / (kCohortClassCount - 1) + (c <= rest % (kCohortClassCount - 1) ? 1 : 0);
  }
  return spec;
}

void CohortSpec::validate() const {
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw InvalidSpec("noise must be >= 0");
  if (total() < 1) throw InvalidSpec("cohort must contain at least one record");
  for (int c = 0; c < kCohortClassCount; ++c) {
    if (counts[c] < 0) throw InvalidSpec("class counts must be >= 0");
    const ClassTemplate& t = templates[c];
    if (!(t.fvc > 0.0) || !(t.pef > 0.0)) throw InvalidSpec("template FVC and PEF must be positive");
    if (t.collapse_position < 0.0 || t.collapse_position > 3.0) throw InvalidSpec("collapse position must be in [0, 3]");
    if (t.collapse_depth < 0.0 || t.collapse_depth >= 1.0) throw InvalidSpec("collapse depth must be in [0, 1)");
    if (t.fullness < 0.0 || t.fullness > 1.0) throw InvalidSpec("fullness must be in [0, 1]");
    const DemographicRates& d = demographics[c];
    for (double rate : {d.male_fraction, d.current_smoker, d.former_smoker}) {
      if (rate < 0.0 || rate > 1.0) throw InvalidSpec("rates must be in [0, 1]");
    }
    if (d.current_smoker + d.former_smoker > 1.0) throw InvalidSpec("smoking rates exceed 1");
    if (!(d.age_min > 0.0) || d.age_max < d.age_min) throw InvalidSpec("invalid age range");
  }
}

int CohortSpec::total() const {
  int n = 0;
  for (int c : counts) n += c;
  return n;
}

nlohmann::json to_json(const CohortSpec& spec) {
  nlohmann::json classes = nlohmann::json::array();
  for (int c = 0; c < kCohortClassCount; ++c) {
    const ClassTemplate& t = spec.templates[c];
    const DemographicRates& d = spec.demographics[c];
    classes.push_back({{"class", std::string(to_string(static_cast<CohortClass>(c)))},
                       {"n", spec.counts[c]},
                       {"template",
                        {{"fvc", t.fvc},
                         {"pef", t.pef},
                         {"collapse_position", t.collapse_position},
                         {"collapse_depth", t.collapse_depth},
                         {"fullness", t.fullness}}},
                       {"demographics",
                        {{"male_fraction", d.male_fraction},
                         {"current_smoker", d.current_smoker},
                         {"former_smoker", d.former_smoker},
                         {"age_min", d.age_min},
                         {"age_max", d.age_max}}}});
  }
  return {{"noise", spec.noise}, {"seed", spec.seed}, {"classes", classes}};
}

double template_flow(const ClassTemplate& t, double volume) {
  const double x = volume / t.fvc;
  if (x < kPefFraction) {
    return t.pef * (0.3 + 0.7 * std::sin(0.5 * std::numbers::pi * x / kPefFraction));
  }
  double base;
  if (x < kTailStart) {
    base = t.pef * (1.0 - (1.0 - kTailFlowRatio) * (x - kPefFraction) / (kTailStart - kPefFraction));
  } else {
    base = t.pef * kTailFlowRatio * std::max(0.0, 1.0 - x) / (1.0 - kTailStart);
  }
  double shape = 1.0;
  for (int j = 0; j < 4; ++j) {
    const double share = std::max(0.0, 1.0 - std::abs(t.collapse_position - j));
    shape -= t.collapse_depth * share * bump(x, kPhaseEdges[j], kPhaseEdges[j + 1]);
    if (j < 2) shape += t.fullness * bump(x, kPhaseEdges[j], kPhaseEdges[j + 1]);
  }
  return base * shape;
}

TimeVolumeCurve simulate_exhalation(const ClassTemplate& t, const std::vector<double>& jitter) {
  std::vector<double> v{0.0};
  while (static_cast<int>(v.size()) < kMaxSamples) {
    const double q = template_flow(t, v.back());
    if (q < kStopFlow) break;
    const std::size_t i = v.size() - 1;
    const double scale = i < jitter.size() ? jitter[i] : 1.0;
    v.push_back(v.back() + std::max(q * scale, 0.0) * kDefaultSampleInterval);
  }
  if (v.size() < 2) v.push_back(v.back());
  TimeVolumeCurve curve;
  curve.volume = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  curve.dt = kDefaultSampleInterval;
  return curve;
}

std::vector<CohortRecord> generate_synthetic_cohort(const CohortSpec& spec) {
  spec.validate();
  std::vector<CohortRecord> records;
  records.reserve(spec.total());
  for (int c = 0; c < kCohortClassCount; ++c) {
    const auto cls = static_cast<CohortClass>(c);
    for (int i = 0; i < spec.counts[c]; ++i) {
      std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                        static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(i)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::uniform_real_distribution<double> unit(0.0, 1.0);

      ClassTemplate t = spec.templates[c];
      const double s = spec.noise;
      t.fvc *= 1.0 + 0.5 * s * normal(rng);
      t.pef *= 1.0 + 0.5 * s * normal(rng);
      t.collapse_depth = std::clamp(t.collapse_depth * (1.0 + s * normal(rng)), 0.0, 0.95);
      t.collapse_position = std::clamp(t.collapse_position + 0.5 * s * normal(rng), 0.0, 3.0);
      t.fullness = std::clamp(t.fullness * (1.0 + s * normal(rng)), 0.0, 1.0);
      t.fvc = std::max(t.fvc, 0.5);
      t.pef = std::max(t.pef, 0.5);

      std::vector<double> jitter(kMaxSamples);
      for (double& j : jitter) j = 1.0 + 0.3 * s * normal(rng);

      CohortRecord r;
      char id[32];
      std::snprintf(id, sizeof(id), "S%d-%05d", c, i);
      r.id = id;
      r.cohort_class = cls;
      r.curve = simulate_exhalation(t, jitter);
      r.copd = cls == CohortClass::Copd ? 1 : 0;
      r.horizon = horizon_of(cls);

      const DemographicRates& d = spec.demographics[c];
      r.demographics.sex = unit(rng) < d.male_fraction ? Sex::Male : Sex::Female;
      r.demographics.age = std::round(d.age_min + (d.age_max - d.age_min) * unit(rng));
      const double u = unit(rng);
      r.demographics.smoking = u < d.current_smoker                      ? Smoking::Current
                               : u < d.current_smoker + d.former_smoker ? Smoking::Former
                                                                         : Smoking::Never;
      const Eigen::Index one_second = std::min<Eigen::Index>(100, r.curve.volume.size() - 1);
      const double fvc = r.curve.volume(r.curve.volume.size() - 1);
      r.demographics.fev1_fvc = fvc > 0.0 ? r.curve.volume(one_second) / fvc : 1.0;
      records.push_back(std::move(r));
    }
  }
  return records;
}

// ---------------------------------------------------------------------------

std::vector<CurveRecord> load_time_volume_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<CurveRecord> records;
  bool with_validity = false;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      if (row == 1) with_validity = text.find("validity") != std::string_view::npos;
      continue;
    }
    const auto fields = split(text);
    const std::size_t first_sample = with_validity ? 2 : 1;
    if (fields.front().empty()) throw ParseError(row, "missing id");
    if (fields.size() < first_sample + 2) throw ParseError(row, "a curve needs at least 2 samples");
    CurveRecord r;
    r.id = std::string(fields[0]);
    if (with_validity) r.validity = parse_number<int>(fields[1], row, "validity code");
    r.curve.dt = kDefaultSampleInterval;
    r.curve.volume.resize(static_cast<Eigen::Index>(fields.size() - first_sample));
    for (std::size_t f = first_sample; f < fields.size(); ++f) {
      const double ml = parse_number<double>(fields[f], row, "volume");
      if (!std::isfinite(ml)) throw ParseError(row, "non-finite volume");
      if (ml < 0.0) throw ValidationError("row " + std::to_string(row) + ": negative volume");
      r.curve.volume(static_cast<Eigen::Index>(f - first_sample)) = ml / 1000.0;
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_time_volume_csv(const std::filesystem::path& path, std::span<const CurveRecord> records,
                           bool with_validity) {
  std::ofstream out = open_out(path);
  out << (with_validity ? "#spiro-curves v1 validity\n" : "#spiro-curves v1\n");
  for (const CurveRecord& r : records) {
    out << r.id;
    if (with_validity) out << ',' << r.validity.value_or(0);
    for (Eigen::Index i = 0; i < r.curve.volume.size(); ++i) out << ',' << format_number(r.curve.volume(i) * 1000.0);
    out << '\n';
  }
}

std::vector<CurveRecord> select_first_valid_blows(std::span<const CurveRecord> records,
                                                  const std::set<int>& accepted) {
  std::vector<CurveRecord> out;
  std::set<std::string> seen;
  for (const CurveRecord& r : records) {
    if (r.validity && !accepted.count(*r.validity)) continue;
    if (seen.insert(r.id).second) out.push_back(r);
  }
  return out;
}

SpiroSummary summarize_curve(const TimeVolumeCurve& curve, const SmootherConfig& cfg) {
  curve.validate();
  SpiroSummary s;
  const Eigen::Index n = curve.volume.size();
  s.fvc = curve.volume(n - 1);
  const double at = 1.0 / curve.dt;
  const Eigen::Index lo = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(at)), n - 1);
  const Eigen::Index hi = std::min<Eigen::Index>(lo + 1, n - 1);
  const double frac = std::clamp(at - double(lo), 0.0, 1.0);
  s.fev1 = curve.volume(lo) + frac * (curve.volume(hi) - curve.volume(lo));
  s.pef = differentiate_flow(gaussian_smooth(curve, cfg)).flow.maxCoeff();
  return s;
}

std::vector<std::size_t> qc_filter(std::span<const SpiroSummary> records) {
  const std::size_t n = records.size();
  if (n == 0) return {};
  // Nearest-rank percentiles: P_p is the ceil(p * n)-th smallest value.
  const std::size_t low_rank = std::max<std::size_t>(1, (5 * n + 999) / 1000);
  const std::size_t high_rank = std::max<std::size_t>(1, (995 * n + 999) / 1000);
  std::vector<char> keep(n, 1);
  for (double SpiroSummary::*field : {&SpiroSummary::fvc, &SpiroSummary::fev1, &SpiroSummary::pef}) {
    std::vector<double> sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = records[i].*field;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted[low_rank - 1];
    const double hi = sorted[high_rank - 1];
    for (std::size_t i = 0; i < n; ++i) {
      const double v = records[i].*field;
      if (v < lo || v > hi) keep[i] = 0;
    }
  }
  std::vector<std::size_t> retained;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) retained.push_back(i);
  }
  return retained;
}

// ---------------------------------------------------------------------------

std::string_view to_string(CodeSource s) {
  switch (s) {
    case CodeSource::SelfReport: return "self_report";
    case CodeSource::Hospitalization: return "hospitalization";
    case CodeSource::PrimaryCare: return "primary_care";
  }
  return "?";
}

bool CodeRule::matches(std::string_view code) const {
  if (!pattern.empty() && pattern.back() == 'X') {
    const std::string_view prefix = std::string_view(pattern).substr(0, pattern.size() - 1);
    return code.substr(0, prefix.size()) == prefix && code.size() >= prefix.size();
  }
  return code == pattern;
}

LabelCodeTable LabelCodeTable::copd_default() {
  LabelCodeTable table;
  for (const char* code : {"1112", "1113", "1472"}) {
    table.rules.push_back({20002, code, CodeSource::SelfReport});
  }
  const std::array<const char*, 9> icd10 = {"J430", "J431", "J432", "J438", "439J",
                                            "J440", "J441", "J448", "J449"};
  for (const char* code : icd10) table.rules.push_back({41270, code, CodeSource::Hospitalization});
  for (const char* code : {"4920", "4928", "4929", "496X"}) {
    table.rules.push_back({41271, code, CodeSource::Hospitalization});
  }
  for (const char* code : icd10) table.rules.push_back({42040, code, CodeSource::PrimaryCare});
  return table;
}

bool LabelCodeTable::knows_field(int field) const {
  return std::any_of(rules.begin(), rules.end(), [field](const CodeRule& r) { return r.field == field; });
}

LabelResult derive_copd_label(std::span<const CodeRecord> records, const LabelCodeTable& table) {
  LabelResult out;
  for (const CodeRecord& rec : records) {
    if (!table.knows_field(rec.field)) {
      ++out.unknown_fields;
      continue;
    }
    for (const CodeRule& rule : table.rules) {
      if (rule.field != rec.field || !rule.matches(rec.code)) continue;
      out.label = 1;
      switch (rule.source) {
        case CodeSource::SelfReport: out.self_report = true; break;
        case CodeSource::Hospitalization: out.hospitalization = true; break;
        case CodeSource::PrimaryCare: out.primary_care = true; break;
      }
    }
  }
  return out;
}

std::vector<CodeRecord> load_codes_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<CodeRecord> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#' || text.starts_with("id,")) continue;
    const auto fields = split(text);
    if (fields.size() != 3) throw ParseError(row, "expected id,field,code");
    out.push_back({std::string(fields[0]), parse_number<int>(fields[1], row, "field id"),
                   std::string(fields[2])});
  }
  return out;
}

void write_codes_csv(const std::filesystem::path& path, std::span<const CodeRecord> records) {
  std::ofstream out = open_out(path);
  out << "#spiro-codes v1\nid,field,code\n";
  for (const CodeRecord& r : records) out << r.id << ',' << r.field << ',' << r.code << '\n';
}

// ---------------------------------------------------------------------------

void write_cohort(const std::filesystem::path& dir, const CohortSpec& spec,
                  std::span<const CohortRecord> records) {
  std::filesystem::create_directories(dir);
  std::vector<CurveRecord> curves;
  std::vector<CodeRecord> codes;
  std::ofstream demo = open_out(dir / "demographics.csv");
  demo << "#spiro-demographics v1\nid,sex,age,smoking,fev1_fvc,horizon\n";
  std::array<int, kCohortClassCount> counts{};
  std::size_t copd_seen = 0;
  for (const CohortRecord& r : records) {
    curves.push_back({r.id, std::nullopt, r.curve});
    ++counts[static_cast<int>(r.cohort_class)];
    demo << r.id << ',' << to_string(r.demographics.sex) << ',' << format_number(r.demographics.age)
         << ',' << to_string(r.demographics.smoking) << ','
         << format_number(r.demographics.fev1_fvc) << ','
         << (r.horizon ? to_string(*r.horizon) : std::string_view("NA")) << '\n';
    if (r.copd) {
      // Rotate through the three label sources so every path is exercised.
      switch (copd_seen++ % 4) {
        case 0: codes.push_back({r.id, 20002, "1112"}); break;
        case 1: codes.push_back({r.id, 41270, "J449"}); break;
        case 2: codes.push_back({r.id, 41271, "4961"}); break;
        default: codes.push_back({r.id, 42040, "J440"}); break;
      }
    } else {
      codes.push_back({r.id, 20002, "1065"});
    }
  }
  write_time_volume_csv(dir / "curves.csv", curves);
  write_codes_csv(dir / "codes.csv", codes);

  nlohmann::json count_json = nlohmann::json::object();
  for (int c = 0; c < kCohortClassCount; ++c) {
    count_json[std::string(to_string(static_cast<CohortClass>(c)))] = counts[c];
  }
  const nlohmann::json manifest = {{"seed", spec.seed}, {"spec", to_json(spec)}, {"counts", count_json}};
  open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
}

std::vector<LoadedRecord> read_cohort(const std::filesystem::path& dir) {
  const std::vector<CurveRecord> curves = select_first_valid_blows(load_time_volume_csv(dir / "curves.csv"));

  std::map<std::string, std::pair<DemographicRecord, std::optional<HorizonLabel>>> demo;
  {
    std::ifstream in = open_in(dir / "demographics.csv");
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      const std::string_view text = trim(line);
      if (text.empty() || text.front() == '#' || text.starts_with("id,")) continue;
      const auto f = split(text);
      if (f.size() != 6) throw ParseError(row, "expected id,sex,age,smoking,fev1_fvc,horizon");
      DemographicRecord d;
      d.sex = parse_sex(f[1]);
      d.age = parse_number<double>(f[2], row, "age");
      d.smoking = parse_smoking(f[3]);
      d.fev1_fvc = parse_number<double>(f[4], row, "FEV1/FVC");
      d.validate();
      std::optional<HorizonLabel> h;
      if (f[5] != "NA") h = parse_horizon(f[5]);
      demo[std::string(f[0])] = {d, h};
    }
  }

  std::map<std::string, std::vector<CodeRecord>> codes;
  if (std::filesystem::exists(dir / "codes.csv")) {
    for (CodeRecord& c : load_codes_csv(dir / "codes.csv")) codes[c.id].push_back(std::move(c));
  }
  const LabelCodeTable table = LabelCodeTable::copd_default();

  std::vector<LoadedRecord> out;
  for (const CurveRecord& c : curves) {
    const auto it = demo.find(c.id);
    if (it == demo.end()) throw ValidationError("no demographics for id " + c.id);
    LoadedRecord r;
    r.id = c.id;
    r.curve = c.curve;
    r.demographics = it->second.first;
    r.horizon = it->second.second;
    r.label = derive_copd_label(codes[c.id], table);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace spiro
