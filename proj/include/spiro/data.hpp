#pragma once

#include "spiro/curve.hpp"
#include "spiro/fusion.hpp"
#include "spiro/predict.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spiro {

// ---------------------------------------------------------------------------
// Synthetic cohorts

/// Severity ladder, most severe first. Copd is a current diagnosis; the other
/// classes are undiagnosed individuals with a known onset horizon.
enum class CohortClass { Copd, Within1Y, Within2Y, Within3Y, Within4Y, Year5Plus, NonCopd };

inline constexpr int kCohortClassCount = 7;

std::string_view to_string(CohortClass c);
std::optional<HorizonLabel> horizon_of(CohortClass c);

/// Shape of a class's noiseless volume-flow curve. The descending limb is a
/// straight decay from PEF with a slow terminal tail; a sag ("collapse") of
/// relative depth `collapse_depth` is centred on phase `collapse_position`
/// (0 = PEF~FEF25 ... 3 = FEF75+, fractional values split between neighbours),
/// and `fullness` bulges the two early phases above their chords.
struct ClassTemplate {
  double fvc = 4.0;  // liters
  double pef = 8.0;  // liters/second
  double collapse_position = 3.0;
  double collapse_depth = 0.5;
  double fullness = 0.0;
};

struct DemographicRates {
  double male_fraction = 0.5;
  double current_smoker = 0.1;
  double former_smoker = 0.2;
  double age_min = 40.0;
  double age_max = 70.0;
};

struct CohortSpec {
  std::array<int, kCohortClassCount> counts{};
  std::array<ClassTemplate, kCohortClassCount> templates{};
  std::array<DemographicRates, kCohortClassCount> demographics{};
  double noise = 0.1;
  std::uint64_t seed = 0;

  /// The default seven-class ladder with `n_per_class` records per class.
  static CohortSpec standard(int n_per_class, double noise, std::uint64_t seed);

  /// The standard ladder with `n_total` records: half COPD, the rest split
  /// evenly over the six horizon classes (earlier horizons take the remainder).
  static CohortSpec balanced(int n_total, double noise, std::uint64_t seed);

  /// Throws InvalidSpec.
  void validate() const;
  int total() const;
};

nlohmann::json to_json(const CohortSpec& spec);

struct CohortRecord {
  std::string id;
  CohortClass cohort_class = CohortClass::NonCopd;
  TimeVolumeCurve curve;
  DemographicRecord demographics;
  int copd = 0;
  std::optional<HorizonLabel> horizon;
};

/// Noiseless flow (L/s) of a template at exhaled volume `volume`.
double template_flow(const ClassTemplate& t, double volume);

/// Integrates the template flow at the standard sampling interval until the
/// flow falls below 0.05 L/s. `jitter` draws multiply each sample's flow.
TimeVolumeCurve simulate_exhalation(const ClassTemplate& t, const std::vector<double>& jitter);

/// Deterministic for a fixed spec; each record draws from its own stream
/// derived from (seed, class, index).
std::vector<CohortRecord> generate_synthetic_cohort(const CohortSpec& spec);

// ---------------------------------------------------------------------------
// Measurement files

struct CurveRecord {
  std::string id;
  std::optional<int> validity;
  TimeVolumeCurve curve;
};

/// Rows are `id, ml, ml, ...` sampled every 10 ms. An optional first line
/// `#spiro-curves v1 validity` adds a validity-code column after the id.
/// Volumes are converted to liters. Throws ParseError (with the 1-based line)
/// or ValidationError for negative volumes.
std::vector<CurveRecord> load_time_volume_csv(const std::filesystem::path& path);

void write_time_volume_csv(const std::filesystem::path& path, std::span<const CurveRecord> records,
                           bool with_validity = false);

/// First record per id whose validity code is accepted; records without a
/// code are treated as valid. Order of first appearance is kept.
std::vector<CurveRecord> select_first_valid_blows(std::span<const CurveRecord> records,
                                                  const std::set<int>& accepted = {0, 32});

struct SpiroSummary {
  double fvc = 0.0;   // liters
  double fev1 = 0.0;  // liters
  double pef = 0.0;   // liters/second
};

SpiroSummary summarize_curve(const TimeVolumeCurve& curve, const SmootherConfig& cfg = {});

/// Indices of records whose FVC, FEV1 and PEF all lie within the nearest-rank
/// 0.5th..99.5th percentile band of their own distribution.
std::vector<std::size_t> qc_filter(std::span<const SpiroSummary> records);

// ---------------------------------------------------------------------------
// Labels

enum class CodeSource { SelfReport, Hospitalization, PrimaryCare };

std::string_view to_string(CodeSource s);

struct CodeRule {
  int field = 0;
  std::string pattern;  // trailing 'X' matches any code with that prefix
  CodeSource source = CodeSource::SelfReport;

  bool matches(std::string_view code) const;
};

struct LabelCodeTable {
  std::vector<CodeRule> rules;

  static LabelCodeTable copd_default();
  bool knows_field(int field) const;
};

struct CodeRecord {
  std::string id;
  int field = 0;
  std::string code;
};

struct LabelResult {
  int label = 0;
  bool self_report = false;
  bool hospitalization = false;
  bool primary_care = false;
  int unknown_fields = 0;
};

LabelResult derive_copd_label(std::span<const CodeRecord> records, const LabelCodeTable& table);

std::vector<CodeRecord> load_codes_csv(const std::filesystem::path& path);
void write_codes_csv(const std::filesystem::path& path, std::span<const CodeRecord> records);

// ---------------------------------------------------------------------------
// Cohort directories: curves.csv, demographics.csv, codes.csv, manifest.json

struct LoadedRecord {
  std::string id;
  TimeVolumeCurve curve;
  DemographicRecord demographics;
  std::optional<HorizonLabel> horizon;
  LabelResult label;
};

void write_cohort(const std::filesystem::path& dir, const CohortSpec& spec,
                  std::span<const CohortRecord> records);

/// Records in curve-file order. Labels come from codes.csv via the default
/// COPD code table.
std::vector<LoadedRecord> read_cohort(const std::filesystem::path& dir);

}  // namespace spiro
