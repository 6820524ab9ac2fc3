#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bms/analytics.hpp"
#include "bms/battery_model.hpp"
#include "bms/errors.hpp"
#include "bms/estimator.hpp"

namespace bms {

// Round-trip decimal form (17 significant digits); every writer below uses
// it so that written traces re-read bit-exactly.
std::string format_double(double v);

// Strict full-token parse. Throws ParseError on anything but one number.
double parse_double(const std::string& s);

// ------------------------------------------------------------------ CSV out

void write_sim_trace(const std::string& path, const SimTrace& trace);
void write_telemetry(const std::string& path, const std::vector<TelemetrySample>& rows);
void write_estimator_trace(const std::string& path, const std::vector<EstimatorTraceRow>& rows);
void write_parameters(const std::string& path, const ParameterSet& p);
void write_stats(const std::string& path, const SeriesStats& s);
void write_histogram(const std::string& path, const std::vector<HistogramBin>& bins);
void write_cdf(const std::string& path, const std::vector<CdfPoint>& pts);
void write_profile_csv(const std::string& path, const CurrentTable& tab);
void write_compare(const std::string& path, const CompareTrace& tr);
void write_metrics(const std::string& path,
                   const std::vector<std::pair<std::string, double>>& metrics);

// ------------------------------------------------------------------- CSV in

struct TelemetryReadResult {
    std::vector<TelemetrySample> samples;
    double dt = 0.0; // sample spacing; 0 when fewer than two samples
    bool resampled = false;
    std::vector<std::string> notes;
};

// Accepts any CSV whose header starts with t_s,i_A,y_V (extra columns are
// ignored, so simulation traces feed straight back in). Timestamps must
// increase strictly (NonMonotonicTime). Spacing jitter beyond 1e-6 s gets
// resampled onto a uniform grid at the median spacing with sample-and-hold,
// reported in `notes`. A header-only file is a valid empty stream.
TelemetryReadResult read_telemetry(const std::string& path);

// Reads a name,value parameter table (r1..r21). All 21 entries must be
// present exactly once. Values are taken as-is: estimator outputs are
// legitimate here and may carry residually negative closures.
ParameterSet read_parameters(const std::string& path);

// Breakpoint profile with header t_s,i_A, strictly increasing times.
CurrentTable read_profile_csv(const std::string& path);

// Reads one named column out of a CSV with a header row.
std::vector<double> read_csv_column(const std::string& path, const std::string& column);

// -------------------------------------------------------------- INI configs

struct ModelConfig {
    ParameterSet params;
    CapacityConfig cap;
    double dt = 0.01;
    double t_end = 0.0;
    double z0 = 1.0;
    double z_floor = 0.07;
    LoadProfile profile = ConstantCurrent{0.0};
};

// INI with sections [parameters] (r1..r21, all required, all > 0),
// [capacity], [simulation] (t_end required) and [profile]. Unknown sections
// or keys are rejected (ConfigRejected), as are malformed values
// (ParseError). A current_table profile names its breakpoint CSV via `path`,
// resolved relative to the config file.
ModelConfig read_model_config(const std::string& path);

// INI with sections [estimator] and [bounds]; bounds lines read
//   rN = r_u, r_l, lambda_x, lambda_y, r_init
// Structural validity is checked here (unknown keys, parse failures); the
// adaptation invariants are checked by validate_estimator_config.
EstimatorConfig read_estimator_config(const std::string& path);

// --------------------------------------------------------------- generation

// Deterministic piecewise-constant discharge profile: one uniform draw from
// [i_min, i_max] per hold window. Same seed, same table, bit for bit.
CurrentTable make_profile(std::uint64_t seed, double t_end = 1800.0, double hold = 60.0,
                          double i_min = 0.05, double i_max = 0.5);

} // namespace bms
