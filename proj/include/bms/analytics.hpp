#pragma once

#include <vector>

#include "bms/battery_model.hpp"
#include "bms/errors.hpp"

namespace bms {

struct HistogramBin {
    double x; // bin center
    long count;
};

// Fixed-width binning: value v lands in bin floor((v - origin) / bin_width),
// half-open on the right. Returns a contiguous run of bins from the lowest
// occupied to the highest, zero-count bins included.
std::vector<HistogramBin> histogram(const std::vector<double>& values, double bin_width = 0.01,
                                    double origin = 0.0);

struct CdfPoint {
    double x;
    double fraction; // share of values <= x; the last point is exactly 1
};

// Empirical distribution with duplicate values collapsed.
std::vector<CdfPoint> cdf(const std::vector<double>& values);

struct SeriesStats {
    long count;
    double mean;
    double stddev; // population convention (divide by count)
    double median; // even counts average the middle pair
    double mode;   // center of the most occupied histogram bin, ties to the lowest
};

// Throws EmptySeries on an empty input.
SeriesStats error_stats(const std::vector<double>& values, double bin_width = 0.01,
                        double origin = 0.0);

struct CompareRow {
    double t;
    double i;
    double y_a, y_b;   // terminal voltages of the two models
    double x1_a, x1_b; // their OCV states
};

struct CompareTrace {
    std::vector<CompareRow> rows;
    double max_dy = 0.0;   // max |y_a - y_b|
    double max_docv = 0.0; // max |x1_a - x1_b|
};

// Simulates model a under the given profile, then replays the recorded
// current sequence through model b sample for sample, so both models see the
// identical drive even when the profile itself is voltage-dependent.
CompareTrace compare_models(const ParameterSet& pa, const ParameterSet& pb,
                            const CapacityConfig& cap, const LoadProfile& profile, double t_end,
                            double dt, double z0 = 1.0, double z_floor = 0.07);

} // namespace bms
