#include "bms/analytics.hpp"

#include <algorithm>
#include <cmath>

namespace bms {

namespace {

long bin_index(double v, double bin_width, double origin) {
    return static_cast<long>(std::floor((v - origin) / bin_width));
}

} // namespace

std::vector<HistogramBin> histogram(const std::vector<double>& values, double bin_width,
                                    double origin) {
    if (values.empty())
        throw EmptySeries("histogram: empty series");
    if (!(bin_width > 0.0))
        throw DomainError("histogram: bin width must be > 0");

    long lo = bin_index(values.front(), bin_width, origin);
    long hi = lo;
    for (double v : values) {
        const long b = bin_index(v, bin_width, origin);
        lo = std::min(lo, b);
        hi = std::max(hi, b);
    }
    std::vector<HistogramBin> bins;
    bins.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (long b = lo; b <= hi; ++b)
        bins.push_back({origin + (static_cast<double>(b) + 0.5) * bin_width, 0});
    for (double v : values)
        ++bins[static_cast<std::size_t>(bin_index(v, bin_width, origin) - lo)].count;
    return bins;
}

std::vector<CdfPoint> cdf(const std::vector<double>& values) {
    if (values.empty())
        throw EmptySeries("cdf: empty series");
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    std::vector<CdfPoint> out;
    const auto n = static_cast<double>(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (j + 1 < v.size() && v[j + 1] == v[j])
            continue; // collapse duplicates onto the last occurrence
        out.push_back({v[j], static_cast<double>(j + 1) / n});
    }
    return out;
}

SeriesStats error_stats(const std::vector<double>& values, double bin_width, double origin) {
    if (values.empty())
        throw EmptySeries("error_stats: empty series");

    SeriesStats s{};
    s.count = static_cast<long>(values.size());
    double sum = 0.0;
    for (double v : values)
        sum += v;
    s.mean = sum / static_cast<double>(s.count);

    double ss = 0.0;
    for (double v : values) {
        const double d = v - s.mean;
        ss += d * d;
    }
    s.stddev = std::sqrt(ss / static_cast<double>(s.count));

    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    s.median = v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);

    const auto bins = histogram(values, bin_width, origin);
    long best = -1;
    for (const auto& b : bins) {
        if (b.count > best) {
            best = b.count;
            s.mode = b.x;
        }
    }
    return s;
}

CompareTrace compare_models(const ParameterSet& pa, const ParameterSet& pb,
                            const CapacityConfig& cap, const LoadProfile& profile, double t_end,
                            double dt, double z0, double z_floor) {
    const SimTrace ta = simulate(pa, cap, profile, t_end, dt, z0, z_floor);

    CurrentTable replay;
    replay.points.reserve(ta.rows.size());
    for (const auto& r : ta.rows)
        replay.points.push_back({r.t, r.i});
    const SimTrace tb = simulate(pb, cap, LoadProfile{replay}, ta.rows.back().t, dt, z0, z_floor);

    CompareTrace out;
    const std::size_t n = std::min(ta.rows.size(), tb.rows.size());
    out.rows.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        const SimRow& a = ta.rows[j];
        const SimRow& b = tb.rows[j];
        out.rows.push_back({a.t, a.i, a.y, b.y, a.x1, b.x1});
        out.max_dy = std::max(out.max_dy, std::abs(a.y - b.y));
        out.max_docv = std::max(out.max_docv, std::abs(a.x1 - b.x1));
    }
    return out;
}

} // namespace bms
