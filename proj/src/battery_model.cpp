#include "bms/battery_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bms/rk4.hpp"

namespace bms {

CircuitElements eval_circuit_elements(const ParameterSet& p, double z) {
    CircuitElements e{};
    e.eo = -p[1] * std::exp(-p[2] * z) + p[3] + p[4] * z - p[5] * z * z + p[6] * z * z * z;
    e.rts = p[7] * std::exp(-p[8] * z) + p[9];
    e.rtl = p[10] * std::exp(-p[11] * z) + p[12];
    e.cts = -p[13] * std::exp(-p[14] * z) + p[15];
    e.ctl = -p[16] * std::exp(-p[17] * z) + p[18];
    e.rs = p[19] * std::exp(-p[20] * z) + p[21];
    return e;
}

StateDeriv state_derivative(const ParameterSet& p, double cc, const BatteryState& s, double i) {
    const CircuitElements e = eval_circuit_elements(p, s.z);
    if (e.cts <= 0.0 || e.ctl <= 0.0) {
        std::ostringstream msg;
        msg << "state_derivative: capacitance law non-positive at z=" << s.z
            << " (cts=" << e.cts << ", ctl=" << e.ctl << ")";
        throw NonPositiveCapacitance(msg.str());
    }
    // chain rule through the OCV and series-resistance laws: both are pure
    // functions of z, and z moves at -i/cc
    const double slope =
        p[1] * p[2] * std::exp(-p[2] * s.z) + p[4] - 2.0 * p[5] * s.z + 3.0 * p[6] * s.z * s.z;
    StateDeriv d{};
    d.dz = -i / cc;
    d.dx1 = -slope * i / cc;
    d.dx2 = -s.x2 / (e.rts * e.cts) + i / e.cts;
    d.dx3 = -s.x3 / (e.rtl * e.ctl) + i / e.ctl;
    d.dx4 = p[19] * p[20] * std::exp(-p[20] * s.z) * i / cc;
    return d;
}

StateDeriv state_derivative(const ParameterSet& p, const CapacityConfig& cap,
                            const BatteryState& s, double i) {
    return state_derivative(p, cap.cc(), s, i);
}

BatteryState make_initial_battery_state(const ParameterSet& p, double z0) {
    const CircuitElements e = eval_circuit_elements(p, z0);
    BatteryState s{};
    s.t = 0.0;
    s.z = z0;
    s.x1 = e.eo;
    s.x2 = 0.0;
    s.x3 = 0.0;
    s.x4 = std::max(0.0, e.rs);
    return s;
}

double terminal_voltage(const BatteryState& s, double i) {
    return s.x1 - s.x2 - s.x3 - i * s.x4;
}

BatteryState step(const ParameterSet& p, const CapacityConfig& cap, const BatteryState& s,
                  double i, double dt) {
    const double cc = cap.cc();
    const auto f = [&](const std::array<double, 5>& v) {
        const BatteryState sv{s.t, v[0], v[1], v[2], v[3], v[4]};
        const StateDeriv d = state_derivative(p, cc, sv, i);
        return std::array<double, 5>{d.dz, d.dx1, d.dx2, d.dx3, d.dx4};
    };
    const auto next = rk4_step(f, std::array<double, 5>{s.z, s.x1, s.x2, s.x3, s.x4}, dt);
    BatteryState out{};
    out.t = s.t + dt;
    out.z = std::clamp(next[0], 0.0, 1.0);
    out.x1 = next[1];
    out.x2 = std::max(0.0, next[2]);
    out.x3 = std::max(0.0, next[3]);
    out.x4 = std::max(0.0, next[4]);
    return out;
}

void validate_profile(const LoadProfile& profile) {
    if (const auto* r = std::get_if<ConstantResistance>(&profile)) {
        if (!(r->r_ohm > 0.0))
            throw ProfileDomain("load resistance must be > 0");
    } else if (const auto* pr = std::get_if<PulsedResistance>(&profile)) {
        if (!(pr->r_ohm > 0.0))
            throw ProfileDomain("pulsed load resistance must be > 0");
        if (!(pr->t_on > 0.0))
            throw ProfileDomain("pulse on-window must be > 0");
        if (!(pr->t_off >= 0.0))
            throw ProfileDomain("pulse off-window must be >= 0");
    } else if (const auto* tab = std::get_if<CurrentTable>(&profile)) {
        if (tab->points.empty())
            throw ProfileDomain("current table is empty");
        for (std::size_t j = 1; j < tab->points.size(); ++j)
            if (!(tab->points[j][0] > tab->points[j - 1][0]))
                throw ProfileDomain("current table breakpoints must increase strictly");
    }
}

double profile_current(const LoadProfile& profile, double t, double y_prev) {
    if (const auto* c = std::get_if<ConstantCurrent>(&profile))
        return c->i_a;
    if (const auto* r = std::get_if<ConstantResistance>(&profile))
        return y_prev / r->r_ohm;
    if (const auto* pr = std::get_if<PulsedResistance>(&profile)) {
        const double cycle = pr->t_on + pr->t_off;
        const double phase = t - cycle * std::floor(t / cycle);
        return phase < pr->t_on ? y_prev / pr->r_ohm : 0.0;
    }
    const auto& tab = std::get<CurrentTable>(profile);
    // step-hold: last breakpoint at or before t; before the first, hold it back
    const auto it = std::upper_bound(
        tab.points.begin(), tab.points.end(), t,
        [](double tv, const std::array<double, 2>& pt) { return tv < pt[0]; });
    if (it == tab.points.begin())
        return tab.points.front()[1];
    return (*std::prev(it))[1];
}

SimTrace simulate(const ParameterSet& p, const CapacityConfig& cap, const LoadProfile& profile,
                  double t_end, double dt, double z0, double z_floor) {
    validate_profile(profile);
    if (!(dt > 0.0))
        throw DomainError("simulate: dt must be > 0");
    if (!(t_end >= 0.0))
        throw DomainError("simulate: t_end must be >= 0");
    if (!(z_floor > 0.0 && z_floor < 1.0))
        throw DomainError("simulate: z_floor must lie in (0, 1)");
    if (!(z0 >= z_floor && z0 <= 1.0))
        throw DomainError("simulate: z0 must lie in [z_floor, 1]");

    SimTrace trace;
    BatteryState s = make_initial_battery_state(p, z0);
    // resistance profiles resolve their first draw against the no-load rest
    // voltage; the recorded row then reports the terminal under that load so
    // every (i, y) pair in the trace satisfies the output map
    double i = profile_current(profile, 0.0, terminal_voltage(s, 0.0));
    trace.rows.push_back({s.t, i, terminal_voltage(s, i), s.z, s.x1, s.x2, s.x3, s.x4});

    while (s.t < t_end - 0.5 * dt) {
        s = step(p, cap, s, i, dt);
        const double y = terminal_voltage(s, i); // the held current is still flowing
        i = profile_current(profile, s.t, y);
        trace.rows.push_back({s.t, i, y, s.z, s.x1, s.x2, s.x3, s.x4});
        if (s.z <= z_floor) {
            trace.hit_floor = true;
            break;
        }
    }
    return trace;
}

std::vector<TelemetrySample> trace_telemetry(const SimTrace& trace) {
    std::vector<TelemetrySample> out;
    out.reserve(trace.rows.size());
    for (const auto& r : trace.rows)
        out.push_back({r.t, r.i, r.y});
    return out;
}

std::vector<double> coulomb_soc(const std::vector<double>& i_series, double dt, double cc,
                                double z0) {
    if (!(dt > 0.0))
        throw DomainError("coulomb_soc: dt must be > 0");
    if (!(cc > 0.0))
        throw DomainError("coulomb_soc: cc must be > 0");
    std::vector<double> z;
    z.reserve(i_series.size());
    if (i_series.empty())
        return z;
    z.push_back(z0);
    for (std::size_t k = 1; k < i_series.size(); ++k)
        z.push_back(z.back() - dt * i_series[k - 1] / cc);
    return z;
}

namespace {

double ocv_law(const ParameterSet& p, double z) {
    return -p[1] * std::exp(-p[2] * z) + p[3] + p[4] * z - p[5] * z * z + p[6] * z * z * z;
}

} // namespace

OcvInverter::OcvInverter(const ParameterSet& p, double z_lo) : p_(p), z_lo_(z_lo) {
    if (!(z_lo > 0.0 && z_lo < 1.0))
        throw DomainError("invert_ocv: z_lo must lie in (0, 1)");
    constexpr int kGrid = 512;
    double prev = ocv_law(p_, z_lo);
    for (int j = 1; j <= kGrid; ++j) {
        const double zj = z_lo + (1.0 - z_lo) * static_cast<double>(j) / kGrid;
        const double cur = ocv_law(p_, zj);
        if (!(cur > prev))
            throw NonMonotonic("invert_ocv: OCV law is not strictly increasing on the bracket");
        prev = cur;
    }
    v_lo_ = ocv_law(p_, z_lo_);
    v_hi_ = ocv_law(p_, 1.0);
}

double OcvInverter::operator()(double v) const {
    if (v < v_lo_ - 1e-12 || v > v_hi_ + 1e-12)
        throw OutOfRange("invert_ocv: voltage outside the invertible bracket");
    double lo = z_lo_, hi = 1.0;
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        const double em = ocv_law(p_, mid);
        if (std::abs(em - v) <= 1e-9)
            return mid;
        if (em < v)
            lo = mid;
        else
            hi = mid;
    }
    return mid;
}

double invert_ocv(const ParameterSet& p, double v, double z_lo) {
    return OcvInverter(p, z_lo)(v);
}

} // namespace bms
