#pragma once

#include <array>
#include <variant>
#include <vector>

#include "bms/errors.hpp"

namespace bms {

// The 21 fit coefficients of the equivalent-circuit element laws, addressed
// 1-based to match the usual numbering (index 0 is unused padding).
struct ParameterSet {
    std::array<double, 22> r{};

    double operator[](int n) const { return r[static_cast<std::size_t>(n)]; }
    double& operator[](int n) { return r[static_cast<std::size_t>(n)]; }
};

struct CapacityConfig {
    double c_ah = 0.27; // usable capacity, amp hours
    double f1 = 1.0;    // cycle-count correction
    double f2 = 1.0;    // temperature correction
    double f3 = 1.0;    // current-rate correction

    // effective charge store in amp seconds
    double cc() const { return 3600.0 * c_ah * f1 * f2 * f3; }
};

// State-of-charge dependent circuit elements. The capacitance laws go
// negative below z roughly 0.1 for typical coefficient sets; evaluation
// reports what the laws say and leaves positivity enforcement to the
// integrator, which actually divides by these values.
struct CircuitElements {
    double eo;  // open-circuit voltage [V]
    double rts; // short-time-constant branch resistance [ohm]
    double rtl; // long-time-constant branch resistance [ohm]
    double cts; // short-time-constant branch capacitance [F]
    double ctl; // long-time-constant branch capacitance [F]
    double rs;  // series resistance [ohm]
};

CircuitElements eval_circuit_elements(const ParameterSet& p, double z);

struct BatteryState {
    double t = 0.0;
    double z = 1.0;  // state of charge in [0, 1]
    double x1 = 0.0; // open-circuit voltage state [V]
    double x2 = 0.0; // short-branch RC voltage [V]
    double x3 = 0.0; // long-branch RC voltage [V]
    double x4 = 0.0; // series resistance state [ohm]
};

struct StateDeriv {
    double dz, dx1, dx2, dx3, dx4;
};

// Time derivative of (z, x1..x4) under discharge current i (amps, positive
// discharging). Throws NonPositiveCapacitance when either RC branch
// capacitance evaluates <= 0 at the given z.
StateDeriv state_derivative(const ParameterSet& p, double cc, const BatteryState& s, double i);
StateDeriv state_derivative(const ParameterSet& p, const CapacityConfig& cap,
                            const BatteryState& s, double i);

// Rested battery at state of charge z0: x1 on the OCV curve, RC branches
// relaxed, x4 primed with the series resistance there (floored at 0).
BatteryState make_initial_battery_state(const ParameterSet& p, double z0);

// y = x1 - x2 - x3 - i * x4
double terminal_voltage(const BatteryState& s, double i);

// One fixed-step fourth-order step with i held constant, then clamps:
// z into [0, 1] and x2, x3, x4 floored at 0 (the RC voltages and the series
// resistance state are nonnegative by construction and only roundoff can
// push them below).
BatteryState step(const ParameterSet& p, const CapacityConfig& cap, const BatteryState& s,
                  double i, double dt);

// ---------------------------------------------------------------- profiles

struct ConstantCurrent {
    double i_a;
};

// load resistor across the terminals; the drawn current tracks the recorded
// terminal voltage with a one-sample hold
struct ConstantResistance {
    double r_ohm;
};

// resistor connected for t_on seconds, open circuit for t_off, repeating
struct PulsedResistance {
    double r_ohm;
    double t_on;
    double t_off;
};

// piecewise-constant current breakpoints (t, i), held until the next entry
struct CurrentTable {
    std::vector<std::array<double, 2>> points;
};

using LoadProfile = std::variant<ConstantCurrent, ConstantResistance, PulsedResistance, CurrentTable>;

// Throws ProfileDomain for non-positive resistance, non-positive on-window,
// negative off-window, or an empty / non-increasing breakpoint table.
void validate_profile(const LoadProfile& profile);

// Current demanded at time t. y_prev is the most recently recorded terminal
// voltage, which resistance profiles divide by.
double profile_current(const LoadProfile& profile, double t, double y_prev);

// ---------------------------------------------------------------- traces

struct TelemetrySample {
    double t;
    double i;
    double y;
};

struct SimRow {
    double t;
    double i; // drive held over [t, t + dt)
    double y; // terminal voltage at t, measured with the current of the step that led here
    double z;
    double x1, x2, x3, x4;
};

struct SimTrace {
    std::vector<SimRow> rows;
    bool hit_floor = false; // stopped because z reached z_floor before t_end
};

// Integrates the plant from a rested start at z0 until t_end or until the
// state of charge falls to z_floor. Every recorded (i, y) pair is consistent
// with the output map; resistance profiles resolve their first current
// against the no-load rest voltage before the load connects.
SimTrace simulate(const ParameterSet& p, const CapacityConfig& cap, const LoadProfile& profile,
                  double t_end, double dt, double z0 = 1.0, double z_floor = 0.07);

std::vector<TelemetrySample> trace_telemetry(const SimTrace& trace);

// Left-rectangle charge counting: z[0] = z0, z[k] = z[k-1] - dt * i[k-1] / cc.
// Matches the integrator exactly when each i[k] is held over its step.
std::vector<double> coulomb_soc(const std::vector<double>& i_series, double dt, double cc,
                                double z0 = 1.0);

// Inverts the OCV law on [z_lo, 1] by bisection to |eo(z) - v| <= 1e-9.
// Construction verifies strict monotonicity on a fine grid (NonMonotonic);
// each call rejects voltages outside [eo(z_lo), eo(1)] (OutOfRange).
class OcvInverter {
public:
    explicit OcvInverter(const ParameterSet& p, double z_lo = 0.05);
    double operator()(double v) const;

private:
    ParameterSet p_;
    double z_lo_, v_lo_, v_hi_;
};

// single-shot convenience wrapper around OcvInverter
double invert_ocv(const ParameterSet& p, double v, double z_lo = 0.05);

} // namespace bms
