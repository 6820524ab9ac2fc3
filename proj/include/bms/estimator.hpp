#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bms/battery_model.hpp"
#include "bms/errors.hpp"
#include "bms/specfun.hpp"

namespace bms {

// Adaptation law data for one parameter estimate: hold corridor [r_l, r_u],
// the two pull rates toward the corridor edges, and the start value.
struct BoundsEntry {
    double r_u;      // upper corridor edge
    double r_l;      // lower corridor edge
    double lambda_x; // pull rate toward r_u
    double lambda_y; // pull rate toward r_l
    double r_init;   // initial estimate
};

enum class Aggregation { Mean, Median };

struct EstimatorConfig {
    // one entry for every online-adapted parameter: indices 1..20 except 3;
    // r3 and r21 are closed algebraically after convergence instead
    std::map<int, BoundsEntry> bounds;

    double cc = 972.0;      // effective charge store [A s]
    double dt = 0.01;       // sample period [s]
    double epsilon = 1e-3;  // voltage-error gate for good samples [V]
    double z0 = 1.0;        // assumed initial state of charge
    double z_floor = 0.07;  // estimate clamp floor and stop threshold
    double k0 = 0.0;        // initial switching-gain argument
    NussbaumParams gain{};  // switching-gain shape

    Aggregation aggregation = Aggregation::Mean;

    // warn when mean |i| of the stream exceeds this fraction of cc/3600;
    // the slow-discharge assumption behind the accuracy bounds is then void
    double current_warn_frac = 0.05;
};

// Rejects hard invariant violations (ConfigRejected, message lists them all)
// and returns soft findings as warnings. Hard checks; for each entry
// r_u >= r_l > 0, lambda_x > 0, lambda_y > 0, r_init > 0; all 19 adapted
// indices present and no others; epsilon, dt, cc, k0 valid; z0 and z_floor
// ordered; the capacitance pairs must start ordered (r13_init >= r15_init,
// r16_init >= r18_init), relax strictly faster in the subtrahend
// (lambda sums ordered), settle ordered (steady state 15 below 13, 18 below
// 16), and keep both steady-state capacitance laws positive at z_floor.
std::vector<std::string> validate_estimator_config(const EstimatorConfig& cfg);

// Steady value the adaptation law settles to when the voltage error is zero:
// the lambda-weighted mean of the corridor edges.
double adaptive_steady_state(const BoundsEntry& b);

// Advances one estimate over dt with the squared voltage error held constant.
// This is the exact flow of dr/dt = lambda_x (r_u - r) + lambda_y (r_l - r)
// + e^2 ... collected: an affine pull toward
// (e^2 + lambda_x r_u + lambda_y r_l) / (lambda_x + lambda_y). Using the
// closed form instead of a forward-Euler update keeps the step
// unconditionally stable: several shipped entries have
// (lambda_x + lambda_y) * dt > 1, where Euler overshoots and can even drive
// an estimate negative.
double adapt_parameter(const BoundsEntry& b, double r, double e, double dt);

// k accumulates the squared voltage error: k' = k + dt * e^2.
double update_gain(double k, double e, double dt);

// u = -N(k) * e with the switching gain N.
double control_input(const NussbaumParams& np, double k, double e);

struct EstimatedElements {
    double rts, rtl, cts, ctl;
};

// RC element laws evaluated on the current estimates.
EstimatedElements estimated_elements(const std::array<double, 22>& r, double z_hat);

// True iff both estimated capacitance laws are positive at z_hat, written as
// the exponent-rate tests r14 > -(1/z) ln(r15/r13) and the r17 analog. Both
// sides are well defined because adaptation keeps every estimate positive.
bool capacitance_gate(const std::array<double, 22>& r, double z_hat);

// Accumulates good-sample values; optionally retains them for the median.
struct Accumulator {
    double sum = 0.0;
    long n = 0;
    bool keep = false;
    std::vector<double> samples;

    void add(double v);
    double mean() const;   // NaN when empty
    double median() const; // NaN when empty; even counts average the middle pair
};

struct EstimatorState {
    double t = 0.0;
    double z = 1.0;  // state-of-charge estimate, clamped to [z_floor, 1]
    double x1 = 0.0; // OCV state estimate
    double x2 = 0.0;
    double x3 = 0.0;
    double x4 = 0.0; // series-resistance state estimate
    double k = 0.0;  // switching-gain argument
    double yhat = 0.0;

    std::array<double, 22> r{}; // estimates, 1-based; r[3], r[21] are the latest closures

    // diagnostics of the most recent step
    double e = 0.0;
    double n_of_k = 1.0;
    double u = 0.0;

    bool converged = false;
    std::array<Accumulator, 22> acc{};
};

// Observer state aligned with the first telemetry sample: the OCV state
// starts on the measured voltage so the first prediction is exact and the
// first entry error is zero.
EstimatorState make_initial_state(const EstimatorConfig& cfg, const TelemetrySample& first);

// Closure of the two parameters the output map cannot separate online. Needs
// a converged state (NotConverged otherwise): r3 from the OCV law solved at
// (z_hat, x1_hat), r21 from the series-resistance law at (z_hat, x4_hat).
struct ClosureValues {
    double r3, r21;
};
ClosureValues solve_r3_r21(const EstimatorState& st);

// One estimator iteration on sample (i, y):
//   e = y - yhat(previous step)        entry error, drives everything below
//   adapt all 19 estimates over dt with that e
//   u = -N(k) e, applied as (0, -u, +u, +u, +u) forcing on the state copy
//   advance (z, x1..x4) one RK4 step, clamp z to [z_floor, 1], x1..x4 to >= 0
//   yhat = x1 - x2 - x3 - i * x4
//   k += dt e^2
//   when |e| < epsilon and the capacitance gate holds, mark convergence and
//   accumulate the post-adaptation estimates plus the r3/r21 closures
// Throws NonPositiveEstimatedCapacitance if an RK4 stage evaluates a
// non-positive estimated capacitance; the run is unusable, not clampable.
void observer_step(const EstimatorConfig& cfg, EstimatorState& st, double i, double y);

struct EstimatorTraceRow {
    double t, e, k, n_of_k, u;
    double z, x1, x2, x3, x4, yhat;
};

struct RunReport {
    std::vector<EstimatorTraceRow> trace;
    long conv_index = -1;  // first good sample, -1 when never converged
    long good_samples = 0; // gate-passing samples accumulated
    ParameterSet params;   // aggregated estimates; NaN entries when no good samples
    bool hit_floor = false;
    std::vector<std::string> warnings;

    bool converged() const { return conv_index >= 0; }
};

using StepProbe = std::function<void(const EstimatorState&, long)>;

// Runs the observer over a uniformly sampled telemetry stream until the
// stream ends or the state-of-charge estimate reaches z_floor. An empty
// stream yields an empty, non-converged report. When the stream spacing
// disagrees with cfg.dt by more than 1e-6 s the stream wins, with a warning.
RunReport run_estimation(const EstimatorConfig& cfg, const std::vector<TelemetrySample>& samples,
                         const StepProbe& probe = {});

} // namespace bms
