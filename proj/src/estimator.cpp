#include "bms/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bms/rk4.hpp"

namespace bms {

namespace {

constexpr int kAdaptedIndices[] = {1, 2, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};

std::string join_lines(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty())
            out += "; ";
        out += p;
    }
    return out;
}

} // namespace

double adaptive_steady_state(const BoundsEntry& b) {
    return (b.lambda_x * b.r_u + b.lambda_y * b.r_l) / (b.lambda_x + b.lambda_y);
}

double adapt_parameter(const BoundsEntry& b, double r, double e, double dt) {
    const double lsum = b.lambda_x + b.lambda_y;
    const double wsum = b.lambda_x * b.r_u + b.lambda_y * b.r_l;
    const double fp = (e * e + wsum) / lsum;
    return fp + (r - fp) * std::exp(-lsum * dt);
}

double update_gain(double k, double e, double dt) {
    return k + dt * e * e;
}

double control_input(const NussbaumParams& np, double k, double e) {
    return -nussbaum(np, k) * e;
}

EstimatedElements estimated_elements(const std::array<double, 22>& r, double z_hat) {
    ParameterSet p;
    p.r = r;
    const CircuitElements e = eval_circuit_elements(p, z_hat);
    return {e.rts, e.rtl, e.cts, e.ctl};
}

bool capacitance_gate(const std::array<double, 22>& r, double z_hat) {
    const bool g1 = r[14] > -(1.0 / z_hat) * std::log(r[15] / r[13]);
    const bool g2 = r[17] > -(1.0 / z_hat) * std::log(r[18] / r[16]);
    return g1 && g2;
}

std::vector<std::string> validate_estimator_config(const EstimatorConfig& cfg) {
    std::vector<std::string> hard;
    std::vector<std::string> warnings;
    const auto fail = [&hard](const std::string& m) { hard.push_back(m); };

    for (int n : kAdaptedIndices)
        if (!cfg.bounds.count(n))
            fail("missing bounds entry for r" + std::to_string(n));
    for (const auto& [n, b] : cfg.bounds) {
        const bool adapted =
            std::find(std::begin(kAdaptedIndices), std::end(kAdaptedIndices), n) !=
            std::end(kAdaptedIndices);
        if (!adapted) {
            fail("bounds entry for r" + std::to_string(n) +
                 " is not adapted online (r3 and r21 are closed after convergence)");
            continue;
        }
        const std::string tag = "r" + std::to_string(n) + ": ";
        if (!(b.r_l > 0.0))
            fail(tag + "lower corridor edge must be > 0");
        if (!(b.r_u >= b.r_l))
            fail(tag + "corridor edges must satisfy r_u >= r_l");
        if (!(b.lambda_x > 0.0) || !(b.lambda_y > 0.0))
            fail(tag + "pull rates must be > 0");
        if (!(b.r_init > 0.0))
            fail(tag + "initial estimate must be > 0");
    }

    if (!(cfg.dt > 0.0))
        fail("dt must be > 0");
    if (!(cfg.epsilon > 0.0))
        fail("epsilon must be > 0");
    if (!(cfg.cc > 0.0))
        fail("cc must be > 0");
    if (!(cfg.k0 >= 0.0))
        fail("k0 must be >= 0");
    if (!(cfg.z_floor > 0.0 && cfg.z_floor < 1.0))
        fail("z_floor must lie in (0, 1)");
    else if (!(cfg.z0 > cfg.z_floor && cfg.z0 <= 1.0))
        fail("z0 must lie in (z_floor, 1]");
    if (!(cfg.gain.alpha > 2.0 && cfg.gain.alpha <= 3.0))
        fail("gain alpha must lie in (2, 3]");
    if (!(cfg.gain.lam > 0.0))
        fail("gain lam must be > 0");
    if (!(cfg.current_warn_frac > 0.0))
        fail("current warning fraction must be > 0");

    // The two capacitance laws -r13 exp(-r14 z) + r15 and -r16 exp(-r17 z)
    // + r18 stay positive while adapting only if the subtrahend estimate
    // starts no lower, relaxes strictly faster, and settles strictly lower
    // than its partner, and the settled law clears zero at the clamp floor.
    const auto pair_checks = [&](int hi, int rate, int lo) {
        if (!cfg.bounds.count(hi) || !cfg.bounds.count(rate) || !cfg.bounds.count(lo))
            return;
        const BoundsEntry& bh = cfg.bounds.at(hi);
        const BoundsEntry& br = cfg.bounds.at(rate);
        const BoundsEntry& bl = cfg.bounds.at(lo);
        const std::string pair = "r" + std::to_string(hi) + "/r" + std::to_string(lo) + ": ";
        if (!(bh.r_init >= bl.r_init))
            fail(pair + "initial estimates must start ordered (subtrahend not below offset)");
        else if (bh.r_init == bl.r_init)
            warnings.push_back(pair + "initial estimates are equal; the start ordering holds only weakly");
        const double ls_hi = bh.lambda_x + bh.lambda_y;
        const double ls_lo = bl.lambda_x + bl.lambda_y;
        if (!(ls_lo > ls_hi))
            fail(pair + "offset estimate must relax strictly faster (larger pull-rate sum)");
        const double ss_hi = adaptive_steady_state(bh);
        const double ss_lo = adaptive_steady_state(bl);
        if (!(ss_lo < ss_hi))
            fail(pair + "steady states must settle ordered (offset strictly below subtrahend)");
        const double ws_hi = bh.lambda_x * bh.r_u + bh.lambda_y * bh.r_l;
        const double ws_lo = bl.lambda_x * bl.r_u + bl.lambda_y * bl.r_l;
        if (!(ws_lo < ws_hi))
            warnings.push_back(pair + "lambda-weighted corridor sums are not ordered; the settled "
                                      "ordering relies on the normalized steady states");
        if (hard.empty()) {
            const double ss_rate = adaptive_steady_state(br);
            const double settled = -ss_hi * std::exp(-ss_rate * cfg.z_floor) + ss_lo;
            if (!(settled > 0.0)) {
                std::ostringstream m;
                m << pair << "settled capacitance law is non-positive at the clamp floor ("
                  << settled << " at z=" << cfg.z_floor << ")";
                fail(m.str());
            }
        }
    };
    pair_checks(13, 14, 15);
    pair_checks(16, 17, 18);

    if (!hard.empty())
        throw ConfigRejected(join_lines(hard));
    return warnings;
}

void Accumulator::add(double v) {
    sum += v;
    ++n;
    if (keep)
        samples.push_back(v);
}

double Accumulator::mean() const {
    if (n == 0)
        return std::numeric_limits<double>::quiet_NaN();
    return sum / static_cast<double>(n);
}

double Accumulator::median() const {
    if (samples.empty())
        return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> v = samples;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    if (v.size() % 2 == 1)
        return v[m];
    return 0.5 * (v[m - 1] + v[m]);
}

EstimatorState make_initial_state(const EstimatorConfig& cfg, const TelemetrySample& first) {
    EstimatorState st;
    st.t = first.t;
    st.z = cfg.z0;
    st.x1 = first.y; // puts the first prediction on the measurement exactly
    st.x2 = 0.0;
    st.x3 = 0.0;
    st.x4 = 0.0;
    st.k = cfg.k0;
    st.yhat = st.x1 - st.x2 - st.x3 - first.i * st.x4;
    for (const auto& [n, b] : cfg.bounds)
        st.r[static_cast<std::size_t>(n)] = b.r_init;
    const bool keep = cfg.aggregation == Aggregation::Median;
    for (auto& a : st.acc)
        a.keep = keep;
    return st;
}

ClosureValues solve_r3_r21(const EstimatorState& st) {
    if (!st.converged)
        throw NotConverged("solve_r3_r21: closure requires a converged estimator state");
    const double zh = st.z;
    const auto& r = st.r;
    ClosureValues c{};
    c.r3 = st.x1 + r[1] * std::exp(-r[2] * zh) - r[4] * zh + r[5] * zh * zh - r[6] * zh * zh * zh;
    c.r21 = st.x4 - r[19] * std::exp(-r[20] * zh);
    return c;
}

void observer_step(const EstimatorConfig& cfg, EstimatorState& st, double i, double y) {
    const double e = y - st.yhat;
    for (const auto& [n, b] : cfg.bounds)
        st.r[static_cast<std::size_t>(n)] = adapt_parameter(b, st.r[static_cast<std::size_t>(n)], e, cfg.dt);
    const double N = nussbaum(cfg.gain, st.k);
    const double u = -N * e;

    ParameterSet ph;
    ph.r = st.r;
    const auto f = [&](const std::array<double, 5>& v) {
        const BatteryState sv{st.t, v[0], v[1], v[2], v[3], v[4]};
        const StateDeriv d = state_derivative(ph, cfg.cc, sv, i);
        return std::array<double, 5>{d.dz, d.dx1 - u, d.dx2 + u, d.dx3 + u, d.dx4 + u};
    };
    std::array<double, 5> next{};
    try {
        next = rk4_step(f, std::array<double, 5>{st.z, st.x1, st.x2, st.x3, st.x4}, cfg.dt);
    } catch (const NonPositiveCapacitance& ex) {
        std::ostringstream msg;
        msg << "observer aborted at t=" << st.t << ", z_hat=" << st.z << ": " << ex.what()
            << "; the bounds configuration cannot keep the estimated capacitances positive on "
               "this stream";
        throw NonPositiveEstimatedCapacitance(msg.str());
    }
    st.z = std::clamp(next[0], cfg.z_floor, 1.0);
    st.x1 = std::max(0.0, next[1]);
    st.x2 = std::max(0.0, next[2]);
    st.x3 = std::max(0.0, next[3]);
    st.x4 = std::max(0.0, next[4]);
    st.yhat = st.x1 - st.x2 - st.x3 - i * st.x4;
    st.k = update_gain(st.k, e, cfg.dt);
    st.t += cfg.dt;
    st.e = e;
    st.n_of_k = N;
    st.u = u;

    if (std::abs(e) < cfg.epsilon && capacitance_gate(st.r, st.z)) {
        st.converged = true;
        for (const auto& [n, b] : cfg.bounds)
            st.acc[static_cast<std::size_t>(n)].add(st.r[static_cast<std::size_t>(n)]);
        const ClosureValues cls = solve_r3_r21(st);
        st.r[3] = cls.r3;
        st.r[21] = cls.r21;
        st.acc[3].add(cls.r3);
        st.acc[21].add(cls.r21);
    }
}

RunReport run_estimation(const EstimatorConfig& cfg, const std::vector<TelemetrySample>& samples,
                         const StepProbe& probe) {
    RunReport rep;
    rep.warnings = validate_estimator_config(cfg);
    for (auto& v : rep.params.r)
        v = std::numeric_limits<double>::quiet_NaN();
    if (samples.empty())
        return rep;

    EstimatorConfig c = cfg;
    if (samples.size() >= 2) {
        const double sdt = samples[1].t - samples[0].t;
        if (!(sdt > 0.0))
            throw NonMonotonicTime("run_estimation: sample times must increase strictly");
        if (std::abs(sdt - cfg.dt) > 1e-6) {
            std::ostringstream m;
            m << "stream sample period " << sdt << " s overrides configured dt " << cfg.dt << " s";
            rep.warnings.push_back(m.str());
            c.dt = sdt;
        }
    }

    EstimatorState st = make_initial_state(c, samples.front());
    rep.trace.reserve(samples.size());
    double abs_i_sum = 0.0;
    long consumed = 0;
    for (long idx = 0; idx < static_cast<long>(samples.size()); ++idx) {
        const TelemetrySample& smp = samples[static_cast<std::size_t>(idx)];
        observer_step(c, st, smp.i, smp.y);
        rep.trace.push_back(
            {smp.t, st.e, st.k, st.n_of_k, st.u, st.z, st.x1, st.x2, st.x3, st.x4, st.yhat});
        if (st.converged && rep.conv_index < 0)
            rep.conv_index = idx;
        abs_i_sum += std::abs(smp.i);
        ++consumed;
        if (probe)
            probe(st, idx);
        if (st.z <= c.z_floor) {
            rep.hit_floor = true;
            break;
        }
    }

    rep.good_samples = st.acc[3].n;
    for (const auto& [n, b] : c.bounds) {
        const auto& a = st.acc[static_cast<std::size_t>(n)];
        rep.params[n] = c.aggregation == Aggregation::Median ? a.median() : a.mean();
    }
    rep.params[3] = c.aggregation == Aggregation::Median ? st.acc[3].median() : st.acc[3].mean();
    rep.params[21] = c.aggregation == Aggregation::Median ? st.acc[21].median() : st.acc[21].mean();

    if (consumed > 0) {
        const double mean_abs_i = abs_i_sum / static_cast<double>(consumed);
        const double threshold = c.current_warn_frac * c.cc / 3600.0;
        if (mean_abs_i > threshold) {
            std::ostringstream m;
            m << "mean |i| = " << mean_abs_i << " A exceeds the slow-discharge threshold "
              << threshold << " A; parameter accuracy bounds may degrade";
            rep.warnings.push_back(m.str());
        }
    }
    return rep;
}

} // namespace bms
