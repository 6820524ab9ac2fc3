// End-to-end acceptance run over the shipped reference configuration.
// Prints one verdict line per criterion (A1..A8) with its pinned tolerances
// and returns the number of failed criteria, so the build treats any miss as
// a red test. Detail lines are indented under each verdict.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <bms/analytics.hpp>
#include <bms/battery_model.hpp>
#include <bms/estimator.hpp>
#include <bms/io.hpp>
#include <bms/specfun.hpp>

namespace {

int failures = 0;

std::string strf(const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

void verdict(const char* id, bool ok, const std::string& detail) {
    std::printf("%-3s %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok)
        ++failures;
}

void note(const std::string& line) {
    std::printf("      %s\n", line.c_str());
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

// Per-parameter relative-error budget for the full-run recovery, percent:
// the demonstrated repeatability of each estimate plus a two-point margin.
// The two closed parameters carry their own budgets: the OCV offset r3 must
// land within 0.5 %, the series-resistance offset r21 within 12 %.
std::map<int, double> recovery_budget_pct() {
    std::map<int, double> base = {
        {1, 1.3},   {2, 1.2},   {4, 2.04},  {5, 0.934}, {6, 0.594},
        {7, 6.42},  {8, 2.95},  {9, 17.79}, {10, 5.3},  {11, 3.41},
        {12, 10.95}, {13, 1.06}, {14, 21.04}, {15, 2.69}, {16, 0.92},
        {17, 1.40}, {18, 0.558}, {19, 3.97}, {20, 0.72},
    };
    for (auto& [n, tol] : base)
        tol += 2.0;
    base[3] = 0.5;
    base[21] = 12.0;
    return base;
}

// Evidence gathered while the full run is in flight: the switching-gain
// argument must never decrease, each estimate must stay inside the hull of
// its start value and the error-lifted attractor values seen so far, and the
// product of the normalized estimates must be near 1 early in the run.
struct RunEvidence {
    std::vector<int> idxs;
    std::array<double, 22> wsum{}, lsum{}, lo{}, hi{};
    bool hull_ok = true;
    bool k_monotone = true;
    double prev_k = 0.0;
    double max_dn = 0.0;
    double prev_n = 1.0;
    bool have_prev = false;
    double product_rel_at_2000 = -1.0;
};

} // namespace

int main() {
    using clock = std::chrono::steady_clock;
    const std::string dir = UASBMS_DATA_DIR;

    bms::ModelConfig model;
    bms::EstimatorConfig cfg;
    try {
        model = bms::read_model_config(dir + "/reference_model.ini");
        cfg = bms::read_estimator_config(dir + "/reference_estimator.ini");
        bms::validate_estimator_config(cfg);
    } catch (const std::exception& ex) {
        std::printf("ABORT  cannot load the reference configuration: %s\n", ex.what());
        return 99;
    }

    // ---------------------------------------------------------------- A1
    // Replay the reference discharge through the estimator: every parameter
    // recovered within budget, in at most 60 s of estimation wall time.
    bms::RunReport rep;
    bms::SimTrace sim;
    RunEvidence ev;
    double wall_s = 0.0;
    bool a1_ran = false;
    try {
        sim = bms::simulate(model.params, model.cap, model.profile, model.t_end, model.dt,
                            model.z0, model.z_floor);
        const auto tel = bms::trace_telemetry(sim);

        for (const auto& [n, b] : cfg.bounds) {
            ev.idxs.push_back(n);
            ev.wsum[static_cast<std::size_t>(n)] = b.lambda_x * b.r_u + b.lambda_y * b.r_l;
            ev.lsum[static_cast<std::size_t>(n)] = b.lambda_x + b.lambda_y;
            ev.lo[static_cast<std::size_t>(n)] = b.r_init;
            ev.hi[static_cast<std::size_t>(n)] = b.r_init;
        }
        const bms::ParameterSet truth = model.params;
        const auto probe = [&ev, &truth](const bms::EstimatorState& st, long idx) {
            for (int n : ev.idxs) {
                const auto u = static_cast<std::size_t>(n);
                const double fp = (st.e * st.e + ev.wsum[u]) / ev.lsum[u];
                ev.lo[u] = std::min(ev.lo[u], fp);
                ev.hi[u] = std::max(ev.hi[u], fp);
                if (st.r[u] < ev.lo[u] - 1e-9 || st.r[u] > ev.hi[u] + 1e-9)
                    ev.hull_ok = false;
            }
            if (st.k < ev.prev_k)
                ev.k_monotone = false;
            ev.prev_k = st.k;
            if (ev.have_prev)
                ev.max_dn = std::max(ev.max_dn, std::abs(st.n_of_k - ev.prev_n));
            ev.prev_n = st.n_of_k;
            ev.have_prev = true;
            if (idx == 2000) {
                double prod = 1.0;
                for (int n : ev.idxs)
                    prod *= st.r[static_cast<std::size_t>(n)] / truth[n];
                ev.product_rel_at_2000 = std::abs(prod - 1.0);
            }
        };

        const auto t0 = clock::now();
        rep = bms::run_estimation(cfg, tel, probe);
        wall_s = std::chrono::duration<double>(clock::now() - t0).count();
        a1_ran = true;

        note(strf("stream %zu samples, processed %zu, good %ld, converged at %ld, floor %s",
                  tel.size(), rep.trace.size(), rep.good_samples, rep.conv_index,
                  rep.hit_floor ? "yes" : "no"));

        const auto budget = recovery_budget_pct();
        int met = 0;
        std::string misses;
        for (int n = 1; n <= 21; ++n) {
            const double err_pct = rel_err(rep.params[n], truth[n]) * 100.0;
            const double tol = budget.at(n);
            const bool ok = err_pct <= tol;
            met += ok ? 1 : 0;
            if (!ok)
                misses += strf("%s r%d (%.3f%% > %.2f%%)", misses.empty() ? " — misses:" : ",",
                               n, err_pct, tol);
            note(strf("r%-2d  est %13.6g   err %9.4f%%   budget %6.2f%%   %s", n, rep.params[n],
                      err_pct, tol, ok ? "ok" : "MISS"));
        }
        const bool time_ok = wall_s <= 60.0;
        verdict("A1", rep.converged() && met == 21 && time_ok,
                strf("full-run parameter recovery: %d/21 budgets met, estimation took %.1f s "
                     "(limit 60 s)%s",
                     met, wall_s, misses.c_str()));
    } catch (const std::exception& ex) {
        verdict("A1", false, strf("full-run parameter recovery: exception: %s", ex.what()));
    }

    // ---------------------------------------------------------------- A2
    // The shipped tuning settles, at zero voltage error, onto its pinned
    // steady values (relative tolerance 5e-4).
    try {
        const std::map<int, double> target = {
            {1, 1.01765}, {2, 35.4167}, {4, 0.22}, {13, 760.869}};
        bool ok = true;
        for (const auto& [n, want] : target) {
            const double ss = bms::adaptive_steady_state(cfg.bounds.at(n));
            const double re = rel_err(ss, want);
            ok = ok && re <= 5e-4;
            note(strf("r%-2d steady state %.10g vs %.6g  (rel %.2e)", n, ss, want, re));
        }
        verdict("A2", ok, "zero-error steady states of the shipped tuning hit pinned targets");
    } catch (const std::exception& ex) {
        verdict("A2", false, strf("steady-state targets: exception: %s", ex.what()));
    }

    // ---------------------------------------------------------------- A3
    // Convergence is declared within 300 samples, on a sub-threshold entry
    // error, and the switching gain has stopped moving (max step < 1e-6).
    if (a1_ran && !rep.trace.empty() && rep.converged()) {
        const double e_conv = std::abs(rep.trace[static_cast<std::size_t>(rep.conv_index)].e);
        const bool ok = rep.conv_index <= 300 && e_conv < 1e-3 && ev.max_dn < 1e-6;
        verdict("A3", ok,
                strf("converged at sample %ld (limit 300), |e| there %.3g < 1e-3, "
                     "max gain step %.3g < 1e-6",
                     rep.conv_index, e_conv, ev.max_dn));
    } else {
        verdict("A3", false, "convergence detection: no converged full run available");
    }

    // ---------------------------------------------------------------- A4
    // After convergence the voltage error stays inside the tracking band:
    // max |e| < 1e-2 V for the rest of the run, final |e| <= 2e-3 V.
    if (a1_ran && !rep.trace.empty() && rep.converged()) {
        double max_e = 0.0;
        for (std::size_t j = static_cast<std::size_t>(rep.conv_index) + 1; j < rep.trace.size();
             ++j)
            max_e = std::max(max_e, std::abs(rep.trace[j].e));
        const double e_final = std::abs(rep.trace.back().e);
        const bool ok = max_e < 1e-2 && e_final <= 2e-3;
        verdict("A4", ok,
                strf("post-convergence max |e| %.4g V < 1e-2, terminal |e| %.4g V <= 2e-3",
                     max_e, e_final));
    } else {
        verdict("A4", false, "post-convergence tracking: no converged full run available");
    }

    // ---------------------------------------------------------------- A5
    // Cross-validation: the recovered model must track the generating model
    // under a load it never saw (seeded random discharge steps) to within
    // 50 mV in both terminal voltage and OCV.
    bms::CompareTrace ct;
    bool a5_ran = false;
    if (a1_ran && rep.converged()) {
        try {
            const bms::LoadProfile prof{bms::make_profile(42)};
            ct = bms::compare_models(model.params, rep.params, model.cap, prof, 1800.0, 0.01,
                                     model.z0, model.z_floor);
            a5_ran = true;
            verdict("A5", ct.max_dy < 0.05 && ct.max_docv < 0.05,
                    strf("random-load cross-validation over %zu samples: max |dy| %.4g V, "
                         "max |dOCV| %.4g V (limits 0.05)",
                         ct.rows.size(), ct.max_dy, ct.max_docv));
        } catch (const std::exception& ex) {
            verdict("A5", false, strf("random-load cross-validation: exception: %s", ex.what()));
        }
    } else {
        verdict("A5", false, "random-load cross-validation: no recovered parameters available");
    }

    // ---------------------------------------------------------------- A6
    // State-of-charge readout: inverting the recovered OCV law on the
    // recovered model's own OCV trace agrees with charge counting on the
    // shared current sequence to within 0.02.
    if (a5_ran) {
        try {
            std::vector<double> i_seq;
            i_seq.reserve(ct.rows.size());
            for (const auto& r : ct.rows)
                i_seq.push_back(r.i);
            const std::vector<double> z_cc =
                bms::coulomb_soc(i_seq, 0.01, model.cap.cc(), model.z0);
            const bms::OcvInverter inv(rep.params);
            double max_dz = 0.0;
            for (std::size_t j = 0; j < ct.rows.size(); ++j)
                max_dz = std::max(max_dz, std::abs(inv(ct.rows[j].x1_b) - z_cc[j]));
            verdict("A6", max_dz < 0.02,
                    strf("SoC by OCV inversion vs charge counting: max |dz| %.3g (limit 0.02)",
                         max_dz));
        } catch (const std::exception& ex) {
            verdict("A6", false, strf("SoC readout: exception: %s", ex.what()));
        }
    } else {
        verdict("A6", false, "SoC readout: no cross-validation trace available");
    }

    // ---------------------------------------------------------------- A7
    // Structural invariants, each checked on live artifacts of this run.
    try {
        bool ok = true;

        // plant: state of charge never increases under discharge
        bool z_mono = true;
        for (std::size_t j = 1; j < sim.rows.size(); ++j)
            z_mono = z_mono && sim.rows[j].z <= sim.rows[j - 1].z;
        note(strf("plant SoC non-increasing over %zu rows: %s", sim.rows.size(),
                  z_mono ? "yes" : "NO"));
        ok = ok && z_mono;

        // plant: charge counting replays the integrator exactly
        {
            std::vector<double> i_seq;
            i_seq.reserve(sim.rows.size());
            for (const auto& r : sim.rows)
                i_seq.push_back(r.i);
            const auto z_cc = bms::coulomb_soc(i_seq, model.dt, model.cap.cc(), model.z0);
            double max_d = 0.0;
            for (std::size_t j = 0; j < sim.rows.size(); ++j)
                max_d = std::max(max_d, std::abs(z_cc[j] - sim.rows[j].z));
            note(strf("charge counting vs integrator: max |dz| %.3g (<= 1e-9)", max_d));
            ok = ok && max_d <= 1e-9;
        }

        // estimator: gain argument monotone, estimates inside the attractor
        // hull, normalized-estimate product near 1 early in the run
        note(strf("switching-gain argument monotone: %s", ev.k_monotone ? "yes" : "NO"));
        note(strf("estimates inside start/attractor hull: %s", ev.hull_ok ? "yes" : "NO"));
        note(strf("normalized-estimate product at sample 2000: off by %.4g (< 0.15)",
                  ev.product_rel_at_2000));
        ok = ok && ev.k_monotone && ev.hull_ok;
        ok = ok && ev.product_rel_at_2000 >= 0.0 && ev.product_rel_at_2000 < 0.15;

        // observer run on a plant built from the zero-error steady states,
        // started aligned: the voltage error must stay at machine zero
        {
            bms::EstimatorConfig c2 = cfg;
            c2.cc = model.cap.cc();
            bms::ParameterSet pfp;
            for (auto& [n, b] : c2.bounds) {
                const double ss = bms::adaptive_steady_state(b);
                b.r_init = ss;
                pfp[n] = ss;
            }
            pfp[3] = model.params[3];
            pfp[21] = model.params[21];
            const bms::SimTrace tr2 =
                bms::simulate(pfp, model.cap, bms::ConstantCurrent{0.4}, 50.0, 0.01);
            const auto tel2 = bms::trace_telemetry(tr2);
            const bms::BatteryState s0 = bms::make_initial_battery_state(pfp, 1.0);
            bms::EstimatorState st = bms::make_initial_state(c2, tel2.front());
            st.x1 = s0.x1;
            st.x4 = s0.x4;
            st.yhat = st.x1 - st.x2 - st.x3 - tel2.front().i * st.x4;
            double max_e = 0.0, max_dz = 0.0;
            for (std::size_t j = 0; j < tel2.size(); ++j) {
                bms::observer_step(c2, st, tel2[j].i, tel2[j].y);
                max_e = std::max(max_e, std::abs(st.e));
                if (j + 1 < tr2.rows.size())
                    max_dz = std::max(max_dz, std::abs(st.z - tr2.rows[j + 1].z));
            }
            note(strf("aligned observer on a steady-state plant: max |e| %.3g (<= 1e-12), "
                      "max |dz| %.3g (<= 1e-15)",
                      max_e, max_dz));
            ok = ok && max_e <= 1e-12 && max_dz <= 1e-15;
        }

        // gate soundness: agreement with capacitance positivity on random draws
        {
            std::mt19937_64 rng(7);
            std::uniform_real_distribution<double> cap_mag(50.0, 2000.0);
            std::uniform_real_distribution<double> cap_big(1000.0, 50000.0);
            std::uniform_real_distribution<double> rate(0.1, 40.0);
            std::uniform_real_distribution<double> soc(0.05, 1.0);
            long agree = 0;
            const long draws = 10000;
            for (long d = 0; d < draws; ++d) {
                std::array<double, 22> r{};
                r.fill(0.5);
                r[13] = cap_mag(rng);
                r[15] = cap_mag(rng);
                r[14] = rate(rng);
                r[16] = cap_big(rng);
                r[18] = cap_big(rng);
                r[17] = rate(rng);
                const double z = soc(rng);
                const bms::EstimatedElements els = bms::estimated_elements(r, z);
                const bool positive = els.cts > 0.0 && els.ctl > 0.0;
                agree += (bms::capacitance_gate(r, z) == positive) ? 1 : 0;
            }
            note(strf("capacitance gate == positive capacitances on %ld/%ld random draws",
                      agree, draws));
            ok = ok && agree == draws;
        }

        // the switching gain provides pushes in both directions
        {
            bms::AverageExtrema ext{};
            const bool two_sided = bms::verify_nussbaum_property(cfg.gain, 12.0, 4001, &ext);
            note(strf("switching-gain running averages: sup %.6f > 1, inf %.6f < -1",
                      ext.sup_avg, ext.inf_avg));
            ok = ok && two_sided && ext.sup_avg > 1.0 && ext.inf_avg < -1.0;
        }

        // statistics kernels on hand-checkable series
        {
            const bms::SeriesStats s = bms::error_stats({1.0, 2.0, 3.0});
            const bms::SeriesStats s4 = bms::error_stats({1.0, 2.0, 3.0, 4.0});
            const auto c = bms::cdf({3.0, 1.0, 2.0, 3.0});
            const auto h = bms::histogram({0.001, 0.002, 0.055});
            long total = 0;
            for (const auto& b : h)
                total += b.count;
            const bool stats_ok = s.count == 3 && s.mean == 2.0 && s.median == 2.0 &&
                                  std::abs(s.stddev - std::sqrt(2.0 / 3.0)) <= 1e-15 &&
                                  s4.median == 2.5 && c.size() == 3 &&
                                  c.back().fraction == 1.0 && total == 3 && h.size() == 6;
            note(strf("statistics kernels on hand-checkable series: %s",
                      stats_ok ? "exact" : "WRONG"));
            ok = ok && stats_ok;
        }

        verdict("A7", ok, "structural invariants hold on live artifacts");
    } catch (const std::exception& ex) {
        verdict("A7", false, strf("structural invariants: exception: %s", ex.what()));
    }

    // ---------------------------------------------------------------- A8
    // Special-function identities at pinned accuracy.
    try {
        double worst = 0.0;
        for (double x = -5.0; x <= 5.0 + 1e-12; x += 0.25)
            worst = std::max(worst, rel_err(bms::mittag_leffler(1.0, x), std::exp(x)));
        note(strf("order-1 series vs exp on [-5,5]: worst rel %.3g (<= 1e-10)", worst));
        bool ok = worst <= 1e-10;

        double worst2 = 0.0;
        for (int xi = 0; xi <= 25; ++xi)
            worst2 = std::max(worst2, rel_err(bms::mittag_leffler(2.0, xi),
                                              std::cosh(std::sqrt(double(xi)))));
        worst2 = std::max(worst2, rel_err(bms::mittag_leffler(2.0, -4.0), std::cos(2.0)));
        note(strf("order-2 series vs cosh/cos: worst rel %.3g (<= 1e-10)", worst2));
        ok = ok && worst2 <= 1e-10;

        ok = ok && bms::mittag_leffler(2.5, 0.0) == 1.0;

        const double g1 = rel_err(bms::gamma_fn(0.5), std::sqrt(std::acos(-1.0)));
        const double g2 = rel_err(bms::gamma_fn(6.0), 120.0);
        const double g3 = rel_err(bms::gamma_fn(3.5), 3.3233509704478426);
        note(strf("gamma anchors at 0.5 / 6 / 3.5: rel %.3g / %.3g / %.3g (<= 1e-12)", g1, g2,
                  g3));
        ok = ok && g1 <= 1e-12 && g2 <= 1e-12 && g3 <= 1e-12;

        verdict("A8", ok, "special-function identities at pinned accuracy");
    } catch (const std::exception& ex) {
        verdict("A8", false, strf("special-function identities: exception: %s", ex.what()));
    }

    std::printf("%d of 8 criteria failed\n", failures);
    return failures;
}
