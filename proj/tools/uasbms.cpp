// uasbms: equivalent-circuit battery simulation and online parameter
// estimation from a single current/voltage telemetry stream.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bms/analytics.hpp"
#include "bms/battery_model.hpp"
#include "bms/errors.hpp"
#include "bms/estimator.hpp"
#include "bms/io.hpp"

namespace {

enum Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };
int g_level = kWarn;

void logmsg(int level, const char* tag, const std::string& msg) {
    if (level <= g_level)
        std::fprintf(stderr, "%s: %s\n", tag, msg.c_str());
}
void log_error(const std::string& m) { logmsg(kError, "error", m); }
void log_warn(const std::string& m) { logmsg(kWarn, "warning", m); }
void log_info(const std::string& m) { logmsg(kInfo, "info", m); }

void init_log_level() {
    const char* env = std::getenv("UASBMS_LOG");
    if (!env)
        return;
    const std::string v(env);
    if (v == "error")
        g_level = kError;
    else if (v == "warn")
        g_level = kWarn;
    else if (v == "info")
        g_level = kInfo;
    else if (v == "debug")
        g_level = kDebug;
    else
        log_warn("unrecognized UASBMS_LOG value '" + v + "', using warn");
}

std::string out_path(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / name).string();
}

int run_simulate(const std::string& config, const std::string& out, double dt_override) {
    bms::ModelConfig cfg = bms::read_model_config(config);
    if (dt_override > 0.0)
        cfg.dt = dt_override;
    const bms::SimTrace trace =
        bms::simulate(cfg.params, cfg.cap, cfg.profile, cfg.t_end, cfg.dt, cfg.z0, cfg.z_floor);
    const std::string path = out_path(out, "trace.csv");
    bms::write_sim_trace(path, trace);
    std::printf("simulate: %zu rows -> %s%s\n", trace.rows.size(), path.c_str(),
                trace.hit_floor ? " (stopped at the state-of-charge floor)" : "");
    return 0;
}

int run_estimate(const std::string& config, const std::string& in, const std::string& out,
                 double dt_override, double eps_override) {
    bms::EstimatorConfig cfg = bms::read_estimator_config(config);
    if (dt_override > 0.0)
        cfg.dt = dt_override;
    if (eps_override > 0.0)
        cfg.epsilon = eps_override;

    // reject a bad configuration before touching the telemetry
    const std::vector<std::string> cfg_findings = bms::validate_estimator_config(cfg);
    for (const auto& w : cfg_findings)
        log_warn(w);

    const bms::TelemetryReadResult tel = bms::read_telemetry(in);
    for (const auto& n : tel.notes)
        log_warn(n);
    log_info("telemetry: " + std::to_string(tel.samples.size()) + " samples");

    const auto t0 = std::chrono::steady_clock::now();
    const bms::RunReport rep = bms::run_estimation(cfg, tel.samples);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // the run re-validates internally; only report findings not shown above
    for (const auto& w : rep.warnings)
        if (std::find(cfg_findings.begin(), cfg_findings.end(), w) == cfg_findings.end())
            log_warn(w);

    bms::write_estimator_trace(out_path(out, "trace.csv"), rep.trace);
    bms::write_parameters(out_path(out, "parameters.csv"), rep.params);

    if (!rep.converged()) {
        log_error("estimator never converged on this stream; parameters.csv holds NaN");
        return 3;
    }
    const double term_e = rep.trace.empty() ? 0.0 : std::abs(rep.trace.back().e);
    std::printf("estimate: converged at sample %ld, %ld good samples, terminal |e|=%s V, "
                "%.1f s wall -> %s\n",
                rep.conv_index, rep.good_samples, bms::format_double(term_e).c_str(), wall,
                out.c_str());
    return 0;
}

int run_validate(const std::string& config, const std::string& in, const std::string& out,
                 double dt_override) {
    bms::ModelConfig cfg = bms::read_model_config(config);
    if (dt_override > 0.0)
        cfg.dt = dt_override;
    const bms::ParameterSet pb = bms::read_parameters(in);

    const bms::CompareTrace tr = bms::compare_models(cfg.params, pb, cfg.cap, cfg.profile,
                                                     cfg.t_end, cfg.dt, cfg.z0, cfg.z_floor);

    // state-of-charge self-consistency of the candidate model: OCV-inverted
    // z against charge counting over the same current sequence
    std::vector<double> i_seq;
    i_seq.reserve(tr.rows.size());
    for (const auto& r : tr.rows)
        i_seq.push_back(r.i);
    const std::vector<double> z_cc = bms::coulomb_soc(i_seq, cfg.dt, cfg.cap.cc(), cfg.z0);
    const bms::OcvInverter inv(pb);
    double max_dsoc = 0.0;
    for (std::size_t j = 0; j < tr.rows.size(); ++j)
        max_dsoc = std::max(max_dsoc, std::abs(inv(tr.rows[j].x1_b) - z_cc[j]));

    bms::write_compare(out_path(out, "compare.csv"), tr);
    bms::write_metrics(out_path(out, "summary.csv"),
                       {{"rows", static_cast<double>(tr.rows.size())},
                        {"max_dy", tr.max_dy},
                        {"max_docv", tr.max_docv},
                        {"max_dsoc", max_dsoc}});
    std::printf("validate: %zu rows, max|dy|=%s V, max|dOCV|=%s V, max|dSoC|=%s -> %s\n",
                tr.rows.size(), bms::format_double(tr.max_dy).c_str(),
                bms::format_double(tr.max_docv).c_str(), bms::format_double(max_dsoc).c_str(),
                out.c_str());
    return 0;
}

int run_stats(const std::string& in, const std::string& out, const std::string& column,
              double bin_width, double origin) {
    const std::vector<double> series = bms::read_csv_column(in, column);
    const bms::SeriesStats s = bms::error_stats(series, bin_width, origin);
    bms::write_stats(out_path(out, "stats.csv"), s);
    bms::write_histogram(out_path(out, "histogram.csv"), bms::histogram(series, bin_width, origin));
    bms::write_cdf(out_path(out, "cdf.csv"), bms::cdf(series));
    std::printf("stats: %ld values of '%s': mean=%s stddev=%s median=%s mode=%s -> %s\n", s.count,
                column.c_str(), bms::format_double(s.mean).c_str(),
                bms::format_double(s.stddev).c_str(), bms::format_double(s.median).c_str(),
                bms::format_double(s.mode).c_str(), out.c_str());
    return 0;
}

int run_make_profile(std::uint64_t seed, const std::string& out, double t_end, double hold,
                     double i_min, double i_max) {
    const bms::CurrentTable tab = bms::make_profile(seed, t_end, hold, i_min, i_max);
    const std::string path = out_path(out, "profile.csv");
    bms::write_profile_csv(path, tab);
    std::printf("make-profile: %zu breakpoints (seed %llu) -> %s\n", tab.points.size(),
                static_cast<unsigned long long>(seed), path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    init_log_level();

    CLI::App app{"equivalent-circuit battery simulator and online parameter estimator"};
    app.require_subcommand(1);

    std::string config, in, out = ".";
    std::string column = "e_V";
    double dt = 0.0, epsilon = 0.0;
    double bin_width = 0.01, origin = 0.0;
    double t_end = 1800.0, hold = 60.0, i_min = 0.05, i_max = 0.5;
    std::uint64_t seed = 42;

    auto* sim = app.add_subcommand("simulate", "integrate a battery model under a load profile");
    sim->add_option("--config", config, "model INI")->required();
    sim->add_option("--out", out, "output directory");
    sim->add_option("--dt", dt, "override sample period [s]")->check(CLI::PositiveNumber);

    auto* est = app.add_subcommand("estimate", "run the online estimator over telemetry");
    est->add_option("--config", config, "estimator INI")->required();
    est->add_option("--in", in, "telemetry CSV (t_s,i_A,y_V)")->required();
    est->add_option("--out", out, "output directory");
    est->add_option("--dt", dt, "override sample period [s]")->check(CLI::PositiveNumber);
    est->add_option("--epsilon", epsilon, "override convergence gate [V]")->check(CLI::PositiveNumber);

    auto* val = app.add_subcommand("validate", "replay a profile through a candidate model");
    val->add_option("--config", config, "reference model INI")->required();
    val->add_option("--in", in, "candidate parameters CSV (name,value)")->required();
    val->add_option("--out", out, "output directory");
    val->add_option("--dt", dt, "override sample period [s]")->check(CLI::PositiveNumber);

    auto* sta = app.add_subcommand("stats", "summary statistics of one CSV column");
    sta->add_option("--in", in, "input CSV")->required();
    sta->add_option("--out", out, "output directory");
    sta->add_option("--column", column, "column name (default e_V)");
    sta->add_option("--bin-width", bin_width, "histogram bin width");
    sta->add_option("--origin", origin, "histogram bin origin");

    auto* mkp = app.add_subcommand("make-profile", "deterministic piecewise-constant profile");
    mkp->add_option("--seed", seed, "RNG seed");
    mkp->add_option("--out", out, "output directory");
    mkp->add_option("--t-end", t_end, "profile length [s]");
    mkp->add_option("--hold", hold, "segment hold [s]");
    mkp->add_option("--i-min", i_min, "segment current lower bound [A]");
    mkp->add_option("--i-max", i_max, "segment current upper bound [A]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sim)
            return run_simulate(config, out, dt);
        if (*est)
            return run_estimate(config, in, out, dt, epsilon);
        if (*val)
            return run_validate(config, in, out, dt);
        if (*sta)
            return run_stats(in, out, column, bin_width, origin);
        if (*mkp)
            return run_make_profile(seed, out, t_end, hold, i_min, i_max);
    } catch (const bms::ConfigRejected& ex) {
        log_error(ex.what());
        return 2;
    } catch (const bms::IoError& ex) {
        log_error(ex.what());
        return 4;
    } catch (const bms::ParseError& ex) {
        log_error(ex.what());
        return 5;
    } catch (const bms::Error& ex) {
        log_error(ex.what());
        return 6;
    }
    return 0;
}
