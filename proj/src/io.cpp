#include "bms/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace bms {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos)
        throw ParseError("expected a number, got an empty field");
    double v = 0.0;
    const char* first = s.data() + b;
    const char* last = s.data() + e + 1;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw ParseError("not a number: '" + s.substr(b, e - b + 1) + "'");
    return v;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string rtrim_cr(std::string s) {
    if (!s.empty() && s.back() == '\r')
        s.pop_back();
    return s;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f)
        throw IoError("cannot open '" + path + "' for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open '" + path + "' for reading");
    return f;
}

void put_row(std::string& buf, std::initializer_list<double> vals) {
    bool first = true;
    for (double v : vals) {
        if (!first)
            buf += ',';
        buf += format_double(v);
        first = false;
    }
    buf += '\n';
}

void write_all(const std::string& path, const std::string& content) {
    auto f = open_out(path);
    f << content;
    if (!f)
        throw IoError("short write to '" + path + "'");
}

// lines of a CSV file minus the header, which must start with the expected
// field names (extra columns are tolerated and ignored by the row parsers)
std::vector<std::string> read_csv_body(const std::string& path,
                                       const std::vector<std::string>& expect_prefix) {
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line))
        throw ParseError(path + ": missing header row");
    const auto head = split_csv(rtrim_cr(line));
    if (head.size() < expect_prefix.size())
        throw ParseError(path + ": header has too few columns");
    for (std::size_t j = 0; j < expect_prefix.size(); ++j)
        if (head[j] != expect_prefix[j])
            throw ParseError(path + ": expected header column '" + expect_prefix[j] +
                             "', found '" + head[j] + "'");
    std::vector<std::string> body;
    while (std::getline(f, line)) {
        line = rtrim_cr(line);
        if (!line.empty())
            body.push_back(line);
    }
    return body;
}

double field_double(const std::string& path, std::size_t row, const std::string& field) {
    try {
        return parse_double(field);
    } catch (const ParseError& ex) {
        throw ParseError(path + ": data row " + std::to_string(row + 1) + ": " + ex.what());
    }
}

} // namespace

// ------------------------------------------------------------------ CSV out

void write_sim_trace(const std::string& path, const SimTrace& trace) {
    std::string buf = "t_s,i_A,y_V,z,x1_V,x2_V,x3_V,x4_ohm\n";
    buf.reserve(buf.size() + trace.rows.size() * 160);
    for (const auto& r : trace.rows)
        put_row(buf, {r.t, r.i, r.y, r.z, r.x1, r.x2, r.x3, r.x4});
    write_all(path, buf);
}

void write_telemetry(const std::string& path, const std::vector<TelemetrySample>& rows) {
    std::string buf = "t_s,i_A,y_V\n";
    buf.reserve(buf.size() + rows.size() * 60);
    for (const auto& r : rows)
        put_row(buf, {r.t, r.i, r.y});
    write_all(path, buf);
}

void write_estimator_trace(const std::string& path, const std::vector<EstimatorTraceRow>& rows) {
    std::string buf = "t_s,e_V,k,N_k,u,z_hat,x1_V,x2_V,x3_V,x4_ohm,y_hat_V\n";
    buf.reserve(buf.size() + rows.size() * 220);
    for (const auto& r : rows)
        put_row(buf, {r.t, r.e, r.k, r.n_of_k, r.u, r.z, r.x1, r.x2, r.x3, r.x4, r.yhat});
    write_all(path, buf);
}

void write_parameters(const std::string& path, const ParameterSet& p) {
    std::string buf = "name,value\n";
    for (int n = 1; n <= 21; ++n) {
        buf += "r" + std::to_string(n) + ",";
        buf += format_double(p[n]);
        buf += '\n';
    }
    write_all(path, buf);
}

void write_stats(const std::string& path, const SeriesStats& s) {
    std::string buf = "metric,value\n";
    buf += "count," + format_double(static_cast<double>(s.count)) + "\n";
    buf += "mean," + format_double(s.mean) + "\n";
    buf += "stddev," + format_double(s.stddev) + "\n";
    buf += "median," + format_double(s.median) + "\n";
    buf += "mode," + format_double(s.mode) + "\n";
    write_all(path, buf);
}

void write_histogram(const std::string& path, const std::vector<HistogramBin>& bins) {
    std::string buf = "x,count\n";
    for (const auto& b : bins) {
        buf += format_double(b.x);
        buf += ',' + std::to_string(b.count) + '\n';
    }
    write_all(path, buf);
}

void write_cdf(const std::string& path, const std::vector<CdfPoint>& pts) {
    std::string buf = "x,fraction\n";
    for (const auto& p : pts)
        put_row(buf, {p.x, p.fraction});
    write_all(path, buf);
}

void write_profile_csv(const std::string& path, const CurrentTable& tab) {
    std::string buf = "t_s,i_A\n";
    for (const auto& pt : tab.points)
        put_row(buf, {pt[0], pt[1]});
    write_all(path, buf);
}

void write_compare(const std::string& path, const CompareTrace& tr) {
    std::string buf = "t_s,i_A,y_a_V,y_b_V,x1_a_V,x1_b_V\n";
    buf.reserve(buf.size() + tr.rows.size() * 130);
    for (const auto& r : tr.rows)
        put_row(buf, {r.t, r.i, r.y_a, r.y_b, r.x1_a, r.x1_b});
    write_all(path, buf);
}

void write_metrics(const std::string& path,
                   const std::vector<std::pair<std::string, double>>& metrics) {
    std::string buf = "metric,value\n";
    for (const auto& [name, value] : metrics)
        buf += name + ',' + format_double(value) + '\n';
    write_all(path, buf);
}

// ------------------------------------------------------------------- CSV in

TelemetryReadResult read_telemetry(const std::string& path) {
    TelemetryReadResult out;
    const auto body = read_csv_body(path, {"t_s", "i_A", "y_V"});
    out.samples.reserve(body.size());
    for (std::size_t j = 0; j < body.size(); ++j) {
        const auto fields = split_csv(body[j]);
        if (fields.size() < 3)
            throw ParseError(path + ": data row " + std::to_string(j + 1) +
                             ": expected at least 3 columns");
        TelemetrySample s{};
        s.t = field_double(path, j, fields[0]);
        s.i = field_double(path, j, fields[1]);
        s.y = field_double(path, j, fields[2]);
        if (!out.samples.empty() && !(s.t > out.samples.back().t))
            throw NonMonotonicTime(path + ": timestamps must increase strictly (row " +
                                   std::to_string(j + 1) + ")");
        out.samples.push_back(s);
    }
    if (out.samples.size() < 2)
        return out;

    std::vector<double> diffs;
    diffs.reserve(out.samples.size() - 1);
    for (std::size_t j = 1; j < out.samples.size(); ++j)
        diffs.push_back(out.samples[j].t - out.samples[j - 1].t);
    const double dt0 = diffs.front();
    bool uniform = true;
    for (double d : diffs)
        if (std::abs(d - dt0) > 1e-6) {
            uniform = false;
            break;
        }
    if (uniform) {
        out.dt = dt0;
        return out;
    }

    // jittered or gappy stream: sample-and-hold onto the median spacing
    std::vector<double> sorted = diffs;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size() / 2;
    const double dtm =
        sorted.size() % 2 == 1 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
    const double t0 = out.samples.front().t;
    const double t_last = out.samples.back().t;
    std::vector<TelemetrySample> grid;
    std::size_t src = 0;
    for (long k = 0;; ++k) {
        const double tk = t0 + static_cast<double>(k) * dtm;
        if (tk > t_last + 0.5 * dtm)
            break;
        while (src + 1 < out.samples.size() && out.samples[src + 1].t <= tk)
            ++src;
        grid.push_back({tk, out.samples[src].i, out.samples[src].y});
    }
    std::ostringstream note;
    note << "non-uniform sample spacing; resampled " << out.samples.size() << " rows onto a "
         << grid.size() << "-point uniform grid at dt=" << format_double(dtm) << " s";
    out.notes.push_back(note.str());
    out.samples = std::move(grid);
    out.dt = dtm;
    out.resampled = true;
    return out;
}

ParameterSet read_parameters(const std::string& path) {
    const auto body = read_csv_body(path, {"name", "value"});
    ParameterSet p;
    std::set<int> seen;
    for (std::size_t j = 0; j < body.size(); ++j) {
        const auto fields = split_csv(body[j]);
        if (fields.size() < 2)
            throw ParseError(path + ": data row " + std::to_string(j + 1) +
                             ": expected name,value");
        const std::string& name = fields[0];
        int n = 0;
        if (name.size() >= 2 && name[0] == 'r') {
            try {
                n = std::stoi(name.substr(1));
            } catch (...) {
                n = 0;
            }
        }
        if (n < 1 || n > 21)
            throw ConfigRejected(path + ": unknown parameter name '" + name + "'");
        if (!seen.insert(n).second)
            throw ConfigRejected(path + ": duplicate parameter '" + name + "'");
        p[n] = field_double(path, j, fields[1]);
    }
    if (seen.size() != 21)
        throw ConfigRejected(path + ": expected all 21 parameters r1..r21, found " +
                             std::to_string(seen.size()));
    return p;
}

CurrentTable read_profile_csv(const std::string& path) {
    const auto body = read_csv_body(path, {"t_s", "i_A"});
    CurrentTable tab;
    tab.points.reserve(body.size());
    for (std::size_t j = 0; j < body.size(); ++j) {
        const auto fields = split_csv(body[j]);
        if (fields.size() < 2)
            throw ParseError(path + ": data row " + std::to_string(j + 1) +
                             ": expected at least 2 columns");
        tab.points.push_back({field_double(path, j, fields[0]), field_double(path, j, fields[1])});
    }
    return tab;
}

std::vector<double> read_csv_column(const std::string& path, const std::string& column) {
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line))
        throw ParseError(path + ": missing header row");
    const auto head = split_csv(rtrim_cr(line));
    std::size_t col = head.size();
    for (std::size_t j = 0; j < head.size(); ++j)
        if (head[j] == column)
            col = j;
    if (col == head.size())
        throw ParseError(path + ": no column named '" + column + "'");
    std::vector<double> out;
    std::size_t row = 0;
    while (std::getline(f, line)) {
        line = rtrim_cr(line);
        if (line.empty())
            continue;
        const auto fields = split_csv(line);
        if (fields.size() <= col)
            throw ParseError(path + ": data row " + std::to_string(row + 1) + ": too few columns");
        out.push_back(field_double(path, row, fields[col]));
        ++row;
    }
    return out;
}

// -------------------------------------------------------------- INI configs

namespace {

struct IniSection {
    std::string name;
    std::map<std::string, std::string> kv;
    std::set<std::string> consumed;
};

std::string trim(const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos)
        return "";
    const std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::map<std::string, IniSection> parse_ini(const std::string& path) {
    auto f = open_in(path);
    std::map<std::string, IniSection> sections;
    std::string line;
    std::string current;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        line = trim(rtrim_cr(line));
        if (line.empty() || line[0] == '#' || line[0] == ';')
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError(path + ":" + std::to_string(lineno) + ": unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty())
                throw ParseError(path + ":" + std::to_string(lineno) + ": empty section name");
            if (sections.count(current))
                throw ConfigRejected(path + ": duplicate section [" + current + "]");
            sections[current].name = current;
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected key = value");
        if (current.empty())
            throw ParseError(path + ":" + std::to_string(lineno) + ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError(path + ":" + std::to_string(lineno) + ": empty key");
        if (!sections[current].kv.emplace(key, value).second)
            throw ConfigRejected(path + ": duplicate key '" + key + "' in [" + current + "]");
    }
    return sections;
}

// consume-tracking accessors; leftovers become rejection errors
bool has_key(IniSection& sec, const std::string& key) {
    return sec.kv.count(key) != 0;
}

std::string take(IniSection& sec, const std::string& key) {
    sec.consumed.insert(key);
    return sec.kv.at(key);
}

double take_double(const std::string& path, IniSection& sec, const std::string& key) {
    try {
        return parse_double(take(sec, key));
    } catch (const ParseError& ex) {
        throw ParseError(path + ": [" + sec.name + "] " + key + ": " + ex.what());
    }
}

double take_double_or(const std::string& path, IniSection& sec, const std::string& key,
                      double fallback) {
    if (!has_key(sec, key))
        return fallback;
    return take_double(path, sec, key);
}

void reject_leftovers(const std::string& path, const std::map<std::string, IniSection>& sections,
                      const std::set<std::string>& allowed_sections) {
    for (const auto& [name, sec] : sections) {
        if (!allowed_sections.count(name))
            throw ConfigRejected(path + ": unknown section [" + name + "]");
        for (const auto& [key, value] : sec.kv)
            if (!sec.consumed.count(key))
                throw ConfigRejected(path + ": unknown key '" + key + "' in [" + name + "]");
    }
}

IniSection& need_section(const std::string& path, std::map<std::string, IniSection>& sections,
                         const std::string& name) {
    const auto it = sections.find(name);
    if (it == sections.end())
        throw ConfigRejected(path + ": missing required section [" + name + "]");
    return it->second;
}

} // namespace

ModelConfig read_model_config(const std::string& path) {
    auto sections = parse_ini(path);
    ModelConfig cfg;

    IniSection& pars = need_section(path, sections, "parameters");
    for (int n = 1; n <= 21; ++n) {
        const std::string key = "r" + std::to_string(n);
        if (!has_key(pars, key))
            throw ConfigRejected(path + ": [parameters] missing " + key);
        const double v = take_double(path, pars, key);
        if (!(v > 0.0))
            throw ConfigRejected(path + ": [parameters] " + key + " must be > 0");
        cfg.params[n] = v;
    }

    if (sections.count("capacity")) {
        IniSection& cap = sections.at("capacity");
        cfg.cap.c_ah = take_double_or(path, cap, "c_ah", cfg.cap.c_ah);
        cfg.cap.f1 = take_double_or(path, cap, "f1", cfg.cap.f1);
        cfg.cap.f2 = take_double_or(path, cap, "f2", cfg.cap.f2);
        cfg.cap.f3 = take_double_or(path, cap, "f3", cfg.cap.f3);
        for (double v : {cfg.cap.c_ah, cfg.cap.f1, cfg.cap.f2, cfg.cap.f3})
            if (!(v > 0.0))
                throw ConfigRejected(path + ": [capacity] entries must be > 0");
    }

    IniSection& sim = need_section(path, sections, "simulation");
    if (!has_key(sim, "t_end"))
        throw ConfigRejected(path + ": [simulation] missing t_end");
    cfg.t_end = take_double(path, sim, "t_end");
    cfg.dt = take_double_or(path, sim, "dt", cfg.dt);
    cfg.z0 = take_double_or(path, sim, "z0", cfg.z0);
    cfg.z_floor = take_double_or(path, sim, "z_floor", cfg.z_floor);
    if (!(cfg.dt > 0.0))
        throw ConfigRejected(path + ": [simulation] dt must be > 0");
    if (!(cfg.t_end >= 0.0))
        throw ConfigRejected(path + ": [simulation] t_end must be >= 0");
    if (!(cfg.z_floor > 0.0 && cfg.z_floor < 1.0))
        throw ConfigRejected(path + ": [simulation] z_floor must lie in (0, 1)");
    if (!(cfg.z0 >= cfg.z_floor && cfg.z0 <= 1.0))
        throw ConfigRejected(path + ": [simulation] z0 must lie in [z_floor, 1]");

    IniSection& prof = need_section(path, sections, "profile");
    if (!has_key(prof, "kind"))
        throw ConfigRejected(path + ": [profile] missing kind");
    const std::string kind = take(prof, "kind");
    if (kind == "constant_current") {
        cfg.profile = ConstantCurrent{take_double(path, prof, "i_a")};
    } else if (kind == "constant_resistance") {
        cfg.profile = ConstantResistance{take_double(path, prof, "r_ohm")};
    } else if (kind == "pulsed_resistance") {
        cfg.profile = PulsedResistance{take_double(path, prof, "r_ohm"),
                                       take_double(path, prof, "t_on"),
                                       take_double(path, prof, "t_off")};
    } else if (kind == "current_table") {
        if (!has_key(prof, "path"))
            throw ConfigRejected(path + ": [profile] current_table needs path");
        std::filesystem::path rel(take(prof, "path"));
        if (rel.is_relative())
            rel = std::filesystem::path(path).parent_path() / rel;
        cfg.profile = read_profile_csv(rel.string());
    } else {
        throw ConfigRejected(path + ": [profile] unknown kind '" + kind + "'");
    }

    reject_leftovers(path, sections, {"parameters", "capacity", "simulation", "profile"});
    return cfg;
}

EstimatorConfig read_estimator_config(const std::string& path) {
    auto sections = parse_ini(path);
    EstimatorConfig cfg;

    if (sections.count("estimator")) {
        IniSection& est = sections.at("estimator");
        cfg.cc = take_double_or(path, est, "cc", cfg.cc);
        cfg.dt = take_double_or(path, est, "dt", cfg.dt);
        cfg.epsilon = take_double_or(path, est, "epsilon", cfg.epsilon);
        cfg.z0 = take_double_or(path, est, "z0", cfg.z0);
        cfg.z_floor = take_double_or(path, est, "z_floor", cfg.z_floor);
        cfg.k0 = take_double_or(path, est, "k0", cfg.k0);
        cfg.gain.alpha = take_double_or(path, est, "alpha", cfg.gain.alpha);
        cfg.gain.lam = take_double_or(path, est, "lambda", cfg.gain.lam);
        cfg.current_warn_frac =
            take_double_or(path, est, "current_warn_frac", cfg.current_warn_frac);
        if (has_key(est, "aggregation")) {
            const std::string agg = take(est, "aggregation");
            if (agg == "mean")
                cfg.aggregation = Aggregation::Mean;
            else if (agg == "median")
                cfg.aggregation = Aggregation::Median;
            else
                throw ConfigRejected(path + ": [estimator] aggregation must be mean or median");
        }
    }

    IniSection& bounds = need_section(path, sections, "bounds");
    for (const auto& [key, value] : bounds.kv) {
        if (key.size() < 2 || key[0] != 'r')
            throw ConfigRejected(path + ": [bounds] unknown key '" + key + "'");
        int n = 0;
        try {
            n = std::stoi(key.substr(1));
        } catch (...) {
            throw ConfigRejected(path + ": [bounds] unknown key '" + key + "'");
        }
        if (n < 1 || n > 21)
            throw ConfigRejected(path + ": [bounds] unknown key '" + key + "'");
        const auto fields = split_csv(value);
        if (fields.size() != 5)
            throw ParseError(path + ": [bounds] " + key +
                             ": expected r_u, r_l, lambda_x, lambda_y, r_init");
        BoundsEntry b{};
        try {
            b.r_u = parse_double(fields[0]);
            b.r_l = parse_double(fields[1]);
            b.lambda_x = parse_double(fields[2]);
            b.lambda_y = parse_double(fields[3]);
            b.r_init = parse_double(fields[4]);
        } catch (const ParseError& ex) {
            throw ParseError(path + ": [bounds] " + key + ": " + ex.what());
        }
        cfg.bounds[n] = b;
        bounds.consumed.insert(key);
    }

    reject_leftovers(path, sections, {"estimator", "bounds"});
    return cfg;
}

// --------------------------------------------------------------- generation

CurrentTable make_profile(std::uint64_t seed, double t_end, double hold, double i_min,
                          double i_max) {
    if (!(t_end > 0.0) || !(hold > 0.0))
        throw DomainError("make_profile: t_end and hold must be > 0");
    if (!(i_max >= i_min))
        throw DomainError("make_profile: need i_min <= i_max");
    std::mt19937_64 eng(seed);
    CurrentTable tab;
    for (long k = 0; static_cast<double>(k) * hold < t_end; ++k) {
        // top 53 bits -> uniform double in [0, 1); bypasses distribution
        // classes so the stream is identical across standard libraries
        const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
        tab.points.push_back({static_cast<double>(k) * hold, i_min + u * (i_max - i_min)});
    }
    return tab;
}

} // namespace bms
