#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "bands.hpp"
#include "model.hpp"

namespace spectra::cli {

using nlohmann::json;

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 1;
inline constexpr int exit_range = 2;
inline constexpr int exit_violations = 3;

inline constexpr const char* schema_version = "1";

// verify: the violation-free tail must start in the lower part of the scan
inline constexpr double verify_tail_fraction = 0.5;
// fewer clusters than this in range cannot say anything about asymptotics
inline constexpr std::size_t min_clusters = 10;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RangeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command { trace, bands, stats, verify };
enum class OutFormat { csv, json };

inline std::string to_string(Command c)
{
    switch (c) {
    case Command::trace: return "trace";
    case Command::bands: return "bands";
    case Command::stats: return "stats";
    case Command::verify: return "verify";
    }
    return "?";
}

struct RunConfig {
    ModelParams model;
    double k_min = 0.1;
    double k_max = 60.0;
    int resolution = 64;
    double epsilon = 0.3;
    OutFormat format = OutFormat::csv;
    std::string regime = "auto"; // stats: auto | power | log | both
    std::string out;             // empty: stdout
};

inline double default_k_max(ModelKind m) { return is_carpet(m) ? 40.0 : 60.0; }

/// Effective configuration as echoed into every report.  The output path is
/// left out so a report does not depend on where it was written.
inline json to_json(const RunConfig& c)
{
    json j;
    j["schema"] = std::string("spectra.config/") + schema_version;
    j["model"] = to_string(c.model.kind);
    j["form"] = to_string(c.model.form);
    j["a"] = c.model.a;
    if (is_loose(c.model.kind))
        j["d"] = c.model.d;
    j["alpha"] = c.model.alpha;
    j["k_min"] = c.k_min;
    j["k_max"] = c.k_max;
    j["resolution"] = c.resolution;
    j["epsilon"] = c.epsilon;
    j["format"] = c.format == OutFormat::csv ? "csv" : "json";
    j["regime"] = c.regime;
    return j;
}

namespace detail {

inline int line_of_offset(const std::string& text, std::size_t off)
{
    int line = 1;
    for (std::size_t i = 0; i < off && i < text.size(); ++i)
        if (text[i] == '\n')
            ++line;
    return line;
}

inline std::string where(const std::string& text, const std::string& key)
{
    const auto pos = text.find("\"" + key + "\"");
    if (pos == std::string::npos)
        return "field '" + key + "'";
    return "line " + std::to_string(line_of_offset(text, pos)) + ", field '" + key + "'";
}

inline double get_number(const json& j, const std::string& key, const std::string& text)
{
    const auto& v = j.at(key);
    if (!v.is_number())
        throw ConfigError(where(text, key) + ": expected a number");
    return v.get<double>();
}

inline std::string get_string(const json& j, const std::string& key, const std::string& text)
{
    const auto& v = j.at(key);
    if (!v.is_string())
        throw ConfigError(where(text, key) + ": expected a string");
    return v.get<std::string>();
}

} // namespace detail

/// Builds a validated configuration from a JSON object.  `text` is the raw
/// document, used only for line numbers in diagnostics.
inline RunConfig config_from_json(const json& j, const std::string& text = {})
{
    using detail::where;
    if (!j.is_object())
        throw ConfigError("configuration must be a JSON object");
    static const std::vector<std::string> known = {"schema", "model", "form",   "a",      "d",      "alpha", "k_min",
                                                   "k_max",  "resolution", "epsilon", "format", "regime", "out"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw ConfigError(where(text, it.key()) + ": unknown field");

    if (j.contains("schema")) {
        const auto s = detail::get_string(j, "schema", text);
        if (s != std::string("spectra.config/") + schema_version)
            throw ConfigError(where(text, "schema") + ": unsupported schema '" + s + "'");
    }
    if (!j.contains("model"))
        throw ConfigError("field 'model' is required");
    RunConfig c;
    const auto mname = detail::get_string(j, "model", text);
    const auto mk = parse_model(mname);
    if (!mk)
        throw ConfigError(where(text, "model") + ": unknown model '" + mname + "'");
    c.model.kind = *mk;
    c.k_max = default_k_max(*mk);
    c.epsilon = default_epsilon(*mk);

    if (j.contains("form")) {
        const auto f = parse_form(detail::get_string(j, "form", text));
        if (!f)
            throw ConfigError(where(text, "form") + ": expected 'determinant' or 'literal'");
        c.model.form = *f;
    }
    auto positive = [&](const char* key, double& dst) {
        if (!j.contains(key))
            return;
        dst = detail::get_number(j, key, text);
        if (!(dst > 0.0) || !std::isfinite(dst))
            throw ConfigError(where(text, key) + ": must be positive");
    };
    positive("a", c.model.a);
    if (j.contains("d") && is_tight(c.model.kind))
        throw ConfigError(where(text, "d") + ": tight models have no segments; remove 'd'");
    positive("d", c.model.d);
    positive("alpha", c.model.alpha);
    positive("k_min", c.k_min);
    positive("k_max", c.k_max);
    if (!(c.k_max > c.k_min))
        throw ConfigError(where(text, "k_max") + ": must exceed k_min");
    if (j.contains("resolution")) {
        const auto& v = j.at("resolution");
        if (!v.is_number_integer())
            throw ConfigError(where(text, "resolution") + ": expected an integer");
        c.resolution = v.get<int>();
        if (c.resolution < 16)
            throw ConfigError(where(text, "resolution") + ": must be at least 16");
    }
    if (j.contains("epsilon"))
        c.epsilon = detail::get_number(j, "epsilon", text);
    if (!(c.epsilon > 0.0 && c.epsilon < epsilon_cap(c.model.kind)))
        throw ConfigError(where(text, "epsilon") + ": must lie in (0, " + json(epsilon_cap(c.model.kind)).dump() +
                          ") for " + to_string(c.model.kind));
    if (j.contains("format")) {
        const auto f = detail::get_string(j, "format", text);
        if (f != "csv" && f != "json")
            throw ConfigError(where(text, "format") + ": expected 'csv' or 'json'");
        c.format = f == "csv" ? OutFormat::csv : OutFormat::json;
    }
    if (j.contains("regime")) {
        c.regime = detail::get_string(j, "regime", text);
        if (c.regime != "auto" && c.regime != "power" && c.regime != "log" && c.regime != "both")
            throw ConfigError(where(text, "regime") + ": expected auto, power, log or both");
    }
    if (j.contains("out"))
        c.out = detail::get_string(j, "out", text);
    return c;
}

/// Reads a configuration document.  Reports written by this tool are accepted
/// too: the embedded "config" object (JSON) or the "# config:" line (CSV).
inline json read_config_document(const std::string& text)
{
    auto parse = [](const std::string& t, int line_base) {
        try {
            return json::parse(t);
        } catch (const json::parse_error& e) {
            throw ConfigError("line " + std::to_string(line_base + detail::line_of_offset(t, e.byte) - 1) +
                              ": JSON parse error: " + e.what());
        }
    };
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '#') {
        std::istringstream in(text);
        std::string line;
        int n = 0;
        while (std::getline(in, line)) {
            ++n;
            const std::string tag = "# config: ";
            if (line.rfind(tag, 0) == 0)
                return parse(line.substr(tag.size()), n);
        }
        throw ConfigError("no '# config:' line found in report header");
    }
    json j = parse(text, 1);
    if (j.is_object() && j.contains("config") && j.at("config").is_object())
        return j.at("config");
    return j;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes through a temporary file in the target directory, then renames.
inline void write_atomic(const std::string& path, const std::string& data)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ConfigError("cannot write '" + tmp.string() + "'");
        out << data;
        out.flush();
        if (!out)
            throw ConfigError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw ConfigError("cannot rename onto '" + path + "': " + ec.message());
    }
}

// ---- formatting -------------------------------------------------------------

/// Shortest representation that reads back to the same double.
inline std::string fmt(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

// JSON has no inf/nan; such values become null
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Report {
    std::string text;
    int exit_code = exit_ok;
};

namespace detail {

inline std::string csv_header(Command cmd, const RunConfig& c)
{
    std::string h = "# spectra " + to_string(cmd) + " schema=spectra." + to_string(cmd) + "/" + schema_version + "\n";
    h += "# config: " + to_json(c).dump() + "\n";
    return h;
}

inline json json_header(Command cmd, const RunConfig& c)
{
    json j;
    j["schema"] = "spectra." + to_string(cmd) + "/" + schema_version;
    j["command"] = to_string(cmd);
    j["config"] = to_json(c);
    return j;
}

inline ScanResult scan(const RunConfig& c)
{
    return scan_bands(c.model, c.k_min, c.k_max, ScanOptions{c.resolution});
}

inline json pole_json(const std::optional<PolePoint>& p)
{
    if (!p)
        return nullptr;
    return json{{"family", to_string(p->family)}, {"n", p->n}, {"k", p->k}};
}

} // namespace detail

// ---- commands ---------------------------------------------------------------

inline Report cmd_trace(const RunConfig& c)
{
    const auto grid = scan_grid(c.model, c.k_min, c.k_max, c.resolution);
    const bool carpet = is_carpet(c.model.kind);
    struct Row {
        double k;
        bool guard;
        Probe pr;
    };
    std::vector<Row> rows;
    rows.reserve(grid.size());
    for (const auto& g : grid) {
        Row r{g.k, g.guard, {}};
        if (!g.guard) {
            r.pr = probe(g.k, c.model);
            r.guard = r.pr.singular;
        }
        rows.push_back(r);
    }
    Report rep;
    if (c.format == OutFormat::csv) {
        std::string s = detail::csv_header(Command::trace, c);
        s += "# grid_size: " + std::to_string(rows.size()) + "\n";
        s += "k,value,value2,guard_flag\n";
        for (const auto& r : rows) {
            s += fmt(r.k) + ",";
            if (!r.guard) {
                s += fmt(r.pr.value) + ",";
                if (carpet)
                    s += fmt(r.pr.value2);
            } else {
                s += ",";
            }
            s += r.guard ? ",1\n" : ",0\n";
        }
        rep.text = std::move(s);
    } else {
        json j = detail::json_header(Command::trace, c);
        j["grid_size"] = rows.size();
        j["value"] = carpet ? "torus_min" : "cos_theta";
        j["value2"] = carpet ? json("torus_max") : json(nullptr);
        json arr = json::array();
        for (const auto& r : rows) {
            json row{{"k", r.k}, {"guard", r.guard}};
            row["value"] = r.guard ? json(nullptr) : num(r.pr.value);
            row["value2"] = (r.guard || !carpet) ? json(nullptr) : num(r.pr.value2);
            arr.push_back(row);
        }
        j["rows"] = std::move(arr);
        rep.text = j.dump(1) + "\n";
    }
    return rep;
}

inline Report cmd_bands(const RunConfig& c)
{
    const auto res = detail::scan(c);
    const auto gaps = gaps_from_bands(res.bands, c.k_min, c.k_max);
    Report rep;
    if (c.format == OutFormat::csv) {
        std::string s = detail::csv_header(Command::bands, c);
        for (const auto& w : res.warnings)
            s += "# warning: " + w + "\n";
        s += "idx,k_lo,k_hi,z_lo,z_hi,pole_family,pole_n\n";
        int i = 0;
        for (const auto& b : res.bands) {
            s += std::to_string(++i) + "," + fmt(b.k_lo) + "," + fmt(b.k_hi) + "," + fmt(b.k_lo * b.k_lo) + "," +
                 fmt(b.k_hi * b.k_hi) + ",";
            s += b.pole ? to_string(b.pole->family) + "," + std::to_string(b.pole->n) : std::string(",");
            s += "\n";
        }
        s += "# gaps\n";
        s += "idx,k_lo,k_hi,z_lo,z_hi,pole_family,pole_n\n";
        i = 0;
        for (const auto& g : gaps)
            s += std::to_string(++i) + "," + fmt(g.k_lo) + "," + fmt(g.k_hi) + "," + fmt(g.k_lo * g.k_lo) + "," +
                 fmt(g.k_hi * g.k_hi) + ",,\n";
        rep.text = std::move(s);
    } else {
        json j = detail::json_header(Command::bands, c);
        json bs = json::array(), gs = json::array();
        int i = 0;
        for (const auto& b : res.bands)
            bs.push_back({{"idx", ++i},
                          {"k_lo", b.k_lo},
                          {"k_hi", b.k_hi},
                          {"z_lo", b.k_lo * b.k_lo},
                          {"z_hi", b.k_hi * b.k_hi},
                          {"pole", detail::pole_json(b.pole)}});
        i = 0;
        for (const auto& g : gaps)
            gs.push_back({{"idx", ++i},
                          {"k_lo", g.k_lo},
                          {"k_hi", g.k_hi},
                          {"z_lo", g.k_lo * g.k_lo},
                          {"z_hi", g.k_hi * g.k_hi}});
        j["bands"] = std::move(bs);
        j["gaps"] = std::move(gs);
        j["warnings"] = res.warnings;
        rep.text = j.dump(1) + "\n";
    }
    return rep;
}

inline std::vector<RatioRegime> regimes_for(const RunConfig& c)
{
    const RatioRegime own = is_loose(c.model.kind) ? RatioRegime::power : RatioRegime::log;
    if (c.regime == "power")
        return {RatioRegime::power};
    if (c.regime == "log")
        return {RatioRegime::log};
    if (c.regime == "both")
        return {own, own == RatioRegime::power ? RatioRegime::log : RatioRegime::power};
    return {own};
}

inline Report cmd_stats(const RunConfig& c)
{
    const auto res = detail::scan(c);
    const auto fam = interval_family(c.model, c.epsilon, c.k_max);
    const auto stats = band_gap_stats(res.bands, fam, c.k_min, c.k_max);
    if (stats.size() < min_clusters)
        throw RangeError("insufficient range: " + std::to_string(stats.size()) + " clusters in [k_min, k_max], need " +
                         std::to_string(min_clusters));
    std::vector<RatioFit> fits;
    for (auto r : regimes_for(c))
        fits.push_back(fit_ratio_bound(stats, r, c.epsilon));
    const auto& primary = fits.front();

    Report rep;
    if (c.format == OutFormat::csv) {
        std::string s = detail::csv_header(Command::stats, c);
        for (const auto& f : fits)
            s += "# fit " + to_string(f.regime) + ": envelope=" + fmt(f.envelope) + " n0=" + std::to_string(f.n0) +
                 " early_max=" + fmt(f.early_max) + " late_max=" + fmt(f.late_max) +
                 " non_increasing=" + (f.non_increasing ? "1" : "0") +
                 " trend_inversions=" + std::to_string(f.trend_inversions) +
                 " consistent=" + (f.consistent ? "1" : "0") + "\n";
        s += "n,pole_k,B_n,L_n,ratio,envelope_C\n";
        for (std::size_t i = 0; i < stats.size(); ++i) {
            const auto& st = stats[i];
            s += std::to_string(st.n) + "," + fmt(st.pole.k) + "," + fmt(st.B) + "," + fmt(st.L) + "," + fmt(st.ratio) +
                 "," + (std::isnan(primary.C[i]) ? std::string() : fmt(primary.C[i])) + "\n";
        }
        rep.text = std::move(s);
    } else {
        json j = detail::json_header(Command::stats, c);
        json rows = json::array();
        for (std::size_t i = 0; i < stats.size(); ++i) {
            const auto& st = stats[i];
            rows.push_back({{"n", st.n},
                            {"pole_k", st.pole.k},
                            {"pole_family", to_string(st.pole.family)},
                            {"cluster", {st.cluster_lo, st.cluster_hi}},
                            {"B_n", st.B},
                            {"L_n", st.L},
                            {"ratio", num(st.ratio)},
                            {"envelope_C", num(primary.C[i])}});
        }
        json fj = json::array();
        for (const auto& f : fits)
            fj.push_back({{"regime", to_string(f.regime)},
                          {"epsilon", f.epsilon},
                          {"n0", f.n0},
                          {"envelope", num(f.envelope)},
                          {"early_max", num(f.early_max)},
                          {"late_max", num(f.late_max)},
                          {"bounded", f.bounded},
                          {"non_increasing", f.non_increasing},
                          {"trend_inversions", f.trend_inversions},
                          {"trend_ok", f.trend_ok},
                          {"consistent", f.consistent}});
        j["stats"] = std::move(rows);
        j["fits"] = std::move(fj);
        rep.text = j.dump(1) + "\n";
    }
    return rep;
}

struct Verification {
    IntervalFamily family;
    DominanceReport dominance;
    std::size_t clusters = 0;
    bool verified = false;
};

inline Verification verify(const RunConfig& c)
{
    Verification v;
    v.family = interval_family(c.model, c.epsilon, c.k_max);
    for (const auto& h : v.family.hulls())
        if (h.hi >= c.k_min && h.lo <= c.k_max)
            ++v.clusters;
    if (v.clusters < min_clusters)
        throw RangeError("insufficient range: " + std::to_string(v.clusters) + " pole clusters up to k_max, need " +
                         std::to_string(min_clusters));
    const auto res = detail::scan(c);
    v.dominance = check_gap_dominance(res.bands, v.family, 0.0);
    v.verified = v.dominance.k_clear <= verify_tail_fraction * c.k_max;
    return v;
}

inline Report cmd_verify(const RunConfig& c)
{
    const auto v = verify(c);
    Report rep;
    rep.exit_code = v.verified ? exit_ok : exit_violations;
    const auto& d = v.dominance;
    if (c.format == OutFormat::csv) {
        std::string s = detail::csv_header(Command::verify, c);
        s += "# K: " + fmt(d.k_clear) + "\n";
        s += "# scanned_to: " + fmt(c.k_max) + "\n";
        s += "# clusters: " + std::to_string(v.clusters) + "\n";
        s += std::string("# verified: ") + (v.verified ? "1" : "0") + "\n";
        s += "idx,k_lo,k_hi\n";
        int i = 0;
        for (const auto& iv : d.violations)
            s += std::to_string(++i) + "," + fmt(iv.lo) + "," + fmt(iv.hi) + "\n";
        rep.text = std::move(s);
    } else {
        json j = detail::json_header(Command::verify, c);
        j["K"] = d.k_clear;
        j["scanned_to"] = c.k_max;
        j["clusters"] = v.clusters;
        j["verified"] = v.verified;
        json arr = json::array();
        for (const auto& iv : d.violations)
            arr.push_back({{"k_lo", iv.lo}, {"k_hi", iv.hi}});
        j["violations"] = std::move(arr);
        rep.text = j.dump(1) + "\n";
    }
    return rep;
}

inline Report run(Command cmd, const RunConfig& c)
{
    switch (cmd) {
    case Command::trace: return cmd_trace(c);
    case Command::bands: return cmd_bands(c);
    case Command::stats: return cmd_stats(c);
    case Command::verify: return cmd_verify(c);
    }
    return {};
}

} // namespace spectra::cli
