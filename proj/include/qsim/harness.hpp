#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "qsim/error.hpp"
#include "qsim/policies.hpp"
#include "qsim/simulator.hpp"
#include "qsim/t2fls.hpp"

namespace qsim {

inline constexpr std::string_view kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

namespace text {

inline std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
std::optional<T> parse_number(std::string_view s) noexcept {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return value;
}

// Shortest representation that round-trips through from_chars.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace text

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Sensor log ingestion
// ---------------------------------------------------------------------------

// One row of a lab sensor log:
//   date time epoch mote_id temperature humidity light voltage
struct SensorRecord {
    std::chrono::year_month_day date{};
    std::chrono::microseconds time{};  // since midnight
    std::int64_t epoch = 0;
    int mote_id = 0;
    double temperature = 0.0;
    double humidity = 0.0;
    double light = 0.0;
    double voltage = 0.0;
};

struct IngestResult {
    std::vector<SensorRecord> records;
    std::size_t dropped = 0;
    std::vector<std::string> diagnostics;  // one per dropped row
    std::uint64_t checksum = 0;            // fnv1a64 over the raw bytes
};

namespace detail {

inline std::optional<std::chrono::year_month_day> parse_date(std::string_view s) {
    const auto parts = text::split(s, '-');
    if (parts.size() != 3) return std::nullopt;
    const auto y = text::parse_number<int>(parts[0]);
    const auto m = text::parse_number<unsigned>(parts[1]);
    const auto d = text::parse_number<unsigned>(parts[2]);
    if (!y || !m || !d) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*m},
                                          std::chrono::day{*d}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

inline std::optional<std::chrono::microseconds> parse_time(std::string_view s) {
    const auto parts = text::split(s, ':');
    if (parts.size() != 3) return std::nullopt;
    const auto h = text::parse_number<int>(parts[0]);
    const auto m = text::parse_number<int>(parts[1]);
    const auto sec = text::parse_number<double>(parts[2]);
    if (!h || !m || !sec || *h < 0 || *h > 23 || *m < 0 || *m > 59 || !(*sec >= 0.0) ||
        !(*sec < 61.0))
        return std::nullopt;
    using namespace std::chrono;
    return hours{*h} + minutes{*m} + microseconds{static_cast<std::int64_t>(std::llround(*sec * 1e6))};
}

inline std::optional<SensorRecord> parse_sensor_row(std::string_view line, std::string& why) {
    std::vector<std::string> tok;
    {
        std::istringstream in{std::string(line)};
        for (std::string t; in >> t;) tok.push_back(std::move(t));
    }
    if (tok.size() != 8) {
        why = "expected 8 columns, found " + std::to_string(tok.size());
        return std::nullopt;
    }
    SensorRecord r;
    const auto date = parse_date(tok[0]);
    const auto time = parse_time(tok[1]);
    const auto epoch = text::parse_number<std::int64_t>(tok[2]);
    const auto mote = text::parse_number<int>(tok[3]);
    if (!date) { why = "bad date '" + tok[0] + "'"; return std::nullopt; }
    if (!time) { why = "bad time '" + tok[1] + "'"; return std::nullopt; }
    if (!epoch) { why = "bad epoch '" + tok[2] + "'"; return std::nullopt; }
    if (!mote) { why = "bad mote id '" + tok[3] + "'"; return std::nullopt; }
    std::array<double, 4> v{};
    for (std::size_t i = 0; i < 4; ++i) {
        const auto x = text::parse_number<double>(tok[4 + i]);
        if (!x || !std::isfinite(*x)) {
            why = "non-numeric or non-finite sensor field '" + tok[4 + i] + "'";
            return std::nullopt;
        }
        v[i] = *x;
    }
    r.date = *date;
    r.time = *time;
    r.epoch = *epoch;
    r.mote_id = *mote;
    r.temperature = v[0];
    r.humidity = v[1];
    r.light = v[2];
    r.voltage = v[3];
    return r;
}

}  // namespace detail

// Parses whitespace-separated sensor rows. Blank lines are ignored; malformed
// rows are dropped, counted, and described in `diagnostics`.
inline IngestResult parse_sensor_log(std::string_view content) {
    IngestResult out;
    out.checksum = fnv1a64(content);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        const std::size_t end = std::min(content.find('\n', pos), content.size());
        const std::string_view line = text::trim(content.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        std::string why;
        if (auto rec = detail::parse_sensor_row(line, why)) {
            out.records.push_back(*rec);
        } else {
            ++out.dropped;
            out.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why);
        }
    }
    std::stable_sort(out.records.begin(), out.records.end(), [](const auto& a, const auto& b) {
        return a.epoch != b.epoch ? a.epoch < b.epoch : a.mote_id < b.mote_id;
    });
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("error reading '" + path.string() + "'");
    return ss.str();
}

inline IngestResult ingest_sensor_log(const std::filesystem::path& path) {
    IngestResult r = parse_sensor_log(read_file(path));
    for (const auto& d : r.diagnostics) std::clog << "qsim: " << path.string() << ": " << d << '\n';
    return r;
}

// (temperature, humidity, light, voltage) per record. With `mote` set only
// that mote's rows are kept, otherwise all motes are merged in (epoch, mote)
// order.
inline std::vector<DataVector> to_data_vectors(const std::vector<SensorRecord>& records,
                                               std::optional<int> mote = std::nullopt) {
    std::vector<DataVector> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (mote && r.mote_id != *mote) continue;
        out.push_back(DataVector{{r.temperature, r.humidity, r.light, r.voltage},
                                 static_cast<std::int64_t>(out.size() + 1)});
    }
    return out;
}

// Writes 4-dimensional vectors in the sensor log layout, one mote, so that a
// generated stream can be replayed with `--source`.
inline void write_sensor_log(std::ostream& out, std::span<const DataVector> vectors) {
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const auto& v = vectors[i];
        if (v.dim() != 4) throw ConfigError("sensor log layout needs 4-dimensional vectors");
        const std::int64_t secs = static_cast<std::int64_t>(i) * 31 % 86400;
        char clock[32];
        std::snprintf(clock, sizeof clock, "%02d:%02d:%02d.000000", static_cast<int>(secs / 3600),
                      static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
        out << "2004-02-28 " << clock << ' ' << (i + 1) << " 1";
        for (double x : v.values) out << ' ' << text::format_double(x);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

// Keys are case-insensitive and treat '_' and '-' alike.
inline std::string normalize_key(std::string_view key) {
    std::string k(text::trim(key));
    for (char& c : k) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (c == '_') c = '-';
    }
    return k;
}

inline std::string policy_slug(Policy p) {
    std::string s(to_string(p));
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

using ConfigMap = std::map<std::string, std::string>;

// `key = value` lines; '#' starts a comment.
inline ConfigMap parse_config_text(std::string_view content) {
    ConfigMap out;
    std::size_t line_no = 0;
    for (const auto& raw : text::split(content, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = normalize_key(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        out[key] = std::string(text::trim(line.substr(eq + 1)));
    }
    return out;
}

// Picks up QSIM_<KEY> variables for every key in `keys`.
inline ConfigMap env_overrides(const std::vector<std::string>& keys) {
    ConfigMap out;
    for (const auto& key : keys) {
        std::string var = "QSIM_";
        for (char c : key)
            var += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (const char* v = std::getenv(var.c_str())) out[key] = v;
    }
    return out;
}

// Later layers win.
inline ConfigMap layer(std::initializer_list<ConfigMap> layers) {
    ConfigMap out;
    for (const auto& l : layers)
        for (const auto& [k, v] : l) out[k] = v;
    return out;
}

struct RunConfig {
    std::vector<Policy> policies{Policy::uddm, Policy::bm, Policy::pm};
    std::vector<int> deadlines{10, 100, 1000};
    std::vector<double> thetas{0.6, 0.75};
    int E = 1000;
    int N = 1;
    HoltParams holt;
    std::size_t window = QuantumNormalizer::kDefaultWindow;
    std::uint64_t seed = 42;
    std::string source = "synthetic";
    std::optional<int> mote;  // per-mote replay when set
    SyntheticProfile profile;
    std::size_t dim = 4;
    std::filesystem::path out_dir = "qsim-out";
    unsigned workers = 1;

    // Fuzzy system overrides.
    std::array<t2::Trapezoid, 3> term_uppers{t2::Trapezoid{0.0, 0.0, 0.2, 0.45},
                                             t2::Trapezoid{0.25, 0.45, 0.55, 0.75},
                                             t2::Trapezoid{0.55, 0.8, 1.0, 1.0}};
    double term_shrink = t2::TermSet::kDefaultShrink;
    double term_height = t2::TermSet::kDefaultLowerHeight;
    std::vector<std::pair<std::array<t2::Term, 3>, t2::Term>> rule_overrides;

    static const std::vector<std::string>& known_keys() {
        static const std::vector<std::string> keys{
            "policy", "t",     "theta", "e",         "n",     "alpha",       "beta",
            "window", "seed",  "source", "profile",  "out-dir", "dim",       "slope",
            "noise",  "jump-rate", "jump-scale", "base", "workers", "mote",
            "term-shrink", "term-height", "term-low", "term-medium", "term-high"};
        return keys;
    }

    [[nodiscard]] t2::Engine engine() const {
        const t2::TermSet terms = t2::TermSet::from_uppers(term_uppers, term_shrink, term_height);
        t2::RuleBase rules = t2::RuleBase::rank_average();
        for (const auto& [ante, cons] : rule_overrides) rules.set(ante[0], ante[1], ante[2], cons);
        return t2::Engine(terms, terms, rules);
    }

    [[nodiscard]] ExperimentConfig experiment(Policy p, int T, double theta) const {
        ExperimentConfig c;
        c.N = N;
        c.T = T;
        c.theta = theta;
        c.E = E;
        c.policy = p;
        c.holt = holt;
        c.window = window;
        c.seed = seed;
        return c;
    }

    [[nodiscard]] std::size_t cell_count() const noexcept {
        return policies.size() * deadlines.size() * thetas.size();
    }

    static RunConfig from_map(const ConfigMap& raw) {
        RunConfig c;
        for (const auto& [key, value] : raw) c.apply(normalize_key(key), value);
        c.validate();
        return c;
    }

    void validate() const {
        if (policies.empty() || deadlines.empty() || thetas.empty())
            throw ConfigError("grid needs at least one policy, T and theta");
        for (int T : deadlines)
            if (T < 1) throw ConfigError("T values must be >= 1");
        for (double th : thetas)
            if (!(th > 0.0) || !std::isfinite(th)) throw ConfigError("theta values must be > 0");
        if (E < 1) throw ConfigError("E must be >= 1");
        if (N < 1) throw ConfigError("N must be >= 1");
        if (window < 1) throw ConfigError("window must be >= 1");
        if (dim < 1) throw ConfigError("dim must be >= 1");
        if (workers < 1) throw ConfigError("workers must be >= 1");
        holt.validate();
        if (!(profile.noise >= 0.0) || !(profile.jump_scale >= 0.0))
            throw ConfigError("noise and jump-scale must be >= 0");
        if (!(profile.jump_rate >= 0.0 && profile.jump_rate <= 1.0))
            throw ConfigError("jump-rate must lie in [0,1]");
        (void)engine();  // term and rule parameters
    }

    // Every effective setting, defaults included.
    [[nodiscard]] ConfigMap effective() const {
        auto join = [](const auto& xs, auto fmt) {
            std::string s;
            for (const auto& x : xs) s += (s.empty() ? "" : ",") + fmt(x);
            return s;
        };
        auto num = [](double x) { return text::format_double(x); };
        ConfigMap m{{"policy", join(policies, [](Policy p) { return policy_slug(p); })},
                    {"t", join(deadlines, [](int t) { return std::to_string(t); })},
                    {"theta", join(thetas, num)},
                    {"e", std::to_string(E)},
                    {"n", std::to_string(N)},
                    {"alpha", num(holt.alpha)},
                    {"beta", num(holt.beta)},
                    {"window", std::to_string(window)},
                    {"seed", std::to_string(seed)},
                    {"source", source},
                    {"profile", std::string(to_string(profile.kind))},
                    {"dim", std::to_string(dim)},
                    {"base", num(profile.base)},
                    {"slope", num(profile.slope)},
                    {"noise", num(profile.noise)},
                    {"jump-rate", num(profile.jump_rate)},
                    {"jump-scale", num(profile.jump_scale)},
                    {"out-dir", out_dir.string()},
                    {"term-shrink", num(term_shrink)},
                    {"term-height", num(term_height)}};
        for (t2::Term t : t2::kTerms) {
            const auto& u = term_uppers[static_cast<std::size_t>(t2::rank(t))];
            m["term-" + std::string(t2::to_string(t))] =
                num(u.a) + "," + num(u.b) + "," + num(u.c) + "," + num(u.d);
        }
        for (const auto& [ante, cons] : rule_overrides)
            m["rule." + std::string(t2::to_string(ante[0])) + "." + std::string(t2::to_string(ante[1])) +
              "." + std::string(t2::to_string(ante[2]))] = std::string(t2::to_string(cons));
        if (mote) m["mote"] = std::to_string(*mote);
        return m;
    }

private:
    template <class T>
    static T number(const std::string& key, const std::string& v) {
        const auto x = text::parse_number<T>(v);
        if (!x) throw ConfigError("'" + key + "': cannot parse '" + v + "'");
        return *x;
    }

    template <class T>
    static std::vector<T> list(const std::string& key, const std::string& v) {
        std::vector<T> out;
        for (const auto& item : text::split(v, ',')) out.push_back(number<T>(key, item));
        return out;
    }

    static t2::Term term(const std::string& key, std::string_view v) {
        const auto t = t2::parse_term(text::trim(v));
        if (!t) throw ConfigError("'" + key + "': unknown term '" + std::string(v) + "'");
        return *t;
    }

    void apply(const std::string& key, const std::string& v) {
        if (key == "policy") {
            policies.clear();
            for (const auto& p : text::split(v, ',')) policies.push_back(parse_policy(p));
        } else if (key == "t") {
            deadlines = list<int>(key, v);
        } else if (key == "theta") {
            thetas = list<double>(key, v);
        } else if (key == "e") {
            E = number<int>(key, v);
        } else if (key == "n") {
            N = number<int>(key, v);
        } else if (key == "alpha") {
            holt.alpha = number<double>(key, v);
        } else if (key == "beta") {
            holt.beta = number<double>(key, v);
        } else if (key == "window") {
            window = number<std::size_t>(key, v);
        } else if (key == "seed") {
            seed = number<std::uint64_t>(key, v);
        } else if (key == "source") {
            source = v;
        } else if (key == "mote") {
            mote = number<int>(key, v);
        } else if (key == "profile") {
            profile.kind = SyntheticProfile::parse_kind(v);
        } else if (key == "dim") {
            dim = number<std::size_t>(key, v);
        } else if (key == "slope") {
            profile.slope = number<double>(key, v);
        } else if (key == "noise") {
            profile.noise = number<double>(key, v);
        } else if (key == "jump-rate") {
            profile.jump_rate = number<double>(key, v);
        } else if (key == "jump-scale") {
            profile.jump_scale = number<double>(key, v);
        } else if (key == "base") {
            profile.base = number<double>(key, v);
        } else if (key == "out-dir") {
            out_dir = v;
        } else if (key == "workers") {
            workers = number<unsigned>(key, v);
        } else if (key == "term-shrink") {
            term_shrink = number<double>(key, v);
        } else if (key == "term-height") {
            term_height = number<double>(key, v);
        } else if (key.starts_with("term-")) {
            const auto label = t2::parse_term(key.substr(5));
            if (!label) throw ConfigError("unknown config key '" + key + "'");
            const auto p = list<double>(key, v);
            if (p.size() != 4) throw ConfigError("'" + key + "': expected a,b,c,d");
            term_uppers[static_cast<std::size_t>(t2::rank(*label))] = {p[0], p[1], p[2], p[3], 1.0};
        } else if (key.starts_with("rule.")) {
            // rule.<low|medium|high>.<...>.<...> = <term>
            const auto parts = text::split(std::string_view(key).substr(5), '.');
            if (parts.size() != 3) throw ConfigError("'" + key + "': expected rule.<a>.<b>.<c>");
            rule_overrides.push_back(
                {{term(key, parts[0]), term(key, parts[1]), term(key, parts[2])}, term(key, v)});
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline constexpr std::string_view kSummaryHeader = "policy,T,theta,phi,delta,psi,messages";
inline constexpr std::string_view kDetailHeader = "experiment,t_star,cause,magnitude,g_score";

inline std::string detail_file_name(Policy p, int T, double theta) {
    return "detail_" + policy_slug(p) + "_" + std::to_string(T) + "_" + text::format_double(theta) +
           ".csv";
}

inline std::string summary_row(const MetricsReport& r) {
    return std::string(to_string(r.policy)) + ',' + std::to_string(r.T) + ',' +
           text::format_double(r.theta) + ',' + text::format_double(r.phi) + ',' +
           text::format_double(r.delta) + ',' + text::format_double(r.psi) + ',' +
           std::to_string(r.message_count);
}

inline void write_summary(std::ostream& out, std::span<const MetricsReport> reports) {
    out << kSummaryHeader << '\n';
    for (const auto& r : reports) out << summary_row(r) << '\n';
}

inline void write_detail(std::ostream& out, const MetricsReport& r) {
    out << kDetailHeader << '\n';
    for (const auto& rec : r.per_experiment) {
        out << rec.experiment << ',' << rec.t_star << ',' << to_string(rec.cause) << ','
            << text::format_double(rec.magnitude) << ',';
        if (rec.score) out << text::format_double(*rec.score);
        out << '\n';
    }
}

inline std::optional<Cause> parse_cause(std::string_view s) noexcept {
    for (Cause c : {Cause::threshold, Cause::deadline, Cause::any_change, Cause::prediction})
        if (to_string(c) == s) return c;
    return std::nullopt;
}

struct SchemaReport {
    std::vector<std::string> problems;
    [[nodiscard]] bool ok() const noexcept { return problems.empty(); }
};

// Checks a detail file against its schema and returns the parsed records.
inline std::vector<ExperimentRecord> read_detail(std::string_view content, int T, int E,
                                                 SchemaReport& report) {
    std::vector<ExperimentRecord> out;
    const auto lines = text::split(content, '\n');
    if (lines.empty() || lines[0] != kDetailHeader) {
        report.problems.push_back("detail header mismatch");
        return out;
    }
    int prev_experiment = -1;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty() && i + 1 == lines.size()) break;
        const std::string where = "detail line " + std::to_string(i + 1) + ": ";
        const auto f = text::split(lines[i], ',');
        if (f.size() != 5) {
            report.problems.push_back(where + "expected 5 fields");
            continue;
        }
        ExperimentRecord r;
        const auto exp = text::parse_number<int>(f[0]);
        const auto ts = text::parse_number<int>(f[1]);
        const auto cause = parse_cause(f[2]);
        const auto mag = text::parse_number<double>(f[3]);
        if (!exp || *exp < 0 || *exp >= E || *exp < prev_experiment)
            report.problems.push_back(where + "experiment out of range or out of order");
        if (!ts || *ts < 1 || *ts > T) report.problems.push_back(where + "t_star outside [1,T]");
        if (!cause) report.problems.push_back(where + "unknown cause '" + f[2] + "'");
        if (!mag || !(*mag >= 0.0)) report.problems.push_back(where + "magnitude must be >= 0");
        if (!f[4].empty()) {
            const auto g = text::parse_number<double>(f[4]);
            if (!g || !(*g >= 0.0 && *g <= 1.0))
                report.problems.push_back(where + "g_score outside [0,1]");
            else
                r.score = *g;
        }
        if (!exp || !ts || !cause || !mag) continue;
        prev_experiment = *exp;
        r.experiment = *exp;
        r.t_star = *ts;
        r.cause = *cause;
        r.magnitude = *mag;
        out.push_back(r);
    }
    return out;
}

struct SummaryRow {
    Policy policy = Policy::uddm;
    int T = 0;
    double theta = 0.0;
    double phi = 0.0;
    double delta = 0.0;
    double psi = 0.0;
    std::size_t messages = 0;
};

inline std::vector<SummaryRow> read_summary(std::string_view content, SchemaReport& report) {
    std::vector<SummaryRow> out;
    const auto lines = text::split(content, '\n');
    if (lines.empty() || lines[0] != kSummaryHeader) {
        report.problems.push_back("summary header mismatch");
        return out;
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty() && i + 1 == lines.size()) break;
        const std::string where = "summary line " + std::to_string(i + 1) + ": ";
        const auto f = text::split(lines[i], ',');
        if (f.size() != 7) {
            report.problems.push_back(where + "expected 7 fields");
            continue;
        }
        SummaryRow r;
        try {
            r.policy = parse_policy(f[0]);
        } catch (const ConfigError&) {
            report.problems.push_back(where + "unknown policy");
            continue;
        }
        const auto T = text::parse_number<int>(f[1]);
        const auto theta = text::parse_number<double>(f[2]);
        const auto phi = text::parse_number<double>(f[3]);
        const auto delta = text::parse_number<double>(f[4]);
        const auto psi = text::parse_number<double>(f[5]);
        const auto msgs = text::parse_number<std::size_t>(f[6]);
        if (!T || !theta || !phi || !delta || !psi || !msgs) {
            report.problems.push_back(where + "non-numeric field");
            continue;
        }
        if (*T < 1) report.problems.push_back(where + "T must be >= 1");
        if (!(*theta > 0.0)) report.problems.push_back(where + "theta must be > 0");
        if (!(*phi > 0.0 && *phi <= 1.0)) report.problems.push_back(where + "phi outside (0,1]");
        if (!(*delta >= 0.0)) report.problems.push_back(where + "delta must be >= 0");
        if (!(*psi >= 1.0 && *psi <= *T)) report.problems.push_back(where + "psi outside [1,T]");
        r.T = *T;
        r.theta = *theta;
        r.phi = *phi;
        r.delta = *delta;
        r.psi = *psi;
        r.messages = *msgs;
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Grid execution
// ---------------------------------------------------------------------------

struct RunManifest {
    ConfigMap config;
    std::string dataset;  // "synthetic:<profile>" or the log path
    std::string ingest;   // "generated", "merged" or "per-mote:<id>"
    std::uint64_t checksum = 0;
    std::size_t vectors = 0;
    std::size_t dropped = 0;
    std::uint64_t seed = 0;
    std::string version{kToolVersion};
    double runtime_seconds = 0.0;

    [[nodiscard]] nlohmann::json to_json() const {
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(checksum));
        return {{"tool", "qsim"},
                {"version", version},
                {"seed", seed},
                {"config", config},
                {"dataset",
                 {{"source", dataset},
                  {"ingest", ingest},
                  {"checksum", std::string("fnv1a64:") + hex},
                  {"vectors", vectors},
                  {"dropped", dropped}}},
                {"runtime_seconds", runtime_seconds}};
    }
};

struct GridResult {
    std::vector<MetricsReport> reports;
    RunManifest manifest;
};

// Builds the stream source described by `cfg`, filling the dataset part of
// the manifest.
inline StreamSource make_source(const RunConfig& cfg, RunManifest& manifest) {
    if (cfg.source == "synthetic") {
        manifest.dataset = "synthetic:" + std::string(to_string(cfg.profile.kind));
        manifest.ingest = "generated";
        const std::string desc = manifest.dataset + ";dim=" + std::to_string(cfg.dim) +
                                 ";base=" + text::format_double(cfg.profile.base) +
                                 ";slope=" + text::format_double(cfg.profile.slope) +
                                 ";noise=" + text::format_double(cfg.profile.noise) +
                                 ";jump-rate=" + text::format_double(cfg.profile.jump_rate) +
                                 ";jump-scale=" + text::format_double(cfg.profile.jump_scale) +
                                 ";seed=" + std::to_string(cfg.seed);
        manifest.checksum = fnv1a64(desc);
        return StreamSource::synthetic(cfg.seed, cfg.dim, cfg.profile);
    }
    const IngestResult ing = ingest_sensor_log(cfg.source);
    auto vectors = to_data_vectors(ing.records, cfg.mote);
    manifest.dataset = cfg.source;
    manifest.ingest = cfg.mote ? "per-mote:" + std::to_string(*cfg.mote) : "merged";
    manifest.checksum = ing.checksum;
    manifest.vectors = vectors.size();
    manifest.dropped = ing.dropped;
    if (vectors.empty()) throw TruncationError(1, 0);
    return StreamSource::replay(std::move(vectors));
}

inline GridResult run_grid(const RunConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    cfg.validate();
    GridResult result;
    result.manifest.config = cfg.effective();
    result.manifest.seed = cfg.seed;
    const t2::Engine engine = cfg.engine();
    const StreamSource source = make_source(cfg, result.manifest);

    for (Policy p : cfg.policies)
        for (int T : cfg.deadlines)
            for (double theta : cfg.thetas)
                result.reports.push_back(run_cell(cfg.experiment(p, T, theta), engine, source, cfg.workers));

    result.manifest.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw IoError("error writing '" + path.string() + "'");
}

inline void write_reports(const GridResult& result, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

    std::ostringstream summary;
    write_summary(summary, result.reports);
    write_text(out_dir / "summary.csv", summary.str());
    for (const auto& r : result.reports) {
        std::ostringstream detail;
        write_detail(detail, r);
        write_text(out_dir / detail_file_name(r.policy, r.T, r.theta), detail.str());
    }
    write_text(out_dir / "manifest.json", result.manifest.to_json().dump(2) + "\n");
}

}  // namespace qsim
