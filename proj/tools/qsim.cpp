// qsim: run the dissemination grid, generate synthetic logs, validate reports.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qsim/harness.hpp"

namespace fs = std::filesystem;
using namespace qsim;

namespace {

struct Flags {
    std::string config_file;
    ConfigMap cli;
    std::size_t length = 10000;
};

// Registers a string option that lands in the CLI config layer under `key`.
void add_layered(CLI::App& app, Flags& f, const std::string& flag, const std::string& key,
                 const std::string& help) {
    app.add_option_function<std::string>(flag, [&f, key](const std::string& v) { f.cli[key] = v; }, help);
}

void add_common(CLI::App& app, Flags& f) {
    app.add_option("--config", f.config_file, "key = value config file");
    add_layered(app, f, "--seed", "seed", "master seed");
    add_layered(app, f, "--out-dir", "out-dir", "output directory");
    add_layered(app, f, "--profile", "profile", "synthetic profile: drift, random-walk, piecewise");
}

RunConfig resolve(const Flags& f) {
    ConfigMap file;
    if (!f.config_file.empty()) file = parse_config_text(read_file(f.config_file));
    ConfigMap normalized_file;
    for (const auto& [k, v] : file) normalized_file[normalize_key(k)] = v;
    return RunConfig::from_map(layer({normalized_file, env_overrides(RunConfig::known_keys()), f.cli}));
}

int cmd_run(const Flags& f) {
    const RunConfig cfg = resolve(f);
    const GridResult g = run_grid(cfg);
    write_reports(g, cfg.out_dir);
    std::ostringstream s;
    write_summary(s, g.reports);
    std::cout << s.str();
    std::clog << "qsim: wrote " << g.reports.size() << " cell(s) to " << cfg.out_dir.string() << '\n';
    return 0;
}

int cmd_gen(const Flags& f) {
    const RunConfig cfg = resolve(f);
    if (cfg.dim != 4) throw ConfigError("gen writes the 4-column sensor layout; dim must be 4");
    if (f.length == 0) throw ConfigError("length must be >= 1");
    const auto vectors = generate_synthetic_stream(cfg.seed, f.length, cfg.dim, cfg.profile);
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create '" + cfg.out_dir.string() + "': " + ec.message());
    std::ostringstream out;
    write_sensor_log(out, vectors);
    const fs::path path = cfg.out_dir / "synthetic.log";
    write_text(path, out.str());
    std::cout << path.string() << '\n';
    return 0;
}

// Checks summary.csv and every detail file it names. Prints one line per
// problem; exit 3 when any is found.
int cmd_validate(const Flags& f) {
    const RunConfig cfg = resolve(f);
    const fs::path dir = cfg.out_dir;
    SchemaReport rep;
    const auto rows = read_summary(read_file(dir / "summary.csv"), rep);
    for (const auto& row : rows) {
        const fs::path detail = dir / detail_file_name(row.policy, row.T, row.theta);
        if (!fs::exists(detail)) {
            rep.problems.push_back(detail.filename().string() + ": missing");
            continue;
        }
        SchemaReport local;
        const auto records = read_detail(read_file(detail), row.T, cfg.E, local);
        if (records.size() != row.messages)
            local.problems.push_back("message count differs from summary");
        for (const auto& p : local.problems) rep.problems.push_back(detail.filename().string() + ": " + p);
    }
    if (fs::exists(dir / "manifest.json")) {
        try {
            const auto j = nlohmann::json::parse(read_file(dir / "manifest.json"));
            for (const char* key : {"version", "seed", "config", "dataset"})
                if (!j.contains(key)) rep.problems.push_back(std::string("manifest.json: missing ") + key);
        } catch (const nlohmann::json::exception& e) {
            rep.problems.push_back(std::string("manifest.json: ") + e.what());
        }
    } else {
        rep.problems.push_back("manifest.json: missing");
    }
    for (const auto& p : rep.problems) std::cout << p << '\n';
    if (!rep.ok()) return 3;
    std::cout << "ok: " << rows.size() << " cell(s)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic simulator for uncertainty-driven synopsis dissemination"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    Flags f;
    CLI::App* run = app.add_subcommand("run", "run the policy x T x theta grid and write reports");
    add_common(*run, f);
    add_layered(*run, f, "--policy", "policy", "comma list of UDDM, BM, PM");
    add_layered(*run, f, "--T", "t", "comma list of deadlines");
    add_layered(*run, f, "--theta", "theta", "comma list of thresholds");
    add_layered(*run, f, "--E", "e", "experiments per cell");
    add_layered(*run, f, "--N", "n", "nodes per experiment");
    add_layered(*run, f, "--source", "source", "'synthetic' or a sensor log path");
    add_layered(*run, f, "--mote", "mote", "replay a single mote from the log");
    add_layered(*run, f, "--workers", "workers", "worker threads");

    CLI::App* gen = app.add_subcommand("gen", "write a synthetic stream in sensor log layout");
    add_common(*gen, f);
    gen->add_option("--length", f.length, "number of rows");

    CLI::App* validate = app.add_subcommand("validate", "schema-check a report directory");
    add_common(*validate, f);
    add_layered(*validate, f, "--E", "e", "experiments per cell");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*run) return cmd_run(f);
        if (*gen) return cmd_gen(f);
        return cmd_validate(f);
    } catch (const Error& e) {
        std::cerr << "qsim: error: " << e.what() << '\n';
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "qsim: internal error: " << e.what() << '\n';
        return 3;
    }
}
