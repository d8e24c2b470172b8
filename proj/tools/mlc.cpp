// Command-line front end: simulate, verify, transport, detect-islands, export.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mlc/io.hpp"
#include "mlc/simulation.hpp"
#include "mlc/verify.hpp"

namespace {

using namespace mlc;

enum Exit : int { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kIoError = 3 };

int exit_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::IoError:
        case ErrorCode::MissingArtifact: return kIoError;
        default: return kConfigError;
    }
}

std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("BUNDLE_SEED");
    if (!s || !*s) return std::nullopt;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (*end != '\0') throw Error(ErrorCode::ConfigInvalid, "BUNDLE_SEED: expected a non-negative integer");
    return v;
}

// Re-runs the simulation stored in a run directory.
Simulation replay(const fs::path& dir, bool with_requests = false) {
    if (!fs::exists(dir / kConfigFile)) throw Error(ErrorCode::MissingArtifact, (dir / kConfigFile).string());
    return simulate(load_config(dir / kConfigFile), with_requests);
}

Json load_report(const fs::path& dir) {
    if (!fs::exists(dir / kReportFile)) throw Error(ErrorCode::MissingArtifact, (dir / kReportFile).string());
    try {
        return Json::parse(read_file(dir / kReportFile));
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::IoError, std::string("report.json: ") + e.what());
    }
}

void append_report(const fs::path& dir, const char* key, const Json& entry) {
    Json rep = load_report(dir);
    if (!rep.contains(key) || !rep[key].is_array()) rep[key] = Json::array();
    rep[key].push_back(entry);
    write_file(dir / kReportFile, rep.dump(2) + "\n");
}

std::pair<std::uint32_t, std::uint32_t> parse_line(const std::string& s) {
    const auto comma = s.find(',');
    try {
        if (comma == std::string::npos) throw std::invalid_argument("comma");
        return {static_cast<std::uint32_t>(std::stoul(s.substr(0, comma))),
                static_cast<std::uint32_t>(std::stoul(s.substr(comma + 1)))};
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::ConfigInvalid, "--line: expected P,Q");
    }
}

IslandRequest parse_disc(const std::string& s) {
    // plane:cx,cy,r
    IslandRequest q;
    const auto colon = s.find(':');
    try {
        if (colon == std::string::npos) throw std::invalid_argument("colon");
        q.plane = static_cast<std::uint32_t>(std::stoul(s.substr(0, colon)));
        std::stringstream rest(s.substr(colon + 1));
        std::string a, b, c;
        if (!std::getline(rest, a, ',') || !std::getline(rest, b, ',') || !std::getline(rest, c)) {
            throw std::invalid_argument("fields");
        }
        q.center = {std::stod(a), std::stod(b)};
        q.radius = std::stod(c);
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::ConfigInvalid, "--disc: expected plane:cx,cy,r");
    }
    if (!(q.radius > 0.0)) throw Error(ErrorCode::ConfigInvalid, "--disc: radius must be positive");
    return q;
}

int cmd_simulate(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
    RunConfig cfg = load_config(config);
    if (seed) {
        cfg.seed = *seed;
    } else if (auto e = env_seed()) {
        cfg.seed = *e;
    }
    for (auto& w : cfg.walkers) w.config.seed = cfg.seed;
    cfg.defaults.config.seed = cfg.seed;
    const fs::path dir = out.empty() ? fs::path(cfg.output) : fs::path(out);
    if (dir.empty()) throw Error(ErrorCode::ConfigInvalid, "output: no directory given");
    cfg.output = dir.string();
    const Simulation sim = simulate(cfg);
    write_run(sim, dir);
    std::cout << "wrote " << dir.string() << " (" << sim.events.size() << " events, " << cfg.horizon << " intervals)\n";
    return kOk;
}

int cmd_verify(const std::string& dir, bool replay_run) {
    const VerifyReport rep = verify_run(dir, replay_run);
    for (const auto& f : rep.failures) std::cout << "FAIL " << f.check << " " << f.where << ": " << f.detail << "\n";
    std::size_t total = 0;
    for (const auto& [k, n] : rep.checked) total += n;
    if (rep.ok()) {
        std::cout << "ok: " << total << " checks passed\n";
        return kOk;
    }
    std::cout << rep.failures.size() << " violation(s)\n";
    return kVerifyFailed;
}

int cmd_transport(const std::string& dir, WalkerId from, WalkerId to, const std::string& line) {
    const Simulation sim = replay(dir);
    TransportRequest q{from, to, std::nullopt};
    if (!line.empty()) q.line = parse_line(line);
    const TransportResult r = run_transport(sim.bundle, sim.walkers, q);
    const Json entry = transport_result_json(r);
    append_report(dir, "transport", entry);
    std::cout << entry.dump(2) << "\n";
    return kOk;
}

int cmd_islands(const std::string& dir, const std::string& disc, double h) {
    const Simulation sim = replay(dir);
    const IslandRequest q = parse_disc(disc);
    if (!sim.bundle.contains(PlaneId{q.plane})) throw Error(ErrorCode::UnknownPlane, "--disc names an unknown plane");
    const IslandResult r = run_islands(sim.ledger, sim.bundle, q, h, sim.config.horizon);
    Json entry = island_result_json(r);
    append_report(dir, "islands", entry);
    std::cout << r.islands.size() << " island(s) at h=" << format_real(r.h) << "\n";
    for (const auto& isl : r.islands) {
        std::cout << "  cells=" << isl.cells.size() << " area=" << format_real(isl.cells.size() * isl.h * isl.h) << "\n";
    }
    if (!r.crossing_lines.empty()) std::cout << "  crossed by lines to " << r.crossing_lines.size() << " plane(s)\n";
    return kOk;
}

int cmd_export(const std::string& dir, bool svg, bool csv) {
    if (svg == csv) throw Error(ErrorCode::ConfigInvalid, "export: give exactly one of --svg or --csv");
    const Simulation sim = replay(dir, svg);
    if (svg) {
        write_file(fs::path(dir) / kSnapshotFile, snapshot_svg(sim));
        std::cout << "wrote " << (fs::path(dir) / kSnapshotFile).string() << "\n";
        return kOk;
    }
    std::string out = "walker,vertex,k,plane,re,im,x,y,z\n";
    for (const auto& w : sim.walkers) {
        for (std::size_t i = 0; i < w.contour.size(); ++i) {
            const Vertex& v = w.contour[i];
            out += std::to_string(w.id) + ',' + std::to_string(i) + ',' + std::to_string(v.interval) + ',' +
                   std::to_string(v.point.plane.value) + ',' + format_real(v.point.local.real()) + ',' +
                   format_real(v.point.local.imag()) + ',' + format_real(v.point.global.x) + ',' +
                   format_real(v.point.global.y) + ',' + format_real(v.point.global.z) + '\n';
        }
    }
    write_file(fs::path(dir) / "contours.csv", out);
    std::cout << "wrote " << (fs::path(dir) / "contours.csv").string() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multilevel contour simulator"};
    app.require_subcommand(1);

    std::string config, out, dir, line, disc;
    std::optional<std::uint64_t> seed;
    WalkerId from = 0, to = 1;
    double h = 0.0;
    bool svg = false, csv = false, no_replay = false;

    auto* sim = app.add_subcommand("simulate", "Run a configuration and write its artifacts");
    sim->add_option("--config", config, "Run configuration (JSON)")->required();
    sim->add_option("--out", out, "Output directory");
    sim->add_option("--seed", seed, "Seed, overriding BUNDLE_SEED and the config");

    auto* ver = app.add_subcommand("verify", "Check a run directory");
    ver->add_option("dir", dir, "Run directory")->required();
    ver->add_flag("--no-replay", no_replay, "Skip the re-simulation digest comparison");

    auto* tr = app.add_subcommand("transport", "Transport between two walkers' contours");
    tr->add_option("dir", dir, "Run directory")->required();
    tr->add_option("--from", from, "Source walker")->required();
    tr->add_option("--to", to, "Target walker")->required();
    tr->add_option("--line", line, "Plane pair P,Q of the intersection line");

    auto* isl = app.add_subcommand("detect-islands", "Detect islands inside a disc");
    isl->set_help_flag("--help", "Print this help message and exit");
    isl->add_option("dir", dir, "Run directory")->required();
    isl->add_option("--disc", disc, "plane:cx,cy,r")->required();
    isl->add_option("--h", h, "Raster cell size (default r/64)");

    auto* ex = app.add_subcommand("export", "Re-render the snapshot or export contour vertices");
    ex->add_option("dir", dir, "Run directory")->required();
    ex->add_flag("--svg", svg, "Write snapshot.svg");
    ex->add_flag("--csv", csv, "Write contours.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        if (*sim) return cmd_simulate(config, out, seed);
        if (*ver) return cmd_verify(dir, !no_replay);
        if (*tr) return cmd_transport(dir, from, to, line);
        if (*isl) return cmd_islands(dir, disc, h);
        if (*ex) return cmd_export(dir, svg, csv);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    }
    return kOk;
}
