#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <random>
#include <regex>
#include <unistd.h>

#include "mlc/io.hpp"
#include "mlc/simulation.hpp"
#include "mlc/verify.hpp"

using namespace mlc;
using Catch::Approx;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mlc_sim_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

RunConfig config_from(const char* text) { return parse_config(Json::parse(text)); }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MLC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string config_path(const char* name) { return std::string(MLC_SOURCE_DIR) + "/configs/" + name; }

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

void corrupt_first(const fs::path& file, const std::regex& pat, const std::string& with, std::size_t line_no) {
    auto lines = lines_of(read_file(file));
    REQUIRE(line_no < lines.size());
    lines[line_no] = std::regex_replace(lines[line_no], pat, with, std::regex_constants::format_first_only);
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    write_file(file, out);
}

}  // namespace

TEST_CASE("config defaults and validation", "[cli]") {
    const RunConfig d = config_from("{}");
    CHECK(d.horizon == 100);
    CHECK(d.walkers.size() == 1);
    CHECK(d.parallel == std::vector<double>{0.0, 1.0});
    CHECK_FALSE(d.removal_enabled);

    CHECK(code_of([] { config_from(R"({"horizon": -1})"); }) == ErrorCode::ConfigInvalid);
    CHECK(message_of([] { config_from(R"({"walkers": {"defaults": {"p_switch": 2}}})"); }).find("walkers.defaults.p_switch") !=
          std::string::npos);
    CHECK(message_of([] { config_from(R"({"walkers": {"defaults": {"eps_dist": 0}}})"); }).find("eps_dist") !=
          std::string::npos);
    CHECK(message_of([] { config_from(R"({"bogus": 1})"); }).find("bogus") != std::string::npos);
    CHECK(message_of([] { config_from(R"({"bundle": {"parallel": [0, 0]}})"); }).find("bundle.parallel[1]") !=
          std::string::npos);
    CHECK(message_of([] { config_from(R"({"bundle": {"transversal": [{"angle": 180}]}})"); }).find("angle") !=
          std::string::npos);
    CHECK(message_of([] { config_from(R"({"walkers": {"count": 2, "overrides": [{"id": 4}]}})"); }).find("overrides[0].id") !=
          std::string::npos);
    CHECK(message_of([] { config_from(R"({"removal": {"window": 0}})"); }).find("removal") != std::string::npos);
    CHECK(message_of([] { config_from(R"({"removal": {"enabled": false, "plane_hole": {"plane": 0}}})"); })
              .find("plane_hole") != std::string::npos);
    CHECK(message_of([] { config_from(R"({"walkers": {"defaults": {"radius": {"kind": "uniform", "lo": 2, "hi": 1}}}})"); })
              .find("walkers.defaults.radius") != std::string::npos);
}

TEST_CASE("effective config round-trips", "[cli]") {
    for (const char* name : {"basic.json", "removal.json", "plane_hole.json", "nested.json"}) {
        INFO(name);
        const RunConfig a = load_config(config_path(name));
        const Json ja = to_json(a);
        const RunConfig b = parse_config(ja);
        CHECK(to_json(b) == ja);
        RunConfig small_a = a, small_b = b;
        small_a.horizon = small_b.horizon = 40;
        const Simulation sa = simulate(small_a);
        const Simulation sb = simulate(small_b);
        CHECK(events_text(sa.events) == events_text(sb.events));
        CHECK(metrics_text(sa.ledger) == metrics_text(sb.ledger));
    }
}

TEST_CASE("horizon zero leaves single-vertex contours", "[cli]") {
    const Simulation sim = simulate(config_from(R"({"horizon": 0})"));
    REQUIRE(sim.walkers.size() == 1);
    CHECK(sim.walkers[0].contour.size() == 1);
    CHECK(sim.events.empty());
    CHECK(metrics_text(sim.ledger) == std::string(kMetricsHeader) + "\n");
}

TEST_CASE("identical config and seed give identical artifacts", "[cli]") {
    RunConfig cfg = load_config(config_path("removal.json"));
    cfg.horizon = 300;
    const auto a = render(simulate(cfg));
    const auto b = render(simulate(cfg));
    CHECK(a.events == b.events);
    CHECK(a.metrics == b.metrics);
    CHECK(a.report.dump() == b.report.dump());
    for (auto& w : cfg.walkers) w.config.seed = cfg.seed = cfg.seed + 1;
    CHECK(render(simulate(cfg)).events != a.events);
}

TEST_CASE("orchestrator agrees with a hand-driven loop", "[cli]") {
    RunConfig cfg = load_config(config_path("basic.json"));
    cfg.horizon = 60;
    const Simulation sim = simulate(cfg);
    Bundle b = build_bundle(cfg);
    for (std::size_t i = 0; i < cfg.walkers.size(); ++i) {
        WalkerState w = init_walker(cfg.walkers[i].config, WalkerId(i), b, PlaneId{cfg.walkers[i].plane}, cfg.walkers[i].start);
        const RunResult r = run(w, cfg.horizon, b);
        EventLog mine;
        for (const auto& e : sim.events) {
            if (e.walker == i) mine.push_back(e);
        }
        REQUIRE(events_text(mine) == events_text(r.events));
    }
}

TEST_CASE("orchestrated runs keep the ledger consistent", "[cli]") {
    const Simulation sim = simulate(load_config(config_path("plane_hole.json")));
    REQUIRE(sim.partition);
    CHECK(sim.partition->count_identity_holds());
    for (std::uint64_t k = 0; k < sim.ledger.closed_intervals(); ++k) REQUIRE(holes_union_bound(sim.ledger, k).ok);
    for (const auto& w : sim.walkers) {
        CHECK(sim.ledger.formed(w.id) == Approx(polyline_length(w.contour)).epsilon(1e-12));
        CHECK(sim.ledger.backlog(w.id) >= -1e-12);
        if (w.status == WalkerStatus::HaltedPlaneHole) {
            for (const auto& e : sim.events) {
                if (e.walker == w.id) REQUIRE(e.interval <= sim.partition->interval);
            }
        }
    }
    // After the event nobody stands on or switches onto the hole plane.
    for (const auto& e : sim.events) {
        if (e.interval > sim.partition->interval) REQUIRE(e.disc.plane != sim.partition->plane);
    }
}

TEST_CASE("verify accepts fresh runs and flags corruption", "[cli]") {
    const fs::path dir = scratch("verify");
    RunConfig cfg = load_config(config_path("removal.json"));
    cfg.horizon = 200;
    write_run(simulate(cfg), dir);
    const VerifyReport ok = verify_run(dir);
    for (const auto& f : ok.failures) UNSCOPED_INFO(f.check << " " << f.where << " " << f.detail);
    CHECK(ok.ok());
    CHECK(ok.checked.at("membership") > 0);

    SECTION("radius") {
        corrupt_first(dir / kEventsFile, std::regex(R"("radius":[^,]*)"), R"("radius":1e-06)", 5);
        const VerifyReport bad = verify_run(dir, false);
        REQUIRE_FALSE(bad.ok());
        CHECK(bad.failures[0].check == "membership");
        CHECK(bad.failures[0].where == "events.jsonl:6");
    }
    SECTION("chosen point") {
        corrupt_first(dir / kEventsFile, std::regex(R"("chosen":\[[^,]*)"), R"("chosen":[7)", 3);
        CHECK_FALSE(verify_run(dir, false).ok());
    }
    SECTION("metrics backlog") {
        corrupt_first(dir / kMetricsFile, std::regex(R"(,active)"), R"(,halted_blocked)", 50);
        const VerifyReport bad = verify_run(dir);
        CHECK_FALSE(bad.ok());
    }
    SECTION("report length") {
        Json rep = Json::parse(read_file(dir / kReportFile));
        rep["walkers"][0]["final_length"] = rep["walkers"][0]["final_length"].get<double>() + 1e-6;
        write_file(dir / kReportFile, rep.dump(2));
        const VerifyReport bad = verify_run(dir, false);
        REQUIRE_FALSE(bad.ok());
        CHECK(bad.failures[0].check == "report");
    }
    SECTION("dropped record") {
        auto lines = lines_of(read_file(dir / kEventsFile));
        lines.erase(lines.begin() + 10);
        std::string out;
        for (const auto& l : lines) out += l + "\n";
        write_file(dir / kEventsFile, out);
        CHECK_FALSE(verify_run(dir, false).ok());
    }
    SECTION("missing artifact") {
        fs::remove(dir / kMetricsFile);
        CHECK(code_of([&] { verify_run(dir); }) == ErrorCode::MissingArtifact);
    }
    fs::remove_all(dir);
}

TEST_CASE("seeded fuzz runs all verify", "[cli][property]") {
    const fs::path root = scratch("fuzz");
    std::mt19937_64 eng(77);
    for (int i = 0; i < 100; ++i) {
        RunConfig cfg = load_config(config_path(i % 4 == 0 ? "plane_hole.json" : i % 4 == 1 ? "basic.json" : i % 4 == 2 ? "removal.json" : "nested.json"));
        cfg.seed = eng();
        for (auto& w : cfg.walkers) w.config.seed = cfg.seed;
        cfg.horizon = 30 + eng() % 40;
        if (cfg.plane_hole) cfg.plane_hole->interval = eng() % cfg.horizon;
        cfg.islands.clear();
        cfg.transport.clear();
        const fs::path dir = root / std::to_string(i);
        write_run(simulate(cfg), dir);
        const VerifyReport rep = verify_run(dir);
        for (const auto& f : rep.failures) UNSCOPED_INFO(f.check << " " << f.where << " " << f.detail);
        REQUIRE(rep.ok());
    }
    fs::remove_all(root);
}

TEST_CASE("transport over run contours", "[cli]") {
    // Point contours at distance d from the y axis on x = 0 and z = 0.
    const double d = 0.75;
    RunConfig cfg = config_from(R"({"horizon": 0, "bundle": {"parallel": [0.0], "transversal": [{"angle": 90}]},
        "walkers": {"count": 2, "defaults": {"start": {"point": [0.3, 0.75]}},
                    "overrides": [{"id": 1, "plane": 1, "start": {"point": [0.75, 0.3]}}]},
        "transport": [{"from": 0, "to": 1}]})");
    const Simulation sim = simulate(cfg);
    REQUIRE(sim.transport.size() == 1);
    const TransportResult& r = sim.transport[0];
    CHECK(r.shortest.lengths.total == Approx(2 * d).epsilon(1e-12));
    CHECK(r.farthest.lengths.total == Approx(r.shortest.lengths.total).epsilon(1e-12));
    CHECK(r.reverse_equal);
    CHECK(r.directed_shortest == Approx(2 * d).epsilon(1e-12));

    RunConfig para = cfg;
    para.transport = {TransportRequest{0, 1, std::pair{0u, 0u}}};
    CHECK(code_of([&] { simulate(para); }) == ErrorCode::DisjointPlanes);
}

TEST_CASE("command line behaviour and exit codes", "[cli]") {
    const fs::path base = scratch("cli");
    const std::string a = (base / "a").string(), b = (base / "b").string();
    REQUIRE(run_cli("simulate --config " + config_path("removal.json") + " --out " + a) == 0);
    REQUIRE(run_cli("simulate --config " + config_path("removal.json") + " --out " + b) == 0);
    CHECK(read_file(fs::path(a) / kEventsFile) == read_file(fs::path(b) / kEventsFile));
    CHECK(read_file(fs::path(a) / kMetricsFile) == read_file(fs::path(b) / kMetricsFile));
    for (const char* f : {kEventsFile, kMetricsFile, kReportFile, kSnapshotFile, kConfigFile}) CHECK(fs::exists(fs::path(a) / f));
    CHECK(run_cli("verify " + a) == 0);

    // Independent re-summation of the event log against the report.
    const std::string py = "python3 " + std::string(MLC_SOURCE_DIR) + "/tests/resum_events.py " + a + " > /dev/null";
    CHECK(std::system(py.c_str()) == 0);

    CHECK(run_cli("transport " + a + " --from 0 --to 1 --line 0,2") == 0);
    CHECK(run_cli("transport " + a + " --from 0 --to 1 --line 0,1") == 2);
    const Json rep = Json::parse(read_file(fs::path(a) / kReportFile));
    CHECK(rep["transport"].size() == 2);
    CHECK(run_cli("detect-islands " + a + " --disc 0:0,0,2") == 0);
    CHECK(run_cli("detect-islands " + a + " --disc 0:0,0,2 --h 1") == 2);
    CHECK(run_cli("export --csv " + a) == 0);
    CHECK(fs::exists(fs::path(a) / "contours.csv"));
    CHECK(run_cli("export --svg " + a) == 0);
    CHECK(run_cli("verify " + a) == 0);

    // Seed precedence: flag over environment over config.
    const std::string c = (base / "c").string(), e = (base / "e").string(), f = (base / "f").string();
    REQUIRE(run_cli("simulate --config " + config_path("basic.json") + " --out " + c + " --seed 5") == 0);
    REQUIRE(std::system(("BUNDLE_SEED=5 " + std::string(MLC_CLI_PATH) + " simulate --config " + config_path("basic.json") +
                         " --out " + e + " > /dev/null").c_str()) == 0);
    REQUIRE(std::system(("BUNDLE_SEED=6 " + std::string(MLC_CLI_PATH) + " simulate --config " + config_path("basic.json") +
                         " --out " + f + " --seed 5 > /dev/null").c_str()) == 0);
    CHECK(read_file(fs::path(c) / kEventsFile) == read_file(fs::path(e) / kEventsFile));
    CHECK(read_file(fs::path(c) / kEventsFile) == read_file(fs::path(f) / kEventsFile));
    CHECK(Json::parse(read_file(fs::path(c) / kConfigFile))["seed"] == 5);

    // Exit codes.
    const fs::path badcfg = base / "bad.json";
    write_file(badcfg, R"({"walkers": {"defaults": {"p_switch": 3}}})");
    CHECK(run_cli("simulate --config " + badcfg.string() + " --out " + (base / "x").string()) == 2);
    CHECK(run_cli("simulate --config " + (base / "nope.json").string() + " --out " + (base / "x").string()) == 3);
    CHECK(run_cli("verify " + (base / "nowhere").string()) == 3);
    corrupt_first(fs::path(a) / kEventsFile, std::regex(R"("radius":[^,]*)"), R"("radius":1e-06)", 0);
    CHECK(run_cli("verify " + a) == 1);
    fs::remove_all(base);
}
