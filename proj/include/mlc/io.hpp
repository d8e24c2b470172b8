#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mlc/config.hpp"
#include "mlc/numeric.hpp"
#include "mlc/simulation.hpp"

namespace mlc {

namespace fs = std::filesystem;

inline constexpr const char* kEventsFile = "events.jsonl";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kSnapshotFile = "snapshot.svg";
inline constexpr const char* kConfigFile = "config.effective.json";
inline constexpr const char* kMetricsHeader = "interval,walker,F_rate,R_rate,dB,B,phi,phi3,phi4,status";

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
    out << data;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + p.string());
}

// FNV-1a, 64 bit. Used to compare artifacts, not for integrity against tampering.
inline std::string digest(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

inline void put_pair(std::string& s, Complex z) {
    s += '[';
    s += format_real(z.real());
    s += ',';
    s += format_real(z.imag());
    s += ']';
}

}  // namespace detail

inline std::string event_line(const StepEvent& e) {
    std::string s = "{\"walker\":" + std::to_string(e.walker) + ",\"k\":" + std::to_string(e.interval) +
                    ",\"plane\":" + std::to_string(e.disc.plane.value) + ",\"disc_center\":";
    detail::put_pair(s, e.disc.center);
    s += ",\"radius\":" + format_real(e.disc.radius) + ",\"switched_to\":";
    s += e.switched_plane ? std::to_string(e.switched_plane->value) : "null";
    s += ",\"chosen\":";
    detail::put_pair(s, e.chosen.local);
    const Vec3 g = e.chosen.global;
    s += ",\"global\":[" + format_real(g.x) + "," + format_real(g.y) + "," + format_real(g.z) + "]";
    s += ",\"rejections\":" + std::to_string(e.rejections);
    if (e.nested) {
        s += ",\"nested\":{\"offset\":";
        detail::put_pair(s, e.nested->offset);
        s += ",\"ratio\":" + format_real(e.nested->ratio) + ",\"log_radius\":" + format_real(e.nested->log_radius) +
             ",\"chosen_frame\":";
        detail::put_pair(s, e.nested->chosen_frame);
        s += '}';
    }
    s += '}';
    return s;
}

inline std::string events_text(const EventLog& log) {
    std::string out;
    for (const auto& e : log) {
        out += event_line(e);
        out += '\n';
    }
    return out;
}

inline std::string metrics_text(const RemovalLedger& ledger) {
    std::string out = kMetricsHeader;
    out += '\n';
    const auto ids = ledger.walkers();
    const std::size_t n = ledger.closed_intervals();
    for (std::size_t k = 0; k < n; ++k) {
        for (WalkerId id : ids) {
            const IntervalRecord& r = ledger.measure_log(id)[k];
            out += std::to_string(r.interval) + ',' + std::to_string(r.walker) + ',' + format_real(r.f_rate) + ',' +
                   format_real(r.r_rate) + ',' + format_real(r.db) + ',' + format_real(r.backlog) + ',' +
                   format_real(r.phi) + ',' + format_real(r.phi3) + ',' + format_real(r.phi4) + ',' +
                   to_string(r.status) + '\n';
        }
    }
    return out;
}

// Parsed form of one events.jsonl record.
struct EventRecord {
    WalkerId walker = 0;
    std::uint64_t k = 0;
    std::uint32_t plane = 0;
    Complex center;
    double radius = 0.0;
    std::optional<std::uint32_t> switched_to;
    Complex chosen;
    Vec3 global;
    std::uint32_t rejections = 0;
    std::optional<NestedLink> nested;
};

inline const std::vector<std::string>& event_keys() {
    static const std::vector<std::string> keys{"walker", "k", "plane", "disc_center", "radius", "switched_to",
                                               "chosen", "global", "rejections"};
    return keys;
}

namespace detail {

inline Complex pair_of(const Json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw Error(ErrorCode::InvalidArgument, "expected [re, im]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

inline std::uint64_t index_of(const Json& j) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw Error(ErrorCode::InvalidArgument, "expected an index");
    return j.get<std::uint64_t>();
}

}  // namespace detail

// Throws InvalidArgument naming the problem when the record does not fit the schema.
inline EventRecord parse_event(const std::string& line) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("not JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "record is not an object");
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    std::vector<std::string> want = event_keys();
    if (j.contains("nested")) want.push_back("nested");
    if (keys != want) throw Error(ErrorCode::InvalidArgument, "fields missing, unknown or out of order");
    EventRecord e;
    e.walker = static_cast<WalkerId>(detail::index_of(j["walker"]));
    e.k = detail::index_of(j["k"]);
    e.plane = static_cast<std::uint32_t>(detail::index_of(j["plane"]));
    e.center = detail::pair_of(j["disc_center"]);
    if (!j["radius"].is_number()) throw Error(ErrorCode::InvalidArgument, "radius is not a number");
    e.radius = j["radius"].get<double>();
    if (!j["switched_to"].is_null()) e.switched_to = static_cast<std::uint32_t>(detail::index_of(j["switched_to"]));
    e.chosen = detail::pair_of(j["chosen"]);
    const Json& g = j["global"];
    if (!g.is_array() || g.size() != 3 || !g[0].is_number() || !g[1].is_number() || !g[2].is_number()) {
        throw Error(ErrorCode::InvalidArgument, "global is not [x, y, z]");
    }
    e.global = {g[0].get<double>(), g[1].get<double>(), g[2].get<double>()};
    e.rejections = static_cast<std::uint32_t>(detail::index_of(j["rejections"]));
    if (j.contains("nested")) {
        const Json& n = j["nested"];
        if (!n.is_object() || !n.contains("offset") || !n.contains("ratio") || !n.contains("log_radius") ||
            !n.contains("chosen_frame") || n.size() != 4) {
            throw Error(ErrorCode::InvalidArgument, "nested block malformed");
        }
        NestedLink l;
        l.offset = detail::pair_of(n["offset"]);
        l.ratio = n["ratio"].get<double>();
        l.log_radius = n["log_radius"].get<double>();
        l.chosen_frame = detail::pair_of(n["chosen_frame"]);
        e.nested = l;
    }
    return e;
}

struct MetricsRow {
    std::uint64_t interval = 0;
    WalkerId walker = 0;
    double f_rate = 0, r_rate = 0, db = 0, backlog = 0, phi = 0, phi3 = 0, phi4 = 0;
    std::string status;
};

inline MetricsRow parse_metrics_row(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw Error(ErrorCode::InvalidArgument, "expected 10 columns");
    auto num = [](const std::string& s) {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw Error(ErrorCode::InvalidArgument, "bad number '" + s + "'");
        return v;
    };
    MetricsRow r;
    try {
        r.interval = std::stoull(f[0]);
        r.walker = static_cast<WalkerId>(std::stoul(f[1]));
        r.f_rate = num(f[2]);
        r.r_rate = num(f[3]);
        r.db = num(f[4]);
        r.backlog = num(f[5]);
        r.phi = num(f[6]);
        r.phi3 = num(f[7]);
        r.phi4 = num(f[8]);
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::InvalidArgument, "unparsable metrics field");
    }
    r.status = f[9];
    return r;
}

inline std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

namespace detail {

inline Json vec_json(Vec3 v) { return Json::array({v.x, v.y, v.z}); }

inline Json transport_json(const TransportContour& t) {
    return {{"from", t.from_contour},
            {"to", t.to_contour},
            {"anchor_from", vec_json(t.anchor_from)},
            {"via", vec_json(t.via)},
            {"via_exit", vec_json(t.via_exit)},
            {"anchor_to", vec_json(t.anchor_to)},
            {"direction", t.direction == TransportDirection::Forward ? "forward" : "reverse"},
            {"part1", t.lengths.part1},
            {"part2", t.lengths.part2},
            {"part3", t.lengths.part3},
            {"total", t.lengths.total}};
}

inline const char* side_name(Side s) {
    switch (s) {
        case Side::InPlane: return "in_plane";
        case Side::Above: return "above";
        case Side::Below: return "below";
        case Side::Unassigned: break;
    }
    return "unassigned";
}

}  // namespace detail

inline Json transport_result_json(const TransportResult& r) {
    return {{"from", r.request.from},
            {"to", r.request.to},
            {"line", {r.from_plane.value, r.to_plane.value}},
            {"shortest", detail::transport_json(r.shortest)},
            {"farthest", detail::transport_json(r.farthest)},
            {"directed_shortest", r.directed_shortest},
            {"directed_farthest", r.directed_farthest},
            {"reverse_equal", r.reverse_equal}};
}

inline Json island_result_json(const IslandResult& r) {
    Json out{{"plane", r.request.plane},
             {"center", detail::complex_json(r.request.center)},
             {"radius", r.request.radius},
             {"h", r.h}};
    Json list = Json::array();
    for (const auto& isl : r.islands) {
        Json polys = Json::array();
        for (const auto& q : isl.polygons()) {
            Json poly = Json::array();
            for (Complex z : q) poly.push_back(detail::complex_json(z));
            polys.push_back(poly);
        }
        list.push_back({{"detected", isl.detected}, {"cells", isl.cells.size()}, {"area", isl.cells.size() * isl.h * isl.h},
                        {"polygons", polys}});
    }
    out["islands"] = list;
    Json lines = Json::array();
    for (PlaneId p : r.crossing_lines) lines.push_back(p.value);
    out["crossing_lines"] = lines;
    return out;
}

inline Json report_json(const Simulation& sim, const std::string& events, const std::string& metrics) {
    Json rep;
    rep["horizon"] = sim.config.horizon;
    rep["seed"] = sim.config.seed;
    Json ws = Json::array();
    for (std::size_t i = 0; i < sim.walkers.size(); ++i) {
        const WalkerState& w = sim.walkers[i];
        const BundlePoint& s = sim.starts[i];
        ws.push_back({{"id", w.id},
                      {"start", {{"plane", s.plane.value}, {"local", detail::complex_json(s.local)}, {"global", detail::vec_json(s.global)}}},
                      {"vertices", w.contour.size()},
                      {"final_length", polyline_length(w.contour)},
                      {"multilevel", is_multilevel(w.contour)},
                      {"status", to_string(w.status)},
                      {"formed", sim.ledger.formed(w.id)},
                      {"removed", sim.ledger.removed(w.id)},
                      {"backlog", sim.ledger.backlog(w.id)}});
    }
    rep["walkers"] = ws;

    const std::uint64_t n = sim.ledger.closed_intervals();
    bool bound_ok = true;
    for (std::uint64_t k = 0; k < n; ++k) bound_ok = bound_ok && holes_union_bound(sim.ledger, k).ok;
    double formed = 0, removed = 0;
    for (const auto& w : sim.walkers) {
        formed += sim.ledger.formed(w.id);
        removed += sim.ledger.removed(w.id);
    }
    const auto holes = collect_holes(sim.ledger.removed_pieces());
    Json hs = Json::array();
    for (const auto& h : holes) {
        Json owners = Json::array();
        for (WalkerId o : h.owners) owners.push_back(o);
        hs.push_back({{"created", h.created}, {"pieces", h.pieces.size()}, {"length", h.length}, {"owners", owners}});
    }
    rep["removal"] = {{"enabled", sim.config.removal_enabled},
                      {"formed", formed},
                      {"removed", removed},
                      {"removed_distinct", n ? sim.ledger.cumulative_removed().back() : 0.0},
                      {"shared_groups", sim.ledger.shared_groups()},
                      {"pieces", sim.ledger.removed_pieces().size()},
                      {"union_bound_ok", bound_ok},
                      {"holes", hs}};
    if (sim.partition) {
        const PartitionReport& p = *sim.partition;
        Json cls = Json::object();
        for (const auto& [id, s] : p.classes) cls[std::to_string(id)] = detail::side_name(s);
        Json lens = Json::object();
        for (const auto& [id, l] : p.lengths) {
            lens[std::to_string(id)] = {{"in_plane", l.in_plane}, {"above", l.above}, {"below", l.below},
                                        {"total", p.full_length.at(id)}};
        }
        rep["partition"] = {{"plane", p.plane.value}, {"interval", p.interval}, {"offset", p.offset},
                            {"total", p.total},       {"in_plane", p.in_plane}, {"above", p.above},
                            {"below", p.below},       {"alpha1", p.alpha1},     {"alpha2", p.alpha2},
                            {"psi", p.psi},           {"classes", cls},         {"lengths", lens},
                            {"count_identity", p.count_identity_holds()}};
    } else {
        rep["partition"] = nullptr;
    }
    Json tr = Json::array();
    for (const auto& t : sim.transport) tr.push_back(transport_result_json(t));
    rep["transport"] = tr;
    Json is = Json::array();
    for (const auto& r : sim.islands) is.push_back(island_result_json(r));
    rep["islands"] = is;
    rep["checks"] = {{"union_bound", bound_ok}};
    rep["digests"] = {{kEventsFile, digest(events)}, {kMetricsFile, digest(metrics)}};
    return rep;
}

namespace detail {

struct View {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    void add(double x, double y) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }
    void pad() {
        if (x0 > x1) x0 = -1, x1 = 1, y0 = -1, y1 = 1;
        const double m = 0.05 * std::max({x1 - x0, y1 - y0, 1e-9});
        x0 -= m, x1 += m, y0 -= m, y1 += m;
    }
};

inline std::string color(WalkerId id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "hsl(%u,70%%,45%%)", (id * 137u) % 360u);
    return buf;
}

}  // namespace detail

// Left panel looks along the bundle axis (y, z); right panel is the side view (x, y).
inline std::string snapshot_svg(const Simulation& sim) {
    constexpr double panel = 400.0;
    using Proj = std::pair<double, double> (*)(Vec3);
    const Proj along = [](Vec3 v) { return std::pair{v.y, v.z}; };
    const Proj side = [](Vec3 v) { return std::pair{v.x, v.y}; };
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * panel + 30 << "\" height=\"" << panel + 40
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const char* titles[2] = {"along axis", "side view"};
    for (int p = 0; p < 2; ++p) {
        const Proj f = p == 0 ? along : side;
        detail::View v;
        for (const auto& w : sim.walkers) {
            for (const auto& vx : w.contour.vertices) {
                const auto [a, b] = f(vx.point.global);
                v.add(a, b);
            }
        }
        v.pad();
        const double s = panel / std::max(v.x1 - v.x0, v.y1 - v.y0);
        const double ox = 10 + p * (panel + 10);
        auto X = [&](double a) { return ox + (a - v.x0) * s; };
        auto Y = [&](double b) { return 30 + panel - (b - v.y0) * s; };
        o << "<g><text x=\"" << ox << "\" y=\"20\" font-size=\"12\">" << titles[p] << "</text>\n";
        o << "<rect x=\"" << ox << "\" y=\"30\" width=\"" << panel << "\" height=\"" << panel
          << "\" fill=\"none\" stroke=\"#ccc\"/>\n";
        for (const auto& r : sim.islands) {
            const Plane& pl = sim.bundle.plane(PlaneId{r.request.plane});
            for (const auto& isl : r.islands) {
                for (const auto& q : isl.polygons()) {
                    o << "<polygon fill=\"#f4b400\" fill-opacity=\"0.4\" stroke=\"none\" points=\"";
                    for (Complex z : q) {
                        const auto [a, b] = f(embed(pl, z));
                        o << X(a) << ',' << Y(b) << ' ';
                    }
                    o << "\"/>\n";
                }
            }
        }
        for (const auto& w : sim.walkers) {
            o << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << detail::color(w.id) << "\" points=\"";
            for (const auto& vx : w.contour.vertices) {
                const auto [a, b] = f(vx.point.global);
                o << X(a) << ',' << Y(b) << ' ';
            }
            o << "\"/>\n";
        }
        for (const auto& piece : sim.ledger.removed_pieces()) {
            const auto [a0, b0] = f(piece.ga);
            const auto [a1, b1] = f(piece.gb);
            o << "<line stroke=\"black\" stroke-dasharray=\"3,2\" x1=\"" << X(a0) << "\" y1=\"" << Y(b0) << "\" x2=\""
              << X(a1) << "\" y2=\"" << Y(b1) << "\"/>\n";
        }
        o << "</g>\n";
    }
    o << "</svg>\n";
    return o.str();
}

struct RunArtifacts {
    std::string events;
    std::string metrics;
    Json report;
    std::string svg;
};

inline RunArtifacts render(const Simulation& sim) {
    RunArtifacts a;
    a.events = events_text(sim.events);
    a.metrics = metrics_text(sim.ledger);
    a.report = report_json(sim, a.events, a.metrics);
    a.svg = snapshot_svg(sim);
    return a;
}

inline void write_run(const Simulation& sim, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    const RunArtifacts a = render(sim);
    write_file(dir / kConfigFile, to_json(sim.config).dump(2) + "\n");
    write_file(dir / kEventsFile, a.events);
    write_file(dir / kMetricsFile, a.metrics);
    write_file(dir / kReportFile, a.report.dump(2) + "\n");
    write_file(dir / kSnapshotFile, a.svg);
}

inline RunConfig load_config(const fs::path& p) {
    const std::string text = read_file(p);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::ConfigInvalid, p.string() + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace mlc
