#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mlc/io.hpp"
#include "mlc/simulation.hpp"
#include "mlc/spatial_hash.hpp"

namespace mlc {

struct Finding {
    std::string check;
    std::string where;
    std::string detail;
};

struct VerifyReport {
    std::vector<Finding> failures;
    std::map<std::string, std::size_t> checked;  // records examined per check

    bool ok() const noexcept { return failures.empty(); }
};

namespace detail {

inline bool close(double a, double b, double tol = 1e-9) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

class Verifier {
  public:
    Verifier(const RunConfig& cfg, VerifyReport& rep) : cfg_(cfg), bundle_(checked_bundle(cfg)), rep_(rep) {}

    void fail(const std::string& check, const std::string& where, const std::string& detail) {
        rep_.failures.push_back({check, where, detail});
    }
    void tick(const std::string& check) { ++rep_.checked[check]; }

    void events(const std::vector<std::string>& lines, const Json& report) {
        const std::size_t n = cfg_.walkers.size();
        starts_.resize(n);
        if (!report.contains("walkers") || !report["walkers"].is_array() || report["walkers"].size() != n) {
            fail("report", kReportFile, "walker list does not match the config");
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const Json& s = report["walkers"][i]["start"];
            try {
                const PlaneId plane{static_cast<std::uint32_t>(s["plane"].get<std::uint64_t>())};
                starts_[i] = make_point(bundle_.plane(plane), pair_of(s["local"]));
            } catch (const std::exception& e) {
                fail("report", "walkers[" + std::to_string(i) + "].start", e.what());
                return;
            }
        }
        prev_ = starts_;
        sharing_ = !report.contains("removal") || !report["removal"].contains("shared_groups") ||
                   report["removal"]["shared_groups"] != 0;
        next_k_.assign(n, 0);
        length_.assign(n, CompensatedSum{});
        step_len_.assign(n, {});
        planes_.assign(n, {});
        for (std::size_t i = 0; i < n; ++i) planes_[i].insert(starts_[i].plane.value);
        std::vector<SpatialHash> seen;
        for (std::size_t i = 0; i < n; ++i) {
            seen.emplace_back(cfg_.walkers[i].config.eps_dist);
            seen.back().insert(starts_[i].global);
        }
        std::vector<std::optional<Complex>> last_frame(n);
        std::uint64_t last_k = 0;
        WalkerId last_w = 0;
        for (std::size_t li = 0; li < lines.size(); ++li) {
            const std::string where = std::string(kEventsFile) + ":" + std::to_string(li + 1);
            EventRecord e;
            try {
                e = parse_event(lines[li]);
            } catch (const Error& err) {
                fail("schema", where, err.what());
                continue;
            }
            tick("schema");
            if (e.walker >= n) {
                fail("schema", where, "unknown walker " + std::to_string(e.walker));
                continue;
            }
            if (li > 0 && (e.k < last_k || (e.k == last_k && e.walker <= last_w))) {
                fail("order", where, "records not sorted by (k, walker)");
            }
            last_k = e.k;
            last_w = e.walker;
            const WalkerConfig& wc = cfg_.walkers[e.walker].config;
            const std::size_t w = e.walker;
            tick("contiguity");
            if (e.k != next_k_[w]) {
                fail("contiguity", where, "expected k=" + std::to_string(next_k_[w]) + ", got " + std::to_string(e.k));
            }
            next_k_[w] = e.k + 1;
            if (e.k >= cfg_.horizon) fail("contiguity", where, "step beyond the horizon");
            const PlaneId plane{e.plane};
            if (!bundle_.contains(plane)) {
                fail("schema", where, "unknown plane " + std::to_string(e.plane));
                continue;
            }
            const Plane& pl = bundle_.plane(plane);
            const BundlePoint& prev = prev_[w];

            // Disc placement and plane switching.
            tick("switch");
            const double scale = 1e-9 * (1.0 + norm(prev.global));
            const double gap = distance(embed(pl, e.center), prev.global);
            if (e.switched_to) {
                const IntersectionLine* line = bundle_.line(prev.plane, plane);
                if (*e.switched_to != e.plane) fail("switch", where, "switched_to differs from the disc plane");
                if (!line) {
                    fail("switch", where, "no intersection line between the planes");
                } else if (!(line->distance_to(prev.global) < wc.eps_int + scale)) {
                    fail("switch", where, "previous vertex is not within eps_int of the line");
                }
                if (cfg_.plane_hole && e.plane == cfg_.plane_hole->plane && e.k > cfg_.plane_hole->interval) {
                    fail("switch", where, "switched onto a hole plane");
                }
                if (!(gap <= wc.eps_int + scale)) fail("contiguity", where, "disc centre is not the previous vertex");
            } else {
                if (plane != prev.plane) fail("switch", where, "plane changed without a switch");
                if (!(gap <= scale)) fail("contiguity", where, "disc centre is not the previous vertex");
            }

            // Disc membership.
            tick("membership");
            const double rho = std::abs(e.chosen - e.center);
            if (e.nested) {
                const NestedLink& l = *e.nested;
                if (!(std::abs(l.chosen_frame) < 1.0)) fail("membership", where, "chosen point outside its unit frame");
                if (last_frame[w]) {
                    if (!(l.ratio > 0.0 && l.ratio < 1.0)) fail("membership", where, "nested ratio outside (0,1)");
                    if (!(std::abs(l.offset) + l.ratio <= 1.0 + 1e-12)) fail("membership", where, "disc not nested in its parent");
                    if (std::abs(l.offset - *last_frame[w]) > 1e-12) fail("contiguity", where, "nested offset is not the last vertex");
                }
                last_frame[w] = l.chosen_frame;
                if (!(rho <= e.radius + 4e-16 * (1.0 + std::abs(e.center)))) {
                    fail("membership", where, "chosen point outside the disc");
                }
            } else if (!(rho < e.radius)) {
                fail("membership", where, "|chosen - centre| = " + format_real(rho) + " >= radius " + format_real(e.radius));
            }
            if (!radius_supported(wc.radius, e.radius, e.nested.has_value())) {
                fail("membership", where, "radius " + format_real(e.radius) + " outside the configured law");
            }
            if (distance(embed(pl, e.chosen), e.global) > scale + 1e-9 * norm(e.global)) {
                fail("membership", where, "global coordinates do not match the local point");
            }

            // Distinctness.
            if (!wc.recurrent && !wc.nested_mode) {
                tick("distinctness");
                if (seen[w].any_within(e.global, wc.eps_dist)) fail("distinctness", where, "revisits an earlier vertex");
                seen[w].insert(e.global);
            }
            const double seg = distance(prev.global, e.global);
            length_[w].add(seg);
            step_len_[w][e.k] = seg;
            planes_[w].insert(e.plane);
            BundlePoint cur;
            cur.plane = plane;
            cur.local = e.chosen;
            cur.global = e.global;
            prev_[w] = cur;
        }
    }

    void metrics(const std::vector<std::string>& lines) {
        const std::size_t n = cfg_.walkers.size();
        if (lines.empty() || lines[0] != kMetricsHeader) {
            fail("metrics", kMetricsFile + std::string(":1"), "missing or wrong header");
            return;
        }
        const std::size_t rows = lines.size() - 1;
        if (rows != n * cfg_.horizon) {
            fail("metrics", kMetricsFile, "expected " + std::to_string(n * cfg_.horizon) + " rows, got " + std::to_string(rows));
        }
        backlog_.assign(n, 0.0);
        formed_.assign(n, CompensatedSum{});
        removed_.assign(n, CompensatedSum{});
        db_.assign(n, CompensatedSum{});
        halted_at_.assign(n, std::nullopt);
        for (std::size_t li = 1; li < lines.size(); ++li) {
            const std::string where = std::string(kMetricsFile) + ":" + std::to_string(li + 1);
            MetricsRow r;
            try {
                r = parse_metrics_row(lines[li]);
            } catch (const Error& err) {
                fail("metrics", where, err.what());
                continue;
            }
            tick("metrics");
            const std::size_t idx = li - 1;
            if (n == 0 || r.walker != idx % n || r.interval != idx / n) {
                fail("metrics", where, "row out of (interval, walker) order");
                continue;
            }
            const std::size_t w = r.walker;
            if (r.status != "active" && r.status != "halted_blocked" && r.status != "halted_plane_hole") {
                fail("metrics", where, "unknown status " + r.status);
            }
            if (r.status != "active" && !halted_at_[w]) halted_at_[w] = r.interval;
            if (!close(r.db, r.f_rate - r.r_rate)) fail("telescoping", where, "dB != F_rate - R_rate");
            if (!(r.backlog >= -1e-9)) fail("conservation", where, "negative backlog");
            if (!(r.r_rate >= -1e-12 && r.f_rate >= 0.0)) fail("conservation", where, "negative rate");
            if (!sharing_ && !close(r.phi + r.phi3 + r.phi4, r.r_rate)) {
                fail("conservation", where, "phi does not account for R_rate");
            }
            if (r.phi + r.phi3 + r.phi4 > r.r_rate + 1e-9 * std::max(1.0, r.r_rate)) {
                fail("conservation", where, "booked removal exceeds R_rate");
            }
            const auto it = step_len_[w].find(r.interval);
            const double want_f = it == step_len_[w].end() ? 0.0 : it->second;
            if (!close(r.f_rate, want_f)) fail("telescoping", where, "F_rate differs from the logged step length");
            db_[w].add(r.db);
            formed_[w].add(r.f_rate);
            removed_[w].add(r.r_rate);
            const double b_before = backlog_[w];
            backlog_[w] = r.backlog;
            if (!close(r.backlog, b_before + r.db, 1e-9)) fail("telescoping", where, "B(k) != B(k-1) + dB(k)");
            if (!close(db_[w].value(), r.backlog, 1e-9)) fail("telescoping", where, "sum of dB does not reach B");
        }
        for (std::size_t w = 0; w < n; ++w) {
            if (!halted_at_[w]) continue;
            for (const auto& [k, len] : step_len_[w]) {
                if (k > *halted_at_[w]) fail("halting", "walker " + std::to_string(w), "event after halt at k=" + std::to_string(k));
            }
        }
    }

    void report(const Json& rep) {
        const std::size_t n = cfg_.walkers.size();
        for (std::size_t w = 0; w < n && w < rep["walkers"].size(); ++w) {
            const Json& r = rep["walkers"][w];
            const std::string where = "report.walkers[" + std::to_string(w) + "]";
            tick("report");
            auto num = [&](const char* key) { return r.contains(key) && r[key].is_number() ? r[key].get<double>() : NAN; };
            if (!close(num("final_length"), length_[w].value())) fail("report", where, "final_length differs from the event log");
            if (!close(num("formed"), formed_[w].value())) fail("report", where, "formed differs from metrics");
            if (!close(num("removed"), removed_[w].value())) fail("report", where, "removed differs from metrics");
            if (!close(num("backlog"), backlog_[w])) fail("report", where, "backlog differs from metrics");
            if (!close(formed_[w].value(), length_[w].value())) fail("telescoping", where, "formed length != contour length");
            if (!r.contains("multilevel") || r["multilevel"].get<bool>() != (planes_[w].size() > 1)) {
                fail("report", where, "multilevel flag does not match the event planes");
            }
            if (!r.contains("vertices") || r["vertices"].get<std::size_t>() != next_k_[w] + 1) {
                fail("report", where, "vertex count does not match the event log");
            }
        }
        if (rep.contains("removal") && rep["removal"].contains("union_bound_ok") && !rep["removal"]["union_bound_ok"].get<bool>()) {
            fail("union_bound", kReportFile, "removed length exceeded the formed bound");
        }
        if (rep.contains("partition") && rep["partition"].is_object()) {
            const Json& p = rep["partition"];
            tick("partition");
            if (p["in_plane"].get<std::size_t>() + p["above"].get<std::size_t>() + p["below"].get<std::size_t>() !=
                p["total"].get<std::size_t>()) {
                fail("partition", kReportFile, "class counts do not add up");
            }
            for (const auto& [id, l] : p["lengths"].items()) {
                const double parts = l["in_plane"].get<double>() + l["above"].get<double>() + l["below"].get<double>();
                if (!close(parts, l["total"].get<double>())) fail("partition", "partition.lengths." + id, "parts do not sum to total");
            }
        }
    }

  private:
    static Complex pair_of(const Json& j) { return detail::pair_of(j); }

    static bool radius_supported(const RadiusDistribution& d, double r, bool nested) {
        if (!(r > 0.0) || !std::isfinite(r)) return nested && r >= 0.0;  // nested radii may underflow
        if (nested) return true;
        if (const auto* c = std::get_if<ConstantRadius>(&d)) return r == c->r;
        if (const auto* u = std::get_if<UniformRadius>(&d)) return r >= u->lo && r <= u->hi;
        return true;
    }

    const RunConfig& cfg_;
    Bundle bundle_;
    VerifyReport& rep_;
    std::vector<BundlePoint> starts_;
    std::vector<BundlePoint> prev_;
    std::vector<std::uint64_t> next_k_;
    std::vector<CompensatedSum> length_;
    std::vector<std::map<std::uint64_t, double>> step_len_;
    std::vector<std::set<std::uint32_t>> planes_;
    std::vector<double> backlog_;
    std::vector<CompensatedSum> formed_, removed_, db_;
    std::vector<std::optional<std::uint64_t>> halted_at_;
    bool sharing_ = true;
};

}  // namespace detail

// Checks a run directory against its own effective config. With `resimulate`
// the run is replayed and the primary artifacts compared byte for byte.
inline VerifyReport verify_run(const fs::path& dir, bool resimulate = true) {
    for (const char* f : {kConfigFile, kEventsFile, kMetricsFile, kReportFile}) {
        if (!fs::exists(dir / f)) throw Error(ErrorCode::MissingArtifact, (dir / f).string());
    }
    const RunConfig cfg = load_config(dir / kConfigFile);
    const std::string events = read_file(dir / kEventsFile);
    const std::string metrics = read_file(dir / kMetricsFile);
    Json report;
    try {
        report = Json::parse(read_file(dir / kReportFile));
    } catch (const Json::parse_error& e) {
        VerifyReport r;
        r.failures.push_back({"report", kReportFile, e.what()});
        return r;
    }
    VerifyReport rep;
    detail::Verifier v(cfg, rep);
    v.events(lines_of(events), report);
    if (!rep.ok() && rep.failures.back().check == "report") return rep;
    v.metrics(lines_of(metrics));
    v.report(report);
    if (resimulate) {
        const Simulation sim = simulate(cfg, false);
        const std::string ev2 = events_text(sim.events);
        const std::string me2 = metrics_text(sim.ledger);
        ++rep.checked["digest"];
        if (digest(ev2) != digest(events)) rep.failures.push_back({"digest", kEventsFile, "replay does not reproduce the log"});
        if (digest(me2) != digest(metrics)) rep.failures.push_back({"digest", kMetricsFile, "replay does not reproduce the metrics"});
    }
    return rep;
}

}  // namespace mlc
