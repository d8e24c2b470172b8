#pragma once

#include <map>
#include <optional>
#include <vector>

#include "mlc/config.hpp"
#include "mlc/removal.hpp"
#include "mlc/topology.hpp"
#include "mlc/transport.hpp"
#include "mlc/walk.hpp"

namespace mlc {

struct IslandResult {
    IslandRequest request;
    double h = 0.0;
    std::vector<Island> islands;
    std::vector<PlaneId> crossing_lines;
};

struct TransportResult {
    TransportRequest request;
    PlaneId from_plane;
    PlaneId to_plane;
    TransportContour shortest;
    TransportContour farthest;
    double directed_shortest = 0.0;
    double directed_farthest = 0.0;
    bool reverse_equal = false;
};

struct Simulation {
    RunConfig config;
    Bundle bundle;
    std::vector<WalkerState> walkers;
    std::vector<BundlePoint> starts;
    EventLog events;  // interval-major, walker-minor
    RemovalLedger ledger;
    std::optional<PartitionReport> partition;
    std::vector<IslandResult> islands;
    std::vector<TransportResult> transport;
};

inline Bundle checked_bundle(const RunConfig& cfg) {
    try {
        return build_bundle(cfg);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigInvalid, std::string("bundle: ") + e.what());
    }
}

// Longest run of consecutive vertices on `plane`, as a contour of its own.
inline Contour plane_run(const Contour& c, PlaneId plane) {
    std::size_t best_lo = 0, best_n = 0;
    for (std::size_t i = 0; i < c.size();) {
        if (c[i].point.plane != plane) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < c.size() && c[j].point.plane == plane) ++j;
        if (j - i > best_n) {
            best_lo = i;
            best_n = j - i;
        }
        i = j;
    }
    Contour out;
    out.walker = c.walker;
    out.vertices.assign(c.vertices.begin() + static_cast<std::ptrdiff_t>(best_lo),
                        c.vertices.begin() + static_cast<std::ptrdiff_t>(best_lo + best_n));
    return out;
}

inline TransportResult run_transport(const Bundle& bundle, const std::vector<WalkerState>& walkers,
                                     const TransportRequest& q) {
    if (q.from >= walkers.size() || q.to >= walkers.size()) {
        throw Error(ErrorCode::InvalidArgument, "transport names an unknown walker");
    }
    const Contour& s = walkers[q.from].contour;
    const Contour& t = walkers[q.to].contour;
    TransportResult r;
    r.request = q;
    r.from_plane = q.line ? PlaneId{q.line->first} : s[0].point.plane;
    r.to_plane = q.line ? PlaneId{q.line->second} : t[0].point.plane;
    if (!bundle.contains(r.from_plane) || !bundle.contains(r.to_plane)) {
        throw Error(ErrorCode::UnknownPlane, "transport line names an unknown plane");
    }
    const IntersectionLine* line = bundle.line(r.from_plane, r.to_plane);
    if (!line) throw Error(ErrorCode::DisjointPlanes, "planes do not intersect");
    const Contour sf = plane_run(s, r.from_plane);
    const Contour tf = plane_run(t, r.to_plane);
    if (sf.empty() || tf.empty()) throw Error(ErrorCode::DisjointPlanes, "contour has no vertex on its transport plane");
    r.shortest = shortest_transport(sf, tf, *line);
    r.farthest = farthest_transport(sf, tf, *line);
    r.directed_shortest = directed_length(sf, r.shortest, tf);
    r.directed_farthest = directed_length(sf, r.farthest, tf);
    const TransportContour back = shortest_transport(tf, sf, *line, 200, TransportDirection::Reverse);
    r.reverse_equal = reverse_equality_check(r.shortest, back);
    return r;
}

inline IslandResult run_islands(const RemovalLedger& ledger, const Bundle& bundle, const IslandRequest& q, double h_override,
                                std::uint64_t interval) {
    IslandResult r;
    r.request = q;
    const Disc d{PlaneId{q.plane}, q.center, q.radius};
    r.h = h_override > 0.0 ? h_override : q.h.value_or(default_resolution(d));
    const auto segs = segments_on_plane(ledger.removed_pieces(), d.plane);
    r.islands = detect_islands(d, segs, r.h, interval);
    for (const auto& isl : r.islands) {
        for (PlaneId p : lines_crossing(isl, bundle)) {
            if (std::find(r.crossing_lines.begin(), r.crossing_lines.end(), p) == r.crossing_lines.end()) {
                r.crossing_lines.push_back(p);
            }
        }
    }
    return r;
}

// Per interval: every active walker steps against the removal state frozen at the
// interval start, then formation, scheduled removal, tail removal and the
// plane-hole event are applied in that order before the interval closes.
// Island and transport requests only feed the report; replays can skip them.
inline Simulation simulate(const RunConfig& cfg, bool with_requests = true) {
    Simulation sim{cfg, checked_bundle(cfg), {}, {}, {}, RemovalLedger(cfg.removal), {}, {}, {}};
    for (std::size_t i = 0; i < cfg.walkers.size(); ++i) {
        const WalkerSpec& spec = cfg.walkers[i];
        const auto id = static_cast<WalkerId>(i);
        sim.walkers.push_back(init_walker(spec.config, id, sim.bundle, PlaneId{spec.plane}, spec.start));
        sim.starts.push_back(sim.walkers.back().current);
        sim.ledger.add_walker(id, cfg.removal.resolve_start(cfg.seed, id));
    }
    for (std::uint64_t k = 0; k < cfg.horizon; ++k) {
        {
            const Obstacles obs = sim.ledger.obstacles();
            for (auto& w : sim.walkers) {
                if (w.status != WalkerStatus::Active) continue;
                if (auto ev = step(w, sim.bundle, obs)) sim.events.push_back(*ev);
            }
        }
        sim.ledger.begin_interval(k);
        for (const auto& w : sim.walkers) sim.ledger.record_formation(w.id, w.contour);
        if (cfg.removal_enabled) {
            for (const auto& w : sim.walkers) sim.ledger.apply_removal(w.id, sim.ledger.plan_interval(w.id, k));
            if (sim.ledger.partitioned()) {
                for (const auto& w : sim.walkers) sim.ledger.apply_tail_step(w.id);
            }
            if (cfg.plane_hole && cfg.plane_hole->interval == k) {
                std::vector<WalkerState*> ptrs;
                for (auto& w : sim.walkers) ptrs.push_back(&w);
                sim.partition = plane_hole_event(sim.bundle, PlaneId{cfg.plane_hole->plane}, ptrs, sim.ledger,
                                                 cfg.plane_hole->psi);
            }
        }
        std::map<WalkerId, WalkerStatus> status;
        for (const auto& w : sim.walkers) status[w.id] = w.status;
        sim.ledger.close_interval(k, status);
    }
    if (!with_requests) return sim;
    for (const auto& q : cfg.islands) sim.islands.push_back(run_islands(sim.ledger, sim.bundle, q, 0.0, cfg.horizon));
    for (const auto& q : cfg.transport) sim.transport.push_back(run_transport(sim.bundle, sim.walkers, q));
    return sim;
}

}  // namespace mlc
