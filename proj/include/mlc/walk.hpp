#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "mlc/contour.hpp"
#include "mlc/error.hpp"
#include "mlc/geometry.hpp"
#include "mlc/obstacles.hpp"
#include "mlc/philox.hpp"
#include "mlc/spatial_hash.hpp"

namespace mlc {

struct ConstantRadius {
    double r = 1.0;
};
struct UniformRadius {
    double lo = 0.5;
    double hi = 1.0;
};
struct LogNormalRadius {
    double mu = 0.0;
    double sigma = 0.5;
};
using RadiusDistribution = std::variant<ConstantRadius, UniformRadius, LogNormalRadius>;

inline void validate(const RadiusDistribution& d) {
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConstantRadius>) {
                if (!(v.r > 0.0 && std::isfinite(v.r))) throw Error(ErrorCode::ConfigInvalid, "radius.r must be > 0");
            } else if constexpr (std::is_same_v<T, UniformRadius>) {
                if (!(v.lo > 0.0 && v.hi >= v.lo && std::isfinite(v.hi))) {
                    throw Error(ErrorCode::ConfigInvalid, "radius needs 0 < min <= max");
                }
            } else {
                if (!(std::isfinite(v.mu) && v.sigma >= 0.0 && std::isfinite(v.sigma))) {
                    throw Error(ErrorCode::ConfigInvalid, "radius needs finite mu and sigma >= 0");
                }
            }
        },
        d);
}

inline double sample_radius(const RadiusDistribution& d, Substream& rng) {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConstantRadius>) {
                return v.r;
            } else if constexpr (std::is_same_v<T, UniformRadius>) {
                return v.lo + (v.hi - v.lo) * rng.uniform();
            } else {
                const double u1 = rng.uniform_open();
                const double u2 = rng.uniform();
                const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
                return std::exp(v.mu + v.sigma * z);
            }
        },
        d);
}

struct WalkerConfig {
    RadiusDistribution radius = ConstantRadius{1.0};
    double eps_dist = 1e-9;
    double eps_int = 1e-6;
    double p_switch = 0.5;
    std::uint32_t max_rejections = 1000;
    bool nested_mode = false;
    bool recurrent = false;  // disables distinctness
    bool snap_to_lines = true;
    std::uint64_t seed = 0;

    void validate() const {
        mlc::validate(radius);
        if (!(eps_dist > 0.0)) throw Error(ErrorCode::ConfigInvalid, "eps_dist must be > 0");
        if (!(eps_int > 0.0)) throw Error(ErrorCode::ConfigInvalid, "eps_int must be > 0");
        if (!(p_switch >= 0.0 && p_switch <= 1.0)) throw Error(ErrorCode::ConfigInvalid, "p_switch must lie in [0,1]");
        if (max_rejections == 0) throw Error(ErrorCode::ConfigInvalid, "max_rejections must be positive");
    }
};

enum class WalkerStatus { Active, HaltedBlocked, HaltedPlaneHole };

constexpr const char* to_string(WalkerStatus s) noexcept {
    switch (s) {
        case WalkerStatus::Active: return "active";
        case WalkerStatus::HaltedBlocked: return "halted_blocked";
        case WalkerStatus::HaltedPlaneHole: return "halted_plane_hole";
    }
    return "unknown";
}

// Position of a nested disc inside its parent, in the parent's unit-disc frame.
struct NestedLink {
    Complex offset;        // center of this disc in the parent frame
    double ratio = 1.0;    // this radius over the parent radius
    double log_radius = 0.0;
    Complex chosen_frame;  // chosen point in this disc's unit frame
};

struct StepEvent {
    WalkerId walker = 0;
    std::uint64_t interval = 0;
    Disc disc;
    std::optional<PlaneId> switched_plane;
    BundlePoint chosen;
    std::uint32_t rejections = 0;
    std::optional<NestedLink> nested;
};

using EventLog = std::vector<StepEvent>;

struct RandomInBox {
    double xmin = -1.0;
    double xmax = 1.0;
    double ymin = -1.0;
    double ymax = 1.0;
};

// Scale-free state of a nested chain: absolute radii shrink geometrically and
// underflow after a few hundred steps, so containment is tracked in unit frames.
struct NestedFrame {
    Complex center;
    double radius = 0.0;
    double log_radius = 0.0;
    Complex last;               // current vertex in the unit frame of the newest disc
    std::vector<Complex> live;  // earlier vertices that can still collide, same frame
};

struct WalkerState {
    WalkerId id = 0;
    WalkerConfig config;
    BundlePoint current;
    std::uint64_t interval = 0;
    WalkerStatus status = WalkerStatus::Active;
    Contour contour;
    SpatialHash visited;
    std::optional<NestedFrame> nested;
};

inline constexpr std::uint32_t kInitBlock = 0xFFFFFFFFu;

inline WalkerState init_walker(const WalkerConfig& cfg, WalkerId id, const Bundle& bundle, PlaneId plane,
                               const std::variant<Complex, RandomInBox>& start) {
    cfg.validate();
    if (!bundle.contains(plane)) throw Error(ErrorCode::UnknownPlane, "start plane " + std::to_string(plane.value));
    Complex z0;
    if (const auto* z = std::get_if<Complex>(&start)) {
        z0 = *z;
    } else {
        const auto& box = std::get<RandomInBox>(start);
        Substream rng(cfg.seed, id, kInitBlock);
        const double u = rng.uniform();
        const double v = rng.uniform();
        z0 = {box.xmin + (box.xmax - box.xmin) * u, box.ymin + (box.ymax - box.ymin) * v};
    }
    WalkerState w;
    w.id = id;
    w.config = cfg;
    w.current = make_point(bundle.plane(plane), z0);
    w.contour.walker = id;
    w.contour.vertices.push_back({w.current, 0, 0.0});
    w.visited = SpatialHash(cfg.eps_dist);
    w.visited.insert(w.current.global);
    return w;
}

namespace detail {

inline double cross2(Complex a, Complex b) noexcept { return a.real() * b.imag() - a.imag() * b.real(); }

// Does the path p -> q meet the closed segment [a, b] anywhere except at p itself?
inline bool path_crosses(Complex p, Complex q, Complex a, Complex b) noexcept {
    const Complex d = q - p;
    const Complex e = b - a;
    const double den = cross2(d, e);
    const Complex w = a - p;
    constexpr double tiny = 1e-12;
    if (std::abs(den) <= tiny * std::abs(d) * std::abs(e)) {
        if (std::abs(cross2(w, d)) > tiny * std::abs(d) * (std::abs(w) + 1.0)) return false;
        // Collinear: overlap beyond the start point?
        const double dd = std::norm(d);
        if (dd == 0.0) return false;
        double t0 = (w.real() * d.real() + w.imag() * d.imag()) / dd;
        double t1 = ((b - p).real() * d.real() + (b - p).imag() * d.imag()) / dd;
        if (t0 > t1) std::swap(t0, t1);
        return t1 > tiny && t0 <= 1.0;
    }
    const double t = cross2(w, e) / den;
    const double u = cross2(w, d) / den;
    return t > tiny && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

inline bool blocked_by_obstacles(const Bundle& bundle, const Obstacles& obs, PlaneId plane, Complex from,
                                 Vec3 from_global, Complex to, Vec3 to_global, double eps) {
    for (PlaneId h : obs.hole_planes) {
        const Plane& hp = bundle.plane(h);
        const double dn = dot(to_global - hp.origin, hp.normal());
        const double d0 = dot(from_global - hp.origin, hp.normal());
        if (std::abs(dn) < eps || (dn > 0) != (d0 > 0)) return true;
    }
    const Complex lo{std::min(from.real(), to.real()) - eps, std::min(from.imag(), to.imag()) - eps};
    const Complex hi{std::max(from.real(), to.real()) + eps, std::max(from.imag(), to.imag()) + eps};
    auto hits = [&](const RemovedSegment& seg) {
        if (seg.plane != plane) return false;
        if (std::max(seg.a.real(), seg.b.real()) < lo.real() || std::min(seg.a.real(), seg.b.real()) > hi.real() ||
            std::max(seg.a.imag(), seg.b.imag()) < lo.imag() || std::min(seg.a.imag(), seg.b.imag()) > hi.imag()) {
            return false;
        }
        // Closest-point test in 3-D, then the planar crossing test.
        const Vec3 d = seg.gb - seg.ga;
        const double dd = dot(d, d);
        const double t = dd == 0.0 ? 0.0 : std::clamp(dot(to_global - seg.ga, d) / dd, 0.0, 1.0);
        if (distance(to_global, seg.ga + t * d) < eps) return true;
        return path_crosses(from, to, seg.a, seg.b);
    };
    if (obs.index != nullptr) {
        return obs.index->any_in_box(plane, lo, hi, obs.removed.size(),
                                     [&](std::size_t i) { return hits(obs.removed[i]); });
    }
    for (const auto& seg : obs.removed) {
        if (hits(seg)) return true;
    }
    return false;
}

}  // namespace detail

inline std::optional<StepEvent> nested_step(WalkerState& w, const Bundle& bundle) {
    if (w.status != WalkerStatus::Active) throw Error(ErrorCode::WalkerHalted, "walker " + std::to_string(w.id));
    if (!w.config.nested_mode) throw Error(ErrorCode::InvalidArgument, "nested_step needs nested_mode");
    const auto& cfg = w.config;
    Substream rng(cfg.seed, w.id, static_cast<std::uint32_t>(w.interval));
    NestedFrame next;
    NestedLink link;
    if (!w.nested) {
        const double r0 = sample_radius(cfg.radius, rng);
        next.center = w.current.local;
        next.radius = r0;
        next.log_radius = std::log(r0);
        next.live.push_back({0.0, 0.0});
        link = {{0.0, 0.0}, 1.0, next.log_radius, {}};
    } else {
        const NestedFrame& f = *w.nested;
        const double feasible = 1.0 - std::abs(f.last);
        if (feasible < 1e-15) throw Error(ErrorCode::DegenerateDisc, "no room for a nested disc");
        const double ratio = rng.uniform_open() * feasible;
        next.center = f.center + f.radius * f.last;
        next.radius = f.radius * ratio;
        next.log_radius = f.log_radius + std::log(ratio);
        for (Complex p : f.live) {
            const Complex q = (p - f.last) / ratio;
            if (std::abs(q) < 2.0) next.live.push_back(q);
        }
        link = {f.last, ratio, next.log_radius, {}};
    }
    const Plane& plane = bundle.plane(w.current.plane);
    std::uint32_t rejections = 0;
    while (true) {
        if (rejections >= cfg.max_rejections) {
            w.status = WalkerStatus::HaltedBlocked;
            return std::nullopt;
        }
        const double rho = std::sqrt(rng.uniform());
        const double ang = 2.0 * kPi * rng.uniform();
        const Complex q = std::polar(rho, ang);
        if (!(std::abs(q) < 1.0)) continue;
        // A candidate on the rim would leave no room for the next disc.
        bool reject = 1.0 - std::abs(q) < 1e-15;
        if (!reject && !cfg.recurrent) {
            for (Complex p : next.live) {
                if (std::abs(q - p) < cfg.eps_dist) {
                    reject = true;
                    break;
                }
            }
        }
        if (reject) {
            ++rejections;
            continue;
        }
        link.chosen_frame = q;
        StepEvent ev;
        ev.walker = w.id;
        ev.interval = w.interval;
        ev.disc = {plane.id, next.center, next.radius};
        ev.chosen = make_point(plane, next.center + next.radius * q);
        ev.rejections = rejections;
        ev.nested = link;
        next.last = q;
        next.live.push_back(q);
        w.nested = std::move(next);
        ++w.interval;
        w.current = ev.chosen;
        w.contour.vertices.push_back({w.current, w.interval, static_cast<double>(w.interval)});
        w.visited.insert(w.current.global);
        return ev;
    }
}

// One two-step iteration. Returns nullopt (and halts the walker) when every
// candidate was rejected max_rejections times in a row.
inline std::optional<StepEvent> step(WalkerState& w, const Bundle& bundle, const Obstacles& obs = {}) {
    if (w.status != WalkerStatus::Active) throw Error(ErrorCode::WalkerHalted, "walker " + std::to_string(w.id));
    if (w.config.nested_mode) return nested_step(w, bundle);
    const auto& cfg = w.config;
    Substream rng(cfg.seed, w.id, static_cast<std::uint32_t>(w.interval));
    const double r = sample_radius(cfg.radius, rng);

    PlaneId disc_plane = w.current.plane;
    std::optional<PlaneId> switched;
    std::vector<const IntersectionLine*> near;
    for (const IntersectionLine* l : bundle.lines_through(w.current.plane)) {
        if (obs.hole_planes.count(l->other(w.current.plane))) continue;
        if (on_intersection(w.current, *l, cfg.eps_int)) near.push_back(l);
    }
    if (!near.empty() && rng.uniform() < cfg.p_switch) {
        const auto pick = std::min(near.size() - 1, static_cast<std::size_t>(rng.uniform() * near.size()));
        disc_plane = near[pick]->other(w.current.plane);
        switched = disc_plane;
    }
    const Plane& plane = bundle.plane(disc_plane);
    const Complex center = switched ? project(plane, w.current.global).local : w.current.local;
    const auto lines = bundle.lines_through(disc_plane);

    std::uint32_t rejections = 0;
    while (true) {
        if (rejections >= cfg.max_rejections) {
            w.status = WalkerStatus::HaltedBlocked;
            return std::nullopt;
        }
        const double rho = r * std::sqrt(rng.uniform());
        const double ang = 2.0 * kPi * rng.uniform();
        Complex cand = center + std::polar(rho, ang);
        if (!(std::abs(cand - center) < r)) continue;
        BundlePoint pt = make_point(plane, cand);
        if (cfg.snap_to_lines) {
            for (const IntersectionLine* l : lines) {
                if (obs.hole_planes.count(l->other(disc_plane))) continue;
                if (l->distance_to(pt.global) < cfg.eps_int) {
                    const Complex snapped = project(plane, l->closest(pt.global)).local;
                    if (std::abs(snapped - center) < r) {
                        pt = make_point(plane, snapped);
                        pt.secondary = l->other(disc_plane);
                    }
                    break;
                }
            }
        }
        bool reject = !cfg.recurrent && w.visited.any_within(pt.global, cfg.eps_dist);
        if (!reject) {
            reject = detail::blocked_by_obstacles(bundle, obs, disc_plane, center, w.current.global, pt.local,
                                                  pt.global, cfg.eps_dist);
        }
        if (reject) {
            ++rejections;
            continue;
        }
        StepEvent ev;
        ev.walker = w.id;
        ev.interval = w.interval;
        ev.disc = {disc_plane, center, r};
        ev.switched_plane = switched;
        ev.chosen = pt;
        ev.rejections = rejections;
        ++w.interval;
        w.current = pt;
        w.contour.vertices.push_back({pt, w.interval, static_cast<double>(w.interval)});
        w.visited.insert(pt.global);
        return ev;
    }
}

struct RunResult {
    Contour contour;
    EventLog events;
};

inline RunResult run(WalkerState& w, std::uint64_t n, const Bundle& bundle, const Obstacles& obs = {}) {
    EventLog log;
    for (std::uint64_t i = 0; i < n && w.status == WalkerStatus::Active; ++i) {
        if (auto ev = step(w, bundle, obs)) log.push_back(*ev);
    }
    return {w.contour, std::move(log)};
}

// Rebuilds the state a walker had right after `prefix`, given its starting point.
inline WalkerState restore_walker(const WalkerConfig& cfg, WalkerId id, const Bundle& bundle, const BundlePoint& origin,
                                  std::span<const StepEvent> prefix) {
    WalkerState w = init_walker(cfg, id, bundle, origin.plane, origin.local);
    for (const auto& ev : prefix) {
        if (ev.walker != id || ev.interval != w.interval) {
            throw Error(ErrorCode::InvalidArgument, "prefix is not this walker's contiguous log");
        }
        if (cfg.nested_mode) {
            if (!ev.nested) throw Error(ErrorCode::InvalidArgument, "nested walker log lacks frame data");
            NestedFrame next;
            if (!w.nested) {
                next.center = w.current.local;
                next.radius = ev.disc.radius;
                next.log_radius = ev.nested->log_radius;
                next.live.push_back({0.0, 0.0});
            } else {
                const NestedFrame& f = *w.nested;
                const double ratio = ev.nested->ratio;
                next.center = f.center + f.radius * f.last;
                next.radius = f.radius * ratio;
                next.log_radius = f.log_radius + std::log(ratio);
                for (Complex p : f.live) {
                    const Complex q = (p - f.last) / ratio;
                    if (std::abs(q) < 2.0) next.live.push_back(q);
                }
            }
            next.last = ev.nested->chosen_frame;
            next.live.push_back(next.last);
            w.nested = std::move(next);
        }
        ++w.interval;
        w.current = ev.chosen;
        w.contour.vertices.push_back({w.current, w.interval, static_cast<double>(w.interval)});
        w.visited.insert(w.current.global);
    }
    return w;
}

// Number of steps separating the vertex of interval a from that of interval b.
// The log is checked to be a single contiguous chain between the two.
inline std::uint64_t reachable_in(const EventLog& log, std::uint64_t a, std::uint64_t b) {
    if (a > b || b > log.size()) throw Error(ErrorCode::IndexOutOfRange, "reachable_in interval range");
    for (std::uint64_t e = a; e < b; ++e) {
        if (log[e].interval != e || log[e].walker != log[0].walker) {
            throw Error(ErrorCode::InvalidArgument, "log is not contiguous");
        }
        if (e > a) {
            const auto& prev = log[e - 1].chosen;
            const auto& disc = log[e].disc;
            const bool same = disc.plane == prev.plane ? disc.center == prev.local : false;
            if (!same && !log[e].switched_plane) throw Error(ErrorCode::InvalidArgument, "broken chain in log");
        }
    }
    return b - a;
}

// Answers reachable_in queries in constant time after one pass over the log.
class ReachIndex {
  public:
    explicit ReachIndex(const EventLog& log) : gaps_(log.size() + 1, 0), breaks_(log.size() + 1, 0) {
        for (std::size_t e = 0; e < log.size(); ++e) {
            const bool gap = log[e].interval != e || log[e].walker != log[0].walker;
            bool broken = false;
            if (e > 0) {
                const auto& prev = log[e - 1].chosen;
                const auto& disc = log[e].disc;
                const bool same = disc.plane == prev.plane ? disc.center == prev.local : false;
                broken = !same && !log[e].switched_plane;
            }
            gaps_[e + 1] = gaps_[e] + gap;
            breaks_[e + 1] = breaks_[e] + broken;
        }
    }

    std::uint64_t reachable(std::uint64_t a, std::uint64_t b) const {
        if (a > b || b + 1 > gaps_.size()) throw Error(ErrorCode::IndexOutOfRange, "reachable_in interval range");
        if (gaps_[b] != gaps_[a]) throw Error(ErrorCode::InvalidArgument, "log is not contiguous");
        if (b > a + 1 && breaks_[b] != breaks_[a + 1]) throw Error(ErrorCode::InvalidArgument, "broken chain in log");
        return b - a;
    }

  private:
    std::vector<std::uint32_t> gaps_;
    std::vector<std::uint32_t> breaks_;
};

struct UniquenessResult {
    bool distinct = false;
    bool same_length = false;
};

inline double log_length(const EventLog& log) {
    CompensatedSum s;
    for (std::size_t i = 1; i < log.size(); ++i) s += distance(log[i - 1].chosen.global, log[i].chosen.global);
    return s.value();
}

// Two logs describe the same contour iff they start at the same point and pick
// the same vertices in the same order.
inline UniquenessResult uniqueness_check(const EventLog& a, const EventLog& b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyContour, "uniqueness_check needs non-empty logs");
    auto start = [](const StepEvent& e) { return std::pair{e.disc.plane, e.disc.center}; };
    bool differ = start(a[0]) != start(b[0]) || a[0].switched_plane != b[0].switched_plane || a.size() != b.size();
    for (std::size_t i = 0; !differ && i < a.size(); ++i) {
        differ = a[i].chosen.plane != b[i].chosen.plane || !(a[i].chosen.global == b[i].chosen.global);
    }
    UniquenessResult out;
    out.distinct = differ;
    out.same_length = std::abs(log_length(a) + std::abs(a[0].chosen.local - a[0].disc.center) -
                               log_length(b) - std::abs(b[0].chosen.local - b[0].disc.center)) <= 1e-12;
    return out;
}

}  // namespace mlc
