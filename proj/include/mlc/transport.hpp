#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "mlc/contour.hpp"
#include "mlc/error.hpp"
#include "mlc/geometry.hpp"

namespace mlc {

enum class TransportDirection { Forward, Reverse };

struct TransportLengths {
    double part1 = 0.0;
    double part2 = 0.0;
    double part3 = 0.0;
    double total = 0.0;
};

struct TransportContour {
    WalkerId from_contour = 0;
    WalkerId to_contour = 0;
    Vec3 anchor_from;
    Vec3 via;       // entry point on the intersection line
    Vec3 via_exit;  // exit point on the line (equals via when part2 = 0)
    Vec3 anchor_to;
    TransportDirection direction = TransportDirection::Forward;
    TransportLengths lengths;
};

inline Vec3 closest_on_segment(Vec3 p, Vec3 a, Vec3 b) noexcept {
    const Vec3 d = b - a;
    const double dd = dot(d, d);
    if (dd == 0.0) return a;
    const double t = std::clamp(dot(p - a, d) / dd, 0.0, 1.0);
    return a + t * d;
}

inline double distance_to_segment(Vec3 p, Vec3 a, Vec3 b) noexcept {
    return distance(p, closest_on_segment(p, a, b));
}

inline TransportLengths make_lengths(Vec3 anchor_from, Vec3 via, Vec3 via_exit, Vec3 anchor_to) {
    TransportLengths l;
    l.part1 = distance(anchor_from, via);
    l.part2 = distance(via, via_exit);
    l.part3 = distance(via_exit, anchor_to);
    l.total = l.part1 + l.part2 + l.part3;
    return l;
}

namespace detail {

struct Piece {
    Vec3 a;
    Vec3 b;
};

inline std::vector<Piece> pieces_of(const Contour& c) {
    std::vector<Piece> out;
    if (c.size() == 1) out.push_back({c[0].point.global, c[0].point.global});
    for (std::size_t i = 0; i + 1 < c.size(); ++i) out.push_back({c[i].point.global, c[i + 1].point.global});
    return out;
}

inline void check_planes(const Contour& s, const Contour& t, const IntersectionLine& line) {
    if (s.empty() || t.empty()) throw Error(ErrorCode::EmptyContour, "transport endpoints need vertices");
    const PlaneId ps = s[0].point.plane;
    const PlaneId pt = t[0].point.plane;
    auto uniform = [](const Contour& c, PlaneId id) {
        return std::all_of(c.vertices.begin(), c.vertices.end(), [&](const Vertex& v) { return v.point.plane == id; });
    };
    if (ps == pt || !line.has_plane(ps) || !line.has_plane(pt) || !uniform(s, ps) || !uniform(t, pt)) {
        throw Error(ErrorCode::DisjointPlanes, "contours do not lie on the two planes of the line");
    }
}

// Golden-section minimum of a unimodal f on [lo, hi].
template <class F>
double golden_min(F&& f, double lo, double hi, int iterations = 64) {
    constexpr double g = 0.6180339887498949;
    double x1 = hi - g * (hi - lo);
    double x2 = lo + g * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < iterations; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

inline double diameter(const Contour& c) {
    double d = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t j = i + 1; j < c.size(); ++j) d = std::max(d, distance(c[i].point.global, c[j].point.global));
    }
    return d;
}

inline std::array<double, 2> projection_hull(const Contour& s, const Contour& t, const IntersectionLine& line) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Contour* c : {&s, &t}) {
        for (const auto& v : c->vertices) {
            const double p = line.parameter(v.point.global);
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
    }
    return {lo, hi};
}

}  // namespace detail

// Minimal source-to-line-to-target path. For a fixed pair of segments the cost
// d(L(s), A) + d(L(s), B) is convex in the line parameter s and its minimizer lies
// inside the projection hull, so a grid pass followed by golden-section on every
// segment pair yields the global minimum. Entry and exit points coincide at the optimum.
inline TransportContour shortest_transport(const Contour& s, const Contour& t, const IntersectionLine& line,
                                           int resolution = 200,
                                           TransportDirection direction = TransportDirection::Forward) {
    if (resolution < 2) throw Error(ErrorCode::InvalidArgument, "resolution must be at least 2");
    detail::check_planes(s, t, line);
    const auto ps = detail::pieces_of(s);
    const auto pt = detail::pieces_of(t);
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    std::size_t best_a = 0;
    std::size_t best_b = 0;
    const int grid = std::min(resolution, 64);
    for (std::size_t ia = 0; ia < ps.size(); ++ia) {
        for (std::size_t ib = 0; ib < pt.size(); ++ib) {
            const auto& A = ps[ia];
            const auto& B = pt[ib];
            auto cost = [&](double u) {
                const Vec3 x = line.at(u);
                return distance_to_segment(x, A.a, A.b) + distance_to_segment(x, B.a, B.b);
            };
            double lo = std::min({line.parameter(A.a), line.parameter(A.b), line.parameter(B.a), line.parameter(B.b)});
            double hi = std::max({line.parameter(A.a), line.parameter(A.b), line.parameter(B.a), line.parameter(B.b)});
            double u = lo;
            if (hi > lo) {
                // Narrow the bracket around the best grid sample; convexity keeps the minimizer inside.
                int arg = 0;
                double fbest = std::numeric_limits<double>::infinity();
                for (int g = 0; g <= grid; ++g) {
                    const double f = cost(lo + (hi - lo) * g / grid);
                    if (f < fbest) {
                        fbest = f;
                        arg = g;
                    }
                }
                const double step = (hi - lo) / grid;
                const double blo = std::max(lo, lo + (arg - 1) * step);
                const double bhi = std::min(hi, lo + (arg + 1) * step);
                u = detail::golden_min(cost, blo, bhi);
                if (cost(lo + arg * step) < cost(u)) u = lo + arg * step;
            }
            const double f = cost(u);
            if (f < best) {
                best = f;
                best_s = u;
                best_a = ia;
                best_b = ib;
            }
        }
    }
    TransportContour out;
    out.from_contour = s.walker;
    out.to_contour = t.walker;
    out.direction = direction;
    out.via = line.at(best_s);
    out.via_exit = out.via;
    out.anchor_from = closest_on_segment(out.via, ps[best_a].a, ps[best_a].b);
    out.anchor_to = closest_on_segment(out.via, pt[best_b].a, pt[best_b].b);
    out.lengths = make_lengths(out.anchor_from, out.via, out.via_exit, out.anchor_to);
    return out;
}

struct LineWindow {
    double lo = 0.0;
    double hi = 0.0;
};

// Projection hull of both contours on the line, padded by each contour's diameter.
inline LineWindow transport_window(const Contour& s, const Contour& t, const IntersectionLine& line) {
    const auto hull = detail::projection_hull(s, t, line);
    const double pad = detail::diameter(s) + detail::diameter(t);
    return {hull[0] - pad, hull[1] + pad};
}

// Maximal three-part path inside the window. The cost is convex in each of the anchor,
// entry, exit and target coordinates, so the maximum sits at contour vertices and window
// endpoints; enumerating those corners is exact.
inline TransportContour farthest_transport(const Contour& s, const Contour& t, const IntersectionLine& line,
                                           int resolution = 200,
                                           TransportDirection direction = TransportDirection::Forward) {
    if (resolution < 2) throw Error(ErrorCode::InvalidArgument, "resolution must be at least 2");
    detail::check_planes(s, t, line);
    const LineWindow w = transport_window(s, t, line);
    const std::array<double, 2> ends{w.lo, w.hi};
    auto far_vertex = [](const Contour& c, Vec3 x) {
        std::size_t arg = 0;
        double d = -1.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double di = distance(c[i].point.global, x);
            if (di > d) {
                d = di;
                arg = i;
            }
        }
        return arg;
    };
    TransportContour out;
    out.from_contour = s.walker;
    out.to_contour = t.walker;
    out.direction = direction;
    double best = -1.0;
    for (double s1 : ends) {
        for (double s2 : ends) {
            const Vec3 entry = line.at(s1);
            const Vec3 exit = line.at(s2);
            const Vec3 a = s[far_vertex(s, entry)].point.global;
            const Vec3 b = t[far_vertex(t, exit)].point.global;
            const auto len = make_lengths(a, entry, exit, b);
            if (len.total > best) {
                best = len.total;
                out.anchor_from = a;
                out.via = entry;
                out.via_exit = exit;
                out.anchor_to = b;
                out.lengths = len;
            }
        }
    }
    return out;
}

namespace detail {

inline bool near_contour(const Contour& c, Vec3 p, double tol) {
    if (c.size() == 1) return distance(c[0].point.global, p) <= tol;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
        if (distance_to_segment(p, c[i].point.global, c[i + 1].point.global) <= tol) return true;
    }
    return false;
}

}  // namespace detail

// L(S) + L(T) + L(S'), where the full endpoint contour lengths are counted.
inline double directed_length(const Contour& s, const TransportContour& tr, const Contour& t) {
    if (tr.from_contour != s.walker || tr.to_contour != t.walker || !detail::near_contour(s, tr.anchor_from, 1e-9) ||
        !detail::near_contour(t, tr.anchor_to, 1e-9)) {
        throw Error(ErrorCode::MismatchedContours, "transport does not connect the given contours");
    }
    return polyline_length(s) + tr.lengths.total + polyline_length(t);
}

inline TransportContour reversed(const TransportContour& tr) {
    TransportContour out = tr;
    std::swap(out.from_contour, out.to_contour);
    std::swap(out.anchor_from, out.anchor_to);
    std::swap(out.via, out.via_exit);
    out.direction = tr.direction == TransportDirection::Forward ? TransportDirection::Reverse : TransportDirection::Forward;
    out.lengths = make_lengths(out.anchor_from, out.via, out.via_exit, out.anchor_to);
    return out;
}

// True when the reverse transport uses the same two anchors as the forward one.
inline bool reverse_equality_check(const TransportContour& fwd, const TransportContour& rev) {
    if (fwd.direction != TransportDirection::Forward || rev.direction != TransportDirection::Reverse ||
        fwd.from_contour != rev.to_contour || fwd.to_contour != rev.from_contour) {
        throw Error(ErrorCode::DirectionMismatch, "need a forward and a reverse transport over one contour pair");
    }
    return distance(fwd.anchor_from, rev.anchor_to) <= 1e-9 && distance(fwd.anchor_to, rev.anchor_from) <= 1e-9;
}

inline double straight_length(Vec3 a, Vec3 b) noexcept { return distance(a, b); }
inline double two_leg_length(Vec3 a, Vec3 w, Vec3 b) noexcept { return distance(a, w) + distance(w, b); }

}  // namespace mlc
