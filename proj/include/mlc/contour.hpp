#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "mlc/error.hpp"
#include "mlc/geometry.hpp"
#include "mlc/numeric.hpp"

namespace mlc {

using WalkerId = std::uint32_t;

struct Vertex {
    BundlePoint point;
    std::uint64_t interval = 0;
    double time = 0.0;
};

struct Contour {
    WalkerId walker = 0;
    std::vector<Vertex> vertices;

    std::size_t size() const noexcept { return vertices.size(); }
    bool empty() const noexcept { return vertices.empty(); }
    const Vertex& operator[](std::size_t i) const { return vertices[i]; }
    const Vertex& back() const { return vertices.back(); }
};

inline Contour make_contour(WalkerId walker, const std::vector<BundlePoint>& points) {
    Contour c{walker, {}};
    for (std::size_t i = 0; i < points.size(); ++i) {
        c.vertices.push_back({points[i], i, static_cast<double>(i)});
    }
    return c;
}

inline double segment_length(const Contour& c, std::size_t i) {
    if (i + 1 >= c.size()) throw Error(ErrorCode::IndexOutOfRange, "segment index");
    return distance(c.vertices[i].point.global, c.vertices[i + 1].point.global);
}

inline double polyline_length(const Contour& c, std::size_t i, std::size_t j) {
    if (i > j || j >= c.size()) throw Error(ErrorCode::IndexOutOfRange, "polyline_length range");
    CompensatedSum sum;
    for (std::size_t s = i; s < j; ++s) sum += segment_length(c, s);
    return sum.value();
}

inline double polyline_length(const Contour& c) { return c.size() < 2 ? 0.0 : polyline_length(c, 0, c.size() - 1); }

struct ParametricArc {
    double begin = 0.0;
    double end = 1.0;
    std::function<Complex(double)> position;
    std::function<Complex(double)> derivative;
    PlaneId plane;

    // Largest central-difference mismatch of the derivative over `samples` interior points.
    double derivative_residual(int samples = 32) const {
        double worst = 0.0;
        const double span = end - begin;
        const double h = 1e-6 * span;
        for (int s = 1; s <= samples; ++s) {
            const double t = begin + span * s / (samples + 1);
            const Complex fd = (position(t + h) - position(t - h)) / (2 * h);
            worst = std::max(worst, std::abs(fd - derivative(t)) / std::max(1.0, std::abs(derivative(t))));
        }
        return worst;
    }
};

namespace detail {

struct SimpsonState {
    const std::function<Complex(double)>* derivative;
    int max_depth;
    CompensatedSum result;

    double f(double t) const { return std::abs((*derivative)(t)); }

    void refine(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        const double flm = f(lm);
        const double frm = f(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double delta = left + right - whole;
        if (std::abs(delta) <= 15.0 * tol) {
            result += left + right + delta / 15.0;
            return;
        }
        if (depth >= max_depth) {
            throw Error(ErrorCode::NonconvergentQuadrature, "adaptive Simpson exceeded depth limit");
        }
        refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1);
        refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }
};

}  // namespace detail

// Adaptive Simpson on |derivative| over [begin, end], absolute target tol.
inline double arc_length_quadrature(const ParametricArc& arc, double tol, int max_depth = 40) {
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "quadrature tolerance must be positive");
    if (!(arc.end > arc.begin)) throw Error(ErrorCode::InvalidArgument, "arc domain must have end > begin");
    if (!arc.derivative) throw Error(ErrorCode::InvalidArgument, "arc has no derivative");
    detail::SimpsonState st{&arc.derivative, max_depth, {}};
    // Start from a few panels so symmetric integrands cannot fool the first estimate.
    constexpr int panels = 8;
    const double span = arc.end - arc.begin;
    for (int p = 0; p < panels; ++p) {
        const double a = arc.begin + span * p / panels;
        const double b = p + 1 == panels ? arc.end : arc.begin + span * (p + 1) / panels;
        const double fa = st.f(a);
        const double fb = st.f(b);
        const double fm = st.f(0.5 * (a + b));
        st.refine(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol / panels, 0);
    }
    return st.result.value();
}

struct SplitLengths {
    double prefix = 0.0;
    double suffix = 0.0;
    double total = 0.0;
};

// Prefix and suffix are summed segment by segment in index order; total is their sum,
// so additivity is exact by construction and agrees with polyline_length to rounding.
inline SplitLengths concat_length_additivity(const Contour& c, std::size_t i, std::size_t a, std::size_t j) {
    if (!(i <= a && a <= j) || j >= c.size()) throw Error(ErrorCode::IndexOutOfRange, "split indices");
    SplitLengths out;
    out.prefix = polyline_length(c, i, a);
    out.suffix = polyline_length(c, a, j);
    out.total = out.prefix + out.suffix;
    return out;
}

inline bool is_multilevel(const Contour& c) {
    if (c.empty()) throw Error(ErrorCode::EmptyContour, "is_multilevel on empty contour");
    const PlaneId first = c.vertices.front().point.plane;
    for (const auto& v : c.vertices) {
        if (v.point.plane != first) return true;
    }
    return false;
}

struct RegionPartition {
    PlaneId in_plane;
    std::set<PlaneId> above;
    std::set<PlaneId> below;

    enum class Region { In, Above, Below };

    Region region_of(PlaneId id) const {
        if (id == in_plane) return Region::In;
        if (above.count(id)) return Region::Above;
        if (below.count(id)) return Region::Below;
        throw Error(ErrorCode::UnknownPlane, "plane " + std::to_string(id.value) + " missing from partition");
    }
};

// Partition of the parallel family around `hole`; transversal planes cannot be placed on one side.
inline RegionPartition partition_around(const Bundle& bundle, PlaneId hole) {
    RegionPartition part{hole, {}, {}};
    const double h = bundle.offset(hole);
    for (PlaneId id : bundle.parallel_planes()) {
        if (id == hole) continue;
        (bundle.offset(id) > h ? part.above : part.below).insert(id);
    }
    return part;
}

struct RegionLengths {
    double in_plane = 0.0;
    double above = 0.0;
    double below = 0.0;

    double total() const noexcept { return in_plane + above + below; }
};

inline RegionLengths plane_decomposition(const Contour& c, const RegionPartition& part) {
    for (const auto& v : c.vertices) part.region_of(v.point.plane);
    CompensatedSum in, above, below;
    for (std::size_t s = 0; s + 1 < c.size(); ++s) {
        const double len = segment_length(c, s);
        switch (part.region_of(c.vertices[s].point.plane)) {
            case RegionPartition::Region::In: in += len; break;
            case RegionPartition::Region::Above: above += len; break;
            case RegionPartition::Region::Below: below += len; break;
        }
    }
    return {in.value(), above.value(), below.value()};
}

// Same attribution rule, keyed on the start vertex's axial coordinate instead of its plane,
// so contours that pass through transversal planes can still be split around a hole plane.
inline RegionLengths side_decomposition(const Contour& c, const Bundle& bundle, double hole_offset,
                                        double tol = kPlaneTolerance) {
    CompensatedSum in, above, below;
    for (std::size_t s = 0; s + 1 < c.size(); ++s) {
        const double len = segment_length(c, s);
        const double d = bundle.axial(c.vertices[s].point.global) - hole_offset;
        if (std::abs(d) <= tol) {
            in += len;
        } else if (d > 0) {
            above += len;
        } else {
            below += len;
        }
    }
    return {in.value(), above.value(), below.value()};
}

}  // namespace mlc
