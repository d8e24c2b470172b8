#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "mlc/error.hpp"

namespace mlc {

using Complex = std::complex<double>;

inline constexpr double kPlaneTolerance = 1e-9;
inline constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator-(Vec3 a) noexcept { return {-a.x, -a.y, -a.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 a) noexcept { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr Vec3 operator*(Vec3 a, double s) noexcept { return s * a; }
    friend constexpr bool operator==(Vec3 a, Vec3 b) noexcept = default;

    bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr double dot(Vec3 a, Vec3 b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) noexcept {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) noexcept { return std::hypot(a.x, a.y, a.z); }
inline double distance(Vec3 a, Vec3 b) noexcept { return norm(a - b); }
inline Vec3 normalized(Vec3 a) { return (1.0 / norm(a)) * a; }

inline constexpr Vec3 kAxisX{1, 0, 0};
inline constexpr Vec3 kAxisY{0, 1, 0};
inline constexpr Vec3 kAxisZ{0, 0, 1};

struct PlaneId {
    std::uint32_t value = 0;
    friend constexpr auto operator<=>(PlaneId, PlaneId) = default;
};

struct ParallelTag {
    double offset = 0.0;
};

// Angle to the parallel family in degrees; pivot is the axial offset of the slicing locus.
struct TransversalTag {
    double angle_deg = 90.0;
    double pivot = 0.0;
};

struct Plane {
    PlaneId id;
    Vec3 origin;
    Vec3 basis1;
    Vec3 basis2;
    std::variant<ParallelTag, TransversalTag> tag;

    Vec3 normal() const { return normalized(cross(basis1, basis2)); }
    bool is_parallel() const noexcept { return std::holds_alternative<ParallelTag>(tag); }
};

inline Vec3 embed(const Plane& plane, Complex local) noexcept {
    return plane.origin + local.real() * plane.basis1 + local.imag() * plane.basis2;
}

struct Projection {
    Complex local;
    double distance = 0.0;
};

inline Projection project(const Plane& plane, Vec3 p) {
    const Vec3 d = p - plane.origin;
    const Complex local{dot(d, plane.basis1), dot(d, plane.basis2)};
    return {local, distance(p, embed(plane, local))};
}

struct IntersectionLine {
    Vec3 point;
    Vec3 direction;
    std::pair<PlaneId, PlaneId> planes;

    Vec3 at(double s) const noexcept { return point + s * direction; }
    double parameter(Vec3 p) const noexcept { return dot(p - point, direction); }
    Vec3 closest(Vec3 p) const noexcept { return at(parameter(p)); }
    double distance_to(Vec3 p) const noexcept { return distance(p, closest(p)); }
    bool has_plane(PlaneId id) const noexcept { return planes.first == id || planes.second == id; }
    PlaneId other(PlaneId id) const noexcept { return planes.first == id ? planes.second : planes.first; }
};

struct ParallelPlanes {};
struct CoincidentPlanes {};
using PlaneIntersection = std::variant<IntersectionLine, ParallelPlanes, CoincidentPlanes>;

inline PlaneIntersection intersect_planes(const Plane& p, const Plane& q) {
    if (p.id == q.id) throw Error(ErrorCode::InvalidArgument, "intersect_planes needs two distinct planes");
    const Vec3 n1 = p.normal();
    const Vec3 n2 = q.normal();
    const Vec3 u = cross(n1, n2);
    const double s = norm(u);
    if (std::asin(std::min(1.0, s)) <= kPlaneTolerance) {
        if (std::abs(dot(q.origin - p.origin, n1)) <= kPlaneTolerance) return CoincidentPlanes{};
        return ParallelPlanes{};
    }
    const double d1 = dot(n1, p.origin);
    const double d2 = dot(n2, q.origin);
    const Vec3 point = (1.0 / (s * s)) * (d1 * cross(n2, u) + d2 * cross(u, n1));
    return IntersectionLine{point, (1.0 / s) * u, {p.id, q.id}};
}

struct Disc {
    PlaneId plane;
    Complex center;
    double radius = 1.0;

    bool contains(Complex z) const noexcept { return std::abs(z - center) < radius; }
};

struct BundlePoint {
    PlaneId plane;
    Complex local;
    Vec3 global;
    std::optional<PlaneId> secondary;
};

inline BundlePoint make_point(const Plane& plane, Complex local) {
    return {plane.id, local, embed(plane, local), std::nullopt};
}

inline bool on_intersection(const BundlePoint& p, const IntersectionLine& line, double eps) {
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "on_intersection needs eps > 0");
    return line.distance_to(p.global) < eps;
}

// Rotation of p about the line through `point` with unit `direction`.
inline Vec3 rotate_about(Vec3 p, Vec3 point, Vec3 direction, double radians) {
    const Vec3 k = normalized(direction);
    const Vec3 v = p - point;
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    const Vec3 r = c * v + s * cross(k, v) + (dot(k, v) * (1.0 - c)) * k;
    return point + r;
}

namespace detail {

inline Plane rotate_plane(const Plane& plane, Vec3 point, Vec3 direction, double radians, Vec3 axis) {
    const Vec3 o = rotate_about(plane.origin, point, direction, radians);
    const Vec3 b1 = rotate_about(plane.origin + plane.basis1, point, direction, radians) - o;
    const Vec3 b2 = rotate_about(plane.origin + plane.basis2, point, direction, radians) - o;
    Plane out{plane.id, o, normalized(b1), normalized(b2), ParallelTag{}};
    const Vec3 n = out.normal();
    const double c = std::min(1.0, std::abs(dot(n, axis)));
    const double tilt = std::acos(c);
    if (tilt <= kPlaneTolerance) {
        out.tag = ParallelTag{dot(o, axis)};
    } else {
        out.tag = TransversalTag{tilt * 180.0 / kPi, dot(point, axis)};
    }
    return out;
}

}  // namespace detail

// Rigid rotation by theta degrees about `pivot`; theta must lie in (0, 360].
inline Plane rotate_transversal(const Plane& plane, double theta_deg, const IntersectionLine& pivot,
                                Vec3 axis = kAxisX) {
    if (!(theta_deg > 0.0 && theta_deg <= 360.0)) {
        throw Error(ErrorCode::InvalidAngle, "rotation angle must lie in (0, 360]");
    }
    return detail::rotate_plane(plane, pivot.point, pivot.direction, theta_deg * kPi / 180.0, axis);
}

inline Plane parallel_plane(PlaneId id, double offset) {
    return {id, {offset, 0, 0}, kAxisY, kAxisZ, ParallelTag{offset}};
}

// z = 0 with local x + iy, turned about {(pivot, y, 0)} so that it meets the
// parallel family at angle_deg. 90 degrees gives the canonical slicing plane.
inline Plane transversal_plane(PlaneId id, double angle_deg, double pivot) {
    if (!(angle_deg > 0.0 && angle_deg < 180.0)) {
        if (angle_deg == 0.0 || angle_deg == 180.0) {
            throw Error(ErrorCode::TransversalIsParallel, "a 0 or 180 degree transversal is a parallel plane");
        }
        throw Error(ErrorCode::InvalidAngle, "transversal angle must lie in (0, 180)");
    }
    Plane base{id, {0, 0, 0}, kAxisX, kAxisY, TransversalTag{90.0, pivot}};
    if (angle_deg == 90.0) return base;
    Plane out = detail::rotate_plane(base, {pivot, 0, 0}, kAxisY, (angle_deg - 90.0) * kPi / 180.0, kAxisX);
    out.tag = TransversalTag{angle_deg, pivot};
    return out;
}

struct SliceResult {
    std::set<PlaneId> left;
    std::set<PlaneId> on_locus;
    std::set<PlaneId> right;
};

class Bundle {
  public:
    explicit Bundle(Vec3 axis = kAxisX) : axis_(normalized(axis)) {}

    // Returns the existing plane at this offset if one was already materialized.
    PlaneId add_parallel(double offset) {
        if (auto found = find_parallel(offset)) return *found;
        return insert(parallel_plane(PlaneId{next_id_}, offset));
    }

    PlaneId add_transversal(double angle_deg, double pivot) {
        return insert(transversal_plane(PlaneId{next_id_}, angle_deg, pivot));
    }

    // Adds an arbitrary plane (for example a rotated copy) under a fresh id.
    PlaneId add_plane(Plane plane) {
        plane.id = PlaneId{next_id_};
        if (plane.is_parallel()) {
            const double c = std::abs(dot(plane.normal(), axis_));
            if (std::acos(std::min(1.0, c)) > kPlaneTolerance) {
                throw Error(ErrorCode::InvalidArgument, "parallel-tagged plane is not normal to the axis");
            }
        }
        return insert(plane);
    }

    bool contains(PlaneId id) const noexcept { return planes_.count(id) != 0; }

    const Plane& plane(PlaneId id) const {
        auto it = planes_.find(id);
        if (it == planes_.end()) throw Error(ErrorCode::UnknownPlane, "plane " + std::to_string(id.value));
        return it->second;
    }

    const std::map<PlaneId, Plane>& planes() const noexcept { return planes_; }
    Vec3 axis() const noexcept { return axis_; }
    double axial(Vec3 p) const noexcept { return dot(p, axis_); }

    std::optional<PlaneId> find_parallel(double offset) const {
        for (const auto& [id, p] : planes_) {
            if (const auto* tag = std::get_if<ParallelTag>(&p.tag)) {
                if (std::abs(tag->offset - offset) <= kPlaneTolerance) return id;
            }
        }
        return std::nullopt;
    }

    // Parallel planes ordered by offset.
    std::vector<PlaneId> parallel_planes() const {
        std::vector<std::pair<double, PlaneId>> tmp;
        for (const auto& [id, p] : planes_) {
            if (const auto* tag = std::get_if<ParallelTag>(&p.tag)) tmp.emplace_back(tag->offset, id);
        }
        std::sort(tmp.begin(), tmp.end());
        std::vector<PlaneId> out;
        for (const auto& [o, id] : tmp) out.push_back(id);
        return out;
    }

    double offset(PlaneId id) const {
        const Plane& p = plane(id);
        if (const auto* tag = std::get_if<ParallelTag>(&p.tag)) return tag->offset;
        throw Error(ErrorCode::InvalidArgument, "plane " + std::to_string(id.value) + " is not parallel");
    }

    const IntersectionLine* line(PlaneId a, PlaneId b) const {
        auto it = lines_.find(key(a, b));
        return it == lines_.end() ? nullptr : &it->second;
    }

    std::vector<const IntersectionLine*> lines_through(PlaneId id) const {
        std::vector<const IntersectionLine*> out;
        for (const auto& [k, l] : lines_) {
            if (l.has_plane(id)) out.push_back(&l);
        }
        return out;
    }

    const std::map<std::pair<PlaneId, PlaneId>, IntersectionLine>& lines() const noexcept { return lines_; }

  private:
    static std::pair<PlaneId, PlaneId> key(PlaneId a, PlaneId b) noexcept {
        return a < b ? std::pair{a, b} : std::pair{b, a};
    }

    PlaneId insert(const Plane& plane) {
        for (const auto& [id, other] : planes_) {
            auto r = intersect_planes(other, plane);
            if (auto* l = std::get_if<IntersectionLine>(&r)) lines_.emplace(key(id, plane.id), *l);
        }
        planes_.emplace(plane.id, plane);
        ++next_id_;
        return plane.id;
    }

    Vec3 axis_;
    std::map<PlaneId, Plane> planes_;
    std::map<std::pair<PlaneId, PlaneId>, IntersectionLine> lines_;
    std::uint32_t next_id_ = 0;
};

// Splits the parallel family (or `subset` of it) by signed offset from the transversal's locus.
inline SliceResult slice(const Bundle& bundle, const Plane& transversal,
                         const std::optional<std::set<PlaneId>>& subset = std::nullopt) {
    const auto* tag = std::get_if<TransversalTag>(&transversal.tag);
    if (tag == nullptr) throw Error(ErrorCode::TransversalIsParallel, "slicing plane belongs to the parallel family");
    SliceResult out;
    for (PlaneId id : bundle.parallel_planes()) {
        if (subset && subset->count(id) == 0) continue;
        const double d = bundle.offset(id) - tag->pivot;
        if (std::abs(d) <= kPlaneTolerance) {
            out.on_locus.insert(id);
        } else if (d < 0) {
            out.left.insert(id);
        } else {
            out.right.insert(id);
        }
    }
    return out;
}

}  // namespace mlc
