#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "mlc/contour.hpp"
#include "mlc/error.hpp"
#include "mlc/geometry.hpp"
#include "mlc/obstacles.hpp"
#include "mlc/removal.hpp"
#include "mlc/spatial_hash.hpp"

namespace mlc {

struct Segment2 {
    Complex a;
    Complex b;
};

inline double distance_to_segment(Complex p, Complex a, Complex b) noexcept {
    const Complex d = b - a;
    const double dd = std::norm(d);
    if (dd == 0.0) return std::abs(p - a);
    const double t = std::clamp(((p - a) * std::conj(d)).real() / dd, 0.0, 1.0);
    return std::abs(p - (a + t * d));
}

// Pieces lying on `plane`, in that plane's local coordinates.
inline std::vector<Segment2> segments_on_plane(std::span<const RemovedSegment> pieces, PlaneId plane) {
    std::vector<Segment2> out;
    for (const auto& p : pieces) {
        if (p.plane == plane) out.push_back({p.a, p.b});
    }
    return out;
}

enum class CellState : std::uint8_t { Free, Removed };

// Square raster of side n*h centred on the disc; cell (i, j) has centre
// origin + (i + 1/2) h + i (j + 1/2) h.
class GridRaster {
  public:
    GridRaster(Disc disc, double h) : disc_(disc), h_(h) {
        if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "raster resolution must be positive");
        if (h >= disc.radius / 8.0) throw Error(ErrorCode::ResolutionTooCoarse, "need h < radius / 8");
        n_ = static_cast<int>(std::ceil(2.0 * disc.radius / h));
        origin_ = disc.center - Complex{0.5 * n_ * h, 0.5 * n_ * h};
        cells_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_), CellState::Free);
    }

    int n() const noexcept { return n_; }
    double h() const noexcept { return h_; }
    const Disc& disc() const noexcept { return disc_; }
    Complex origin() const noexcept { return origin_; }

    Complex center(int i, int j) const noexcept { return origin_ + Complex{(i + 0.5) * h_, (j + 0.5) * h_}; }

    std::optional<std::pair<int, int>> cell_of(Complex z) const noexcept {
        const Complex r = (z - origin_) / h_;
        const auto i = static_cast<int>(std::floor(r.real()));
        const auto j = static_cast<int>(std::floor(r.imag()));
        if (i < 0 || j < 0 || i >= n_ || j >= n_) return std::nullopt;
        return std::pair{i, j};
    }

    CellState at(int i, int j) const { return cells_[index(i, j)]; }
    void set(int i, int j, CellState s) { cells_[index(i, j)] = s; }

    // A cell becomes Removed when a segment passes within h/2 of its centre.
    void rasterize(std::span<const Segment2> segs) {
        const double reach = 0.5 * h_;
        for (const auto& s : segs) {
            const double xlo = std::min(s.a.real(), s.b.real()) - reach;
            const double xhi = std::max(s.a.real(), s.b.real()) + reach;
            const double ylo = std::min(s.a.imag(), s.b.imag()) - reach;
            const double yhi = std::max(s.a.imag(), s.b.imag()) + reach;
            const int i0 = std::max(0, static_cast<int>(std::floor((xlo - origin_.real()) / h_ - 0.5)));
            const int i1 = std::min(n_ - 1, static_cast<int>(std::ceil((xhi - origin_.real()) / h_ - 0.5)));
            const int j0 = std::max(0, static_cast<int>(std::floor((ylo - origin_.imag()) / h_ - 0.5)));
            const int j1 = std::min(n_ - 1, static_cast<int>(std::ceil((yhi - origin_.imag()) / h_ - 0.5)));
            for (int i = i0; i <= i1; ++i) {
                for (int j = j0; j <= j1; ++j) {
                    if (distance_to_segment(center(i, j), s.a, s.b) <= reach) set(i, j, CellState::Removed);
                }
            }
        }
    }

    // True when the cell square reaches the disc rim or beyond.
    bool touches_rim(int i, int j) const noexcept {
        const Complex c = center(i, j);
        const double far = std::abs(c - disc_.center) + h_ * std::sqrt(0.5);
        return far >= disc_.radius;
    }

    std::size_t index(int i, int j) const {
        if (i < 0 || j < 0 || i >= n_ || j >= n_) throw Error(ErrorCode::IndexOutOfRange, "raster cell");
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
    }

  private:
    Disc disc_;
    double h_;
    int n_ = 0;
    Complex origin_;
    std::vector<CellState> cells_;
};

struct Island {
    Disc disc;
    double h = 0.0;
    Complex origin;
    int n = 0;
    std::vector<std::pair<int, int>> cells;
    std::uint64_t detected = 0;

    bool contains(Complex z) const {
        const Complex r = (z - origin) / h;
        const std::pair<int, int> c{static_cast<int>(std::floor(r.real())), static_cast<int>(std::floor(r.imag()))};
        return std::binary_search(cells.begin(), cells.end(), c);
    }

    // Corners of each cell square, counter-clockwise.
    std::vector<std::array<Complex, 4>> polygons() const {
        std::vector<std::array<Complex, 4>> out;
        for (const auto& [i, j] : cells) {
            const Complex lo = origin + Complex{i * h, j * h};
            out.push_back({lo, lo + Complex{h, 0}, lo + Complex{h, h}, lo + Complex{0, h}});
        }
        return out;
    }
};

// Exterior = Free cells 4-connected to a cell that reaches the disc rim (this
// includes every raster boundary cell). Unreached Free cells form the islands.
inline std::vector<Island> islands_in(const GridRaster& g, std::uint64_t interval = 0) {
    const int n = g.n();
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    std::deque<std::pair<int, int>> queue;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (g.at(i, j) == CellState::Free && g.touches_rim(i, j)) {
                seen[g.index(i, j)] = 1;
                queue.emplace_back(i, j);
            }
        }
    }
    const int di[4] = {1, -1, 0, 0};
    const int dj[4] = {0, 0, 1, -1};
    auto flood = [&](std::vector<std::pair<int, int>>* collect) {
        while (!queue.empty()) {
            auto [i, j] = queue.front();
            queue.pop_front();
            if (collect) collect->emplace_back(i, j);
            for (int d = 0; d < 4; ++d) {
                const int a = i + di[d];
                const int b = j + dj[d];
                if (a < 0 || b < 0 || a >= n || b >= n) continue;
                const std::size_t id = g.index(a, b);
                if (seen[id] || g.at(a, b) != CellState::Free) continue;
                seen[id] = 1;
                queue.emplace_back(a, b);
            }
        }
    };
    flood(nullptr);
    std::vector<Island> out;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (seen[g.index(i, j)] || g.at(i, j) != CellState::Free) continue;
            Island isl{g.disc(), g.h(), g.origin(), n, {}, interval};
            seen[g.index(i, j)] = 1;
            queue.emplace_back(i, j);
            flood(&isl.cells);
            std::sort(isl.cells.begin(), isl.cells.end());
            out.push_back(std::move(isl));
        }
    }
    return out;
}

inline std::vector<Island> detect_islands(const Disc& disc, std::span<const Segment2> removed, double h,
                                          std::uint64_t interval = 0) {
    GridRaster g(disc, h);
    if (removed.empty()) return {};
    g.rasterize(removed);
    return islands_in(g, interval);
}

inline double default_resolution(const Disc& disc) noexcept { return disc.radius / 64.0; }

// Other planes whose intersection line with the island's plane passes through an island cell.
inline std::vector<PlaneId> lines_crossing(const Island& island, const Bundle& bundle) {
    std::vector<PlaneId> out;
    const Plane& plane = bundle.plane(island.disc.plane);
    for (const IntersectionLine* l : bundle.lines_through(plane.id)) {
        const Complex a = project(plane, l->point).local;
        const Complex b = project(plane, l->at(1.0)).local;
        const Complex dir = (b - a) / std::abs(b - a);
        for (const auto& [i, j] : island.cells) {
            const Complex c = island.origin + Complex{(i + 0.5) * island.h, (j + 0.5) * island.h};
            const double s = ((c - a) * std::conj(dir)).real();
            if (std::abs(c - (a + s * dir)) <= 0.5 * island.h) {
                out.push_back(l->other(plane.id));
                break;
            }
        }
    }
    return out;
}

struct Hole {
    std::vector<std::size_t> pieces;  // indices into the ledger's piece list
    std::set<WalkerId> owners;
    std::uint64_t created = 0;
    double length = 0.0;
};

// Groups removed pieces into connected chains (shared endpoints within tol).
inline std::vector<Hole> collect_holes(std::span<const RemovedSegment> pieces, double tol = 1e-9) {
    std::vector<std::size_t> parent(pieces.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    SpatialHash ends(std::max(tol, 1e-12) * 4.0);
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        for (const Vec3 p : {pieces[i].ga, pieces[i].gb}) {
            ends.any_within(p, tol, [&](Vec3, std::size_t j) {
                parent[find(i)] = find(j);
                return false;
            });
        }
        ends.insert(pieces[i].ga, i);
        ends.insert(pieces[i].gb, i);
    }
    std::map<std::size_t, std::size_t> slot;
    std::vector<Hole> out;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        const std::size_t r = find(i);
        auto [it, fresh] = slot.emplace(r, out.size());
        if (fresh) {
            out.push_back({});
            out.back().created = pieces[i].interval;
        }
        Hole& h = out[it->second];
        h.pieces.push_back(i);
        h.owners.insert(pieces[i].owner);
        h.created = std::min(h.created, pieces[i].interval);
        h.length += pieces[i].length();
    }
    return out;
}

enum class RegionLabel { Available, HolePoint, IslandInterior };

constexpr const char* to_string(RegionLabel l) noexcept {
    switch (l) {
        case RegionLabel::Available: return "available";
        case RegionLabel::HolePoint: return "hole";
        case RegionLabel::IslandInterior: return "island";
    }
    return "unknown";
}

inline RegionLabel classify_point(const BundlePoint& p, std::span<const RemovedSegment> pieces,
                                  std::span<const Island> islands, double eps = 1e-9) {
    for (const auto& s : pieces) {
        const Vec3 d = s.gb - s.ga;
        const double dd = dot(d, d);
        const double t = dd == 0.0 ? 0.0 : std::clamp(dot(p.global - s.ga, d) / dd, 0.0, 1.0);
        if (distance(p.global, s.ga + t * d) < eps) return RegionLabel::HolePoint;
    }
    for (const auto& isl : islands) {
        if (isl.disc.plane == p.plane && isl.contains(p.local)) return RegionLabel::IslandInterior;
    }
    return RegionLabel::Available;
}

inline RegionLabel classify_point(const BundlePoint& p, const RemovalLedger& ledger, std::span<const Island> islands,
                                  double eps = 1e-9) {
    return classify_point(p, ledger.removed_pieces(), islands, eps);
}

struct UnionBound {
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = true;
    bool bounded = true;
};

// Removed length through interval k against formed length through k + 1.
inline UnionBound holes_union_bound(const RemovalLedger& ledger, std::uint64_t k) {
    const auto& f = ledger.cumulative_formed();
    const auto& r = ledger.cumulative_removed();
    if (k >= r.size()) throw Error(ErrorCode::IndexOutOfRange, "interval not closed");
    UnionBound u;
    u.lhs = r[k];
    u.rhs = f[std::min<std::size_t>(k + 1, f.size() - 1)];
    u.ok = u.lhs <= u.rhs + 1e-9;
    for (const auto& p : ledger.removed_pieces()) {
        if (!p.ga.finite() || !p.gb.finite()) u.bounded = false;
    }
    return u;
}

// Drains the covering walkers and reports whether every island cell is now removed.
// Must run inside an open ledger interval.
inline bool island_to_hole(const Island& island, std::span<const Contour> covering, RemovalLedger& ledger) {
    GridRaster cover(island.disc, island.h);
    for (const Contour& c : covering) {
        std::vector<Segment2> segs;
        for (std::size_t i = 0; i + 1 < c.size(); ++i) {
            if (c[i].point.plane == island.disc.plane && c[i + 1].point.plane == island.disc.plane) {
                segs.push_back({c[i].point.local, c[i + 1].point.local});
            }
        }
        if (c.size() == 1 && c[0].point.plane == island.disc.plane) segs.push_back({c[0].point.local, c[0].point.local});
        cover.rasterize(segs);
    }
    for (const auto& [i, j] : island.cells) {
        if (cover.at(i, j) != CellState::Removed) {
            throw Error(ErrorCode::PreconditionUnmet, "island cell not covered by any contour");
        }
    }
    for (const Contour& c : covering) ledger.apply_removal(c.walker, ledger.backlog(c.walker));
    GridRaster after(island.disc, island.h);
    const auto segs = segments_on_plane(ledger.removed_pieces(), island.disc.plane);
    after.rasterize(segs);
    for (const auto& [i, j] : island.cells) {
        if (after.at(i, j) != CellState::Removed) return false;
    }
    return true;
}

}  // namespace mlc
