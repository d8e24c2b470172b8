#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "mlc/contour.hpp"
#include "mlc/geometry.hpp"

namespace mlc {

// A removed piece of some walker's contour, kept in the coordinates of its start plane.
struct RemovedSegment {
    PlaneId plane;
    Complex a;
    Complex b;
    Vec3 ga;
    Vec3 gb;
    WalkerId owner = 0;
    std::uint64_t interval = 0;
    std::size_t segment = 0;  // index of the owner's contour segment

    double length() const noexcept { return distance(ga, gb); }
};

// Per-plane bucket grid over removed pieces, addressed by index into the piece list.
class SegmentGrid {
  public:
    explicit SegmentGrid(double cell = 0.25) : cell_(cell) {}

    void insert(const RemovedSegment& s, std::size_t index) {
        const auto [x0, y0] = cell_of(std::min(s.a.real(), s.b.real()), std::min(s.a.imag(), s.b.imag()));
        const auto [x1, y1] = cell_of(std::max(s.a.real(), s.b.real()), std::max(s.a.imag(), s.b.imag()));
        for (std::int64_t x = x0; x <= x1; ++x) {
            for (std::int64_t y = y0; y <= y1; ++y) cells_[{s.plane.value, x, y}].push_back(index);
        }
    }

    // Indices below `limit` of pieces whose bucket overlaps the box; may repeat.
    template <class Fn>
    bool any_in_box(PlaneId plane, Complex lo, Complex hi, std::size_t limit, Fn&& fn) const {
        const auto [x0, y0] = cell_of(lo.real(), lo.imag());
        const auto [x1, y1] = cell_of(hi.real(), hi.imag());
        for (std::int64_t x = x0; x <= x1; ++x) {
            for (std::int64_t y = y0; y <= y1; ++y) {
                auto it = cells_.find({plane.value, x, y});
                if (it == cells_.end()) continue;
                for (std::size_t i : it->second) {
                    if (i < limit && fn(i)) return true;
                }
            }
        }
        return false;
    }

  private:
    using Key = std::tuple<std::uint32_t, std::int64_t, std::int64_t>;
    std::pair<std::int64_t, std::int64_t> cell_of(double x, double y) const noexcept {
        return {static_cast<std::int64_t>(std::floor(x / cell_)), static_cast<std::int64_t>(std::floor(y / cell_))};
    }
    double cell_;
    std::map<Key, std::vector<std::size_t>> cells_;
};

// Frozen view of everything a walker may not touch during one interval.
// When `index` is set it covers at least the first removed.size() pieces.
struct Obstacles {
    std::span<const RemovedSegment> removed;
    std::set<PlaneId> hole_planes;
    const SegmentGrid* index = nullptr;
};

}  // namespace mlc
