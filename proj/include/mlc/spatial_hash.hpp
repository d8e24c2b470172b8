#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "mlc/geometry.hpp"

namespace mlc {

// Uniform 3-D bucket grid answering "is any stored point within eps of p".
class SpatialHash {
  public:
    explicit SpatialHash(double cell = 1.0) : cell_(cell > 0 ? cell : 1.0) {}

    void insert(Vec3 p, std::size_t tag = 0) { buckets_[key_of(cell_index(p))].push_back({p, tag}); ++count_; }

    // Visits stored entries within `radius` of p; stop early when fn returns true.
    template <class Fn>
    bool any_within(Vec3 p, double radius, Fn&& fn) const {
        const auto c = cell_index(p);
        const auto reach = static_cast<std::int64_t>(std::ceil(radius / cell_));
        for (std::int64_t dx = -reach; dx <= reach; ++dx) {
            for (std::int64_t dy = -reach; dy <= reach; ++dy) {
                for (std::int64_t dz = -reach; dz <= reach; ++dz) {
                    auto it = buckets_.find(key_of({c[0] + dx, c[1] + dy, c[2] + dz}));
                    if (it == buckets_.end()) continue;
                    for (const auto& e : it->second) {
                        if (distance(e.point, p) < radius && fn(e.point, e.tag)) return true;
                    }
                }
            }
        }
        return false;
    }

    bool any_within(Vec3 p, double radius) const {
        return any_within(p, radius, [](Vec3, std::size_t) { return true; });
    }

    std::size_t size() const noexcept { return count_; }
    double cell() const noexcept { return cell_; }

  private:
    struct Entry {
        Vec3 point;
        std::size_t tag;
    };
    using Index = std::array<std::int64_t, 3>;

    Index cell_index(Vec3 p) const noexcept {
        return {static_cast<std::int64_t>(std::floor(p.x / cell_)), static_cast<std::int64_t>(std::floor(p.y / cell_)),
                static_cast<std::int64_t>(std::floor(p.z / cell_))};
    }
    static std::uint64_t key_of(const Index& i) noexcept {
        std::uint64_t h = 0x9E3779B97F4A7C15ull;
        for (auto v : i) {
            h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
        }
        return h;
    }

    double cell_;
    std::unordered_map<std::uint64_t, std::vector<Entry>> buckets_;
    std::size_t count_ = 0;
};

}  // namespace mlc
