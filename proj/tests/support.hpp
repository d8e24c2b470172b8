#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mlc/geometry.hpp"

namespace testkit {

// Small generator toolkit for property tests.
class Gen {
  public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}

    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
    std::uint64_t u64() { return eng_(); }
    mlc::Complex complex(double half) { return {real(-half, half), real(-half, half)}; }
    mlc::Vec3 vec(double half) { return {real(-half, half), real(-half, half), real(-half, half)}; }
    mlc::Vec3 unit() {
        while (true) {
            const mlc::Vec3 v = vec(1.0);
            const double n = mlc::norm(v);
            if (n > 0.1 && n <= 1.0) return (1.0 / n) * v;
        }
    }
    // Uniform point in the disc of radius r around c.
    mlc::Complex in_disc(mlc::Complex c, double r) {
        while (true) {
            const mlc::Complex z = complex(1.0);
            if (std::abs(z) < 1.0) return c + r * z;
        }
    }
    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
};

// Plane through `origin` with a random orthonormal basis.
inline mlc::Plane random_plane(Gen& g, mlc::PlaneId id) {
    const mlc::Vec3 n = g.unit();
    mlc::Vec3 t = std::abs(n.x) < 0.9 ? mlc::kAxisX : mlc::kAxisY;
    const mlc::Vec3 b1 = mlc::normalized(mlc::cross(n, t));
    const mlc::Vec3 b2 = mlc::cross(n, b1);
    return {id, g.vec(3.0), b1, b2, mlc::TransversalTag{}};
}

}  // namespace testkit
