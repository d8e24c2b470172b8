#include <catch_amalgamated.hpp>

#include "mlc/contour.hpp"
#include "support.hpp"

using namespace mlc;
using Catch::Approx;

namespace {

Contour planar(const Plane& p, const std::vector<Complex>& zs, WalkerId w = 0) {
    std::vector<BundlePoint> pts;
    for (Complex z : zs) pts.push_back(make_point(p, z));
    return make_contour(w, pts);
}

// Dense polyline approximation used as the quadrature oracle.
double dense_polyline(const std::function<Complex(double)>& f, double a, double b, long n) {
    long double sum = 0;
    Complex prev = f(a);
    for (long i = 1; i <= n; ++i) {
        const Complex cur = f(a + (b - a) * static_cast<double>(i) / static_cast<double>(n));
        sum += std::abs(cur - prev);
        prev = cur;
    }
    return static_cast<double>(sum);
}

}  // namespace

TEST_CASE("polyline_length", "[contour]") {
    const Plane p = parallel_plane(PlaneId{0}, 0.0);
    CHECK(polyline_length(planar(p, {0, {3, 4}}), 0, 1) == 5.0);
    CHECK(polyline_length(planar(p, {0, 1, {1, 1}}), 0, 2) == 2.0);
    CHECK(polyline_length(planar(p, {0, 1, {1, 1}}), 1, 1) == 0.0);
    CHECK_THROWS_AS(polyline_length(planar(p, {0, 1}), 0, 2), Error);
    CHECK_THROWS_AS(polyline_length(planar(p, {0, 1}), 1, 0), Error);

    testkit::Gen g(1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Complex> zs;
        for (int i = 0; i < 50; ++i) zs.push_back(g.complex(10));
        const Contour c = planar(p, zs);
        long double oracle = 0;
        for (int i = 0; i + 1 < 50; ++i) {
            const long double dx = zs[i + 1].real() - zs[i].real();
            const long double dy = zs[i + 1].imag() - zs[i].imag();
            oracle += std::sqrt(dx * dx + dy * dy);
        }
        REQUIRE(std::abs(polyline_length(c, 0, 49) - static_cast<double>(oracle)) < 1e-12);
    }
}

TEST_CASE("arc_length_quadrature analytic cases", "[contour]") {
    ParametricArc quarter{0.0, kPi / 2, [](double t) { return std::polar(1.0, t); },
                          [](double t) { return Complex{0, 1} * std::polar(1.0, t); }, PlaneId{0}};
    CHECK(quarter.derivative_residual() < 1e-6);
    CHECK(std::abs(arc_length_quadrature(quarter, 1e-12) - kPi / 2) < 1e-9);

    ParametricArc line{0.0, 1.0, [](double t) { return t * Complex{3, 4}; }, [](double) { return Complex{3, 4}; },
                       PlaneId{0}};
    CHECK(std::abs(arc_length_quadrature(line, 1e-12) - 5.0) < 1e-12);

    ParametricArc cubic{-1.0, 2.0, [](double t) { return Complex{t, t * t * t - t}; },
                        [](double t) { return Complex{1, 3 * t * t - 1}; }, PlaneId{0}};
    CHECK(cubic.derivative_residual() < 1e-6);
    const double q = arc_length_quadrature(cubic, 1e-10);
    CHECK(std::abs(q - dense_polyline(cubic.position, -1.0, 2.0, 1'000'000)) < 1e-6);
}

TEST_CASE("arc_length_quadrature errors", "[contour]") {
    ParametricArc bad{0.0, 1.0, [](double t) { return Complex{t, 0}; },
                      [](double t) { return Complex{1.0 / std::sqrt(std::abs(t - 1.0 / 3.0)), 0}; }, PlaneId{0}};
    CHECK_THROWS_AS(arc_length_quadrature(bad, 1e-12, 12), Error);
    try {
        arc_length_quadrature(bad, 1e-12, 12);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonconvergentQuadrature);
    }
    ParametricArc line{0.0, 1.0, [](double t) { return Complex{t, 0}; }, [](double) { return Complex{1, 0}; },
                       PlaneId{0}};
    CHECK_THROWS_AS(arc_length_quadrature(line, 0.0), Error);
}

TEST_CASE("concat_length_additivity", "[contour]") {
    const Plane p = parallel_plane(PlaneId{0}, 0.0);
    testkit::Gen g(2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Complex> zs;
        const int n = g.integer(1, 40);
        for (int i = 0; i < n; ++i) zs.push_back(g.complex(5));
        const Contour c = planar(p, zs);
        const auto i = static_cast<std::size_t>(g.integer(0, n - 1));
        const auto j = static_cast<std::size_t>(g.integer(static_cast<int>(i), n - 1));
        const auto a = static_cast<std::size_t>(g.integer(static_cast<int>(i), static_cast<int>(j)));
        const auto s = concat_length_additivity(c, i, a, j);
        REQUIRE(s.prefix + s.suffix == s.total);
        REQUIRE(std::abs(s.total - polyline_length(c, i, j)) < 1e-12);
        REQUIRE(s.prefix >= 0.0);
        REQUIRE(s.suffix >= 0.0);
        const auto empty_prefix = concat_length_additivity(c, i, i, j);
        REQUIRE(empty_prefix.prefix == 0.0);
        const auto empty_suffix = concat_length_additivity(c, i, j, j);
        REQUIRE(empty_suffix.suffix == 0.0);
    }
    CHECK_THROWS_AS(concat_length_additivity(planar(p, {0, 1, 2}), 1, 0, 2), Error);
}

TEST_CASE("is_multilevel", "[contour]") {
    Bundle b;
    const PlaneId p0 = b.add_parallel(0.0);
    const PlaneId t = b.add_transversal(90.0, 0.0);
    CHECK_FALSE(is_multilevel(planar(b.plane(p0), {0, 1, {1, 1}})));
    CHECK_THROWS_AS(is_multilevel(Contour{}), Error);

    BundlePoint on_line = make_point(b.plane(p0), {0.5, 0.0});
    on_line.secondary = t;
    const BundlePoint next = make_point(b.plane(t), {0.0, 0.7});
    const Contour c = make_contour(0, {make_point(b.plane(p0), {0.2, 0.3}), on_line, next});
    CHECK(is_multilevel(c));
    Contour prefix = c;
    prefix.vertices.pop_back();
    CHECK_FALSE(is_multilevel(prefix));
}

TEST_CASE("plane_decomposition", "[contour]") {
    Bundle b;
    const PlaneId below = b.add_parallel(-1.0);
    const PlaneId hole = b.add_parallel(0.0);
    const PlaneId above = b.add_parallel(1.0);
    const RegionPartition part = partition_around(b, hole);
    CHECK(part.above == std::set<PlaneId>{above});
    CHECK(part.below == std::set<PlaneId>{below});

    const Contour in = planar(b.plane(hole), {0, {3, 4}});
    const auto r = plane_decomposition(in, part);
    CHECK(r.in_plane == 5.0);
    CHECK(r.above == 0.0);
    CHECK(r.below == 0.0);

    const auto e = plane_decomposition(Contour{}, part);
    CHECK(e.total() == 0.0);

    testkit::Gen g(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<BundlePoint> pts;
        double in_len = 0, above_len = 0;
        for (int i = 0; i < 30; ++i) {
            const PlaneId id = i % 2 == 0 ? above : hole;
            pts.push_back(make_point(b.plane(id), g.complex(2)));
        }
        const Contour c = make_contour(1, pts);
        for (int i = 0; i + 1 < 30; ++i) {
            const double len = distance(pts[i].global, pts[i + 1].global);
            (i % 2 == 0 ? above_len : in_len) += len;
        }
        const auto d = plane_decomposition(c, part);
        REQUIRE(std::abs(d.above - above_len) < 1e-9);
        REQUIRE(std::abs(d.in_plane - in_len) < 1e-9);
        REQUIRE(std::abs(d.total() - polyline_length(c)) < 1e-9);
        const auto sd = side_decomposition(c, b, 0.0);
        REQUIRE(std::abs(sd.above - d.above) < 1e-12);
        REQUIRE(std::abs(sd.in_plane - d.in_plane) < 1e-12);
    }

    const PlaneId t = b.add_transversal(90.0, 0.0);
    const Contour with_t = planar(b.plane(t), {0, 1});
    CHECK_THROWS_AS(plane_decomposition(with_t, part), Error);
}
