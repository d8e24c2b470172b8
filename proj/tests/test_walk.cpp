#include <catch_amalgamated.hpp>

#include "mlc/walk.hpp"
#include "support.hpp"

using namespace mlc;
using Catch::Approx;

namespace {

struct World {
    Bundle bundle;
    PlaneId p0;
    PlaneId p1;
    PlaneId t;
};

World world() {
    World w;
    w.p0 = w.bundle.add_parallel(0.0);
    w.p1 = w.bundle.add_parallel(1.0);
    w.t = w.bundle.add_transversal(90.0, 0.0);
    return w;
}

WalkerConfig config(std::uint64_t seed, RadiusDistribution r = UniformRadius{0.05, 0.3}) {
    WalkerConfig c;
    c.seed = seed;
    c.radius = r;
    c.eps_int = 0.02;
    return c;
}

bool same_events(const EventLog& a, const EventLog& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a[i];
        const auto& y = b[i];
        if (x.interval != y.interval || x.disc.plane != y.disc.plane || x.disc.center != y.disc.center ||
            x.disc.radius != y.disc.radius || x.switched_plane != y.switched_plane || x.chosen.local != y.chosen.local ||
            !(x.chosen.global == y.chosen.global) || x.rejections != y.rejections) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("init_walker", "[walk]") {
    World w = world();
    const auto a = init_walker(config(1), 0, w.bundle, w.p0, Complex{0, 0});
    CHECK(a.current.local == Complex{0, 0});
    CHECK(a.interval == 0);
    CHECK(a.visited.size() == 1);
    CHECK(a.status == WalkerStatus::Active);
    const auto b = init_walker(config(1), 0, w.bundle, w.p0, Complex{0, 0});
    CHECK(a.current.global == b.current.global);
    CHECK_THROWS_AS(init_walker(config(1), 0, w.bundle, PlaneId{42}, Complex{}), Error);

    double mx = 0, my = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto s = init_walker(config(static_cast<std::uint64_t>(i)), 0, w.bundle, w.p0, RandomInBox{});
        REQUIRE(std::abs(s.current.local.real()) <= 1.0);
        REQUIRE(std::abs(s.current.local.imag()) <= 1.0);
        mx += s.current.local.real();
        my += s.current.local.imag();
    }
    CHECK(std::abs(mx / n) < 0.05);
    CHECK(std::abs(my / n) < 0.05);

    WalkerConfig bad = config(1);
    bad.p_switch = 1.5;
    CHECK_THROWS_AS(init_walker(bad, 0, w.bundle, w.p0, Complex{}), Error);
    bad = config(1, UniformRadius{0.0, 1.0});
    CHECK_THROWS_AS(init_walker(bad, 0, w.bundle, w.p0, Complex{}), Error);
}

TEST_CASE("single steps", "[walk]") {
    World w = world();
    auto s = init_walker(config(3, ConstantRadius{1.0}), 0, w.bundle, w.p0, Complex{0.3, 0.5});
    const auto ev = step(s, w.bundle);
    REQUIRE(ev.has_value());
    CHECK(std::abs(ev->chosen.local - ev->disc.center) < 1.0);
    CHECK(ev->disc.center == Complex{0.3, 0.5});
    CHECK_FALSE(ev->switched_plane.has_value());
    CHECK(s.interval == 1);
    CHECK(s.contour.size() == 2);
    CHECK(s.visited.size() == 2);
}

TEST_CASE("run invariants over many seeds", "[walk]") {
    World w = world();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto s = init_walker(config(seed), 0, w.bundle, w.p0, Complex{0.0, 0.01});
        const auto origin = s.current;
        auto [contour, log] = run(s, 500, w.bundle);
        REQUIRE(log.size() == 500);
        REQUIRE(contour.size() == 501);
        bool seen_multilevel = false;
        for (std::size_t i = 0; i < log.size(); ++i) {
            const auto& e = log[i];
            REQUIRE(e.interval == i);
            REQUIRE(e.disc.plane == e.chosen.plane);
            REQUIRE(std::abs(e.chosen.local - e.disc.center) < e.disc.radius);
            const BundlePoint& prev = i == 0 ? origin : log[i - 1].chosen;
            if (e.switched_plane) {
                const auto* l = w.bundle.line(prev.plane, *e.switched_plane);
                REQUIRE(l != nullptr);
                REQUIRE(l->distance_to(prev.global) < 0.02);
            }
            // Multilevel begins exactly at the first switch that leaves the origin plane.
            Contour prefix;
            prefix.vertices.assign(contour.vertices.begin(), contour.vertices.begin() + static_cast<long>(i) + 2);
            const bool ml = is_multilevel(prefix);
            if (!seen_multilevel && ml) {
                REQUIRE(e.switched_plane.has_value());
                REQUIRE(e.chosen.plane != origin.plane);
            }
            if (seen_multilevel) REQUIRE(ml);
            seen_multilevel = ml;
        }
        for (std::size_t i = 0; i < contour.size(); ++i) {
            for (std::size_t j = i + 1; j < contour.size(); ++j) {
                REQUIRE(distance(contour[i].point.global, contour[j].point.global) >= 1e-9);
            }
        }
    }
}

TEST_CASE("switching visits other planes", "[walk]") {
    World w = world();
    int multilevel = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto s = init_walker(config(seed), 0, w.bundle, w.p0, Complex{0.0, 0.0});
        run(s, 1000, w.bundle);
        if (is_multilevel(s.contour)) ++multilevel;
    }
    CHECK(multilevel >= 5);
}

TEST_CASE("constant radius bounds total length", "[walk]") {
    World w = world();
    auto s = init_walker(config(8, ConstantRadius{0.5}), 0, w.bundle, w.p0, Complex{});
    auto res = run(s, 1000, w.bundle);
    CHECK(polyline_length(res.contour) < 1000 * 0.5 + 0.02 * 1000);
    auto z = init_walker(config(8), 0, w.bundle, w.p0, Complex{});
    CHECK(run(z, 0, w.bundle).contour.size() == 1);
}

TEST_CASE("determinism and suffix replay", "[walk]") {
    World w = world();
    for (std::uint64_t seed = 100; seed < 105; ++seed) {
        auto a = init_walker(config(seed), 2, w.bundle, w.p0, Complex{0.1, 0});
        auto b = init_walker(config(seed), 2, w.bundle, w.p0, Complex{0.1, 0});
        const auto origin = a.current;
        auto ra = run(a, 300, w.bundle);
        auto rb = run(b, 300, w.bundle);
        REQUIRE(same_events(ra.events, rb.events));
        testkit::Gen g(seed);
        for (int cut = 0; cut < 10; ++cut) {
            const auto k = static_cast<std::size_t>(g.integer(0, 299));
            auto r = restore_walker(config(seed), 2, w.bundle, origin,
                                    std::span<const StepEvent>(ra.events.data(), k));
            REQUIRE(r.interval == k);
            auto tail = run(r, 300 - k, w.bundle);
            REQUIRE(same_events(tail.events, EventLog(ra.events.begin() + static_cast<long>(k), ra.events.end())));
        }
    }
}

TEST_CASE("reachable_in", "[walk]") {
    World w = world();
    auto s = init_walker(config(5), 0, w.bundle, w.p0, Complex{});
    auto res = run(s, 100, w.bundle);
    CHECK(reachable_in(res.events, 3, 3) == 0);
    CHECK(reachable_in(res.events, 2, 5) == 3);
    for (std::uint64_t a = 0; a <= 100; ++a) {
        for (std::uint64_t b = a; b <= 100; ++b) {
            REQUIRE(reachable_in(res.events, a, b) == b - a);
        }
    }
    CHECK_THROWS_AS(reachable_in(res.events, 5, 2), Error);
    CHECK_THROWS_AS(reachable_in(res.events, 0, 101), Error);
    EventLog broken = res.events;
    broken[10].disc.center += Complex{1, 0};
    CHECK_THROWS_AS(reachable_in(broken, 0, 50), Error);

    // The index agrees with the direct check on every pair, clean or broken.
    for (const EventLog* log : {&res.events, &broken}) {
        const ReachIndex idx(*log);
        for (std::uint64_t a = 0; a <= 100; ++a) {
            for (std::uint64_t b = a; b <= 100; ++b) {
                bool direct_ok = true, index_ok = true;
                try {
                    reachable_in(*log, a, b);
                } catch (const Error&) {
                    direct_ok = false;
                }
                std::uint64_t steps = b - a;
                try {
                    steps = idx.reachable(a, b);
                } catch (const Error&) {
                    index_ok = false;
                }
                REQUIRE(direct_ok == index_ok);
                REQUIRE(steps == b - a);
            }
        }
        CHECK_THROWS_AS(idx.reachable(5, 2), Error);
        CHECK_THROWS_AS(idx.reachable(0, 101), Error);
    }
}

TEST_CASE("uniqueness_check", "[walk]") {
    World w = world();
    auto a = init_walker(config(1), 0, w.bundle, w.p0, Complex{});
    auto b = init_walker(config(1), 0, w.bundle, w.p0, Complex{0.5, 0});
    auto c = init_walker(config(1), 0, w.bundle, w.p0, Complex{});
    auto la = run(a, 50, w.bundle).events;
    auto lb = run(b, 50, w.bundle).events;
    auto lc = run(c, 50, w.bundle).events;
    CHECK(uniqueness_check(la, lb).distinct);
    CHECK_FALSE(uniqueness_check(la, lc).distinct);
    CHECK(uniqueness_check(la, lc).same_length);
    CHECK_THROWS_AS(uniqueness_check(la, EventLog{}), Error);

    int distinct = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto x = init_walker(config(seed), 0, w.bundle, w.p0, Complex{});
        auto y = init_walker(config(seed + 1000), 0, w.bundle, w.p0, Complex{});
        if (uniqueness_check(run(x, 5, w.bundle).events, run(y, 5, w.bundle).events).distinct) ++distinct;
    }
    CHECK(distinct >= 999);
}

TEST_CASE("a tiny removed ring blocks the walker", "[walk]") {
    World w = world();
    std::vector<RemovedSegment> ring;
    const Plane& p = w.bundle.plane(w.p0);
    const int n = 16;
    for (int i = 0; i < n; ++i) {
        const Complex a = std::polar(1e-4, 2 * kPi * i / n);
        const Complex b = std::polar(1e-4, 2 * kPi * (i + 1) / n);
        ring.push_back({w.p0, a, b, embed(p, a), embed(p, b), 9, 0});
    }
    Obstacles obs{ring, {}};
    WalkerConfig cfg = config(4, UniformRadius{1.0, 2.0});
    cfg.max_rejections = 500;
    auto s = init_walker(cfg, 0, w.bundle, w.p0, Complex{});
    const auto ev = step(s, w.bundle, obs);
    CHECK_FALSE(ev.has_value());
    CHECK(s.status == WalkerStatus::HaltedBlocked);
    CHECK_THROWS_AS(step(s, w.bundle, obs), Error);
    auto r = run(s, 10, w.bundle, obs);
    CHECK(r.events.empty());
}

TEST_CASE("removed chains are never crossed", "[walk]") {
    World w = world();
    const Plane& p = w.bundle.plane(w.p0);
    // A wall along Re z = 0.2 on the walker's plane.
    std::vector<RemovedSegment> wall{{w.p0, {0.2, -50}, {0.2, 50}, embed(p, {0.2, -50}), embed(p, {0.2, 50}), 9, 0}};
    Obstacles obs{wall, {}};
    WalkerConfig cfg = config(6);
    cfg.p_switch = 0.0;
    auto s = init_walker(cfg, 0, w.bundle, w.p0, Complex{0, 0.3});
    auto res = run(s, 400, w.bundle, obs);
    for (const auto& v : res.contour.vertices) REQUIRE(v.point.local.real() < 0.2);
}

TEST_CASE("hole planes are not entered", "[walk]") {
    World w = world();
    Obstacles obs{{}, {w.p1}};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        WalkerConfig cfg = config(seed);
        cfg.p_switch = 1.0;
        auto s = init_walker(cfg, 0, w.bundle, w.p0, Complex{});
        auto res = run(s, 500, w.bundle, obs);
        for (const auto& e : res.events) {
            REQUIRE(e.chosen.plane != w.p1);
            REQUIRE(w.bundle.axial(e.chosen.global) < 1.0);
        }
    }
}

TEST_CASE("nested steps", "[walk]") {
    World w = world();
    WalkerConfig cfg = config(12, ConstantRadius{1.0});
    cfg.nested_mode = true;
    auto s = init_walker(cfg, 0, w.bundle, w.p0, Complex{0.25, -0.5});
    auto res = run(s, 2000, w.bundle);
    REQUIRE(res.events.size() == 2000);
    const Disc d0 = res.events[0].disc;
    for (std::size_t k = 0; k < res.events.size(); ++k) {
        const auto& e = res.events[k];
        REQUIRE(e.nested.has_value());
        REQUIRE(std::abs(e.nested->chosen_frame) < 1.0);
        REQUIRE(std::abs(e.chosen.local - d0.center) < d0.radius);
        if (k > 0) {
            REQUIRE(e.nested->offset == res.events[k - 1].nested->chosen_frame);
            REQUIRE(std::abs(e.nested->offset) + e.nested->ratio <= 1.0);
        }
    }
    auto again = init_walker(cfg, 0, w.bundle, w.p0, Complex{0.25, -0.5});
    const auto origin = again.current;
    auto restored = restore_walker(cfg, 0, w.bundle, origin, std::span<const StepEvent>(res.events.data(), 700));
    auto tail = run(restored, 1300, w.bundle);
    REQUIRE(same_events(tail.events, EventLog(res.events.begin() + 700, res.events.end())));

    WalkerConfig flat = config(1);
    auto f = init_walker(flat, 0, w.bundle, w.p0, Complex{});
    CHECK_THROWS_AS(nested_step(f, w.bundle), Error);
}
