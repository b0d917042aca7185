// SPDX-License-Identifier: Apache-2.0
#include "modalsr/error.hpp"
#include "modalsr/geometry.hpp"
#include "modalsr/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace modalsr;

namespace {

double min_pairwise(const std::vector<Vec3>& pts) {
    double best = INFINITY;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            best = std::min(best, (pts[i] - pts[j]).norm());
    return best;
}

} // namespace

TEST_SUITE("geometry") {

TEST_CASE("sma: 64 points on a 10 cm sphere, well spread") {
    const MicArray sma = build_sma(64, 0.10);
    REQUIRE(sma.size() == 64);
    for (std::size_t i = 0; i < sma.size(); ++i) {
        CHECK(std::abs(sma.positions[i].norm() - 0.10) < 1e-9);
        CHECK(sma.labels[i] == "SMA");
    }
    CHECK(min_pairwise(sma.positions) > 0.03);
}

TEST_CASE("sma: minimal four-point layout") {
    const MicArray sma = build_sma(4, 1.0);
    REQUIRE(sma.size() == 4);
    for (const auto& p : sma.positions)
        CHECK(std::abs(p.norm() - 1.0) < 1e-12);
    CHECK(min_pairwise(sma.positions) > 0.0);
}

TEST_CASE("sma: invalid configurations") {
    CHECK_THROWS_AS(build_sma(3, 0.1), Error);
    CHECK_THROWS_AS(build_sma(64, 0.0), Error);
    CHECK_THROWS_AS(build_sma(64, -1.0), Error);
    try {
        build_sma(64, 0.0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidConfig);
    }
}

TEST_CASE("lma: spacing, span and centre") {
    const Vec3 c(0.5, 0, 0);
    const MicArray lma = build_lma(8, 0.04, c, Vec3(0, 1, 0));
    REQUIRE(lma.size() == 8);
    Vec3 mean = Vec3::Zero();
    for (std::size_t i = 0; i < 8; ++i) {
        mean += lma.positions[i];
        if (i > 0)
            CHECK(std::abs((lma.positions[i] - lma.positions[i - 1]).norm() - 0.04) < 1e-12);
    }
    CHECK((mean / 8.0 - c).norm() < 1e-12);
    CHECK(std::abs((lma.positions.front() - lma.positions.back()).norm() - 0.28) < 1e-12);
}

TEST_CASE("lma: two elements, axis normalized") {
    const MicArray lma = build_lma(2, 1.0, Vec3::Zero(), Vec3(3, 0, 0));
    REQUIRE(lma.size() == 2);
    CHECK((lma.positions[0] - Vec3(-0.5, 0, 0)).norm() < 1e-12);
    CHECK((lma.positions[1] - Vec3(0.5, 0, 0)).norm() < 1e-12);
    CHECK_THROWS_AS(build_lma(8, 0.04, Vec3::Zero(), Vec3::Zero()), Error);
    CHECK_THROWS_AS(build_lma(1, 0.04, Vec3::Zero(), Vec3::UnitX()), Error);
    CHECK_THROWS_AS(build_lma(8, 0.0, Vec3::Zero(), Vec3::UnitX()), Error);
}

TEST_CASE("hybrid: default layout") {
    const MicArray a = build_hybrid({});
    REQUIRE(a.size() == 96);
    for (std::size_t i = 0; i < 64; ++i)
        CHECK(a.labels[i] == "SMA");
    const Vec3 centres[4] = {{0.5, 0, 0}, {0, 0.5, 0}, {-0.5, 0, 0}, {0, -0.5, 0}};
    std::set<std::size_t> seen;
    for (int l = 0; l < 4; ++l) {
        const auto idx = a.indices_with_label("LMA" + std::to_string(l));
        REQUIRE(idx.size() == 8);
        Vec3 mean = Vec3::Zero();
        for (auto i : idx) {
            CHECK(i >= 64);
            seen.insert(i);
            mean += a.positions[i];
            CHECK(std::abs(a.positions[i].z()) < 1e-15);
        }
        mean /= 8.0;
        CHECK((mean - centres[l]).norm() < 1e-12);
        const Vec3 axis = (a.positions[idx.back()] - a.positions[idx.front()]).normalized();
        CHECK(std::abs(axis.dot(centres[l].normalized())) < 1e-12);
        for (std::size_t k = 1; k < idx.size(); ++k)
            CHECK(std::abs((a.positions[idx[k]] - a.positions[idx[k - 1]]).norm() - 0.04) < 1e-12);
    }
    CHECK(seen.size() == 32);
    CHECK(a.indices_with_prefix("LMA").size() == 32);
    CHECK(min_pairwise(a.positions) > 1e-6);
}

TEST_CASE("hybrid: no LMAs equals the SMA alone") {
    HybridConfig c;
    c.lma.arrays = 0;
    const MicArray a = build_hybrid(c);
    const MicArray s = build_sma(64, 0.10);
    REQUIRE(a.size() == s.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.positions[i] == s.positions[i]);
        CHECK(a.labels[i] == s.labels[i]);
    }
}

TEST_CASE("hybrid: overlapping microphones rejected") {
    HybridConfig c;
    c.lma.arrays = 2;
    c.lma.offset_m = 0.0;
    CHECK_THROWS_AS(build_hybrid(c), Error);
}

TEST_CASE("hybrid: alternative axis modes") {
    HybridConfig c;
    c.lma.axes = LmaAxes::Radial;
    const MicArray r = build_hybrid(c);
    const auto idx = r.indices_with_label("LMA1");
    const Vec3 axis = (r.positions[idx.back()] - r.positions[idx.front()]).normalized();
    CHECK(std::abs(std::abs(axis.y()) - 1.0) < 1e-12);
    c.lma.axes = LmaAxes::Vertical;
    const MicArray v = build_hybrid(c);
    const auto vi = v.indices_with_label("LMA0");
    CHECK(std::abs((v.positions[vi.back()] - v.positions[vi.front()]).normalized().z() - 1.0) < 1e-12);
}

TEST_CASE("direction grid: vertex, edge and face counts") {
    for (int L = 0; L <= 4; ++L) {
        const DirectionGrid g = build_direction_grid(L);
        const std::size_t V = 10 * (std::size_t{1} << (2 * L)) + 2;
        REQUIRE(g.size() == V);
        std::size_t degree_sum = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(std::abs(g.directions[i].norm() - 1.0) < 1e-12);
            const auto deg = g.adjacency[i].size();
            CHECK((deg == 5 || deg == 6));
            degree_sum += deg;
        }
        // Euler: V - E + F = 2 with F = 20 * 4^L
        const std::size_t E = degree_sum / 2;
        const std::size_t F = 20 * (std::size_t{1} << (2 * L));
        CHECK(V + F - E == 2);
    }
    CHECK(build_direction_grid(3).size() == 642);
    CHECK_THROWS_AS(build_direction_grid(-1), Error);
    CHECK_THROWS_AS(build_direction_grid(7), Error);
}

TEST_CASE("direction grid: adjacency is symmetric and local") {
    const DirectionGrid g = build_direction_grid(1);
    REQUIRE(g.size() == 42);
    double max_edge = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (auto j : g.adjacency[i]) {
            CHECK(j != i);
            const auto& back = g.adjacency[j];
            CHECK(std::find(back.begin(), back.end(), i) != back.end());
            max_edge = std::max(max_edge, angular_distance(g.directions[i], g.directions[j]));
        }
    // brute force: the nearest other vertex is always a mesh neighbour
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::size_t best = i;
        double bd = INFINITY;
        for (std::size_t j = 0; j < g.size(); ++j)
            if (j != i && angular_distance(g.directions[i], g.directions[j]) < bd) {
                bd = angular_distance(g.directions[i], g.directions[j]);
                best = j;
            }
        const auto& adj = g.adjacency[i];
        CHECK(std::find(adj.begin(), adj.end(), best) != adj.end());
        CHECK(bd <= max_edge + 1e-12);
    }
}

TEST_CASE("direction grid: deterministic and level-3 spacing") {
    const DirectionGrid a = build_direction_grid(3);
    const DirectionGrid b = build_direction_grid(3);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a.directions[i] == b.directions[i]);
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (auto j : a.adjacency[i]) {
            const double d = angular_distance(a.directions[i], a.directions[j]) * 180.0 / std::numbers::pi;
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
    CHECK(lo > 6.0);
    CHECK(hi < 10.0);
}

TEST_CASE("direction grid: nearest agrees with a brute-force scan") {
    const DirectionGrid g = build_direction_grid(2);
    Rng rng(7);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const double x = n(rng), y = n(rng), z = n(rng);
        const Vec3 v = Vec3(x, y, z).normalized();
        std::size_t best = 0;
        for (std::size_t i = 1; i < g.size(); ++i)
            if (g.directions[i].dot(v) > g.directions[best].dot(v))
                best = i;
        CHECK(g.nearest(v) == best);
    }
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(g.nearest(g.directions[i]) == i);
}

TEST_CASE("angular distance: identities, symmetry and triangle inequality") {
    const Vec3 x = Vec3::UnitX(), y = Vec3::UnitY();
    CHECK(angular_distance(x, x) == 0.0);
    CHECK(std::abs(angular_distance(x, -x) - std::numbers::pi) < 1e-15);
    CHECK(std::abs(angular_distance(x, y) - std::numbers::pi / 2) < 1e-15);
    CHECK(std::abs(angular_distance(2.0 * x, 5.0 * y) - std::numbers::pi / 2) < 1e-15);
    // small angles keep full relative precision
    const double tiny = 1e-9;
    CHECK(std::abs(angular_distance(x, Vec3(std::cos(tiny), std::sin(tiny), 0)) - tiny) < 1e-20);

    Rng rng(11);
    std::normal_distribution<double> n(0, 1);
    auto draw = [&] {
        const double a = n(rng), b = n(rng), c = n(rng);
        return Vec3(a, b, c).normalized();
    };
    for (int t = 0; t < 500; ++t) {
        const Vec3 a = draw(), b = draw(), c = draw();
        CHECK(angular_distance(a, b) == doctest::Approx(angular_distance(b, a)).epsilon(1e-14));
        CHECK(angular_distance(a, c) <= angular_distance(a, b) + angular_distance(b, c) + 1e-12);
    }
}

} // TEST_SUITE
