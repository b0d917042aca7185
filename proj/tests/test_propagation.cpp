// SPDX-License-Identifier: Apache-2.0
#include "modalsr/error.hpp"
#include "modalsr/geometry.hpp"
#include "modalsr/propagation.hpp"

#include <doctest.h>

#include <Eigen/QR>

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <tuple>

using namespace modalsr;
using cd = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent image enumeration: mirror the source across the six walls
// recursively and keep the fewest-bounce path to each distinct position.
void mirror(const Vec3& p, int depth, int max_depth, const Vec3& L, std::map<std::tuple<long, long, long>, std::pair<Vec3, int>>& seen) {
    const auto key = std::make_tuple(std::lround(p.x() * 1e6), std::lround(p.y() * 1e6), std::lround(p.z() * 1e6));
    auto it = seen.find(key);
    if (it != seen.end() && it->second.second <= depth)
        return;
    seen[key] = {p, depth};
    if (depth == max_depth)
        return;
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 lo = p, hi = p;
        lo[axis] = -p[axis];
        hi[axis] = 2.0 * L[axis] - p[axis];
        mirror(lo, depth + 1, max_depth, L, seen);
        mirror(hi, depth + 1, max_depth, L, seen);
    }
}

cd brute_force_rtf(const RoomSpec& room, const Vec3& src, const Vec3& mic, double f) {
    std::map<std::tuple<long, long, long>, std::pair<Vec3, int>> seen;
    mirror(src, 0, room.max_reflection_order, room.dimensions_m, seen);
    const Vec3& L = room.dimensions_m;
    const double V = L.prod();
    const double S = 2.0 * (L.x() * L.y() + L.x() * L.z() + L.y() * L.z());
    const double alpha = std::min(0.161 * V / (S * room.rt60_s), 1.0);
    const double beta = std::sqrt(1.0 - alpha);
    const double k = 2.0 * kPi * f / 343.0;
    cd total = 0.0;
    for (const auto& [_, img] : seen) {
        const double d = (img.first - mic).norm();
        total += std::pow(beta, img.second) * std::exp(cd(0, k * d)) / (4.0 * kPi * d);
    }
    return total;
}

MicArray single_mics(std::vector<Vec3> pts) {
    MicArray a;
    for (const auto& p : pts) {
        a.positions.push_back(p);
        a.labels.emplace_back("SMA");
    }
    return a;
}

double residual_after_fit(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& Y) {
    const Eigen::MatrixXcd X = A.colPivHouseholderQr().solve(Y);
    return (Y - A * X).norm() / Y.norm();
}

} // namespace

TEST_SUITE("propagation") {

TEST_CASE("plane wave: zero phase at the origin and quarter-wave example") {
    const DirectionGrid g = build_direction_grid(1);
    const MicArray origin = single_mics({Vec3::Zero()});
    for (double f : {100.0, 1000.0, 3700.0}) {
        const TransferMatrix H = plane_wave_matrix(origin, g, f);
        for (Eigen::Index n = 0; n < H.directions(); ++n)
            CHECK(std::abs(H.entries(0, n) - cd(1, 0)) == 0.0);
    }
    const double f = 1000.0;
    const MicArray quarter = single_mics({Vec3(343.0 / (4.0 * f), 0, 0)});
    const auto h = plane_wave_steering(quarter, Vec3::UnitX(), f);
    CHECK(std::abs(h[0] - cd(0, -1)) < 1e-12);
    CHECK(std::abs(wavenumber(f) - 2.0 * kPi * f / 343.0) < 1e-15);
    CHECK_THROWS_AS(plane_wave_matrix(quarter, g, 0.0), Error);
}

TEST_CASE("plane wave: default dictionary shape and unit magnitude") {
    const MicArray a = build_hybrid({});
    const DirectionGrid g = build_direction_grid(3);
    const TransferMatrix H = plane_wave_matrix(a, g, 2000.0);
    REQUIRE(H.mics() == 96);
    REQUIRE(H.directions() == 642);
    CHECK((H.entries.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
    // column n is the steering vector for grid direction n
    CHECK((H.entries.col(17) - plane_wave_steering(a, g.directions[17], 2000.0)).norm() < 1e-13);
}

TEST_CASE("sabine absorption") {
    RoomSpec room;
    const auto a = sabine_absorption(room);
    CHECK(a.alpha == doctest::Approx(0.161 * 240.0 / (268.0 * 0.3)).epsilon(1e-14));
    CHECK(a.alpha == doctest::Approx(0.4806).epsilon(1e-4));
    CHECK_FALSE(a.clamped);

    RoomSpec cube;
    cube.dimensions_m = Vec3(1, 1, 1);
    cube.array_center = Vec3(0.5, 0.5, 0.5);
    cube.rt60_s = 0.05;
    CHECK(sabine_absorption(cube).alpha == doctest::Approx(0.161 / (6.0 * 0.05)).epsilon(1e-14));
    CHECK_FALSE(sabine_absorption(cube).clamped);
    cube.rt60_s = 0.01;
    CHECK(sabine_absorption(cube).alpha == 1.0);
    CHECK(sabine_absorption(cube).clamped);

    room.rt60_s = 1e12;
    CHECK(sabine_absorption(room).alpha < 1e-12);
}

TEST_CASE("room validation") {
    RoomSpec room;
    room.rt60_s = 0.0;
    CHECK_THROWS_AS(validate(room), Error);
    room = RoomSpec{};
    room.dimensions_m = Vec3(10, -1, 3);
    CHECK_THROWS_AS(validate(room), Error);
    room = RoomSpec{};
    room.max_reflection_order = 7;
    CHECK_THROWS_AS(validate(room), Error);
    room = RoomSpec{};
    room.array_center = Vec3(11, 4, 1.5);
    try {
        validate(room);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidScene);
    }
}

TEST_CASE("image sources: counts") {
    RoomSpec room;
    const Vec3 src(3, 2, 1);
    std::size_t previous = 0;
    for (int order = 0; order <= 6; ++order) {
        room.max_reflection_order = order;
        const auto imgs = image_sources(room, src);
        // lattice points with |a| + |b| + |c| <= order
        std::size_t expected = 0;
        for (int a = -order; a <= order; ++a)
            for (int b = -order; b <= order; ++b)
                for (int c = -order; c <= order; ++c)
                    expected += (std::abs(a) + std::abs(b) + std::abs(c) <= order);
        CHECK(imgs.size() == expected);
        CHECK(imgs.size() >= previous);
        CHECK(imgs.front().reflections == 0);
        CHECK(imgs.front().position == src);
        previous = imgs.size();
    }
    room.max_reflection_order = 3;
    CHECK(image_sources(room, src).size() == 63);
}

TEST_CASE("image source rtf: direct path only at order 0") {
    RoomSpec room;
    room.max_reflection_order = 0;
    const Vec3 src(2, 3, 1), mic(6, 5, 2);
    const double d = (src - mic).norm();
    const double k = wavenumber(1234.0);
    const cd h = image_source_rtf(room, src, mic, 1234.0);
    CHECK(std::abs(h - std::exp(cd(0, k * d)) / (4.0 * kPi * d)) < 1e-15);
    CHECK(std::abs(std::abs(h) * 4.0 * kPi * d - 1.0) < 1e-12);
}

TEST_CASE("image source rtf: full absorption removes reflections") {
    RoomSpec room;
    room.dimensions_m = Vec3(2, 2, 2);
    room.array_center = Vec3(1, 1, 1);
    room.rt60_s = 1e-3;
    REQUIRE(sabine_absorption(room).alpha == 1.0);
    const Vec3 src(0.3, 0.4, 0.5), mic(1.5, 1.2, 1.1);
    RoomSpec direct = room;
    direct.max_reflection_order = 0;
    for (int order : {1, 3, 6}) {
        room.max_reflection_order = order;
        CHECK(std::abs(image_source_rtf(room, src, mic, 700.0) - image_source_rtf(direct, src, mic, 700.0)) < 1e-15);
    }
}

TEST_CASE("image source rtf: matches recursive mirror enumeration") {
    RoomSpec room;
    room.dimensions_m = Vec3(3.1, 2.3, 2.7);
    room.array_center = Vec3(1.5, 1.1, 1.3);
    room.rt60_s = 0.4;
    const Vec3 src(0.7, 1.9, 0.4), mic(2.2, 0.6, 1.8);
    for (int order : {1, 2, 3}) {
        room.max_reflection_order = order;
        for (double f : {250.0, 1000.0, 3900.0}) {
            const cd ref = brute_force_rtf(room, src, mic, f);
            CHECK(std::abs(image_source_rtf(room, src, mic, f) - ref) < 1e-12 * std::abs(ref) + 1e-15);
        }
    }
}

TEST_CASE("image source rtf: placement errors") {
    RoomSpec room;
    try {
        image_source_rtf(room, Vec3(11, 1, 1), Vec3(5, 4, 1.5), 500.0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidScene);
    }
    CHECK_THROWS_AS(image_source_rtf(room, Vec3(5, 4, 1.5), Vec3(5, 4, 3.0), 500.0), Error);
    CHECK_THROWS_AS(image_source_rtf(room, Vec3(5, 4, 1.5), Vec3(5, 4, 1.5), 500.0), Error);
}

TEST_CASE("synthesis: free-field on-grid scene satisfies the linear model") {
    const MicArray a = build_hybrid({});
    const DirectionGrid g = build_direction_grid(3);
    SceneSpec scene;
    scene.room.reset();
    scene.snr_db = INFINITY;
    scene.frames = 1;
    scene.source_count = 1;
    scene.directions = {g.directions[123]};
    const auto blocks = synthesize_scene(scene, a, {500.0, 2000.0}, 9);
    REQUIRE(blocks.size() == 2);
    for (const auto& b : blocks) {
        REQUIRE(b.snapshots.rows() == 96);
        REQUIRE(b.snapshots.cols() == 1);
        const auto col = plane_wave_matrix(a, g, b.frequency_hz).entries.col(123);
        const cd amp = b.snapshots(0, 0) / col[0];
        CHECK((b.snapshots.col(0) - amp * col).norm() < 1e-13 * b.snapshots.norm());
        REQUIRE(b.truth.size() == 1);
        CHECK((b.truth[0].direction - g.directions[123]).norm() < 1e-15);
    }

    scene.source_count = 3;
    scene.frames = 8;
    scene.directions = {g.directions[5], g.directions[300], g.directions[600]};
    const auto multi = synthesize_scene(scene, a, {1500.0}, 4);
    const TransferMatrix H = plane_wave_matrix(a, g, 1500.0);
    Eigen::MatrixXcd cols(96, 3);
    cols << H.entries.col(5), H.entries.col(300), H.entries.col(600);
    CHECK(residual_after_fit(cols, multi[0].snapshots) < 1e-12);
}

TEST_CASE("synthesis: direct path normalized to unit gain at the array centre") {
    RoomSpec room;
    room.rt60_s = 1e-3; // fully absorbent walls
    room.max_reflection_order = 2;
    const Vec3 p(0.3, -0.2, 0.1);
    const MicArray mics = single_mics({Vec3(0, 0, 1e-3), p});
    SceneSpec scene;
    scene.room = room;
    scene.snr_db = INFINITY;
    scene.frames = 1;
    scene.distance_m = 2.0;
    const Vec3 dir = Vec3(1, 2, 0.5).normalized();
    scene.directions = {dir};
    scene.source_count = 1;
    const double f = 800.0, k = wavenumber(f), D = 2.0;
    const auto b = synthesize_scene(scene, mics, {f}, 3).front();
    const Vec3 src = D * dir;
    auto model = [&](const Vec3& m) {
        const double d = (src - m).norm();
        return D / d * std::exp(cd(0, k * (d - D)));
    };
    // the free-field scene with the same seed draws the same amplitude
    SceneSpec free = scene;
    free.room.reset();
    const auto ff = synthesize_scene(free, mics, {f}, 3).front();
    const cd amp = ff.snapshots(1, 0) / plane_wave_steering(mics, dir, f)[1];
    CHECK(std::abs(b.snapshots(0, 0) - amp * model(Vec3(0, 0, 1e-3))) < 1e-12 * std::abs(amp));
    CHECK(std::abs(b.snapshots(1, 0) - amp * model(p)) < 1e-12 * std::abs(amp));
    CHECK(b.truth[0].distance_m == 2.0);
}

TEST_CASE("synthesis: reverberant ten-source scene") {
    const MicArray a = build_hybrid({});
    SceneSpec scene;
    scene.source_count = 10;
    scene.distance_m = 2.5;
    scene.seed = 77;
    const auto blocks = synthesize_scene(scene, a, {1000.0}, scene.seed);
    const auto& b = blocks.front();
    CHECK(b.snapshots.rows() == 96);
    CHECK(b.snapshots.cols() == 32);
    CHECK(b.snapshots.allFinite());
    REQUIRE(b.truth.size() == 10);
    const RoomSpec room;
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(std::abs(b.truth[i].direction.norm() - 1.0) < 1e-12);
        const Vec3 pos = room.array_center + 2.5 * b.truth[i].direction;
        for (int ax = 0; ax < 3; ++ax) {
            CHECK(pos[ax] >= 0.25);
            CHECK(pos[ax] <= room.dimensions_m[ax] - 0.25);
        }
        for (std::size_t j = 0; j < i; ++j)
            CHECK(angular_distance(b.truth[i].direction, b.truth[j].direction) * 180.0 / kPi >= 15.0);
    }
}

TEST_CASE("synthesis: deterministic for a fixed seed") {
    const MicArray a = build_hybrid({});
    SceneSpec scene;
    scene.source_count = 2;
    const auto x = synthesize_scene(scene, a, {400.0, 1600.0}, 5);
    const auto y = synthesize_scene(scene, a, {400.0, 1600.0}, 5);
    const auto z = synthesize_scene(scene, a, {400.0, 1600.0}, 6);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(x[i].snapshots == y[i].snapshots);
    CHECK(x[0].snapshots != z[0].snapshots);
    // a frequency's block does not depend on which other frequencies are requested
    const auto alone = synthesize_scene(scene, a, {1600.0}, 5);
    CHECK(alone[0].snapshots == x[1].snapshots);
}

TEST_CASE("synthesis: sources outside the room are rejected") {
    const MicArray a = build_hybrid({});
    SceneSpec scene;
    scene.source_count = 1;
    scene.distance_m = 6.0;
    scene.directions = {Vec3::UnitX()};
    try {
        synthesize_scene(scene, a, {500.0}, 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidScene);
    }
    scene.directions.clear();
    scene.source_count = 400;
    CHECK_THROWS_AS(draw_source_directions(scene, 1), Error);
}

TEST_CASE("noise: infinite SNR passes through, finite SNR is calibrated") {
    ObservationBlock b;
    b.frequency_hz = 1000.0;
    b.snapshots = Eigen::MatrixXcd::Random(100, 100);
    CHECK(add_noise(b, INFINITY, 3).snapshots == b.snapshots);
    const double signal = b.snapshots.squaredNorm();
    for (double snr : {30.0, 0.0, -10.0}) {
        const auto noisy = add_noise(b, snr, 42);
        const double noise = (noisy.snapshots - b.snapshots).squaredNorm();
        CHECK(std::abs(10.0 * std::log10(signal / noise) - snr) < 0.5);
    }
    CHECK_THROWS_AS(add_noise(b, NAN, 1), Error);
    CHECK_THROWS_AS(add_noise(b, -INFINITY, 1), Error);
}

TEST_CASE("frequency band") {
    const auto f = frequency_band(200.0, 4000.0, 200.0);
    REQUIRE(f.size() == 20);
    CHECK(f.front() == 200.0);
    CHECK(f.back() == 4000.0);
    CHECK(frequency_band(200.0, 4000.0, 100.0).size() == 39);
    CHECK(frequency_band(300.0, 300.0, 50.0).size() == 1);
    CHECK_THROWS_AS(frequency_band(0.0, 10.0, 1.0), Error);
    CHECK_THROWS_AS(frequency_band(10.0, 5.0, 1.0), Error);
}

} // TEST_SUITE
