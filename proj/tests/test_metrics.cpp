// SPDX-License-Identifier: Apache-2.0
#include "modalsr/error.hpp"
#include "modalsr/geometry.hpp"
#include "modalsr/metrics.hpp"
#include "modalsr/random.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace modalsr;

namespace {
double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
} // namespace

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::shared_ptr<const DirectionGrid> level3() {
    static const auto g = std::make_shared<const DirectionGrid>(build_direction_grid(3));
    return g;
}

Vec3 from_angles(double azimuth_deg, double elevation_deg) {
    const double az = azimuth_deg * kDeg, el = elevation_deg * kDeg;
    return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

// Direct double sum over every direction pair.
double naive_mismatch(const DirectionGrid& g, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    auto cross = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j)
                s += std::sqrt(x[static_cast<Eigen::Index>(i)] * y[static_cast<Eigen::Index>(j)]) *
                     std::max(1.0 - angular_distance(g.directions[i], g.directions[j]) / (15.0 * kDeg), 0.0);
        return s;
    };
    const double k11 = cross(a, a), k22 = cross(b, b), k12 = cross(a, b);
    return (k11 + k22 - 2.0 * k12) / (k11 + k22);
}

EnergyMap map_on(std::shared_ptr<const DirectionGrid> g, Eigen::VectorXd power) {
    return {std::move(g), std::move(power), "test"};
}

// Hand-built grid with no adjacency: every positive vertex is a local maximum.
std::shared_ptr<const DirectionGrid> loose_grid(std::vector<Vec3> dirs) {
    DirectionGrid g;
    g.directions = std::move(dirs);
    g.adjacency.assign(g.directions.size(), {});
    return std::make_shared<const DirectionGrid>(std::move(g));
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("kernel values") {
    CHECK(kernel(0.0) == 1.0);
    CHECK(kernel(7.5 * kDeg) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(kernel(15.0 * kDeg) == 0.0);
    CHECK(kernel(40.0 * kDeg) == 0.0);
    CHECK(kernel(3.0 * kDeg) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("mismatch: identity, disjoint support and symmetry") {
    const auto g = level3();
    const MismatchKernel K(*g);
    Rng rng(12);
    for (int t = 0; t < 5; ++t) {
        Eigen::VectorXd a(642), b(642);
        for (Eigen::Index i = 0; i < 642; ++i) {
            a[i] = std::pow(uniform01(rng), 4);
            b[i] = std::pow(uniform01(rng), 4);
        }
        CHECK(K(a, a) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
        const double e = K(a, b);
        CHECK(e >= 0.0);
        CHECK(e <= 1.0);
        CHECK(K(b, a) == doctest::Approx(e).epsilon(1e-13));
        CHECK(K(3.0 * a, 3.0 * b) == doctest::Approx(e).epsilon(1e-13));
    }

    // deltas whose directions are at least 15 degrees apart share no kernel mass
    const std::size_t i = 0;
    std::size_t far = 0;
    for (std::size_t j = 0; j < g->size(); ++j)
        if (angular_distance(g->directions[i], g->directions[j]) >= 15.0 * kDeg) {
            far = j;
            break;
        }
    Eigen::VectorXd a = Eigen::VectorXd::Zero(642), b = Eigen::VectorXd::Zero(642);
    a[static_cast<Eigen::Index>(i)] = 1.0;
    b[static_cast<Eigen::Index>(far)] = 4.0;
    CHECK(K(a, b) == 1.0);

    CHECK_THROWS_AS(K(Eigen::VectorXd::Zero(642), a), Error);
    CHECK_THROWS_AS(K(a, Eigen::VectorXd::Ones(10)), Error);
    CHECK_THROWS_AS(K(-a, b), Error);
}

TEST_CASE("mismatch: one-edge offset deltas agree with the naive double sum") {
    const auto g = level3();
    const MismatchKernel K(*g);
    for (std::size_t q : {0u, 17u, 300u, 641u}) {
        const std::size_t p = g->adjacency[q].front();
        Eigen::VectorXd a = Eigen::VectorXd::Zero(642), b = Eigen::VectorXd::Zero(642);
        a[static_cast<Eigen::Index>(q)] = 1.0;
        b[static_cast<Eigen::Index>(p)] = 1.0;
        const double theta = angular_distance(g->directions[q], g->directions[p]);
        CHECK(K(a, b) == doctest::Approx(theta / (15.0 * kDeg)).epsilon(1e-12));
        CHECK(K(a, b) == doctest::Approx(naive_mismatch(*g, a, b)).epsilon(1e-12));
    }
    Rng rng(4);
    Eigen::VectorXd a(642), b(642);
    for (Eigen::Index i = 0; i < 642; ++i) {
        a[i] = uniform01(rng) < 0.05 ? uniform01(rng) : 0.0;
        b[i] = uniform01(rng) < 0.05 ? uniform01(rng) : 0.0;
    }
    a[0] = b[1] = 1.0;
    CHECK(K(a, b) == doctest::Approx(naive_mismatch(*g, a, b)).epsilon(1e-12));
    CHECK(energy_map_mismatch(map_on(g, a), map_on(g, b)) == doctest::Approx(K(a, b)).epsilon(1e-14));
}

TEST_CASE("peaks: delta, flat map and the 20 dB floor") {
    const auto g = level3();
    Eigen::VectorXd p = Eigen::VectorXd::Zero(642);
    p[100] = 1.0;
    PeakSet peaks = find_peaks(map_on(g, p));
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].index == 100);

    CHECK(find_peaks(map_on(g, Eigen::VectorXd::Ones(642))).empty());

    std::size_t far = 0;
    while (angular_distance(g->directions[100], g->directions[far]) < 90.0 * kDeg)
        ++far;
    p[static_cast<Eigen::Index>(far)] = std::pow(10.0, -2.5); // -25 dB
    CHECK(find_peaks(map_on(g, p)).size() == 1);
    p[static_cast<Eigen::Index>(far)] = std::pow(10.0, -1.5); // -15 dB
    CHECK(find_peaks(map_on(g, p)).size() == 2);

    // plateau of two equal neighbours is not a strict maximum
    Eigen::VectorXd flat = Eigen::VectorXd::Zero(642);
    flat[5] = 1.0;
    flat[static_cast<Eigen::Index>(g->adjacency[5].front())] = 1.0;
    CHECK(find_peaks(map_on(g, flat)).empty());
}

TEST_CASE("angular error: exact hit, miss and the 80 percent rule") {
    const auto g = level3();
    Eigen::VectorXd p = Eigen::VectorXd::Zero(642);
    p[200] = 1.0;
    const EnergyMap m = map_on(g, p);
    CHECK(*angular_error(m, g->directions[200]) == 0.0);

    const Vec3 truth = from_angles(0.0, 0.0);
    const auto hand = loose_grid({from_angles(25.0, 0.0)});
    CHECK_FALSE(angular_error(map_on(hand, Eigen::VectorXd::Ones(1)), truth).has_value());
    const MismatchKernel hk(*hand);
    const MapScore miss = score_map(hk, map_on(hand, Eigen::VectorXd::Ones(1)), {truth});
    CHECK(miss.miss_rate == 1.0);
    CHECK(miss.mean_angular_error_deg == kMissPenaltyDeg);

    const auto two = loose_grid({from_angles(5.0, 0.0), from_angles(3.0, 0.0)});
    Eigen::VectorXd pw(2);
    pw << 1.0, 0.7;
    const auto err = angular_error(map_on(two, pw), truth);
    REQUIRE(err.has_value());
    CHECK(*err / kDeg == doctest::Approx(5.0).epsilon(1e-9));
    pw << 1.0, 0.85;
    CHECK(*angular_error(map_on(two, pw), truth) / kDeg == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("score_map: normalization and errors") {
    const auto g = level3();
    const MismatchKernel K(*g);
    const std::vector<Vec3> truth{g->directions[10], g->directions[400]};
    Eigen::VectorXd p = Eigen::VectorXd::Zero(642);
    p[10] = 2.0;
    p[400] = 2.0;
    const MapScore s = score_map(K, map_on(g, p), truth);
    CHECK(s.mismatch == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(s.mean_angular_error_deg == 0.0);
    CHECK(s.miss_rate == 0.0);

    const MapScore scaled = score_map(K, map_on(g, 1e6 * p), truth);
    CHECK(scaled.mismatch == doctest::Approx(s.mismatch).scale(1.0).epsilon(1e-14));

    p[400] = 0.0;
    const MapScore half = score_map(K, map_on(g, p), truth);
    CHECK(half.miss_rate == 0.5);
    CHECK(half.mean_angular_error_deg == doctest::Approx(10.0).epsilon(1e-12));

    CHECK_THROWS_AS(score_map(K, map_on(g, Eigen::VectorXd::Zero(642)), truth), Error);
    CHECK_THROWS_AS(score_map(K, map_on(g, p), {}), Error);
    CHECK_THROWS_AS(normalized(map_on(g, Eigen::VectorXd::Zero(642))), Error);
    Eigen::VectorXd nan = p;
    nan[0] = NAN;
    CHECK_THROWS_AS(score_map(K, map_on(g, nan), truth), Error);
}

TEST_CASE("truth map sums to the source count") {
    const auto g = level3();
    const EnergyMap t = truth_map(g, {from_angles(10, 20), from_angles(100, -30), from_angles(200, 60)});
    CHECK(t.power.sum() == 3.0);
    CHECK(normalized(t).power.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

} // TEST_SUITE
