// SPDX-License-Identifier: Apache-2.0
#include "modalsr/propagation.hpp"

#include "modalsr/error.hpp"
#include "modalsr/random.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace modalsr {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

bool strictly_inside(const RoomSpec& room, const Vec3& p) {
    for (int a = 0; a < 3; ++a)
        if (!(p[a] > 0.0 && p[a] < room.dimensions_m[a]))
            return false;
    return true;
}

std::string describe(const Vec3& p) {
    std::ostringstream os;
    os << '(' << p.x() << ", " << p.y() << ", " << p.z() << ')';
    return os.str();
}

} // namespace

double wavenumber(double frequency_hz) {
    return 2.0 * std::numbers::pi * frequency_hz / kSpeedOfSound;
}

Eigen::VectorXcd plane_wave_steering(const MicArray& array, const Vec3& source_direction, double frequency_hz) {
    if (!(frequency_hz > 0.0))
        fail(ErrorKind::InvalidArgument, "frequency must be positive");
    const double k = wavenumber(frequency_hz);
    const Vec3 propagation = -source_direction.normalized();
    Eigen::VectorXcd h(static_cast<Eigen::Index>(array.size()));
    for (std::size_t m = 0; m < array.size(); ++m)
        h[static_cast<Eigen::Index>(m)] = std::exp(kI * (k * propagation.dot(array.positions[m])));
    return h;
}

TransferMatrix plane_wave_matrix(const MicArray& array, const DirectionGrid& grid, double frequency_hz) {
    if (!(frequency_hz > 0.0))
        fail(ErrorKind::InvalidArgument, "frequency must be positive");
    const double k = wavenumber(frequency_hz);
    const auto M = static_cast<Eigen::Index>(array.size());
    const auto N = static_cast<Eigen::Index>(grid.size());

    TransferMatrix H;
    H.frequency_hz = frequency_hz;
    H.array_ref = "mics:" + std::to_string(M);
    H.grid_ref = grid.level >= 0 ? "icosphere:" + std::to_string(grid.level) : "grid:" + std::to_string(N);
    H.entries.resize(M, N);
    for (Eigen::Index n = 0; n < N; ++n) {
        const Vec3 u = -grid.directions[static_cast<std::size_t>(n)];
        for (Eigen::Index m = 0; m < M; ++m)
            H.entries(m, n) = std::exp(kI * (k * u.dot(array.positions[static_cast<std::size_t>(m)])));
    }
    return H;
}

void validate(const RoomSpec& room) {
    if (!room.dimensions_m.allFinite() || (room.dimensions_m.array() <= 0.0).any())
        fail(ErrorKind::InvalidConfig, "room dimensions must be positive");
    if (!(room.rt60_s > 0.0))
        fail(ErrorKind::InvalidConfig, "RT60 must be positive");
    if (room.max_reflection_order < 0 || room.max_reflection_order > kMaxReflectionOrder)
        fail(ErrorKind::InvalidConfig, "max reflection order must be in [0, " +
                                           std::to_string(kMaxReflectionOrder) + "]");
    if (!strictly_inside(room, room.array_center))
        fail(ErrorKind::InvalidScene, "array center " + describe(room.array_center) + " is outside the room");
}

SabineAbsorption sabine_absorption(const RoomSpec& room) {
    validate(room);
    const Vec3& d = room.dimensions_m;
    const double volume = d.x() * d.y() * d.z();
    const double surface = 2.0 * (d.x() * d.y() + d.x() * d.z() + d.y() * d.z());
    const double alpha = 0.161 * volume / (surface * room.rt60_s);
    if (alpha > 1.0)
        return {1.0, true};
    return {alpha, false};
}

std::vector<ImageSource> image_sources(const RoomSpec& room, const Vec3& source) {
    validate(room);
    const int order = room.max_reflection_order;
    const Vec3& L = room.dimensions_m;

    std::vector<ImageSource> images;
    images.push_back({source, 0});
    for (int u = 0; u <= 1; ++u)
        for (int v = 0; v <= 1; ++v)
            for (int w = 0; w <= 1; ++w)
                for (int l = -order; l <= order; ++l)
                    for (int m = -order; m <= order; ++m)
                        for (int n = -order; n <= order; ++n) {
                            // image x = (1-2u) xs + 2 l Lx crosses |2l - u| x-walls
                            const int reflections = std::abs(2 * l - u) + std::abs(2 * m - v) + std::abs(2 * n - w);
                            if (reflections == 0 || reflections > order)
                                continue;
                            const Vec3 p((1 - 2 * u) * source.x() + 2 * l * L.x(),
                                         (1 - 2 * v) * source.y() + 2 * m * L.y(),
                                         (1 - 2 * w) * source.z() + 2 * n * L.z());
                            images.push_back({p, reflections});
                        }
    return images;
}

namespace {

std::complex<double> sum_images(const std::vector<ImageSource>& images, double beta, const Vec3& mic, double k) {
    std::complex<double> total = 0.0;
    for (const auto& img : images) {
        const double d = (img.position - mic).norm();
        if (d < 1e-6)
            fail(ErrorKind::InvalidScene, "image source coincides with microphone at " + describe(mic));
        const double gain = std::pow(beta, img.reflections) / (4.0 * std::numbers::pi * d);
        total += gain * std::exp(kI * (k * d));
    }
    return total;
}

void check_inside(const RoomSpec& room, const Vec3& p, const char* what) {
    if (!strictly_inside(room, p))
        fail(ErrorKind::InvalidScene, std::string(what) + " " + describe(p) + " is outside the room");
}

} // namespace

std::complex<double> image_source_rtf(const RoomSpec& room, const Vec3& source, const Vec3& mic, double frequency_hz) {
    if (!(frequency_hz > 0.0))
        fail(ErrorKind::InvalidArgument, "frequency must be positive");
    check_inside(room, source, "source");
    check_inside(room, mic, "microphone");
    const double beta = std::sqrt(1.0 - sabine_absorption(room).alpha);
    return sum_images(image_sources(room, source), beta, mic, wavenumber(frequency_hz));
}

void validate(const SceneSpec& scene) {
    if (scene.source_count == 0 && scene.directions.empty())
        fail(ErrorKind::InvalidConfig, "scene needs at least one source");
    if (!scene.directions.empty() && scene.directions.size() != scene.source_count)
        fail(ErrorKind::InvalidConfig, "explicit directions must match the source count");
    if (scene.frames < 1)
        fail(ErrorKind::InvalidConfig, "scene needs at least one frame");
    if (std::isnan(scene.snr_db))
        fail(ErrorKind::InvalidConfig, "SNR must not be NaN");
    if (scene.room) {
        validate(*scene.room);
        if (!(scene.distance_m > 0.0))
            fail(ErrorKind::InvalidConfig, "source distance must be positive");
    }
    for (const auto& d : scene.directions)
        if (!d.allFinite() || !(d.norm() > 0.0))
            fail(ErrorKind::InvalidConfig, "source directions must be finite and non-zero");
}

std::vector<Vec3> draw_source_directions(const SceneSpec& scene, std::uint64_t seed) {
    validate(scene);
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double min_sep = scene.min_separation_deg * std::numbers::pi / 180.0;

    std::vector<Vec3> out;
    constexpr int kMaxAttempts = 1'000'000;
    for (int attempt = 0; out.size() < scene.source_count; ++attempt) {
        if (attempt >= kMaxAttempts)
            fail(ErrorKind::InvalidScene, "cannot place " + std::to_string(scene.source_count) +
                                              " sources with the requested separation inside the room");
        const double x = normal(rng);
        const double y = normal(rng);
        const double z = normal(rng);
        Vec3 v(x, y, z);
        const double n = v.norm();
        if (!(n > 1e-12))
            continue;
        v /= n;
        if (scene.room) {
            const Vec3 p = scene.room->array_center + scene.distance_m * v;
            const Vec3& L = scene.room->dimensions_m;
            bool ok = true;
            for (int a = 0; a < 3; ++a)
                ok = ok && p[a] >= scene.wall_margin_m && p[a] <= L[a] - scene.wall_margin_m;
            if (!ok)
                continue;
        }
        bool separated = true;
        for (const auto& o : out)
            separated = separated && angular_distance(o, v) >= min_sep;
        if (separated)
            out.push_back(v);
    }
    return out;
}

std::vector<ObservationBlock> synthesize_scene(const SceneSpec& scene, const MicArray& array,
                                               const std::vector<double>& frequencies_hz, std::uint64_t seed) {
    validate(scene);
    const std::vector<Vec3> directions =
        scene.directions.empty() ? draw_source_directions(scene, derive_seed(seed, {0xd1ULL})) : scene.directions;

    const auto M = static_cast<Eigen::Index>(array.size());
    const auto S = directions.size();
    const auto T = static_cast<Eigen::Index>(scene.frames);

    std::vector<SourceTruth> truth;
    for (const auto& d : directions)
        truth.push_back({d.normalized(), scene.room ? scene.distance_m : 0.0});

    // image lattices depend only on geometry, not frequency
    std::vector<std::vector<ImageSource>> images;
    std::vector<Vec3> mics_room;
    double beta = 0.0;
    if (scene.room) {
        const RoomSpec& room = *scene.room;
        beta = std::sqrt(1.0 - sabine_absorption(room).alpha);
        for (const auto& p : array.positions) {
            mics_room.push_back(room.array_center + p);
            check_inside(room, mics_room.back(), "microphone");
        }
        for (const auto& t : truth) {
            const Vec3 src = room.array_center + t.distance_m * t.direction;
            check_inside(room, src, "source");
            images.push_back(image_sources(room, src));
        }
    }

    std::vector<ObservationBlock> blocks;
    blocks.reserve(frequencies_hz.size());
    for (std::size_t fi = 0; fi < frequencies_hz.size(); ++fi) {
        const double f = frequencies_hz[fi];
        if (!(f > 0.0))
            fail(ErrorKind::InvalidArgument, "frequency must be positive");
        const double k = wavenumber(f);

        Eigen::MatrixXcd gains(M, static_cast<Eigen::Index>(S));
        for (std::size_t s = 0; s < S; ++s) {
            if (!scene.room) {
                gains.col(static_cast<Eigen::Index>(s)) = plane_wave_steering(array, truth[s].direction, f);
                continue;
            }
            const double D = truth[s].distance_m;
            const std::complex<double> norm = 4.0 * std::numbers::pi * D * std::exp(-kI * (k * D));
            for (Eigen::Index m = 0; m < M; ++m)
                gains(m, static_cast<Eigen::Index>(s)) =
                    norm * sum_images(images[s], beta, mics_room[static_cast<std::size_t>(m)], k);
        }

        const auto fkey = static_cast<std::uint64_t>(std::llround(f * 1000.0));
        Rng rng(derive_seed(seed, {0xa3ULL, fkey}));
        Eigen::MatrixXcd amplitudes(static_cast<Eigen::Index>(S), T);
        for (Eigen::Index t = 0; t < T; ++t)
            for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(S); ++s)
                amplitudes(s, t) = complex_gaussian(rng, 1.0);

        ObservationBlock block;
        block.frequency_hz = f;
        block.snapshots = gains * amplitudes;
        block.truth = truth;
        block.seed = seed;
        blocks.push_back(add_noise(std::move(block), scene.snr_db, derive_seed(seed, {0x4eULL, fkey})));
    }
    return blocks;
}

ObservationBlock add_noise(ObservationBlock block, double snr_db, std::uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0.0)
        return block;
    if (!std::isfinite(snr_db))
        fail(ErrorKind::InvalidArgument, "SNR must be finite or +inf");
    const auto count = block.snapshots.size();
    if (count == 0)
        return block;
    const double signal_power = block.snapshots.squaredNorm() / static_cast<double>(count);
    const double noise_power = signal_power / std::pow(10.0, snr_db / 10.0);
    Rng rng(seed);
    for (Eigen::Index t = 0; t < block.snapshots.cols(); ++t)
        for (Eigen::Index m = 0; m < block.snapshots.rows(); ++m)
            block.snapshots(m, t) += complex_gaussian(rng, noise_power);
    return block;
}

std::vector<double> frequency_band(double first_hz, double last_hz, double step_hz) {
    if (!(first_hz > 0.0) || !(step_hz > 0.0) || last_hz < first_hz)
        fail(ErrorKind::InvalidConfig, "frequency band needs 0 < first <= last and step > 0");
    std::vector<double> out;
    for (int i = 0;; ++i) {
        const double f = first_hz + i * step_hz;
        if (f > last_hz + 1e-9)
            break;
        out.push_back(f);
    }
    return out;
}

} // namespace modalsr
