// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "modalsr/geometry.hpp"

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace modalsr {

inline constexpr double kSpeedOfSound = 343.0;

/// k = 2*pi*f/c
double wavenumber(double frequency_hz);

// Phase convention (used everywhere in this library): time dependence
// exp(-i*omega*t). A plane wave travelling along unit vector u has spatial
// phase exp(+i*k*u.r) and an outgoing spherical wave is exp(+i*k*d)/(4*pi*d).
// Grid directions name where a wave comes FROM, so u = -direction.

struct TransferMatrix {
    Eigen::MatrixXcd entries; ///< M x N
    double frequency_hz = 0.0;
    std::string array_ref;
    std::string grid_ref;

    Eigen::Index mics() const noexcept { return entries.rows(); }
    Eigen::Index directions() const noexcept { return entries.cols(); }
};

/// Array response to a unit plane wave arriving from `source_direction`.
Eigen::VectorXcd plane_wave_steering(const MicArray& array, const Vec3& source_direction, double frequency_hz);

/// h_mn = exp(i*k*(u_n . r_m)) with u_n = -grid.directions[n].
TransferMatrix plane_wave_matrix(const MicArray& array, const DirectionGrid& grid, double frequency_hz);

struct RoomSpec {
    Vec3 dimensions_m{10.0, 8.0, 3.0};
    double rt60_s = 0.3;
    int max_reflection_order = 3;
    Vec3 array_center{5.0, 4.0, 1.5}; ///< room coordinates of the SMA center
};

inline constexpr int kMaxReflectionOrder = 6;

void validate(const RoomSpec& room);

struct SabineAbsorption {
    double alpha = 0.0;
    bool clamped = false; ///< formula exceeded 1: room too small for the requested RT60
};

/// alpha = 0.161 V / (S RT60), clamped to (0, 1].
SabineAbsorption sabine_absorption(const RoomSpec& room);

struct ImageSource {
    Vec3 position;
    int reflections = 0;
};

/// All shoebox images of `source` (room coordinates) with at most
/// max_reflection_order wall bounces, direct path first.
std::vector<ImageSource> image_sources(const RoomSpec& room, const Vec3& source);

/// Sum over images of beta^reflections * exp(i*k*d) / (4*pi*d), beta = sqrt(1 - alpha).
/// `source` and `mic` are in room coordinates.
std::complex<double> image_source_rtf(const RoomSpec& room, const Vec3& source, const Vec3& mic, double frequency_hz);

struct SourceTruth {
    Vec3 direction; ///< unit vector from the array center toward the source
    double distance_m = 0.0;
};

struct ObservationBlock {
    double frequency_hz = 0.0;
    Eigen::MatrixXcd snapshots; ///< M x T
    std::vector<SourceTruth> truth;
    std::uint64_t seed = 0;
};

struct SceneSpec {
    std::size_t source_count = 2;
    double distance_m = 1.5;
    /// Explicit source directions; drawn at random when empty.
    std::vector<Vec3> directions;
    std::optional<RoomSpec> room = RoomSpec{}; ///< nullopt: free field (plane waves)
    std::size_t frames = 32;
    double snr_db = 30.0; ///< +inf disables noise
    std::uint64_t seed = 0;
    double min_separation_deg = 15.0;
    double wall_margin_m = 0.25;
};

void validate(const SceneSpec& scene);

/// Uniform random directions on the sphere, rejecting draws closer than the
/// minimum separation to an earlier source and, in a room, draws that put the
/// source within the wall margin.
std::vector<Vec3> draw_source_directions(const SceneSpec& scene, std::uint64_t seed);

/// One ObservationBlock per frequency. Source amplitudes are i.i.d. unit-power
/// circular Gaussian per frame. In a room every source is a point source at
/// the given distance propagated through image_source_rtf, normalized so the
/// direct path has unit gain and zero phase at the array center.
std::vector<ObservationBlock> synthesize_scene(const SceneSpec& scene, const MicArray& array,
                                               const std::vector<double>& frequencies_hz, std::uint64_t seed);

/// Adds i.i.d. circular Gaussian noise with mean signal power / noise power = 10^(snr/10).
ObservationBlock add_noise(ObservationBlock block, double snr_db, std::uint64_t seed);

/// first, first+step, ... up to and including `last` (within 1e-9 Hz).
std::vector<double> frequency_band(double first_hz, double last_hz, double step_hz);

} // namespace modalsr
