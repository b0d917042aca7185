// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace modalsr {

using Vec3 = Eigen::Vector3d;

inline constexpr std::string_view kSmaLabel = "SMA";

/// Ordered microphone positions (meters, SMA center at origin) with a
/// sub-array tag per microphone: "SMA" or "LMA<i>".
struct MicArray {
    std::vector<Vec3> positions;
    std::vector<std::string> labels;

    std::size_t size() const noexcept { return positions.size(); }

    std::vector<std::size_t> indices_with_label(std::string_view label) const;
    /// Microphones whose label starts with `prefix`, in array order.
    std::vector<std::size_t> indices_with_prefix(std::string_view prefix) const;
    MicArray subset(const std::vector<std::size_t>& indices) const;
};

struct SmaConfig {
    std::size_t count = 64;
    double radius_m = 0.10;
};

enum class LmaAxes {
    Tangential, ///< horizontal, perpendicular to the radial offset
    Radial,     ///< horizontal, along the radial offset
    Vertical,   ///< along +z
};

struct LmaConfig {
    std::size_t arrays = 4;
    std::size_t count_each = 8;
    double spacing_m = 0.04;
    double offset_m = 0.5;
    LmaAxes axes = LmaAxes::Tangential;
};

/// Defaults reproduce the reference layout: 64-mic open SMA of radius
/// 10 cm plus four 8-mic LMAs (4 cm pitch) centred 0.5 m out on +x, +y, -x, -y.
struct HybridConfig {
    SmaConfig sma;
    LmaConfig lma;
};

/// Near-uniform open SMA on a spherical Fibonacci lattice.
MicArray build_sma(std::size_t n_mics, double radius_m);

/// `n_mics` collinear microphones centred on `center`, spaced `spacing_m`
/// along `axis` (normalized internally).
MicArray build_lma(std::size_t n_mics, double spacing_m, const Vec3& center, const Vec3& axis,
                   std::string label = "LMA0");

/// SMA block first, then LMA<i> for i = 0..arrays-1. LMA i sits at azimuth
/// 2*pi*i/arrays in the horizontal plane.
MicArray build_hybrid(const HybridConfig& config);

/// Candidate directions on the unit sphere: vertices of a recursively
/// subdivided icosahedron, with the mesh edge adjacency.
struct DirectionGrid {
    std::vector<Vec3> directions;
    std::vector<std::vector<std::size_t>> adjacency;
    int level = -1; ///< subdivision level, -1 for hand-built grids

    std::size_t size() const noexcept { return directions.size(); }

    /// Index of the closest direction; ties go to the lowest index.
    std::size_t nearest(const Vec3& direction) const;
};

inline constexpr int kMaxGridLevel = 6;

DirectionGrid build_direction_grid(int level);

/// Angle between two directions in [0, pi]. Inputs are normalized first.
double angular_distance(const Vec3& a, const Vec3& b);

} // namespace modalsr
