// SPDX-License-Identifier: Apache-2.0
#include "modalsr/geometry.hpp"

#include "modalsr/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <utility>

namespace modalsr {

std::vector<std::size_t> MicArray::indices_with_label(std::string_view label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label)
            out.push_back(i);
    return out;
}

std::vector<std::size_t> MicArray::indices_with_prefix(std::string_view prefix) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (std::string_view(labels[i]).starts_with(prefix))
            out.push_back(i);
    return out;
}

MicArray MicArray::subset(const std::vector<std::size_t>& indices) const {
    MicArray out;
    out.positions.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (auto i : indices) {
        if (i >= size())
            fail(ErrorKind::InvalidArgument, "microphone index out of range");
        out.positions.push_back(positions[i]);
        out.labels.push_back(labels[i]);
    }
    return out;
}

MicArray build_sma(std::size_t n_mics, double radius_m) {
    if (n_mics < 4)
        fail(ErrorKind::InvalidConfig, "SMA needs at least 4 microphones");
    if (!(radius_m > 0.0) || !std::isfinite(radius_m))
        fail(ErrorKind::InvalidConfig, "SMA radius must be positive");

    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const auto n = static_cast<double>(n_mics);

    MicArray array;
    array.positions.reserve(n_mics);
    for (std::size_t i = 0; i < n_mics; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / n;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * static_cast<double>(i);
        Vec3 u(rho * std::cos(phi), rho * std::sin(phi), z);
        array.positions.push_back(radius_m * u.normalized());
    }
    array.labels.assign(n_mics, std::string(kSmaLabel));
    return array;
}

MicArray build_lma(std::size_t n_mics, double spacing_m, const Vec3& center, const Vec3& axis,
                   std::string label) {
    if (n_mics < 2)
        fail(ErrorKind::InvalidConfig, "LMA needs at least 2 microphones");
    if (!(spacing_m > 0.0) || !std::isfinite(spacing_m))
        fail(ErrorKind::InvalidConfig, "LMA spacing must be positive");
    const double axis_norm = axis.norm();
    if (!(axis_norm > 0.0) || !std::isfinite(axis_norm))
        fail(ErrorKind::InvalidConfig, "LMA axis must be a non-zero vector");
    if (!center.allFinite())
        fail(ErrorKind::InvalidConfig, "LMA center must be finite");

    const Vec3 dir = axis / axis_norm;
    const double mid = 0.5 * static_cast<double>(n_mics - 1);

    MicArray array;
    array.positions.reserve(n_mics);
    for (std::size_t i = 0; i < n_mics; ++i)
        array.positions.push_back(center + (static_cast<double>(i) - mid) * spacing_m * dir);
    array.labels.assign(n_mics, std::move(label));
    return array;
}

MicArray build_hybrid(const HybridConfig& config) {
    MicArray array = build_sma(config.sma.count, config.sma.radius_m);

    const auto& lma = config.lma;
    for (std::size_t i = 0; i < lma.arrays; ++i) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(lma.arrays);
        // snap cos/sin residue so the four-LMA layout lands exactly on the axes
        auto snap = [](double v) { return std::abs(v) < 1e-12 ? 0.0 : v; };
        const double c = snap(std::cos(phi));
        const double s = snap(std::sin(phi));
        const Vec3 radial(c, s, 0.0);
        Vec3 axis;
        switch (lma.axes) {
        case LmaAxes::Tangential: axis = Vec3(-s, c, 0.0); break;
        case LmaAxes::Radial: axis = radial; break;
        case LmaAxes::Vertical: axis = Vec3::UnitZ(); break;
        }
        const auto sub = build_lma(lma.count_each, lma.spacing_m, lma.offset_m * radial, axis,
                                   "LMA" + std::to_string(i));
        array.positions.insert(array.positions.end(), sub.positions.begin(), sub.positions.end());
        array.labels.insert(array.labels.end(), sub.labels.begin(), sub.labels.end());
    }

    for (std::size_t i = 0; i < array.size(); ++i)
        for (std::size_t j = i + 1; j < array.size(); ++j)
            if ((array.positions[i] - array.positions[j]).norm() < 1e-6)
                fail(ErrorKind::InvalidConfig, "microphones " + std::to_string(i) + " and " +
                                                   std::to_string(j) + " overlap");
    return array;
}

namespace {

using Face = std::array<std::size_t, 3>;

struct Icosphere {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
};

Icosphere icosahedron() {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    Icosphere mesh;
    mesh.vertices = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    for (auto& v : mesh.vertices)
        v.normalize();
    mesh.faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };
    return mesh;
}

void subdivide(Icosphere& mesh) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> midpoints;
    auto midpoint = [&](std::size_t a, std::size_t b) {
        const auto key = std::minmax(a, b);
        if (auto it = midpoints.find(key); it != midpoints.end())
            return it->second;
        mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
        const auto index = mesh.vertices.size() - 1;
        midpoints.emplace(key, index);
        return index;
    };

    std::vector<Face> faces;
    faces.reserve(mesh.faces.size() * 4);
    for (const auto& [a, b, c] : mesh.faces) {
        const auto ab = midpoint(a, b);
        const auto bc = midpoint(b, c);
        const auto ca = midpoint(c, a);
        faces.push_back({a, ab, ca});
        faces.push_back({b, bc, ab});
        faces.push_back({c, ca, bc});
        faces.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(faces);
}

} // namespace

DirectionGrid build_direction_grid(int level) {
    if (level < 0 || level > kMaxGridLevel)
        fail(ErrorKind::InvalidConfig, "grid level must be in [0, " + std::to_string(kMaxGridLevel) + "]");

    Icosphere mesh = icosahedron();
    for (int i = 0; i < level; ++i)
        subdivide(mesh);

    std::vector<std::set<std::size_t>> neighbours(mesh.vertices.size());
    for (const auto& [a, b, c] : mesh.faces) {
        neighbours[a].insert({b, c});
        neighbours[b].insert({a, c});
        neighbours[c].insert({a, b});
    }

    DirectionGrid grid;
    grid.level = level;
    grid.directions = std::move(mesh.vertices);
    grid.adjacency.reserve(neighbours.size());
    for (const auto& n : neighbours)
        grid.adjacency.emplace_back(n.begin(), n.end());
    return grid;
}

std::size_t DirectionGrid::nearest(const Vec3& direction) const {
    if (directions.empty())
        fail(ErrorKind::InvalidArgument, "empty direction grid");
    const Vec3 u = direction.normalized();
    std::size_t best = 0;
    double best_dot = -2.0;
    for (std::size_t i = 0; i < directions.size(); ++i) {
        const double d = directions[i].dot(u);
        if (d > best_dot) {
            best_dot = d;
            best = i;
        }
    }
    return best;
}

double angular_distance(const Vec3& a, const Vec3& b) {
    if (!(a.norm() > 0.0) || !(b.norm() > 0.0))
        return 0.0;
    // fused multiply-add leaves a rounding residue in a x a
    if (a == b)
        return 0.0;
    // atan2 form keeps full precision near 0 and pi, unlike acos of the dot
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

} // namespace modalsr
