// SPDX-License-Identifier: Apache-2.0
#include "modalsr/metrics.hpp"

#include "modalsr/error.hpp"

#include <algorithm>
#include <cmath>

namespace modalsr {

namespace {

void check_map(const EnergyMap& map) {
    if (!map.grid)
        fail(ErrorKind::InvalidArgument, "energy map has no grid");
    if (static_cast<std::size_t>(map.power.size()) != map.grid->size())
        fail(ErrorKind::InvalidArgument, "energy map size does not match its grid");
    if (!map.power.allFinite() || (map.power.array() < 0.0).any())
        fail(ErrorKind::InvalidArgument, "energy map power must be finite and nonnegative");
}

} // namespace

EnergyMap normalized(const EnergyMap& map) {
    check_map(map);
    const double total = map.power.sum();
    if (!(total > 0.0))
        fail(ErrorKind::InvalidArgument, "cannot normalize a zero-power energy map");
    EnergyMap out = map;
    out.power /= total;
    return out;
}

EnergyMap truth_map(std::shared_ptr<const DirectionGrid> grid, const std::vector<Vec3>& directions) {
    if (!grid)
        fail(ErrorKind::InvalidArgument, "truth map needs a grid");
    EnergyMap map;
    map.power = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid->size()));
    for (const auto& d : directions)
        map.power[static_cast<Eigen::Index>(grid->nearest(d))] += 1.0;
    map.grid = std::move(grid);
    map.label = "truth";
    return map;
}

double kernel(double angle_rad) {
    return std::max(1.0 - angle_rad / kKernelSupport, 0.0);
}

MismatchKernel::MismatchKernel(const DirectionGrid& grid) : neighbours_(grid.size()) {
    const double cos_support = std::cos(kKernelSupport);
    for (std::size_t q = 0; q < grid.size(); ++q)
        for (std::size_t p = 0; p < grid.size(); ++p) {
            if (grid.directions[q].dot(grid.directions[p]) < cos_support - 1e-12)
                continue;
            const double k = kernel(angular_distance(grid.directions[q], grid.directions[p]));
            if (k > 0.0)
                neighbours_[q].emplace_back(p, k);
        }
}

double MismatchKernel::cross(const Eigen::VectorXd& sa, const Eigen::VectorXd& sb) const {
    double total = 0.0;
    for (std::size_t q = 0; q < neighbours_.size(); ++q) {
        const double aq = sa[static_cast<Eigen::Index>(q)];
        if (aq == 0.0)
            continue;
        double inner = 0.0;
        for (const auto& [p, k] : neighbours_[q])
            inner += k * sb[static_cast<Eigen::Index>(p)];
        total += aq * inner;
    }
    return total;
}

double MismatchKernel::operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    const auto n = static_cast<Eigen::Index>(neighbours_.size());
    if (a.size() != n || b.size() != n)
        fail(ErrorKind::InvalidArgument, "energy maps do not match the kernel grid");
    if ((a.array() < 0.0).any() || (b.array() < 0.0).any())
        fail(ErrorKind::InvalidArgument, "energy map power must be nonnegative");
    if (!(a.sum() > 0.0) || !(b.sum() > 0.0))
        fail(ErrorKind::InvalidArgument, "energy map mismatch needs positive total power in both maps");

    const Eigen::VectorXd sa = a.cwiseSqrt();
    const Eigen::VectorXd sb = b.cwiseSqrt();
    const double k11 = cross(sa, sa);
    const double k22 = cross(sb, sb);
    const double k12 = cross(sa, sb);
    const double e = (k11 + k22 - 2.0 * k12) / (k11 + k22);
    return std::clamp(e, 0.0, 1.0);
}

double energy_map_mismatch(const EnergyMap& a, const EnergyMap& b) {
    check_map(a);
    check_map(b);
    if (a.grid != b.grid && a.grid->size() != b.grid->size())
        fail(ErrorKind::InvalidArgument, "energy maps live on different grids");
    return MismatchKernel(*a.grid)(a.power, b.power);
}

PeakSet find_peaks(const EnergyMap& map) {
    check_map(map);
    PeakSet peaks;
    if (map.power.size() == 0)
        return peaks;
    const double floor = std::pow(10.0, kPeakFloorDb / 10.0) * map.power.maxCoeff();
    const auto& grid = *map.grid;
    for (std::size_t q = 0; q < grid.size(); ++q) {
        const double v = map.power[static_cast<Eigen::Index>(q)];
        if (!(v > 0.0) || v < floor)
            continue;
        const bool strict = std::all_of(grid.adjacency[q].begin(), grid.adjacency[q].end(), [&](std::size_t j) {
            return v > map.power[static_cast<Eigen::Index>(j)];
        });
        if (strict)
            peaks.push_back({q, v});
    }
    return peaks;
}

std::optional<double> angular_error(const EnergyMap& map, const PeakSet& peaks, const Vec3& truth) {
    check_map(map);
    double window_max = 0.0;
    for (const auto& pk : peaks)
        if (angular_distance(map.grid->directions[pk.index], truth) <= kPeakWindowRad)
            window_max = std::max(window_max, pk.power);
    if (!(window_max > 0.0))
        return std::nullopt;

    std::optional<double> best;
    for (const auto& pk : peaks) {
        const double angle = angular_distance(map.grid->directions[pk.index], truth);
        if (angle > kPeakWindowRad || pk.power < kPeakLocalFraction * window_max)
            continue;
        if (!best || angle < *best)
            best = angle;
    }
    return best;
}

std::optional<double> angular_error(const EnergyMap& map, const Vec3& truth) {
    return angular_error(map, find_peaks(map), truth);
}

MapScore score_map(const MismatchKernel& kernel, const EnergyMap& recovered, const std::vector<Vec3>& truth) {
    check_map(recovered);
    if (truth.empty())
        fail(ErrorKind::InvalidArgument, "scoring needs at least one true direction");
    MapScore score;
    const EnergyMap reference = truth_map(recovered.grid, truth);
    score.mismatch = kernel(normalized(reference).power, normalized(recovered).power);

    const PeakSet peaks = find_peaks(recovered);
    double total = 0.0;
    std::size_t misses = 0;
    for (const auto& t : truth) {
        const auto err = angular_error(recovered, peaks, t);
        if (err) {
            total += *err * 180.0 / std::numbers::pi;
        } else {
            total += kMissPenaltyDeg;
            ++misses;
        }
    }
    score.mean_angular_error_deg = total / static_cast<double>(truth.size());
    score.miss_rate = static_cast<double>(misses) / static_cast<double>(truth.size());
    return score;
}

} // namespace modalsr
