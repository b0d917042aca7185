// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "modalsr/geometry.hpp"

#include <Eigen/Core>

#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace modalsr {

struct EnergyMap {
    std::shared_ptr<const DirectionGrid> grid;
    Eigen::VectorXd power; ///< one nonnegative value per grid direction
    std::string label;
};

/// Copy scaled to unit total power.
EnergyMap normalized(const EnergyMap& map);

/// Unit-power deltas at the grid vertices nearest to each true direction.
EnergyMap truth_map(std::shared_ptr<const DirectionGrid> grid, const std::vector<Vec3>& directions);

inline constexpr double kKernelSupport = std::numbers::pi / 12.0;

/// max(1 - angle / (pi/12), 0)
double kernel(double angle_rad);

/// Kernel-weighted mismatch table for one grid: only pairs closer than pi/12
/// contribute, so they are listed once up front.
class MismatchKernel {
public:
    explicit MismatchKernel(const DirectionGrid& grid);

    /// (K11 + K22 - 2 K12) / (K11 + K22) for two power vectors on this grid.
    double operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

    std::size_t grid_size() const noexcept { return neighbours_.size(); }

private:
    double cross(const Eigen::VectorXd& sa, const Eigen::VectorXd& sb) const;

    std::vector<std::vector<std::pair<std::size_t, double>>> neighbours_;
};

double energy_map_mismatch(const EnergyMap& a, const EnergyMap& b);

struct Peak {
    std::size_t index = 0;
    double power = 0.0;
};

using PeakSet = std::vector<Peak>;

inline constexpr double kPeakFloorDb = -20.0;
inline constexpr double kPeakWindowRad = 20.0 * std::numbers::pi / 180.0;
inline constexpr double kPeakLocalFraction = 0.8;

/// Strict local maxima over the grid adjacency that are within 20 dB of the global maximum.
PeakSet find_peaks(const EnergyMap& map);

/// Angular distance to the nearest qualifying peak, or nullopt for a miss.
/// A peak qualifies when it lies within 20 degrees of the truth and holds at
/// least 80% of the strongest peak inside that window.
std::optional<double> angular_error(const EnergyMap& map, const PeakSet& peaks, const Vec3& truth);
std::optional<double> angular_error(const EnergyMap& map, const Vec3& truth);

/// Misses enter averaged angular error at the window radius.
inline constexpr double kMissPenaltyDeg = 20.0;

struct MapScore {
    double mismatch = 0.0;
    double mean_angular_error_deg = 0.0;
    double miss_rate = 0.0;
};

/// Scores a recovered map against the true directions. Both maps are
/// normalized to unit total power before the mismatch is taken.
MapScore score_map(const MismatchKernel& kernel, const EnergyMap& recovered, const std::vector<Vec3>& truth);

} // namespace modalsr
