// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "modalsr/experiments.hpp"
#include "modalsr/geometry.hpp"
#include "modalsr/propagation.hpp"
#include "modalsr/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <vector>

namespace modalsr {

// One JSON document configures every subcommand. All keys are optional;
// unknown keys are rejected so that typos surface as errors.
//
//   array          {sma: {count, radius_m}, lma: {arrays, count_each, spacing_m, offset_m, axes}}
//   grid_level     icosphere subdivision level
//   frequencies_hz [Hz...]  or  band {first_hz, last_hz, step_hz}
//   room           {dims_m, rt60_s, max_order, array_center_m}  or  free_field: true
//   sources        {count, distance_m, directions: [[x, y, z], ...]}
//   frames, snr_db (number, "inf" or null), seed, min_separation_deg, wall_margin_m
//   irls           {p_init, p_final, iters_p1, max_iters, eps_init, eps_floor,
//                   reg_scale, tol_rel_change, lambda_floor}
//   methods, source_counts, distances_m, trials, master_seed, threads, on_grid_sources
//   mode_counts    K values for the modes subcommand

using Json = nlohmann::json;

/// Parses a config file; an empty path yields an empty document (all defaults).
Json load_config(const std::filesystem::path& path);

/// Rejects unknown top-level or nested keys.
void check_config_keys(const Json& doc);

HybridConfig hybrid_from_json(const Json& doc);
int grid_level_from_json(const Json& doc, int fallback = 3);
std::vector<double> frequencies_from_json(const Json& doc, const std::vector<double>& fallback);
std::optional<RoomSpec> room_from_json(const Json& doc);
SceneSpec scene_from_json(const Json& doc);
IrlsParams irls_from_json(const Json& doc);
std::vector<Eigen::Index> mode_counts_from_json(const Json& doc);
ExperimentConfig experiment_from_json(const Json& doc);

std::string to_string(LmaAxes axes);
LmaAxes parse_lma_axes(const std::string& text);

} // namespace modalsr
