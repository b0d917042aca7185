// SPDX-License-Identifier: Apache-2.0
#include "modalsr/config.hpp"

#include "modalsr/error.hpp"
#include "modalsr/io.hpp"

#include <limits>
#include <set>

namespace modalsr {

namespace {

template <typename Fn>
auto guarded(const char* what, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Json::exception& e) {
        fail(ErrorKind::InvalidConfig, std::string(what) + ": " + e.what());
    }
}

void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object())
        fail(ErrorKind::InvalidConfig, where + " must be a JSON object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key))
            fail(ErrorKind::InvalidConfig, "unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <typename T>
void read_if(const Json& obj, const char* key, T& target) {
    if (obj.contains(key))
        target = guarded(key, [&] { return obj.at(key).get<T>(); });
}

Vec3 vec3_from(const Json& j, const char* what) {
    const auto v = guarded(what, [&] { return j.get<std::vector<double>>(); });
    if (v.size() != 3)
        fail(ErrorKind::InvalidConfig, std::string(what) + " must have 3 components");
    return {v[0], v[1], v[2]};
}

double snr_from(const Json& j) {
    if (j.is_null())
        return std::numeric_limits<double>::infinity();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf" || s == "infinity")
            return std::numeric_limits<double>::infinity();
        fail(ErrorKind::InvalidConfig, "snr_db must be a number, \"inf\" or null");
    }
    return guarded("snr_db", [&] { return j.get<double>(); });
}

} // namespace

Json load_config(const std::filesystem::path& path) {
    if (path.empty())
        return Json::object();
    const std::string text = read_file(path);
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
    }
    check_config_keys(doc);
    return doc;
}

void check_config_keys(const Json& doc) {
    check_keys(doc, "", {"array", "grid_level", "frequencies_hz", "band", "room", "free_field", "sources", "frames",
                         "snr_db", "seed", "min_separation_deg", "wall_margin_m", "irls", "methods",
                         "source_counts", "distances_m", "trials", "master_seed", "threads", "mode_counts",
                         "on_grid_sources"});
    if (doc.contains("array")) {
        const auto& a = doc["array"];
        check_keys(a, "array", {"sma", "lma"});
        if (a.contains("sma"))
            check_keys(a["sma"], "array.sma", {"count", "radius_m"});
        if (a.contains("lma"))
            check_keys(a["lma"], "array.lma", {"arrays", "count_each", "spacing_m", "offset_m", "axes"});
    }
    if (doc.contains("band"))
        check_keys(doc["band"], "band", {"first_hz", "last_hz", "step_hz"});
    if (doc.contains("room") && !doc["room"].is_null())
        check_keys(doc["room"], "room", {"dims_m", "rt60_s", "max_order", "array_center_m"});
    if (doc.contains("sources"))
        check_keys(doc["sources"], "sources", {"count", "distance_m", "directions"});
    if (doc.contains("irls"))
        check_keys(doc["irls"], "irls", {"p_init", "p_final", "iters_p1", "max_iters", "eps_init", "eps_floor",
                                         "reg_scale", "tol_rel_change", "lambda_floor"});
    if (doc.contains("frequencies_hz") && doc.contains("band"))
        fail(ErrorKind::InvalidConfig, "give either frequencies_hz or band, not both");
}

std::string to_string(LmaAxes axes) {
    switch (axes) {
    case LmaAxes::Tangential: return "tangential";
    case LmaAxes::Radial: return "radial";
    case LmaAxes::Vertical: return "vertical";
    }
    return "tangential";
}

LmaAxes parse_lma_axes(const std::string& text) {
    if (text == "tangential")
        return LmaAxes::Tangential;
    if (text == "radial")
        return LmaAxes::Radial;
    if (text == "vertical")
        return LmaAxes::Vertical;
    fail(ErrorKind::InvalidConfig, "unknown lma.axes '" + text + "' (expected tangential, radial or vertical)");
}

HybridConfig hybrid_from_json(const Json& doc) {
    HybridConfig config;
    if (!doc.contains("array"))
        return config;
    const auto& a = doc["array"];
    if (a.contains("sma")) {
        read_if(a["sma"], "count", config.sma.count);
        read_if(a["sma"], "radius_m", config.sma.radius_m);
    }
    if (a.contains("lma")) {
        const auto& l = a["lma"];
        read_if(l, "arrays", config.lma.arrays);
        read_if(l, "count_each", config.lma.count_each);
        read_if(l, "spacing_m", config.lma.spacing_m);
        read_if(l, "offset_m", config.lma.offset_m);
        if (l.contains("axes"))
            config.lma.axes = parse_lma_axes(guarded("lma.axes", [&] { return l["axes"].get<std::string>(); }));
    }
    return config;
}

int grid_level_from_json(const Json& doc, int fallback) {
    int level = fallback;
    read_if(doc, "grid_level", level);
    if (level < 0 || level > kMaxGridLevel)
        fail(ErrorKind::InvalidConfig, "grid_level must be in 0.." + std::to_string(kMaxGridLevel));
    return level;
}

std::vector<double> frequencies_from_json(const Json& doc, const std::vector<double>& fallback) {
    if (doc.contains("frequencies_hz")) {
        auto f = guarded("frequencies_hz", [&] { return doc["frequencies_hz"].get<std::vector<double>>(); });
        if (f.empty())
            fail(ErrorKind::InvalidConfig, "frequencies_hz must not be empty");
        return f;
    }
    if (doc.contains("band")) {
        const auto& b = doc["band"];
        double first = 200.0, last = 4000.0, step = 200.0;
        read_if(b, "first_hz", first);
        read_if(b, "last_hz", last);
        read_if(b, "step_hz", step);
        return frequency_band(first, last, step);
    }
    return fallback;
}

std::optional<RoomSpec> room_from_json(const Json& doc) {
    bool free_field = false;
    read_if(doc, "free_field", free_field);
    const bool has_room = doc.contains("room") && !doc["room"].is_null();
    if (free_field && has_room)
        fail(ErrorKind::InvalidConfig, "room and free_field are mutually exclusive");
    if (free_field || (doc.contains("room") && doc["room"].is_null()))
        return std::nullopt;
    RoomSpec room;
    if (has_room) {
        const auto& r = doc["room"];
        if (r.contains("dims_m"))
            room.dimensions_m = vec3_from(r["dims_m"], "room.dims_m");
        read_if(r, "rt60_s", room.rt60_s);
        read_if(r, "max_order", room.max_reflection_order);
        if (r.contains("array_center_m"))
            room.array_center = vec3_from(r["array_center_m"], "room.array_center_m");
        else if (r.contains("dims_m"))
            room.array_center = 0.5 * room.dimensions_m;
    }
    validate(room);
    return room;
}

SceneSpec scene_from_json(const Json& doc) {
    SceneSpec scene;
    if (doc.contains("sources")) {
        const auto& s = doc["sources"];
        read_if(s, "count", scene.source_count);
        read_if(s, "distance_m", scene.distance_m);
        if (s.contains("directions")) {
            const auto& dirs = s["directions"];
            if (!dirs.is_array())
                fail(ErrorKind::InvalidConfig, "sources.directions must be a list of [x, y, z]");
            for (const auto& d : dirs)
                scene.directions.push_back(vec3_from(d, "sources.directions"));
            if (!s.contains("count"))
                scene.source_count = scene.directions.size();
        }
    }
    scene.room = room_from_json(doc);
    read_if(doc, "frames", scene.frames);
    if (doc.contains("snr_db"))
        scene.snr_db = snr_from(doc["snr_db"]);
    read_if(doc, "seed", scene.seed);
    read_if(doc, "min_separation_deg", scene.min_separation_deg);
    read_if(doc, "wall_margin_m", scene.wall_margin_m);
    validate(scene);
    return scene;
}

IrlsParams irls_from_json(const Json& doc) {
    IrlsParams p;
    if (doc.contains("irls")) {
        const auto& j = doc["irls"];
        read_if(j, "p_init", p.p_init);
        read_if(j, "p_final", p.p_final);
        read_if(j, "iters_p1", p.iters_p1);
        read_if(j, "max_iters", p.max_iters);
        read_if(j, "eps_init", p.eps_init);
        read_if(j, "eps_floor", p.eps_floor);
        read_if(j, "reg_scale", p.reg_scale);
        read_if(j, "tol_rel_change", p.tol_rel_change);
        read_if(j, "lambda_floor", p.lambda_floor);
    }
    validate(p);
    return p;
}

std::vector<Eigen::Index> mode_counts_from_json(const Json& doc) {
    std::vector<Eigen::Index> ks{9, 16, 25};
    read_if(doc, "mode_counts", ks);
    if (ks.empty())
        fail(ErrorKind::InvalidConfig, "mode_counts must not be empty");
    return ks;
}

ExperimentConfig experiment_from_json(const Json& doc) {
    ExperimentConfig config = default_experiment();
    if (doc.contains("methods")) {
        const auto names = guarded("methods", [&] { return doc["methods"].get<std::vector<std::string>>(); });
        config.methods.clear();
        for (const auto& n : names)
            config.methods.push_back(Method::parse(n));
    }
    read_if(doc, "source_counts", config.source_counts);
    read_if(doc, "distances_m", config.distances_m);
    read_if(doc, "trials", config.trials);
    config.frequencies_hz = frequencies_from_json(doc, config.frequencies_hz);
    config.room = room_from_json(doc);
    if (doc.contains("snr_db"))
        config.snr_db = snr_from(doc["snr_db"]);
    read_if(doc, "master_seed", config.master_seed);
    read_if(doc, "frames", config.frames);
    config.grid_level = grid_level_from_json(doc, config.grid_level);
    config.array = hybrid_from_json(doc);
    config.irls = irls_from_json(doc);
    read_if(doc, "min_separation_deg", config.min_separation_deg);
    read_if(doc, "wall_margin_m", config.wall_margin_m);
    read_if(doc, "threads", config.threads);
    read_if(doc, "on_grid_sources", config.on_grid_sources);
    validate(config);
    return config;
}

} // namespace modalsr
