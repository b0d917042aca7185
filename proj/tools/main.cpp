// SPDX-License-Identifier: Apache-2.0
// modal-sr: command-line front end.

#include "modalsr/config.hpp"
#include "modalsr/error.hpp"
#include "modalsr/experiments.hpp"
#include "modalsr/geometry.hpp"
#include "modalsr/io.hpp"
#include "modalsr/metrics.hpp"
#include "modalsr/modal.hpp"
#include "modalsr/propagation.hpp"
#include "modalsr/sfmx.hpp"
#include "modalsr/solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifndef MODALSR_VERSION
#define MODALSR_VERSION "unknown"
#endif
#ifndef MODALSR_BUILD_TYPE
#define MODALSR_BUILD_TYPE "unknown"
#endif

namespace fs = std::filesystem;
using namespace modalsr;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool deterministic = false;
    std::vector<double> freqs;
};

void add_common(CLI::App* cmd, Common& c, bool with_freqs) {
    cmd->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, "output file or directory")->required();
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&c](std::uint64_t s) { c.seed = s, c.seed_given = true; }, "master random seed");
    cmd->add_flag("--deterministic", c.deterministic, "omit the timestamp header line");
    if (with_freqs)
        cmd->add_option("--freq", c.freqs, "frequency in Hz (repeatable; default from config)");
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_csv(const fs::path& path, const std::string& body, bool deterministic) {
    write_file_atomic(path, deterministic ? body : "# generated " + timestamp() + "\n" + body);
}

void write_json(const fs::path& path, Json doc, bool deterministic) {
    if (!deterministic)
        doc["generated"] = timestamp();
    write_file_atomic(path, doc.dump(2) + "\n");
}

std::string freq_tag(double f) {
    return format_number(f);
}

std::vector<double> frequencies(const Common& c, const Json& doc) {
    return c.freqs.empty() ? frequencies_from_json(doc, frequency_band(200.0, 4000.0, 100.0)) : c.freqs;
}

Json vec_json(const Vec3& v) {
    return Json::array({v.x(), v.y(), v.z()});
}

Vec3 vec_from(const Json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 3)
        fail(ErrorKind::Format, "expected a 3-vector in manifest");
    return {v[0], v[1], v[2]};
}

Json array_json(const HybridConfig& a) {
    return {{"sma", {{"count", a.sma.count}, {"radius_m", a.sma.radius_m}}},
            {"lma",
             {{"arrays", a.lma.arrays},
              {"count_each", a.lma.count_each},
              {"spacing_m", a.lma.spacing_m},
              {"offset_m", a.lma.offset_m},
              {"axes", to_string(a.lma.axes)}}}};
}

Json load_manifest(const fs::path& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const Json::exception& e) {
        fail(ErrorKind::Format, path.string() + ": " + e.what());
    }
}

// ---- geometry -------------------------------------------------------------

int cmd_geometry(const Common& c) {
    const Json doc = load_config(c.config);
    const MicArray array = build_hybrid(hybrid_from_json(doc));
    std::ostringstream os;
    os << "x,y,z,label\n";
    for (std::size_t i = 0; i < array.size(); ++i) {
        const auto& p = array.positions[i];
        os << format_number(p.x()) << ',' << format_number(p.y()) << ',' << format_number(p.z()) << ','
           << array.labels[i] << '\n';
    }
    write_csv(c.out, os.str(), c.deterministic);
    return 0;
}

// ---- dictionary -----------------------------------------------------------

int cmd_dictionary(const Common& c) {
    const Json doc = load_config(c.config);
    const HybridConfig hc = hybrid_from_json(doc);
    const MicArray array = build_hybrid(hc);
    const int level = grid_level_from_json(doc);
    const DirectionGrid grid = build_direction_grid(level);
    const fs::path dir = c.out;

    std::ostringstream gs;
    gs << "index,x,y,z\n";
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const auto& d = grid.directions[n];
        gs << n << ',' << format_number(d.x()) << ',' << format_number(d.y()) << ',' << format_number(d.z())
           << '\n';
    }
    write_csv(dir / "grid.csv", gs.str(), c.deterministic);

    Json manifest = {{"array", array_json(hc)}, {"grid_level", level}, {"mics", array.size()},
                     {"directions", grid.size()}, {"files", Json::array()}};
    for (double f : frequencies(c, doc)) {
        const std::string name = "H-" + freq_tag(f) + ".sfmx";
        write_matrix(dir / name, plane_wave_matrix(array, grid, f).entries);
        manifest["files"].push_back({{"frequency_hz", f}, {"file", name}});
    }
    write_json(dir / "dictionary.json", manifest, c.deterministic);
    return 0;
}

// ---- modes ----------------------------------------------------------------

int cmd_modes(const Common& c, Eigen::Index pattern_modes) {
    const Json doc = load_config(c.config);
    const HybridConfig hc = hybrid_from_json(doc);
    const MicArray hybrid = build_hybrid(hc);
    const MicArray sma = hybrid.subset(hybrid.indices_with_label(kSmaLabel));
    const DirectionGrid grid = build_direction_grid(grid_level_from_json(doc));
    const auto freqs = frequencies(c, doc);
    const auto ks = mode_counts_from_json(doc);
    const fs::path dir = c.out;

    std::ostringstream sigma_csv, pattern_csv, angle_csv;
    sigma_csv << "frequency_hz,index,sigma\n";
    pattern_csv << "frequency_hz,direction_index,mode_index,re,im\n";
    for (double f : freqs) {
        const ModalBasis basis = svd_decompose(plane_wave_matrix(hybrid, grid, f));
        for (Eigen::Index i = 0; i < basis.rank(); ++i)
            sigma_csv << format_number(f) << ',' << i << ',' << format_number(basis.sigma[i]) << '\n';
        const Eigen::Index modes = std::min(pattern_modes, basis.rank());
        for (Eigen::Index n = 0; n < basis.V.rows(); ++n)
            for (Eigen::Index k = 0; k < modes; ++k) {
                const auto v = basis.V(n, k);
                pattern_csv << format_number(f) << ',' << n << ',' << k << ',' << format_number(v.real()) << ','
                            << format_number(v.imag()) << '\n';
            }
    }

    angle_csv << "array,frequency_hz,K,mean_angle_deg\n";
    for (const auto& row : angle_sweep({{"sma", sma}, {"hybrid", hybrid}}, grid, freqs, ks))
        angle_csv << row.array << ',' << format_number(row.frequency_hz) << ',' << row.K << ','
                  << format_number(row.mean_angle_deg) << '\n';

    write_csv(dir / "sigma.csv", sigma_csv.str(), c.deterministic);
    write_csv(dir / "angles.csv", angle_csv.str(), c.deterministic);
    write_csv(dir / "patterns.csv", pattern_csv.str(), c.deterministic);
    return 0;
}

// ---- simulate -------------------------------------------------------------

int cmd_simulate(const Common& c) {
    const Json doc = load_config(c.config);
    const HybridConfig hc = hybrid_from_json(doc);
    const MicArray array = build_hybrid(hc);
    SceneSpec scene = scene_from_json(doc);
    if (c.seed_given)
        scene.seed = c.seed;
    const auto freqs = frequencies(c, doc);
    const auto blocks = synthesize_scene(scene, array, freqs, scene.seed);
    const fs::path dir = c.out;

    Json truth = Json::array();
    for (const auto& t : blocks.front().truth)
        truth.push_back({{"direction", vec_json(t.direction)}, {"distance_m", t.distance_m}});
    Json manifest = {{"kind", "observations"},
                     {"array", array_json(hc)},
                     {"grid_level", grid_level_from_json(doc)},
                     {"seed", scene.seed},
                     {"frames", scene.frames},
                     {"snr_db", std::isinf(scene.snr_db) ? Json(nullptr) : Json(scene.snr_db)},
                     {"free_field", !scene.room.has_value()},
                     {"truth", truth},
                     {"files", Json::array()}};
    for (const auto& b : blocks) {
        const std::string name = "obs-" + freq_tag(b.frequency_hz) + ".sfmx";
        write_matrix(dir / name, b.snapshots);
        manifest["files"].push_back({{"frequency_hz", b.frequency_hz}, {"file", name}});
    }
    write_json(dir / "observations.json", manifest, c.deterministic);
    return 0;
}

// ---- recover --------------------------------------------------------------

struct RecoverArgs {
    std::string input;
    std::string method = "modal";
    Eigen::Index modes = 16;
    double p = 0.7;
    int max_iters = 0;
};

int cmd_recover(const Common& c, const RecoverArgs& r) {
    const Json doc = load_config(c.config);
    IrlsParams params = irls_from_json(doc);
    params.p_final = r.p;
    if (r.max_iters > 0)
        params.max_iters = r.max_iters;
    validate(params);

    Method method = Method::parse(r.method == "modal" ? "modal-" + std::to_string(r.modes) : r.method);

    const fs::path in_dir = r.input;
    const Json obs = load_manifest(in_dir / "observations.json");
    const MicArray array = build_hybrid(hybrid_from_json(Json{{"array", obs.at("array")}}));
    const int level = obs.at("grid_level").get<int>();
    const DirectionGrid grid = build_direction_grid(level);
    const auto sma_rows = array.indices_with_label(kSmaLabel);
    const fs::path dir = c.out;

    Json manifest = {{"kind", "solution"},
                     {"method", method.name()},
                     {"grid_level", level},
                     {"seed", c.seed},
                     {"p_final", params.p_final},
                     {"max_iters", params.max_iters},
                     {"truth", obs.at("truth")},
                     {"files", Json::array()}};
    for (const auto& entry : obs.at("files")) {
        ObservationBlock block;
        block.frequency_hz = entry.at("frequency_hz").get<double>();
        block.snapshots = read_complex_matrix(in_dir / entry.at("file").get<std::string>());
        if (block.snapshots.rows() != static_cast<Eigen::Index>(array.size()))
            fail(ErrorKind::Format, "observation file " + entry.at("file").get<std::string>() +
                                        " does not match the array size");
        const TransferMatrix H = plane_wave_matrix(array, grid, block.frequency_hz);

        SparseSolution sol;
        switch (method.kind) {
        case MethodKind::SmaOnly: sol = recover_joint(select_mics(block, sma_rows), select_mics(H, sma_rows), params); break;
        case MethodKind::Joint: sol = recover_joint(block, H, params); break;
        case MethodKind::Modal: sol = recover(block, truncate(svd_decompose(H), method.modes), grid, params); break;
        }

        const std::string name = "solution-" + freq_tag(block.frequency_hz) + ".sfmx";
        write_matrix(dir / name, sol.coefficients);
        const auto& d = sol.diagnostics;
        manifest["files"].push_back({{"frequency_hz", block.frequency_hz},
                                     {"file", name},
                                     {"iterations", d.iterations},
                                     {"converged", d.converged},
                                     {"final_residual", d.final_residual},
                                     {"diffuseness", d.diffuseness},
                                     {"lambda", d.lambda}});
    }
    write_json(dir / "solution.json", manifest, c.deterministic);
    return 0;
}

// ---- evaluate -------------------------------------------------------------

int cmd_evaluate(const Common& c, const std::string& input) {
    const fs::path in_dir = input;
    const Json sol = load_manifest(in_dir / "solution.json");
    auto grid = std::make_shared<const DirectionGrid>(build_direction_grid(sol.at("grid_level").get<int>()));
    const MismatchKernel kernel(*grid);
    std::vector<Vec3> truth;
    for (const auto& t : sol.at("truth"))
        truth.push_back(vec_from(t.at("direction")));
    const std::string method = sol.at("method").get<std::string>();

    std::ostringstream os;
    os << "frequency_hz,method,E,mean_angular_error_deg,miss_rate\n";
    for (const auto& entry : sol.at("files")) {
        const double f = entry.at("frequency_hz").get<double>();
        const Eigen::MatrixXcd X = read_complex_matrix(in_dir / entry.at("file").get<std::string>());
        if (X.rows() != static_cast<Eigen::Index>(grid->size()))
            fail(ErrorKind::Format, "solution file does not match the grid size");
        const EnergyMap map{grid, X.rowwise().squaredNorm(), method};
        const MapScore s = score_map(kernel, map, truth);
        os << format_number(f) << ',' << method << ',' << format_number(s.mismatch) << ','
           << format_number(s.mean_angular_error_deg) << ',' << format_number(s.miss_rate) << '\n';
    }
    write_csv(c.out, os.str(), c.deterministic);
    return 0;
}

// ---- sweep ----------------------------------------------------------------

int cmd_sweep(const Common& c, std::size_t trials) {
    const Json doc = load_config(c.config);
    ExperimentConfig config = experiment_from_json(doc);
    if (c.seed_given)
        config.master_seed = c.seed;
    if (trials > 0)
        config.trials = trials;
    const ResultTable table = run_monte_carlo(config);
    const fs::path dir = c.out;

    std::ostringstream raw, agg;
    write_results_csv(raw, table.rows);
    write_aggregates_csv(agg, table.aggregates);
    write_csv(dir / "results.csv", raw.str(), c.deterministic);
    write_csv(dir / "aggregates.csv", agg.str(), c.deterministic);
    for (double d : config.distances_m) {
        std::ostringstream fig4, fig5;
        write_figure_csv(fig4, config, table.rows, d, Metric::Mismatch);
        write_figure_csv(fig5, config, table.rows, d, Metric::AngularError);
        write_csv(dir / ("fig4-dist" + format_number(d) + ".csv"), fig4.str(), c.deterministic);
        write_csv(dir / ("fig5-dist" + format_number(d) + ".csv"), fig5.str(), c.deterministic);
    }
    const auto failed = std::count_if(table.rows.begin(), table.rows.end(), [](const auto& r) { return r.failed; });
    if (failed > 0)
        std::cerr << "warning: " << failed << " of " << table.rows.size() << " method runs failed (see results.csv)\n";
    return 0;
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Modal sparse recovery for hybrid spherical/linear microphone arrays", "modal-sr"};
    app.set_version_flag("--version", std::string("modal-sr ") + MODALSR_VERSION + " (" + MODALSR_BUILD_TYPE +
                                          ", " + __VERSION__ + ")");
    app.require_subcommand(1, 1);

    Common common;
    Eigen::Index pattern_modes = 4;
    RecoverArgs rec;
    std::string eval_input;
    std::size_t trials = 0;

    auto* geometry = app.add_subcommand("geometry", "microphone positions as CSV (x,y,z,label)");
    add_common(geometry, common, false);

    auto* dictionary = app.add_subcommand("dictionary", "plane-wave transfer matrices as SFMX");
    add_common(dictionary, common, true);

    auto* modes = app.add_subcommand("modes", "singular values, subspace angles and mode patterns");
    add_common(modes, common, true);
    modes->add_option("--pattern-modes", pattern_modes, "number of field modes written to patterns.csv")
        ->check(CLI::NonNegativeNumber);

    auto* simulate = app.add_subcommand("simulate", "synthesize observation blocks");
    add_common(simulate, common, true);

    auto* recover_cmd = app.add_subcommand("recover", "sparse recovery of observation blocks");
    add_common(recover_cmd, common, false);
    recover_cmd->add_option("--input", rec.input, "directory written by simulate")->required()->check(CLI::ExistingDirectory);
    recover_cmd->add_option("--method", rec.method, "sma, joint or modal")->check(CLI::IsMember({"sma", "joint", "modal"}));
    recover_cmd->add_option("--modes", rec.modes, "number of modes K for --method modal")->check(CLI::PositiveNumber);
    recover_cmd->add_option("--p", rec.p, "final mixed-norm exponent");
    recover_cmd->add_option("--max-iters", rec.max_iters, "IRLS iteration cap")->check(CLI::PositiveNumber);

    auto* evaluate = app.add_subcommand("evaluate", "score a recovered solution against its truth");
    add_common(evaluate, common, false);
    evaluate->add_option("--input", eval_input, "directory written by recover")->required()->check(CLI::ExistingDirectory);

    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo evaluation of all methods");
    add_common(sweep, common, false);
    sweep->add_option("--trials", trials, "override the number of trials")->check(CLI::PositiveNumber);

    if (argc > 1 && argv[1][0] != '-') {
        const std::string name = argv[1];
        const auto subs = app.get_subcommands([](const CLI::App*) { return true; });
        if (std::none_of(subs.begin(), subs.end(), [&](const CLI::App* s) { return s->get_name() == name; })) {
            std::cerr << "error: usage: unknown subcommand '" << one_line(name) << "'\n" << app.help();
            return 2;
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << one_line(e.what()) << '\n' << app.help();
        return 2;
    }

    try {
        if (*geometry)
            return cmd_geometry(common);
        if (*dictionary)
            return cmd_dictionary(common);
        if (*modes)
            return cmd_modes(common, pattern_modes);
        if (*simulate)
            return cmd_simulate(common);
        if (*recover_cmd)
            return cmd_recover(common, rec);
        if (*evaluate)
            return cmd_evaluate(common, eval_input);
        if (*sweep)
            return cmd_sweep(common, trials);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << one_line(e.what()) << '\n';
        return 1;
    } catch (const Json::exception& e) {
        std::cerr << "error: format-error: " << one_line(e.what()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << one_line(e.what()) << '\n';
        return 1;
    }
    std::cerr << "error: usage: no subcommand\n" << app.help();
    return 2;
}
